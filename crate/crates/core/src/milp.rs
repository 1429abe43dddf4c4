//! Mixed-integer linear program for the coverage problem, written in the
//! CPLEX LP text layout.
//!
//! Variables are `a_n_m` (tap `m` active on waveguide `n`) and `c_u_v`
//! (cell `(u, v)` covered), all binary and 1-based in their names. Only valid
//! cells get a coverage variable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::GainMap;
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn coefficient(&self, var: &str) -> f64 {
        self.terms.iter().find(|(v, _)| v == var).map_or(0.0, |(_, c)| *c)
    }
}

/// A maximisation problem over binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<Constraint>,
    pub binaries: Vec<String>,
}

pub fn activation_var(n: usize, m: usize) -> String {
    format!("a_{}_{}", n + 1, m + 1)
}

pub fn coverage_var(u: usize, v: usize) -> String {
    format!("c_{}_{}", u + 1, v + 1)
}

/// Builds the coverage MILP: maximise the number of covered valid cells
/// subject to `Σ ρ·ḡ·a − γ·c ≥ 0` per valid cell and one tap per waveguide.
pub fn build_milp(gain_map: &GainMap, rho: f64, gamma_th: f64) -> LpModel {
    let grid = gain_map.grid();
    let (n_wg, n_cand) = (gain_map.n_waveguides(), gain_map.n_candidates());
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    for u in 0..grid.nh {
        for v in 0..grid.nv {
            let idx = grid.index(u, v);
            if !gain_map.valid()[idx] {
                continue;
            }
            let c = coverage_var(u, v);
            objective.push((c.clone(), 1.0));
            let mut terms = Vec::new();
            for n in 0..n_wg {
                for m in 0..n_cand {
                    let coeff = rho * gain_map.gains(n, m)[idx];
                    if coeff != 0.0 {
                        terms.push((activation_var(n, m), coeff));
                    }
                }
            }
            if gamma_th != 0.0 {
                terms.push((c, -gamma_th));
            }
            constraints.push(Constraint {
                name: format!("cover_{}_{}", u + 1, v + 1),
                terms,
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
    }
    for n in 0..n_wg {
        constraints.push(Constraint {
            name: format!("one_tap_{}", n + 1),
            terms: (0..n_cand).map(|m| (activation_var(n, m), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    let mut binaries: Vec<String> = (0..n_wg)
        .flat_map(|n| (0..n_cand).map(move |m| activation_var(n, m)))
        .collect();
    binaries.extend(objective.iter().map(|(c, _)| c.clone()));
    LpModel {
        objective,
        constraints,
        binaries,
    }
}

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_terms(out: &mut String, terms: &[(String, f64)]) {
    for (i, (var, coeff)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if coeff.is_sign_negative() { '-' } else { '+' };
        if i == 0 && sign == '+' {
            let _ = write!(out, " {} {}", number(*coeff), var);
        } else {
            let _ = write!(out, " {} {} {}", sign, number(coeff.abs()), var);
        }
    }
}

impl LpModel {
    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("\\ coverage MILP\nMaximize\n obj:");
        write_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            write_terms(&mut out, &c.terms);
            let _ = writeln!(out, " {} {}", c.sense.as_str(), number(c.rhs));
        }
        out.push_str("Binary\n");
        for chunk in self.binaries.chunks(TERMS_PER_LINE * 2) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_lp_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_lp(&text, path)
    }

    /// Parses the subset of the LP layout produced by [`LpModel::to_lp_string`].
    pub fn parse(text: &str) -> Result<Self> {
        parse_lp(text, Path::new("<memory>"))
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }
}

/// Writes the coverage MILP to `path` and returns the model.
pub fn emit_milp(gain_map: &GainMap, rho: f64, gamma_th: f64, path: impl AsRef<Path>) -> Result<LpModel> {
    let model = build_milp(gain_map, rho, gamma_th);
    model.write(path)?;
    Ok(model)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Binary,
    End,
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

struct Parser<'a> {
    path: PathBuf,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, token: Option<&Token>, message: impl Into<String>) -> Error {
        let (line, column) = token
            .or_else(|| self.tokens.last())
            .map_or((1, 1), |t| (t.line, t.column));
        Error::Parse {
            path: self.path.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<&Token<'a>> {
        let pos = self.pos;
        self.pos += 1;
        match self.tokens.get(pos) {
            Some(t) => Ok(t),
            None => Err(self.error(None, "unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let pos = self.pos;
        let text = self.next()?.text;
        text.parse()
            .map_err(|_| self.error(self.tokens.get(pos), format!("expected a number, found `{text}`")))
    }

    /// Reads `[+|-] coeff var` terms until a sense token or the end.
    fn terms(&mut self) -> Result<Vec<(String, f64)>> {
        let mut terms = Vec::new();
        while let Some(tok) = self.peek() {
            if matches!(tok.text, ">=" | "<=" | "=") {
                break;
            }
            let sign = match tok.text {
                "+" => {
                    self.pos += 1;
                    1.0
                }
                "-" => {
                    self.pos += 1;
                    -1.0
                }
                _ => 1.0,
            };
            let coeff = self.number()?;
            let var = self.next()?.text.to_string();
            terms.push((var, sign * coeff));
        }
        Ok(terms)
    }
}

fn parse_lp(text: &str, path: &Path) -> Result<LpModel> {
    let mut section = Section::Preamble;
    let mut buckets: [Vec<Token>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let parse_error = |line: usize, column: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.to_string(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('\\').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let keyword = match trimmed.to_ascii_lowercase().as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Constraints),
            "binary" | "binaries" | "bin" => Some(Section::Binary),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = keyword {
            section = next;
            continue;
        }
        let bucket = match section {
            Section::Objective => 0,
            Section::Constraints => 1,
            Section::Binary => 2,
            Section::Preamble => return Err(parse_error(line, 1, "content before `Maximize`")),
            Section::End => return Err(parse_error(line, 1, "content after `End`")),
        };
        let mut offset = 0;
        for word in body.split_whitespace() {
            let start = offset + body[offset..].find(word).unwrap_or(0);
            offset = start + word.len();
            buckets[bucket].push(Token {
                text: word,
                line,
                column: start + 1,
            });
        }
    }
    if section != Section::End {
        return Err(parse_error(text.lines().count().max(1), 1, "missing `End`"));
    }
    let [obj_tokens, con_tokens, bin_tokens] = buckets;

    let mut p = Parser {
        path: path.to_path_buf(),
        tokens: obj_tokens,
        pos: 0,
    };
    if p.peek().is_some_and(|t| t.text.ends_with(':')) {
        p.pos += 1;
    }
    let objective = p.terms()?;
    if let Some(t) = p.peek() {
        return Err(p.error(Some(t), "unexpected token in objective"));
    }

    let mut p = Parser {
        path: path.to_path_buf(),
        tokens: con_tokens,
        pos: 0,
    };
    let mut constraints = Vec::new();
    while p.peek().is_some() {
        let pos = p.pos;
        let label = p.next()?.text;
        let Some(name) = label.strip_suffix(':') else {
            return Err(p.error(p.tokens.get(pos), "expected a constraint label ending in `:`"));
        };
        let name = name.to_string();
        let terms = p.terms()?;
        let pos = p.pos;
        let sense = match p.next()?.text {
            ">=" => Sense::Ge,
            "<=" => Sense::Le,
            "=" => Sense::Eq,
            other => return Err(p.error(p.tokens.get(pos), format!("expected a comparison, found `{other}`"))),
        };
        let rhs = p.number()?;
        constraints.push(Constraint { name, terms, sense, rhs });
    }

    let binaries = bin_tokens.iter().map(|t| t.text.to_string()).collect();
    Ok(LpModel {
        objective,
        constraints,
        binaries,
    })
}

//! Worst-grid average-SNR maximisation.
//!
//! The epigraph form `max t s.t. Γ̄(u,v; A) ≥ t` has feasibility that is
//! downward closed in `t`, so the optimum is found by bisection on `t` with
//! a feasibility oracle. The default oracle is a deficit-reduction coordinate
//! search: it can only certify feasibility (deficit zero), never refute it,
//! so the bisection result is a certified lower bound on the optimum.

use serde::Serialize;

use crate::activation::{check_budget, Activation};
use crate::channel::{avg_snr, GainMap};
use crate::enumerate::{argmax_activation, for_each_activation};
use crate::error::{Error, Result};

pub const DEFAULT_EPS_T: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxResult {
    pub activation: Activation,
    /// Worst valid-grid SNR of `activation`, recomputed at return.
    pub t_star: f64,
    pub bisection_iters: usize,
    pub feasibility_evals: usize,
    pub exact: bool,
    pub snr_field: Vec<f64>,
}

/// How the bisection decides whether a target level is reachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Feasibility {
    /// Deficit-reduction sweeps, capped at `max_sweeps` per check.
    Deficit { max_sweeps: usize },
    /// Exhaustive search, refused above `budget` activations.
    Exact { budget: u64 },
}

fn min_valid(field: &[f64], valid: &[bool]) -> Result<f64> {
    field
        .iter()
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(snr, _)| *snr)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
        .ok_or_else(|| Error::Domain("no valid grid cells to evaluate".into()))
}

/// Minimum average SNR over the valid grid cells.
pub fn worst_grid_snr(activation: &Activation, gain_map: &GainMap, rho: f64) -> Result<f64> {
    min_valid(&avg_snr(activation, gain_map, rho)?, gain_map.valid())
}

fn deficit_of(field: &[f64], valid: &[bool], t: f64) -> f64 {
    field
        .iter()
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(snr, _)| (t - snr).max(0.0))
        .sum()
}

/// Total shortfall `D(A; t) = Σ_valid [t − Γ̄]⁺`.
pub fn total_deficit(activation: &Activation, gain_map: &GainMap, rho: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("target level must be >= 0, got {t}")));
    }
    Ok(deficit_of(&avg_snr(activation, gain_map, rho)?, gain_map.valid(), t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityOutcome {
    pub feasible: bool,
    pub activation: Activation,
    /// `D(A; t)` of the returned activation, recomputed from scratch.
    pub deficit: f64,
    pub sweeps: usize,
    /// Deficit before the first update and after every update.
    pub trace: Vec<f64>,
}

/// Deficit-reduction feasibility check at level `t`.
///
/// Each update picks the tap of one waveguide that minimises the total
/// deficit, breaking ties by the smaller worst single-cell deficit and then
/// the smaller index. Stops as soon as the deficit reaches zero, or after a
/// sweep without strict decrease, or after `max_sweeps` sweeps.
pub fn deficit_feasibility(
    t: f64,
    gain_map: &GainMap,
    rho: f64,
    initial: &Activation,
    max_sweeps: usize,
) -> Result<FeasibilityOutcome> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("target level must be >= 0, got {t}")));
    }
    if max_sweeps < 1 {
        return Err(Error::Usage("max_sweeps must be at least 1".into()));
    }
    initial.check(gain_map.n_waveguides(), gain_map.n_candidates())?;
    let valid = gain_map.valid();
    let mut activation = initial.clone();
    let mut deficit = total_deficit(&activation, gain_map, rho, t)?;
    let mut trace = vec![deficit];
    let mut sweeps = 0;
    while deficit > 0.0 && sweeps < max_sweeps {
        sweeps += 1;
        let start_of_sweep = deficit;
        for n in 0..gain_map.n_waveguides() {
            let mut residual = avg_snr(&activation, gain_map, rho)?;
            for (snr, g) in residual.iter_mut().zip(gain_map.gains(n, activation.get(n))) {
                *snr -= rho * g;
            }
            let mut best: Option<(usize, f64, f64)> = None;
            for m in 0..gain_map.n_candidates() {
                let mut total = 0.0;
                let mut worst = 0.0_f64;
                for ((res, g), ok) in residual.iter().zip(gain_map.gains(n, m)).zip(valid) {
                    if *ok {
                        let d = (t - (res + rho * g)).max(0.0);
                        total += d;
                        worst = worst.max(d);
                    }
                }
                let better = match best {
                    None => true,
                    Some((_, bt, bw)) => total < bt || (total == bt && worst < bw),
                };
                if better {
                    best = Some((m, total, worst));
                }
            }
            if let Some((m, _, _)) = best {
                activation.set(n, m);
            }
            deficit = total_deficit(&activation, gain_map, rho, t)?;
            trace.push(deficit);
            if deficit == 0.0 {
                break;
            }
        }
        if deficit >= start_of_sweep {
            break;
        }
    }
    Ok(FeasibilityOutcome {
        feasible: deficit == 0.0,
        activation,
        deficit,
        sweeps,
        trace,
    })
}

/// Exhaustive feasibility: the lexicographically first activation meeting `t`
/// on every valid cell, if any.
pub fn exact_feasibility(t: f64, gain_map: &GainMap, rho: f64, budget: u64) -> Result<Option<Activation>> {
    check_budget(gain_map.n_waveguides(), gain_map.n_candidates(), budget)?;
    let valid = gain_map.valid();
    let mut found = None;
    for_each_activation(gain_map, |selected, sums| {
        if found.is_none() && sums.iter().zip(valid).all(|(s, ok)| !ok || rho * s >= t) {
            found = Some(Activation::new(selected.to_vec()));
        }
    });
    Ok(found)
}

/// Upper bound `min_valid ρ·Σ_n max_m ḡ[n, m]` on the optimal worst-grid SNR.
pub fn relaxed_upper_bound(gain_map: &GainMap, rho: f64) -> Result<f64> {
    let mut best = vec![0.0; gain_map.n_grids()];
    for n in 0..gain_map.n_waveguides() {
        let mut per_cell = vec![0.0_f64; gain_map.n_grids()];
        for m in 0..gain_map.n_candidates() {
            for (p, g) in per_cell.iter_mut().zip(gain_map.gains(n, m)) {
                *p = p.max(*g);
            }
        }
        for (b, p) in best.iter_mut().zip(per_cell) {
            *b += p;
        }
    }
    let scaled: Vec<f64> = best.iter().map(|b| rho * b).collect();
    min_valid(&scaled, gain_map.valid())
}

/// Bisection on the epigraph level `t` until `t_max − t_min ≤ eps_t`.
///
/// Returns the last activation certified feasible; each check is warm-started
/// from it.
pub fn bisection_maxmin(
    gain_map: &GainMap,
    rho: f64,
    eps_t: f64,
    initial: &Activation,
    feasibility: Feasibility,
) -> Result<MinMaxResult> {
    if !(eps_t > 0.0) {
        return Err(Error::Usage(format!("eps_t must be > 0, got {eps_t}")));
    }
    initial.check(gain_map.n_waveguides(), gain_map.n_candidates())?;
    if let Feasibility::Exact { budget } = feasibility {
        check_budget(gain_map.n_waveguides(), gain_map.n_candidates(), budget)?;
    }
    let mut t_min = 0.0;
    let mut t_max = relaxed_upper_bound(gain_map, rho)?;
    let mut incumbent = initial.clone();
    let mut iters = 0;
    let mut evals = 0;
    while t_max - t_min > eps_t {
        let t = 0.5 * (t_min + t_max);
        iters += 1;
        evals += 1;
        let certified = match feasibility {
            Feasibility::Deficit { max_sweeps } => {
                let outcome = deficit_feasibility(t, gain_map, rho, &incumbent, max_sweeps)?;
                outcome.feasible.then_some(outcome.activation)
            }
            Feasibility::Exact { budget } => exact_feasibility(t, gain_map, rho, budget)?,
        };
        match certified {
            Some(activation) => {
                t_min = t;
                incumbent = activation;
            }
            None => t_max = t,
        }
    }
    let snr_field = avg_snr(&incumbent, gain_map, rho)?;
    let t_star = min_valid(&snr_field, gain_map.valid())?;
    Ok(MinMaxResult {
        activation: incumbent,
        t_star,
        bisection_iters: iters,
        feasibility_evals: evals,
        exact: matches!(feasibility, Feasibility::Exact { .. }),
        snr_field,
    })
}

/// Global max-min optimum by enumeration; ties go to the lexicographically
/// smallest selection.
pub fn exact_maxmin(gain_map: &GainMap, rho: f64, budget: u64) -> Result<MinMaxResult> {
    check_budget(gain_map.n_waveguides(), gain_map.n_candidates(), budget)?;
    if gain_map.n_valid() == 0 {
        return Err(Error::Domain("no valid grid cells to evaluate".into()));
    }
    let valid = gain_map.valid();
    let (activation, _) = argmax_activation(gain_map, |sums| {
        sums.iter()
            .zip(valid)
            .filter(|(_, ok)| **ok)
            .map(|(s, _)| rho * s)
            .fold(f64::INFINITY, f64::min)
    });
    let snr_field = avg_snr(&activation, gain_map, rho)?;
    let t_star = min_valid(&snr_field, valid)?;
    Ok(MinMaxResult {
        activation,
        t_star,
        bisection_iters: 0,
        feasibility_evals: 0,
        exact: true,
        snr_field,
    })
}

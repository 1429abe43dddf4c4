use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pinchmap::activation::Activation;
use pinchmap::channel::avg_snr;
use pinchmap::coverage::coverage_count;
use pinchmap::export::{export_map, sig9, write_table, MapFormat};
use pinchmap::milp::emit_milp;
use pinchmap::minmax::worst_grid_snr;
use pinchmap::sweep::{mean_std, power_sweep, threshold_sweep, Prepared, RunSummary};
use pinchmap::units::{db_to_linear, linear_to_db};
use pinchmap::{Error, Result, Scenario};

#[derive(Parser)]
#[command(name = "pinchmap", version, about = "Blockage-aware pinching-antenna activation planner")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario JSON; the bundled default scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Solve by exhaustive enumeration (budget-guarded).
    #[arg(long, global = true)]
    exact: bool,
    /// Scales the grid resolution on both axes.
    #[arg(long, global = true)]
    grid_scale: Option<f64>,
    /// Record wall time in the run summary.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute visibility and per-candidate gains.
    Gainmap,
    /// Maximise the number of cells above the SNR threshold.
    Coverage {
        #[arg(long)]
        gamma_db: Option<f64>,
        /// Also write the equivalent MILP in LP format.
        #[arg(long)]
        emit_milp: bool,
    },
    /// Maximise the worst-cell average SNR.
    Minmax,
    /// Evaluate the random and fixed-array baselines.
    Baseline {
        #[arg(long)]
        gamma_db: Option<f64>,
    },
    /// Coverage versus SNR threshold.
    SweepThreshold {
        #[arg(long, value_delimiter = ',', default_values_t = [12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0])]
        gammas_db: Vec<f64>,
    },
    /// Worst-cell SNR versus transmit power.
    SweepPower {
        #[arg(long, value_delimiter = ',', default_values_t = [30.0, 35.0, 40.0, 45.0])]
        powers_dbm: Vec<f64>,
    },
    /// Export an average-SNR map.
    Map {
        /// 1-based tap index per waveguide; the max-min solution when omitted.
        #[arg(long, value_delimiter = ',')]
        activation: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Layout::Array)]
        baseline: Layout,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layout {
    /// Pinching antennas at the given or optimized taps.
    Array,
    /// The fixed centred array.
    Fixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Pgm,
    Both,
}

fn load(global: &Global) -> Result<Scenario> {
    let mut scenario = match &global.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::table1(),
    };
    if let Some(factor) = global.grid_scale {
        scenario = scenario.with_grid_scale(factor)?;
    }
    if let Some(seed) = global.seed {
        scenario = scenario.with_seed(seed)?;
    }
    Ok(scenario)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn finish(global: &Global, mut summary: RunSummary, started: Instant) -> Result<()> {
    let elapsed = started.elapsed().as_secs_f64();
    eprintln!("{} finished in {elapsed:.3} s", summary.command);
    if global.timing {
        summary.wall_time_s = Some(elapsed);
    }
    let path = global.out.join(format!("{}.json", summary.command));
    write(&path, &summary.to_json_string())?;
    print!("{}", summary.to_json_string());
    Ok(())
}

fn method(exact: bool, heuristic: &str) -> &str {
    if exact {
        "exact"
    } else {
        heuristic
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let global = &cli.global;
    let scenario = load(global)?;
    std::fs::create_dir_all(&global.out).map_err(|e| Error::Io {
        path: global.out.clone(),
        source: e,
    })?;
    let prepared = Prepared::new(scenario.clone())?;
    let rho = prepared.rho();
    let gm = &prepared.gain_map;
    let region = scenario.geometry().region;
    let grid = scenario.geometry().grid;
    match &cli.command {
        Command::Gainmap => {
            let mut rows = Vec::new();
            for n in 0..gm.n_waveguides() {
                for m in 0..gm.n_candidates() {
                    let vis = prepared.visibility.row(n, m);
                    let los = vis.iter().zip(gm.valid()).filter(|(c, ok)| **c && **ok).count();
                    let peak = gm.gains(n, m).iter().cloned().fold(0.0, f64::max);
                    rows.push(vec![
                        (n + 1).to_string(),
                        (m + 1).to_string(),
                        sig9(scenario.geometry().candidates.x(n, m)),
                        sig9(los as f64 / gm.n_valid().max(1) as f64),
                        sig9(linear_to_db(rho * peak)),
                    ]);
                }
            }
            write_table(
                global.out.join("gainmap.csv"),
                &["waveguide", "candidate", "x", "los_fraction", "peak_snr_db"],
                &rows,
            )?;
            let mut summary = RunSummary::new("gainmap", &scenario, "precompute");
            summary.objectives.insert("n_grids".into(), gm.n_grids() as f64);
            summary.objectives.insert("n_valid".into(), gm.n_valid() as f64);
            summary
                .objectives
                .insert("blocked_fraction".into(), prepared.visibility.blocked_fraction());
            finish(global, summary, started)
        }
        Command::Coverage { gamma_db, emit_milp: milp } => {
            let gamma_db = gamma_db.unwrap_or(scenario.optimization().gamma_th_db);
            let gamma = db_to_linear(gamma_db);
            let result = prepared.solve_coverage(gamma, global.exact)?;
            export_map(&result.snr_field, gm.valid(), grid, &region, global.out.join("coverage_map.csv"), MapFormat::Csv)?;
            if *milp {
                emit_milp(gm, rho, gamma, global.out.join("coverage.lp"))?;
            }
            let mut summary = RunSummary::new("coverage", &scenario, method(global.exact, "coordinate_ascent"));
            summary.objectives.insert("gamma_th_db".into(), gamma_db);
            summary.objectives.insert("covered_count".into(), result.covered_count as f64);
            summary.objectives.insert("coverage_fraction".into(), result.coverage_fraction);
            summary.objectives.insert("sweeps_used".into(), result.sweeps_used as f64);
            summary.activation = Some(result.activation.to_one_based());
            finish(global, summary, started)
        }
        Command::Minmax => {
            let result = prepared.solve_maxmin(rho, global.exact)?;
            export_map(&result.snr_field, gm.valid(), grid, &region, global.out.join("minmax_map.csv"), MapFormat::Csv)?;
            let mut summary = RunSummary::new("minmax", &scenario, method(global.exact, "bisection"));
            summary.objectives.insert("worst_grid_snr".into(), result.t_star);
            summary.objectives.insert("worst_grid_snr_db".into(), linear_to_db(result.t_star));
            summary.objectives.insert("bisection_iters".into(), result.bisection_iters as f64);
            summary.activation = Some(result.activation.to_one_based());
            finish(global, summary, started)
        }
        Command::Baseline { gamma_db } => {
            let gamma_db = gamma_db.unwrap_or(scenario.optimization().gamma_th_db);
            let gamma = db_to_linear(gamma_db);
            let n_valid = gm.n_valid().max(1) as f64;
            let randoms = prepared.random_activations();
            let mut cov = Vec::new();
            let mut worst = Vec::new();
            for a in &randoms {
                cov.push(coverage_count(a, gm, rho, gamma)? as f64 / n_valid);
                worst.push(linear_to_db(worst_grid_snr(a, gm, rho)?));
            }
            let (cov_mean, cov_std) = mean_std(&cov);
            let (worst_mean, worst_std) = mean_std(&worst);
            let array = prepared.array_activation();
            let fixed_cov = coverage_count(&array, &prepared.array_map, rho, gamma)? as f64 / n_valid;
            let fixed_worst = linear_to_db(worst_grid_snr(&array, &prepared.array_map, rho)?);
            write_table(
                global.out.join("baseline.csv"),
                &["method", "coverage", "coverage_std", "worst_grid_snr_db", "worst_grid_snr_db_std"],
                &[
                    vec!["random".into(), sig9(cov_mean), sig9(cov_std), sig9(worst_mean), sig9(worst_std)],
                    vec!["fixed_array".into(), sig9(fixed_cov), sig9(0.0), sig9(fixed_worst), sig9(0.0)],
                ],
            )?;
            let mut summary = RunSummary::new("baseline", &scenario, "random+fixed_array");
            summary.objectives.insert("gamma_th_db".into(), gamma_db);
            summary.objectives.insert("random_coverage_mean".into(), cov_mean);
            summary.objectives.insert("random_coverage_std".into(), cov_std);
            summary.objectives.insert("random_worst_grid_snr_db_mean".into(), worst_mean);
            summary.objectives.insert("fixed_array_coverage".into(), fixed_cov);
            summary.objectives.insert("fixed_array_worst_grid_snr_db".into(), fixed_worst);
            finish(global, summary, started)
        }
        Command::SweepThreshold { gammas_db } => {
            let rows = threshold_sweep(&prepared, gammas_db, global.exact)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        sig9(r.gamma_th_db),
                        sig9(r.optimized),
                        sig9(r.random_mean),
                        sig9(r.random_std),
                        sig9(r.fixed_array),
                        r.optimized_activation.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
                    ]
                })
                .collect();
            write_table(
                global.out.join("sweep_threshold.csv"),
                &["gamma_th_db", "optimized", "random_mean", "random_std", "fixed_array", "optimized_activation"],
                &table,
            )?;
            let mut summary =
                RunSummary::new("sweep-threshold", &scenario, method(global.exact, "coordinate_ascent"));
            summary.objectives.insert("points".into(), rows.len() as f64);
            finish(global, summary, started)
        }
        Command::SweepPower { powers_dbm } => {
            let sweep = power_sweep(&prepared, powers_dbm, global.exact)?;
            let table: Vec<Vec<String>> = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        sig9(r.p_tx_dbm),
                        sig9(r.optimized_db),
                        sig9(r.random_mean_db),
                        sig9(r.random_std_db),
                        sig9(r.fixed_array_db),
                    ]
                })
                .collect();
            write_table(
                global.out.join("sweep_power.csv"),
                &["p_tx_dbm", "optimized_db", "random_mean_db", "random_std_db", "fixed_array_db"],
                &table,
            )?;
            let mut summary = RunSummary::new("sweep-power", &scenario, method(global.exact, "bisection"));
            summary.objectives.insert("points".into(), sweep.rows.len() as f64);
            summary.activation = Some(sweep.activation.to_one_based());
            finish(global, summary, started)
        }
        Command::Map {
            activation,
            baseline,
            format,
        } => {
            let (field, label, chosen) = match (baseline, activation) {
                (Layout::Fixed, _) => (prepared.array_snr(rho)?, "fixed_array", None),
                (Layout::Array, Some(taps)) => {
                    let a = Activation::from_one_based(taps)?;
                    a.check(gm.n_waveguides(), gm.n_candidates())?;
                    (avg_snr(&a, gm, rho)?, "given", Some(a))
                }
                (Layout::Array, None) => {
                    let r = prepared.solve_maxmin(rho, global.exact)?;
                    (r.snr_field, method(global.exact, "bisection"), Some(r.activation))
                }
            };
            if matches!(format, Format::Csv | Format::Both) {
                export_map(&field, gm.valid(), grid, &region, global.out.join("map.csv"), MapFormat::Csv)?;
            }
            if matches!(format, Format::Pgm | Format::Both) {
                export_map(&field, gm.valid(), grid, &region, global.out.join("map.pgm"), MapFormat::Pgm)?;
            }
            let mut summary = RunSummary::new("map", &scenario, label);
            let valid_min = field
                .iter()
                .zip(gm.valid())
                .filter(|(_, ok)| **ok)
                .map(|(x, _)| *x)
                .fold(f64::INFINITY, f64::min);
            summary.objectives.insert("worst_grid_snr_db".into(), linear_to_db(valid_min));
            summary.activation = chosen.map(|a| a.to_one_based());
            finish(global, summary, started)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pinchmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

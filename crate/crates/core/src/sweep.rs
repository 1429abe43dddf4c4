//! Baselines, parameter sweeps and run summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::activation::Activation;
use crate::channel::{avg_snr, fixed_array_gain_map, precompute_gain_map, GainMap};
use crate::coverage::{coordinate_ascent_multistart, coverage_count, exact_enumerate, CoverageResult};
use crate::error::{Error, Result};
use crate::geometry::{visibility, VisibilityMap};
use crate::minmax::{bisection_maxmin, exact_maxmin, worst_grid_snr, Feasibility, MinMaxResult};
use crate::scenario::Scenario;
use crate::units::{db_to_linear, linear_to_db};

/// A scenario with its offline tables computed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub visibility: VisibilityMap,
    pub gain_map: GainMap,
    /// Fixed centred array with one element per waveguide.
    pub array_map: GainMap,
}

impl Prepared {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let geometry = scenario.geometry();
        let visibility = visibility(geometry);
        let gain_map = precompute_gain_map(geometry, &visibility, scenario.channel())?;
        let array_map = fixed_array_gain_map(geometry, scenario.channel(), geometry.n_waveguides())?;
        Ok(Prepared {
            scenario,
            visibility,
            gain_map,
            array_map,
        })
    }

    pub fn rho(&self) -> f64 {
        self.scenario.rho()
    }

    pub fn array_activation(&self) -> Activation {
        Activation::new(vec![0; self.array_map.n_waveguides()])
    }

    pub fn array_snr(&self, rho: f64) -> Result<Vec<f64>> {
        avg_snr(&self.array_activation(), &self.array_map, rho)
    }

    /// Coverage-optimal activation, by enumeration when `exact` is set.
    pub fn solve_coverage(&self, gamma_th: f64, exact: bool) -> Result<CoverageResult> {
        let opt = self.scenario.optimization();
        if exact {
            exact_enumerate(&self.gain_map, self.rho(), gamma_th, opt.budget)
        } else {
            coordinate_ascent_multistart(&self.gain_map, self.rho(), gamma_th, opt.max_sweeps, opt.restarts, opt.seed)
        }
    }

    /// Max-min activation: bisection with the deficit check, or exhaustive
    /// search when `exact` is set.
    pub fn solve_maxmin(&self, rho: f64, exact: bool) -> Result<MinMaxResult> {
        let opt = self.scenario.optimization();
        if exact {
            exact_maxmin(&self.gain_map, rho, opt.budget)
        } else {
            let start = Activation::centered(self.gain_map.n_waveguides(), self.gain_map.n_candidates());
            bisection_maxmin(
                &self.gain_map,
                rho,
                opt.eps_t,
                &start,
                Feasibility::Deficit {
                    max_sweeps: opt.max_sweeps,
                },
            )
        }
    }

    /// The random-baseline activations, one per seed `seed, seed + 1, ...`.
    pub fn random_activations(&self) -> Vec<Activation> {
        let opt = self.scenario.optimization();
        (0..opt.random_seeds as u64)
            .map(|i| random_activation(&self.scenario, opt.seed.wrapping_add(i)))
            .collect()
    }
}

/// Uniform independent tap per waveguide, deterministic per seed.
pub fn random_activation(scenario: &Scenario, seed: u64) -> Activation {
    let g = scenario.geometry();
    Activation::random(g.n_waveguides(), g.n_candidates(), seed)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_list(values: &[f64], what: &str, ascending: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Usage(format!("{what} list must be nonempty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage(format!("{what} list must be finite")));
    }
    if ascending && values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage(format!("{what} list must be strictly ascending")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub gamma_th_db: f64,
    pub optimized: f64,
    pub optimized_activation: Vec<usize>,
    pub random_mean: f64,
    pub random_std: f64,
    pub fixed_array: f64,
}

/// Coverage fraction versus threshold for the optimized, random and fixed
/// array deployments. The optimized activation is re-solved per threshold.
pub fn threshold_sweep(prepared: &Prepared, gammas_db: &[f64], exact: bool) -> Result<Vec<ThresholdRow>> {
    check_list(gammas_db, "threshold", true)?;
    let rho = prepared.rho();
    let n_valid = prepared.gain_map.n_valid().max(1) as f64;
    let randoms = prepared.random_activations();
    let array_act = prepared.array_activation();
    let mut rows = Vec::with_capacity(gammas_db.len());
    for &gamma_db in gammas_db {
        let gamma = db_to_linear(gamma_db);
        let optimized = prepared.solve_coverage(gamma, exact)?;
        let fractions = randoms
            .iter()
            .map(|a| Ok(coverage_count(a, &prepared.gain_map, rho, gamma)? as f64 / n_valid))
            .collect::<Result<Vec<f64>>>()?;
        let (random_mean, random_std) = mean_std(&fractions);
        let fixed = coverage_count(&array_act, &prepared.array_map, rho, gamma)? as f64 / n_valid;
        rows.push(ThresholdRow {
            gamma_th_db: gamma_db,
            optimized: optimized.coverage_fraction,
            optimized_activation: optimized.activation.to_one_based(),
            random_mean,
            random_std,
            fixed_array: fixed,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub p_tx_dbm: f64,
    pub optimized_db: f64,
    pub random_mean_db: f64,
    pub random_std_db: f64,
    pub fixed_array_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweep {
    /// Max-min activation, solved once at the scenario's transmit power.
    pub activation: Activation,
    pub rows: Vec<PowerRow>,
}

/// Worst-grid SNR versus transmit power. The max-min activation does not
/// depend on `P`, so it is solved once and every curve is rescaled.
pub fn power_sweep(prepared: &Prepared, p_list_dbm: &[f64], exact: bool) -> Result<PowerSweep> {
    check_list(p_list_dbm, "power", false)?;
    let solved = prepared.solve_maxmin(prepared.rho(), exact)?;
    let randoms = prepared.random_activations();
    let sigma_sq = prepared.scenario.channel().sigma_sq();
    let mut rows = Vec::with_capacity(p_list_dbm.len());
    for &p_dbm in p_list_dbm {
        let rho = crate::units::dbm_to_watts(p_dbm) / sigma_sq;
        let optimized = worst_grid_snr(&solved.activation, &prepared.gain_map, rho)?;
        let random_db = randoms
            .iter()
            .map(|a| Ok(linear_to_db(worst_grid_snr(a, &prepared.gain_map, rho)?)))
            .collect::<Result<Vec<f64>>>()?;
        let (random_mean_db, random_std_db) = mean_std(&random_db);
        let fixed = worst_grid_snr(&prepared.array_activation(), &prepared.array_map, rho)?;
        rows.push(PowerRow {
            p_tx_dbm: p_dbm,
            optimized_db: linear_to_db(optimized),
            random_mean_db,
            random_std_db,
            fixed_array_db: linear_to_db(fixed),
        });
    }
    Ok(PowerSweep {
        activation: solved.activation,
        rows,
    })
}

/// Machine-readable record of one CLI run. Keys serialize in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario_digest: String,
    pub method: String,
    pub seed: u64,
    pub objectives: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunSummary {
    pub fn new(command: &str, scenario: &Scenario, method: &str) -> Self {
        RunSummary {
            tool: "pinchmap".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            scenario_digest: scenario.digest(),
            method: method.into(),
            seed: scenario.optimization().seed,
            objectives: BTreeMap::new(),
            activation: None,
            wall_time_s: None,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}

//! SNR-threshold coverage maximisation.
//!
//! A valid grid cell is covered when its average SNR reaches `γ_th`. The
//! objective counts covered cells; [`coordinate_ascent`] improves one
//! waveguide at a time and [`exact_enumerate`] scans all `M^N` activations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activation::{check_budget, Activation};
use crate::channel::{avg_snr, GainMap};
use crate::enumerate::argmax_activation;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;

/// Relative slack on the closed threshold `Γ̄ ≥ γ_th`.
pub const THRESHOLD_REL_TOL: f64 = 1e-12;

pub const DEFAULT_MAX_SWEEPS: usize = 50;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[inline]
pub fn is_covered(snr: f64, gamma_th: f64) -> bool {
    snr >= gamma_th * (1.0 - THRESHOLD_REL_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    Exact,
    CoordinateAscent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub activation: Activation,
    pub covered_count: usize,
    pub coverage_fraction: f64,
    pub snr_field: Vec<f64>,
    pub gamma_th: f64,
    pub sweeps_used: usize,
    pub method: CoverageMethod,
    /// Covered count before the first update and after every single-waveguide
    /// update, for coordinate ascent. Empty for enumeration.
    pub trace: Vec<usize>,
}

fn check_threshold(gamma_th: f64) -> Result<()> {
    if !(gamma_th > 0.0 && gamma_th.is_finite()) {
        return Err(Error::Usage(format!("SNR threshold must be > 0, got {gamma_th}")));
    }
    Ok(())
}

fn count_covered(field: &[f64], valid: &[bool], gamma_th: f64) -> usize {
    field
        .iter()
        .zip(valid)
        .filter(|(snr, ok)| **ok && is_covered(**snr, gamma_th))
        .count()
}

pub fn coverage_count(activation: &Activation, gain_map: &GainMap, rho: f64, gamma_th: f64) -> Result<usize> {
    check_threshold(gamma_th)?;
    let field = avg_snr(activation, gain_map, rho)?;
    Ok(count_covered(&field, gain_map.valid(), gamma_th))
}

/// Average SNR with waveguide `n` switched off: `Γ̄(A) − ρ·ḡ[n, m_n]`.
pub fn residual_snr(activation: &Activation, n: usize, gain_map: &GainMap, rho: f64) -> Result<Vec<f64>> {
    if n >= gain_map.n_waveguides() {
        return Err(Error::Usage(format!(
            "waveguide {} out of range for N = {}",
            n + 1,
            gain_map.n_waveguides()
        )));
    }
    let mut field = avg_snr(activation, gain_map, rho)?;
    for (snr, g) in field.iter_mut().zip(gain_map.gains(n, activation.get(n))) {
        *snr -= rho * g;
    }
    Ok(field)
}

/// Best tap for waveguide `n` given the residual field of the others.
///
/// Maximises the covered count; ties go to the larger total margin
/// `Σ [Γ̄ − γ_th]⁺`, then to the smaller candidate index.
pub fn best_candidate(n: usize, residual: &[f64], gain_map: &GainMap, rho: f64, gamma_th: f64) -> Result<usize> {
    check_threshold(gamma_th)?;
    if n >= gain_map.n_waveguides() || residual.len() != gain_map.n_grids() {
        return Err(Error::Usage("waveguide index or residual length out of range".into()));
    }
    let valid = gain_map.valid();
    let mut best: Option<(usize, usize, f64)> = None;
    for m in 0..gain_map.n_candidates() {
        let mut count = 0;
        let mut margin = 0.0;
        for ((res, g), ok) in residual.iter().zip(gain_map.gains(n, m)).zip(valid) {
            if !ok {
                continue;
            }
            let snr = res + rho * g;
            if is_covered(snr, gamma_th) {
                count += 1;
            }
            margin += (snr - gamma_th).max(0.0);
        }
        let better = match best {
            None => true,
            Some((_, c, mg)) => count > c || (count == c && margin > mg),
        };
        if better {
            best = Some((m, count, margin));
        }
    }
    Ok(best.map(|(m, _, _)| m).unwrap_or(0))
}

fn finish(
    activation: Activation,
    gain_map: &GainMap,
    rho: f64,
    gamma_th: f64,
    sweeps_used: usize,
    method: CoverageMethod,
    trace: Vec<usize>,
) -> Result<CoverageResult> {
    let snr_field = avg_snr(&activation, gain_map, rho)?;
    let covered_count = count_covered(&snr_field, gain_map.valid(), gamma_th);
    let n_valid = gain_map.n_valid();
    Ok(CoverageResult {
        activation,
        covered_count,
        coverage_fraction: if n_valid == 0 { 0.0 } else { covered_count as f64 / n_valid as f64 },
        snr_field,
        gamma_th,
        sweeps_used,
        method,
        trace,
    })
}

/// Cyclic single-waveguide improvement until a full sweep changes nothing.
pub fn coordinate_ascent(
    initial: &Activation,
    gain_map: &GainMap,
    rho: f64,
    gamma_th: f64,
    max_sweeps: usize,
) -> Result<CoverageResult> {
    check_threshold(gamma_th)?;
    if max_sweeps < 1 {
        return Err(Error::Usage("max_sweeps must be at least 1".into()));
    }
    initial.check(gain_map.n_waveguides(), gain_map.n_candidates())?;
    let mut activation = initial.clone();
    let mut trace = vec![coverage_count(&activation, gain_map, rho, gamma_th)?];
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for n in 0..gain_map.n_waveguides() {
            let residual = residual_snr(&activation, n, gain_map, rho)?;
            let m = best_candidate(n, &residual, gain_map, rho, gamma_th)?;
            if m != activation.get(n) {
                activation.set(n, m);
                changed = true;
            }
            trace.push(coverage_count(&activation, gain_map, rho, gamma_th)?);
        }
        if !changed {
            break;
        }
    }
    finish(activation, gain_map, rho, gamma_th, sweeps, CoverageMethod::CoordinateAscent, trace)
}

/// Coordinate ascent from the centred start plus `restarts - 1` random
/// starts; the best covered count wins, earliest start on ties.
pub fn coordinate_ascent_multistart(
    gain_map: &GainMap,
    rho: f64,
    gamma_th: f64,
    max_sweeps: usize,
    restarts: usize,
    seed: u64,
) -> Result<CoverageResult> {
    let (n_wg, n_cand) = (gain_map.n_waveguides(), gain_map.n_candidates());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best =
        coordinate_ascent(&Activation::centered(n_wg, n_cand), gain_map, rho, gamma_th, max_sweeps)?;
    for _ in 1..restarts {
        let start = Activation::random_with(n_wg, n_cand, &mut rng);
        let result = coordinate_ascent(&start, gain_map, rho, gamma_th, max_sweeps)?;
        if result.covered_count > best.covered_count {
            best = result;
        }
    }
    Ok(best)
}

/// Global optimum by enumerating every activation, refusing when `M^N`
/// exceeds `budget`. Ties resolve to the lexicographically smallest selection.
pub fn exact_enumerate(gain_map: &GainMap, rho: f64, gamma_th: f64, budget: u64) -> Result<CoverageResult> {
    check_threshold(gamma_th)?;
    check_budget(gain_map.n_waveguides(), gain_map.n_candidates(), budget)?;
    let valid = gain_map.valid();
    let (activation, _) = argmax_activation(gain_map, |sums| {
        sums.iter()
            .zip(valid)
            .filter(|(s, ok)| **ok && is_covered(rho * **s, gamma_th))
            .count()
    });
    finish(activation, gain_map, rho, gamma_th, 0, CoverageMethod::Exact, Vec::new())
}

/// A Maximum-Coverage instance with 1-based elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McInstance {
    pub universe_size: usize,
    pub subsets: Vec<Vec<usize>>,
    pub budget: usize,
}

impl McInstance {
    pub fn validate(&self) -> Result<()> {
        if self.universe_size == 0 {
            return Err(Error::Validation("the universe must be nonempty".into()));
        }
        if self.budget < 1 || self.budget > self.subsets.len() {
            return Err(Error::Validation(format!(
                "budget k = {} must lie in [1, J = {}]",
                self.budget,
                self.subsets.len()
            )));
        }
        for (j, set) in self.subsets.iter().enumerate() {
            if let Some(e) = set.iter().find(|e| **e < 1 || **e > self.universe_size) {
                return Err(Error::Validation(format!(
                    "element {e} of set {} is outside [1, {}]",
                    j + 1,
                    self.universe_size
                )));
            }
        }
        Ok(())
    }
}

/// A synthetic activation problem with unit `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    pub gain_map: GainMap,
    pub rho: f64,
    pub gamma_th: f64,
}

/// Encodes a Maximum-Coverage instance as an activation problem.
///
/// Each of the `k` waveguides may pick any of the `J` sets; candidate `m`
/// contributes exactly `γ_th` to the grid cells of its set and zero elsewhere,
/// so a cell is covered iff some selected set contains it.
pub fn reduce_mc(instance: &McInstance, gamma_th: f64) -> Result<ReducedProblem> {
    instance.validate()?;
    check_threshold(gamma_th)?;
    let grid = GridSpec {
        nh: instance.universe_size,
        nv: 1,
    };
    let mut row = Vec::with_capacity(instance.subsets.len() * grid.len());
    for set in &instance.subsets {
        let mut gains = vec![0.0; grid.len()];
        for e in set {
            gains[e - 1] = gamma_th;
        }
        row.extend(gains);
    }
    let gbar = row.repeat(instance.budget);
    let gain_map = GainMap::from_gains(instance.budget, instance.subsets.len(), grid, gbar, vec![true; grid.len()])?;
    Ok(ReducedProblem {
        gain_map,
        rho: 1.0,
        gamma_th,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_map(rng: &mut ChaCha8Rng, n: usize, m: usize, grid: GridSpec) -> GainMap {
        let gbar = (0..n * m * grid.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let valid = (0..grid.len()).map(|_| rng.random_bool(0.9)).collect();
        GainMap::from_gains(n, m, grid, gbar, valid).unwrap()
    }

    #[test]
    fn extreme_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gm = random_map(&mut rng, 3, 4, GridSpec { nh: 12, nv: 6 });
        let a = Activation::centered(3, 4);
        assert_eq!(coverage_count(&a, &gm, 2.0, 1e-300).unwrap(), gm.n_valid());
        let peak = avg_snr(&a, &gm, 2.0).unwrap().into_iter().fold(0.0, f64::max);
        assert_eq!(coverage_count(&a, &gm, 2.0, peak * 1.01).unwrap(), 0);
        assert!(coverage_count(&a, &gm, 2.0, 0.0).is_err());
    }

    #[test]
    fn threshold_is_closed() {
        let grid = GridSpec { nh: 1, nv: 1 };
        let gm = GainMap::from_gains(1, 1, grid, vec![0.3], vec![true]).unwrap();
        let a = Activation::new(vec![0]);
        let snr = avg_snr(&a, &gm, 10.0).unwrap()[0];
        assert_eq!(coverage_count(&a, &gm, 10.0, snr).unwrap(), 1);
    }

    #[test]
    fn residual_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gm = random_map(&mut rng, 3, 4, GridSpec { nh: 5, nv: 4 });
        let a = Activation::new(vec![0, 3, 2]);
        let full = avg_snr(&a, &gm, 7.0).unwrap();
        for n in 0..3 {
            let res = residual_snr(&a, n, &gm, 7.0).unwrap();
            assert!(res.iter().all(|r| *r >= 0.0));
            for (k, r) in res.iter().enumerate() {
                let back = r + 7.0 * gm.gains(n, a.get(n))[k];
                assert!((back - full[k]).abs() <= 1e-12 * full[k]);
            }
            // Switching waveguide n and re-adding gives the direct evaluation.
            for m in 0..4 {
                let direct = avg_snr(&a.with(n, m), &gm, 7.0).unwrap();
                for (k, r) in res.iter().enumerate() {
                    let via = r + 7.0 * gm.gains(n, m)[k];
                    assert!((via - direct[k]).abs() <= 1e-12 * direct[k]);
                }
            }
        }
        let single = gm.waveguide(1);
        let res = residual_snr(&Activation::new(vec![2]), 0, &single, 7.0).unwrap();
        assert!(res.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn single_candidate_is_returned() {
        let gm = GainMap::from_gains(1, 1, GridSpec { nh: 2, nv: 1 }, vec![1.0, 2.0], vec![true; 2]).unwrap();
        assert_eq!(best_candidate(0, &[0.0, 0.0], &gm, 1.0, 1.5).unwrap(), 0);
    }

    #[test]
    fn margin_breaks_count_ties() {
        // Candidate 0 is dominated everywhere; both cover the single valid cell.
        let grid = GridSpec { nh: 2, nv: 1 };
        let gm = GainMap::from_gains(1, 2, grid, vec![2.0, 0.1, 3.0, 0.2], vec![true, true]).unwrap();
        assert_eq!(best_candidate(0, &[0.0, 0.0], &gm, 1.0, 1.0).unwrap(), 1);
        // Exact ties fall back to the smallest index.
        let tie = GainMap::from_gains(1, 2, grid, vec![2.0, 0.1, 2.0, 0.1], vec![true, true]).unwrap();
        assert_eq!(best_candidate(0, &[0.0, 0.0], &tie, 1.0, 1.0).unwrap(), 0);
    }

    #[test]
    fn best_candidate_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let gm = random_map(&mut rng, 2, 3, GridSpec { nh: 6, nv: 4 });
            let a = Activation::random_with(2, 3, &mut rng);
            let gamma = rng.random_range(0.5..1.5);
            for n in 0..2 {
                let res = residual_snr(&a, n, &gm, 1.0).unwrap();
                let chosen = best_candidate(n, &res, &gm, 1.0, gamma).unwrap();
                let scan: Vec<usize> = (0..3)
                    .map(|m| coverage_count(&a.with(n, m), &gm, 1.0, gamma).unwrap())
                    .collect();
                assert_eq!(scan[chosen], *scan.iter().max().unwrap());
            }
        }
    }

    #[test]
    fn fixed_point_stops_after_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gm = random_map(&mut rng, 3, 4, GridSpec { nh: 12, nv: 6 });
        let first = coordinate_ascent(&Activation::centered(3, 4), &gm, 1.0, 1.2, 50).unwrap();
        let again = coordinate_ascent(&first.activation, &gm, 1.0, 1.2, 50).unwrap();
        assert_eq!(again.sweeps_used, 1);
        assert_eq!(again.activation, first.activation);
        assert!(coordinate_ascent(&first.activation, &gm, 1.0, 1.2, 0).is_err());
    }

    #[test]
    fn ascent_trace_is_monotone_and_bounded_by_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let gm = random_map(&mut rng, 3, 4, GridSpec { nh: 12, nv: 6 });
            let gamma = rng.random_range(1.0..2.0);
            let heur = coordinate_ascent(&Activation::centered(3, 4), &gm, 1.0, gamma, 50).unwrap();
            assert!(heur.trace.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*heur.trace.last().unwrap(), heur.covered_count);
            let exact = exact_enumerate(&gm, 1.0, gamma, DEFAULT_BUDGET).unwrap();
            assert!(heur.covered_count <= exact.covered_count);
        }
    }

    #[test]
    fn enumeration_matches_best_candidate_for_one_waveguide() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gm = random_map(&mut rng, 1, 7, GridSpec { nh: 5, nv: 5 });
        let exact = exact_enumerate(&gm, 1.0, 0.6, DEFAULT_BUDGET).unwrap();
        let zero = vec![0.0; gm.n_grids()];
        assert_eq!(exact.activation.get(0), best_candidate(0, &zero, &gm, 1.0, 0.6).unwrap());
    }

    #[test]
    fn enumeration_budget() {
        let grid = GridSpec { nh: 1, nv: 1 };
        let gm = GainMap::from_gains(8, 20, grid, vec![1.0; 160], vec![true]).unwrap();
        match exact_enumerate(&gm, 1.0, 1.0, DEFAULT_BUDGET) {
            Err(Error::Budget { required, budget }) => {
                assert_eq!(required, 20u128.pow(8));
                assert_eq!(budget, DEFAULT_BUDGET);
            }
            other => panic!("expected a budget refusal, got {other:?}"),
        }
        let gm = GainMap::from_gains(4, 10, grid, vec![1.0; 40], vec![true]).unwrap();
        assert!(exact_enumerate(&gm, 1.0, 1.0, DEFAULT_BUDGET).is_ok());
    }

    #[test]
    fn small_reduction_example() {
        let instance = McInstance {
            universe_size: 3,
            subsets: vec![vec![1, 2], vec![2, 3], vec![3]],
            budget: 1,
        };
        let reduced = reduce_mc(&instance, 4.0).unwrap();
        let result = exact_enumerate(&reduced.gain_map, reduced.rho, reduced.gamma_th, DEFAULT_BUDGET).unwrap();
        assert_eq!(result.covered_count, 2);
        let all = McInstance { budget: 3, ..instance };
        let reduced = reduce_mc(&all, 4.0).unwrap();
        let result = exact_enumerate(&reduced.gain_map, reduced.rho, reduced.gamma_th, DEFAULT_BUDGET).unwrap();
        assert_eq!(result.covered_count, 3);
    }

    #[test]
    fn malformed_instances_are_rejected() {
        let bad = McInstance {
            universe_size: 3,
            subsets: vec![vec![4]],
            budget: 1,
        };
        assert!(reduce_mc(&bad, 1.0).is_err());
        let over = McInstance {
            universe_size: 3,
            subsets: vec![vec![1]],
            budget: 2,
        };
        assert!(reduce_mc(&over, 1.0).is_err());
    }
}

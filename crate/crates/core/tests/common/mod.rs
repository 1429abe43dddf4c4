#![allow(dead_code)]

use pinchmap::scenario::{CandidateConfig, ChannelConfig, OptimizationConfig, ScenarioConfig};
use pinchmap::{Blockage, GridSpec, Region, Scenario};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random cuboid inside `region`, footprint at most a third of the room.
pub fn random_blockage(rng: &mut ChaCha8Rng, region: &Region) -> Blockage {
    let w = rng.random_range(0.05..0.33) * region.dx;
    let d = rng.random_range(0.05..0.33) * region.dy;
    let x_min = rng.random_range(0.0..region.dx - w);
    let y_min = rng.random_range(-region.dy / 2.0..region.dy / 2.0 - d);
    Blockage {
        x_min,
        x_max: x_min + w,
        y_min,
        y_max: y_min + d,
        height: rng.random_range(0.2..0.9) * region.dv,
    }
}

pub fn random_config(
    rng: &mut ChaCha8Rng,
    n_waveguides: usize,
    n_candidates: usize,
    grid: GridSpec,
    n_blockages: usize,
    mu_sq_db: f64,
) -> ScenarioConfig {
    let region = Region {
        dx: rng.random_range(10.0..40.0),
        dy: rng.random_range(6.0..20.0),
        dv: rng.random_range(3.0..10.0),
    };
    let blockages = (0..n_blockages).map(|_| random_blockage(rng, &region)).collect();
    ScenarioConfig {
        version: 1,
        region,
        waveguides: n_waveguides,
        candidates: CandidateConfig {
            count: Some(n_candidates),
            x_coords: None,
        },
        blockages,
        grid,
        channel: ChannelConfig {
            fc_hz: 28e9,
            n_eff: 1.4,
            p_tx_dbm: 40.0,
            noise_dbm: -70.0,
            mu_sq_db,
            n_clusters: 4,
        },
        optimization: OptimizationConfig::default(),
    }
}

pub fn random_scenario(
    rng: &mut ChaCha8Rng,
    n_waveguides: usize,
    n_candidates: usize,
    grid: GridSpec,
    n_blockages: usize,
    mu_sq_db: f64,
) -> Scenario {
    Scenario::from_config(random_config(rng, n_waveguides, n_candidates, grid, n_blockages, mu_sq_db))
        .expect("random scenario is valid")
}

/// Brute-force Maximum-Coverage optimum over all `k`-subsets of the sets.
pub fn max_coverage_bruteforce(universe: usize, sets: &[Vec<usize>], k: usize) -> usize {
    fn rec(sets: &[Vec<usize>], start: usize, left: usize, covered: &mut Vec<u32>, best: &mut usize) {
        if left == 0 {
            *best = (*best).max(covered.iter().filter(|c| **c > 0).count());
            return;
        }
        for j in start..sets.len() {
            for e in &sets[j] {
                covered[e - 1] += 1;
            }
            rec(sets, j + 1, left - 1, covered, best);
            for e in &sets[j] {
                covered[e - 1] -= 1;
            }
        }
    }
    let mut best = 0;
    rec(sets, 0, k, &mut vec![0; universe], &mut best);
    best
}

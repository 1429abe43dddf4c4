//! Channel constants, closed-form average gains and the Monte-Carlo sampler.
//!
//! The average received SNR at a grid cell under activation `A` is
//!
//! ```text
//! Γ̄(u,v; A) = ρ · Σ_n (χ_{n,m_n} η + μ²) / r²_{n,m_n}(u,v)
//! ```
//!
//! where `η = (λ/4π)²` is the free-space constant, `μ²` the aggregate NLoS
//! cluster power and `ρ = P/σ²`. The per-candidate terms do not depend on the
//! activation, so they are computed once into a [`GainMap`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, GridSpec, Point3, VisibilityMap};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    fc: f64,
    lambda: f64,
    lambda_g: f64,
    n_eff: f64,
    eta: f64,
    mu_sq: f64,
    cluster_powers: Vec<f64>,
    p_tx: f64,
    sigma_sq: f64,
    rho: f64,
}

impl ChannelParams {
    /// `p_tx` and `sigma_sq` in watts, cluster powers as linear gains.
    pub fn new(fc: f64, n_eff: f64, cluster_powers: Vec<f64>, p_tx: f64, sigma_sq: f64) -> Result<Self> {
        if !(fc.is_finite() && fc > 0.0) {
            return Err(Error::Validation(format!("carrier frequency must be > 0, got {fc}")));
        }
        if !(n_eff >= 1.0 && n_eff.is_finite()) {
            return Err(Error::Validation(format!("n_eff must be >= 1, got {n_eff}")));
        }
        if cluster_powers.is_empty() || cluster_powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Validation(
                "cluster powers must be a nonempty list of finite values >= 0".into(),
            ));
        }
        if !(p_tx.is_finite() && p_tx > 0.0) || !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::Validation(format!(
                "transmit power and noise power must be > 0, got P = {p_tx}, sigma^2 = {sigma_sq}"
            )));
        }
        let lambda = SPEED_OF_LIGHT / fc;
        Ok(ChannelParams {
            fc,
            lambda,
            lambda_g: lambda / n_eff,
            n_eff,
            eta: (lambda / (4.0 * PI)).powi(2),
            mu_sq: cluster_powers.iter().sum(),
            cluster_powers,
            p_tx,
            sigma_sq,
            rho: p_tx / sigma_sq,
        })
    }

    /// Splits `mu_sq` evenly over `n_clusters`.
    pub fn with_equal_clusters(
        fc: f64,
        n_eff: f64,
        mu_sq: f64,
        n_clusters: usize,
        p_tx: f64,
        sigma_sq: f64,
    ) -> Result<Self> {
        if n_clusters == 0 {
            return Err(Error::Validation("at least one NLoS cluster is required".into()));
        }
        let share = mu_sq / n_clusters as f64;
        Self::new(fc, n_eff, vec![share; n_clusters], p_tx, sigma_sq)
    }

    pub fn with_power(&self, p_tx: f64) -> Result<Self> {
        Self::new(self.fc, self.n_eff, self.cluster_powers.clone(), p_tx, self.sigma_sq)
    }

    pub fn with_n_eff(&self, n_eff: f64) -> Result<Self> {
        Self::new(self.fc, n_eff, self.cluster_powers.clone(), self.p_tx, self.sigma_sq)
    }

    /// Rescales every cluster so that the total becomes `mu_sq`.
    pub fn with_mu_sq(&self, mu_sq: f64) -> Result<Self> {
        let n = self.cluster_powers.len();
        Self::with_equal_clusters(self.fc, self.n_eff, mu_sq, n, self.p_tx, self.sigma_sq)
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn lambda_g(&self) -> f64 {
        self.lambda_g
    }
    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu_sq(&self) -> f64 {
        self.mu_sq
    }
    pub fn cluster_powers(&self) -> &[f64] {
        &self.cluster_powers
    }
    pub fn p_tx(&self) -> f64 {
        self.p_tx
    }
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Per-candidate, per-grid average channel powers.
///
/// Storage is one contiguous row of `nh·nv` values per candidate `(n, m)`,
/// rows ordered waveguide-major. Distances are absent for synthetic maps that
/// do not come from a geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    n_waveguides: usize,
    n_candidates: usize,
    grid: GridSpec,
    gbar: Vec<f64>,
    r_sq: Option<Vec<f64>>,
    valid: Vec<bool>,
}

impl GainMap {
    /// Builds a map from raw gains, e.g. for synthetic instances.
    pub fn from_gains(
        n_waveguides: usize,
        n_candidates: usize,
        grid: GridSpec,
        gbar: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let g = grid.len();
        if n_waveguides == 0 || n_candidates == 0 {
            return Err(Error::Usage("a gain map needs at least one waveguide and one candidate".into()));
        }
        if gbar.len() != n_waveguides * n_candidates * g || valid.len() != g {
            return Err(Error::Usage(format!(
                "gain tensor has {} entries and mask {}, expected {} and {g}",
                gbar.len(),
                valid.len(),
                n_waveguides * n_candidates * g
            )));
        }
        if gbar.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("gains must be finite and nonnegative".into()));
        }
        Ok(GainMap {
            n_waveguides,
            n_candidates,
            grid,
            gbar,
            r_sq: None,
            valid,
        })
    }

    pub fn n_waveguides(&self) -> usize {
        self.n_waveguides
    }

    pub fn n_candidates(&self) -> usize {
        self.n_candidates
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n_grids(&self) -> usize {
        self.grid.len()
    }

    fn offset(&self, n: usize, m: usize) -> usize {
        (n * self.n_candidates + m) * self.grid.len()
    }

    /// Gains of candidate `(n, m)` over the flat grid.
    pub fn gains(&self, n: usize, m: usize) -> &[f64] {
        let start = self.offset(n, m);
        &self.gbar[start..start + self.grid.len()]
    }

    pub fn gain(&self, n: usize, m: usize, u: usize, v: usize) -> f64 {
        self.gains(n, m)[self.grid.index(u, v)]
    }

    pub fn distances_sq(&self, n: usize, m: usize) -> Option<&[f64]> {
        let start = self.offset(n, m);
        self.r_sq.as_ref().map(|r| &r[start..start + self.grid.len()])
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Restriction to a single waveguide, as an `N = 1` map.
    pub fn waveguide(&self, n: usize) -> GainMap {
        let start = self.offset(n, 0);
        let end = self.offset(n + 1, 0);
        GainMap {
            n_waveguides: 1,
            n_candidates: self.n_candidates,
            grid: self.grid,
            gbar: self.gbar[start..end].to_vec(),
            r_sq: self.r_sq.as_ref().map(|r| r[start..end].to_vec()),
            valid: self.valid.clone(),
        }
    }
}

/// Squared distance between tap `(n, m)` and the floor centre of `(u, v)`.
pub fn distance_sq(geometry: &Geometry, n: usize, m: usize, u: usize, v: usize) -> Result<f64> {
    let tap = geometry.candidate_position(n, m)?;
    if u >= geometry.grid.nh || v >= geometry.grid.nv {
        return Err(Error::Usage(format!("grid cell ({}, {}) out of range", u + 1, v + 1)));
    }
    Ok(point_distance_sq(tap, geometry.grid_point(u, v)))
}

fn point_distance_sq(tap: Point3, grid: Point3) -> f64 {
    let dx = grid[0] - tap[0];
    let dy = grid[1] - tap[1];
    dx * dx + (dy * dy + tap[2] * tap[2])
}

/// Average power `(χη + μ²)/r²` of a single link.
pub fn avg_gain(visible: bool, r_sq: f64, params: &ChannelParams) -> Result<f64> {
    if !(r_sq > 0.0) {
        return Err(Error::Domain(format!("squared distance must be > 0, got {r_sq}")));
    }
    Ok(gain_unchecked(visible, r_sq, params))
}

fn gain_unchecked(visible: bool, r_sq: f64, params: &ChannelParams) -> f64 {
    let los = if visible { params.eta } else { 0.0 };
    (los + params.mu_sq) / r_sq
}

fn gain_rows(
    sources: &[Point3],
    chi: impl Fn(usize) -> Vec<bool> + Sync,
    grid_points: &[Point3],
    params: &ChannelParams,
) -> (Vec<f64>, Vec<f64>) {
    let rows: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_iter()
        .enumerate()
        .map(|(k, &source)| {
            let visible = chi(k);
            let r_sq: Vec<f64> = grid_points.iter().map(|p| point_distance_sq(source, *p)).collect();
            let gains = r_sq
                .iter()
                .zip(&visible)
                .map(|(r, c)| gain_unchecked(*c, *r, params))
                .collect();
            (gains, r_sq)
        })
        .collect();
    let (gains, distances): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    (gains.concat(), distances.concat())
}

/// Offline gain tensor for every candidate tap and grid cell.
pub fn precompute_gain_map(
    geometry: &Geometry,
    visibility: &VisibilityMap,
    params: &ChannelParams,
) -> Result<GainMap> {
    let (n_wg, n_cand) = (geometry.n_waveguides(), geometry.n_candidates());
    if visibility.n_waveguides() != n_wg
        || visibility.n_candidates() != n_cand
        || visibility.grid() != geometry.grid
    {
        return Err(Error::Usage(format!(
            "visibility map is {}x{} over {:?}, scenario is {n_wg}x{n_cand} over {:?}",
            visibility.n_waveguides(),
            visibility.n_candidates(),
            visibility.grid(),
            geometry.grid
        )));
    }
    let mut sources = Vec::with_capacity(n_wg * n_cand);
    for n in 0..n_wg {
        for m in 0..n_cand {
            sources.push(geometry.candidate_position(n, m)?);
        }
    }
    let (gbar, r_sq) = gain_rows(
        &sources,
        |k| visibility.row(k / n_cand, k % n_cand).to_vec(),
        &geometry.grid_points(),
        params,
    );
    Ok(GainMap {
        n_waveguides: n_wg,
        n_candidates: n_cand,
        grid: geometry.grid,
        gbar,
        r_sq: Some(r_sq),
        valid: visibility.valid().to_vec(),
    })
}

/// Per-grid average SNR `ρ·Σ_n ḡ[n, m_n]` in flat row-major order.
pub fn avg_snr(activation: &Activation, gain_map: &GainMap, rho: f64) -> Result<Vec<f64>> {
    activation.check(gain_map.n_waveguides, gain_map.n_candidates)?;
    let mut field = vec![0.0; gain_map.n_grids()];
    for (n, &m) in activation.selected().iter().enumerate() {
        for (acc, g) in field.iter_mut().zip(gain_map.gains(n, m)) {
            *acc += g;
        }
    }
    for snr in &mut field {
        *snr *= rho;
    }
    Ok(field)
}

/// Positions of an `n_elements` linear array centred at `(dx/2, 0, dv)`,
/// half-wavelength spaced along `y`.
pub fn fixed_array_elements(geometry: &Geometry, params: &ChannelParams, n_elements: usize) -> Vec<Point3> {
    let centre = (n_elements as f64 - 1.0) / 2.0;
    (0..n_elements)
        .map(|i| {
            [
                geometry.region.dx / 2.0,
                (i as f64 - centre) * params.lambda / 2.0,
                geometry.region.dv,
            ]
        })
        .collect()
}

/// Gain map of the fixed centred array baseline.
///
/// Each element is modelled as a waveguide with a single candidate, so the
/// baseline SNR field is `avg_snr` of the all-zero activation.
pub fn fixed_array_gain_map(geometry: &Geometry, params: &ChannelParams, n_elements: usize) -> Result<GainMap> {
    if n_elements == 0 {
        return Err(Error::Usage("the fixed array needs at least one element".into()));
    }
    let elements = fixed_array_elements(geometry, params, n_elements);
    let (gbar, r_sq) = gain_rows(
        &elements,
        |k| geometry.line_of_sight(elements[k]),
        &geometry.grid_points(),
        params,
    );
    Ok(GainMap {
        n_waveguides: n_elements,
        n_candidates: 1,
        grid: geometry.grid,
        gbar,
        r_sq: Some(r_sq),
        valid: geometry.valid_mask(),
    })
}

/// Draws instantaneous MRT SNR fields for a fixed activation.
///
/// LoS terms and per-cluster standard deviations are computed once; each
/// call to [`InstantaneousSampler::sample`] draws fresh Rayleigh clusters.
pub struct InstantaneousSampler {
    n_waveguides: usize,
    los: Vec<Complex64>,
    /// Per real/imaginary component, per (grid, waveguide, cluster).
    cluster_sd: Vec<f64>,
    n_clusters: usize,
    rho: f64,
}

impl InstantaneousSampler {
    pub fn new(
        activation: &Activation,
        geometry: &Geometry,
        visibility: &VisibilityMap,
        params: &ChannelParams,
    ) -> Result<Self> {
        let n_wg = geometry.n_waveguides();
        activation.check(n_wg, geometry.n_candidates())?;
        let n_clusters = params.cluster_powers.len();
        let g = geometry.n_grids();
        let mut los = Vec::with_capacity(g * n_wg);
        let mut cluster_sd = Vec::with_capacity(g * n_wg * n_clusters);
        let k_free = 2.0 * PI / params.lambda;
        let k_guided = 2.0 * PI / params.lambda_g;
        for (idx, point) in geometry.grid_points().into_iter().enumerate() {
            for (n, &m) in activation.selected().iter().enumerate() {
                let tap = geometry.candidate_position(n, m)?;
                let r_sq = point_distance_sq(tap, point);
                let r = r_sq.sqrt();
                let h_los = if visibility.row(n, m)[idx] {
                    let phase = -k_free * r + k_guided * tap[0];
                    Complex64::from_polar(params.eta.sqrt() / r, phase)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                los.push(h_los);
                cluster_sd.extend(params.cluster_powers.iter().map(|p| (p / r_sq / 2.0).sqrt()));
            }
        }
        Ok(InstantaneousSampler {
            n_waveguides: n_wg,
            los,
            cluster_sd,
            n_clusters,
            rho: params.rho,
        })
    }

    /// One realisation of `Γ = ρ‖h̃‖²` over the whole grid.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut field = Vec::with_capacity(self.los.len() / self.n_waveguides.max(1));
        for (los, sds) in self
            .los
            .chunks(self.n_waveguides)
            .zip(self.cluster_sd.chunks(self.n_waveguides * self.n_clusters))
        {
            let mut norm_sq = 0.0;
            for (h_los, sd) in los.iter().zip(sds.chunks(self.n_clusters)) {
                let mut h = *h_los;
                for s in sd {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    h += Complex64::new(s * re, s * im);
                }
                norm_sq += h.norm_sqr();
            }
            field.push(self.rho * norm_sq);
        }
        field
    }

    /// Sample mean and standard error per grid over `n_samples` draws.
    pub fn mean_and_stderr<R: Rng>(&self, rng: &mut R, n_samples: usize) -> (Vec<f64>, Vec<f64>) {
        let g = self.los.len() / self.n_waveguides.max(1);
        let mut sum = vec![0.0; g];
        let mut sum_sq = vec![0.0; g];
        for _ in 0..n_samples {
            for (i, x) in self.sample(rng).into_iter().enumerate() {
                sum[i] += x;
                sum_sq[i] += x * x;
            }
        }
        let n = n_samples as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let stderr = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, mu)| ((sq / n - mu * mu).max(0.0) * n / (n - 1.0) / n).sqrt())
            .collect();
        (mean, stderr)
    }
}

/// A single seeded draw of the instantaneous SNR field.
pub fn sample_instantaneous_snr(
    activation: &Activation,
    geometry: &Geometry,
    visibility: &VisibilityMap,
    params: &ChannelParams,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = InstantaneousSampler::new(activation, geometry, visibility, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{visibility, Blockage, CandidateGrid, Region};
    use crate::units::{db_to_linear, dbm_to_watts, linear_to_db};

    fn table1_params() -> ChannelParams {
        ChannelParams::with_equal_clusters(28e9, 1.4, db_to_linear(-60.0), 4, dbm_to_watts(40.0), dbm_to_watts(-70.0))
            .unwrap()
    }

    fn room(n: usize, blockages: Vec<Blockage>, dv: f64) -> Geometry {
        let region = Region::new(200.0, 60.0, dv).unwrap();
        Geometry::new(
            region,
            n,
            CandidateGrid::uniform(n, 10, region.dx),
            blockages,
            GridSpec { nh: 40, nv: 12 },
        )
        .unwrap()
    }

    #[test]
    fn derived_constants() {
        let p = table1_params();
        // c^2 / (4π fc)^2 evaluated directly.
        let direct = SPEED_OF_LIGHT * SPEED_OF_LIGHT / (4.0 * PI * 28e9).powi(2);
        assert!((p.eta() - direct).abs() <= 1e-12 * direct);
        assert!((p.eta() - 7.26e-7).abs() < 0.005e-7);
        assert!((p.mu_sq() - 1e-6).abs() <= 1e-12 * 1e-6);
        assert!((p.rho() - 1e11).abs() <= 1e-3);
        assert!((p.lambda_g() - p.lambda() / 1.4).abs() < 1e-15);
    }

    fn tiny_room(n: usize, taps: Vec<Vec<f64>>) -> Geometry {
        let region = Region::new(10.0, 8.0, 10.0).unwrap();
        Geometry::new(region, n, CandidateGrid::explicit(taps), vec![], GridSpec { nh: 1, nv: 1 }).unwrap()
    }

    #[test]
    fn distance_examples() {
        // Single cell centred at (5, 0); waveguides at y = -4, 4 (N = 2) or
        // y = -4, 0, 4 (N = 3).
        let below = tiny_room(3, vec![vec![5.0]; 3]);
        assert_eq!(distance_sq(&below, 1, 0, 0, 0).unwrap(), 100.0);
        let offset = tiny_room(2, vec![vec![2.0], vec![2.0]]);
        assert_eq!(distance_sq(&offset, 1, 0, 0, 0).unwrap(), 125.0);
        assert!(distance_sq(&offset, 0, 0, 1, 0).is_err());
        let g = room(4, vec![], 10.0);
        for n in 0..4 {
            for m in 0..10 {
                for u in 0..40 {
                    for v in 0..12 {
                        assert!(distance_sq(&g, n, m, u, v).unwrap() >= 100.0);
                    }
                }
            }
        }
    }

    #[test]
    fn avg_gain_branches() {
        let p = table1_params();
        assert_eq!(avg_gain(false, 125.0, &p).unwrap(), p.mu_sq() / 125.0);
        assert_eq!(avg_gain(true, 100.0, &p).unwrap(), (p.eta() + p.mu_sq()) / 100.0);
        let los_only = ChannelParams::new(28e9, 1.4, vec![0.0], 1.0, 1.0).unwrap();
        assert_eq!(avg_gain(false, 100.0, &los_only).unwrap(), 0.0);
        assert!(matches!(avg_gain(true, 0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(avg_gain(true, -1.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn open_room_los_only_map() {
        let p = ChannelParams::new(28e9, 1.4, vec![0.0; 4], 1.0, 1.0).unwrap();
        let g = room(4, vec![], 10.0);
        let gm = precompute_gain_map(&g, &visibility(&g), &p).unwrap();
        for n in 0..4 {
            for m in 0..10 {
                let r = gm.distances_sq(n, m).unwrap();
                for (gain, r_sq) in gm.gains(n, m).iter().zip(r) {
                    assert_eq!(*gain, p.eta() / r_sq);
                    assert!(*r_sq >= 100.0);
                }
            }
        }
    }

    #[test]
    fn raising_waveguides_shrinks_peak_gain() {
        // N = 3, nh = 10, nv = 3 puts cell centres exactly under taps, so the
        // minimum squared distance is d_v^2.
        let p = table1_params();
        let peak = |dv: f64| {
            let region = Region::new(200.0, 60.0, dv).unwrap();
            let g = Geometry::new(
                region,
                3,
                CandidateGrid::uniform(3, 10, region.dx),
                vec![],
                GridSpec { nh: 10, nv: 3 },
            )
            .unwrap();
            let gm = precompute_gain_map(&g, &visibility(&g), &p).unwrap();
            let min_r = gm.r_sq.as_ref().unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(min_r, dv * dv);
            gm.gbar.iter().cloned().fold(0.0, f64::max)
        };
        assert!(peak(10.0) >= 4.0 * peak(20.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = table1_params();
        let g = room(4, vec![], 10.0);
        let other = room(3, vec![], 10.0);
        assert!(matches!(
            precompute_gain_map(&g, &visibility(&other), &p),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn single_waveguide_snr_is_scaled_gain() {
        let grid = GridSpec { nh: 3, nv: 1 };
        let gm = GainMap::from_gains(1, 2, grid, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![true; 3]).unwrap();
        let field = avg_snr(&Activation::new(vec![1]), &gm, 10.0).unwrap();
        assert_eq!(field, vec![40.0, 50.0, 60.0]);
        assert!(avg_snr(&Activation::new(vec![2]), &gm, 1.0).is_err());
        assert!(avg_snr(&Activation::new(vec![0, 0]), &gm, 1.0).is_err());
    }

    #[test]
    fn ten_db_more_power_is_ten_db_more_snr() {
        let p = table1_params();
        let g = room(4, vec![], 10.0);
        let gm = precompute_gain_map(&g, &visibility(&g), &p).unwrap();
        let a = Activation::centered(4, 10);
        let base = avg_snr(&a, &gm, p.rho()).unwrap();
        let louder = avg_snr(&a, &gm, p.with_power(p.p_tx() * 10.0).unwrap().rho()).unwrap();
        for (b, l) in base.iter().zip(&louder) {
            assert!((linear_to_db(*l) - linear_to_db(*b) - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn snr_below_an_isolated_tap() {
        // One waveguide pair 400 m apart so the other contributes negligibly.
        let region = Region::new(200.0, 400.0, 10.0).unwrap();
        let g = Geometry::new(
            region,
            2,
            CandidateGrid::explicit(vec![vec![100.0], vec![100.0]]),
            vec![],
            GridSpec { nh: 400, nv: 800 },
        )
        .unwrap();
        let p = table1_params();
        let gm = precompute_gain_map(&g, &visibility(&g), &p).unwrap();
        let field = avg_snr(&Activation::new(vec![0, 0]), &gm, p.rho()).unwrap();
        // Cell (199, 0) is centred at (99.75, -199.75): 0.25 m off the tap.
        let near = field[gm.grid().index(199, 0)];
        let expected = p.rho() * (p.eta() + p.mu_sq()) / 100.0;
        assert!((linear_to_db(near) - linear_to_db(expected)).abs() < 0.01);
        // 10 log10(1e11 * 1.72597e-6 / 100) = 32.37 dB.
        assert!((linear_to_db(expected) - 32.37).abs() < 0.01);
    }

    #[test]
    fn n_eff_does_not_move_averages() {
        let p = table1_params();
        let g = room(4, vec![Blockage { x_min: 10.0, x_max: 18.0, y_min: 0.0, y_max: 20.0, height: 6.0 }], 10.0);
        let vis = visibility(&g);
        let a = Activation::centered(4, 10);
        let base = avg_snr(&a, &precompute_gain_map(&g, &vis, &p).unwrap(), p.rho()).unwrap();
        let other = p.with_n_eff(2.3).unwrap();
        let moved = avg_snr(&a, &precompute_gain_map(&g, &vis, &other).unwrap(), other.rho()).unwrap();
        assert_eq!(base, moved);
    }

    #[test]
    fn los_only_sampling_is_deterministic_average() {
        let p = ChannelParams::new(28e9, 1.4, vec![0.0; 2], 1.0, 1e-10).unwrap();
        let g = room(3, vec![], 10.0);
        let vis = visibility(&g);
        let a = Activation::new(vec![1, 4, 8]);
        let gm = precompute_gain_map(&g, &vis, &p).unwrap();
        let mean = avg_snr(&a, &gm, p.rho()).unwrap();
        let draw = sample_instantaneous_snr(&a, &g, &vis, &p, 3).unwrap();
        for (d, m) in draw.iter().zip(&mean) {
            assert!((d - m).abs() <= 1e-12 * m);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = table1_params();
        let g = room(3, vec![], 10.0);
        let vis = visibility(&g);
        let a = Activation::new(vec![1, 4, 8]);
        let first = sample_instantaneous_snr(&a, &g, &vis, &p, 99).unwrap();
        let second = sample_instantaneous_snr(&a, &g, &vis, &p, 99).unwrap();
        assert_eq!(first, second);
        assert_ne!(first, sample_instantaneous_snr(&a, &g, &vis, &p, 100).unwrap());
    }

    #[test]
    fn single_element_array_is_a_centre_tap() {
        let p = table1_params();
        let region = Region::new(200.0, 60.0, 10.0).unwrap();
        let g = Geometry::new(
            region,
            3,
            CandidateGrid::explicit(vec![vec![100.0]; 3]),
            vec![],
            GridSpec { nh: 20, nv: 6 },
        )
        .unwrap();
        let array = fixed_array_gain_map(&g, &p, 1).unwrap();
        let taps = precompute_gain_map(&g, &visibility(&g), &p).unwrap();
        assert_eq!(array.gains(0, 0), taps.gains(1, 0));
    }

    #[test]
    fn array_aperture_is_centimetres() {
        let p = table1_params();
        let g = room(4, vec![], 10.0);
        let elements = fixed_array_elements(&g, &p, 4);
        let span = elements[3][1] - elements[0][1];
        assert!((span - 3.0 * p.lambda() / 2.0).abs() < 1e-15);
        assert!((span - 0.0161).abs() < 1e-4);
    }
}

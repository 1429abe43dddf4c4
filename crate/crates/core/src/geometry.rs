//! Deployment geometry and deterministic line-of-sight visibility.
//!
//! Coordinates follow the room frame: `x` runs along the waveguides from the
//! feed wall (`x = 0`) to `x = dx`, `y` is centered on the room axis so that
//! `y ∈ [-dy/2, dy/2]`, and `z` is height above the floor. Waveguides hang at
//! `z = dv`, receivers sit on the floor at `z = 0`.
//!
//! All indices are 0-based here; the IO layer converts to 1-based.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Absolute slack added to every slab bound, in metres.
pub const SLAB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub dx: f64,
    pub dy: f64,
    /// Waveguide height.
    pub dv: f64,
}

impl Region {
    pub fn new(dx: f64, dy: f64, dv: f64) -> Result<Self> {
        let region = Region { dx, dy, dv };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("dx", self.dx), ("dy", self.dy), ("dv", self.dv)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "region.{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// `N` parallel waveguides spread uniformly across the room width.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideLayout {
    n_waveguides: usize,
    spacing: f64,
    height: f64,
}

impl WaveguideLayout {
    pub fn new(n_waveguides: usize, region: &Region) -> Result<Self> {
        if n_waveguides < 2 {
            return Err(Error::Validation(format!(
                "at least 2 waveguides are required, got {n_waveguides}"
            )));
        }
        Ok(WaveguideLayout {
            n_waveguides,
            spacing: region.dy / (n_waveguides - 1) as f64,
            height: region.dv,
        })
    }

    pub fn n_waveguides(&self) -> usize {
        self.n_waveguides
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `y` coordinate of waveguide `n`, i.e. `n·d_h − dy/2`.
    ///
    /// Evaluated as an odd-or-even integer multiple of `d_h/2` so that
    /// mirrored waveguides get exactly negated coordinates.
    pub fn y(&self, n: usize) -> f64 {
        let steps = 2.0 * n as f64 - (self.n_waveguides - 1) as f64;
        steps * (0.5 * self.spacing)
    }

    pub fn feed_point(&self, n: usize) -> Point3 {
        [0.0, self.y(n), self.height]
    }
}

/// Candidate tap positions along each waveguide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateGrid {
    x_coords: Vec<Vec<f64>>,
}

impl CandidateGrid {
    /// Cell-centred taps `x = (m + ½)·dx/M`, identical on every waveguide.
    pub fn uniform(n_waveguides: usize, n_candidates: usize, dx: f64) -> Self {
        let step = dx / n_candidates as f64;
        let row: Vec<f64> = (0..n_candidates).map(|m| (m as f64 + 0.5) * step).collect();
        CandidateGrid {
            x_coords: vec![row; n_waveguides],
        }
    }

    pub fn explicit(x_coords: Vec<Vec<f64>>) -> Self {
        CandidateGrid { x_coords }
    }

    pub fn validate(&self, n_waveguides: usize, region: &Region) -> Result<()> {
        if self.x_coords.len() != n_waveguides {
            return Err(Error::Validation(format!(
                "candidate rows ({}) must match the number of waveguides ({n_waveguides})",
                self.x_coords.len()
            )));
        }
        let m = self.x_coords[0].len();
        if m == 0 {
            return Err(Error::Validation("at least one candidate per waveguide is required".into()));
        }
        for (n, row) in self.x_coords.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Validation(format!(
                    "waveguide {} has {} candidates, expected {m}",
                    n + 1,
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !(**x >= 0.0 && **x <= region.dx)) {
                return Err(Error::Validation(format!(
                    "candidate x = {x} on waveguide {} lies outside [0, {}]",
                    n + 1,
                    region.dx
                )));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "candidate x-coordinates on waveguide {} must be strictly increasing",
                    n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n_candidates(&self) -> usize {
        self.x_coords.first().map_or(0, Vec::len)
    }

    pub fn x(&self, n: usize, m: usize) -> f64 {
        self.x_coords[n][m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.x_coords
    }
}

/// Axis-aligned cuboid obstacle standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blockage {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub height: f64,
}

impl Blockage {
    pub fn validate(&self, region: &Region) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.height]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("blockage coordinates must be finite".into()));
        }
        if self.x_min >= self.x_max {
            return Err(Error::Validation(format!(
                "blockage x_min ({}) must be < x_max ({})",
                self.x_min, self.x_max
            )));
        }
        if self.y_min >= self.y_max {
            return Err(Error::Validation(format!(
                "blockage y_min ({}) must be < y_max ({})",
                self.y_min, self.y_max
            )));
        }
        let half = region.dy / 2.0;
        if self.y_min < -half || self.y_max > half {
            return Err(Error::Validation(format!(
                "blockage y-range [{}, {}] leaves the region [-{half}, {half}]",
                self.y_min, self.y_max
            )));
        }
        if !(self.height > 0.0 && self.height < region.dv) {
            return Err(Error::Validation(format!(
                "blockage height {} must satisfy 0 < H_blk < d_v = {}",
                self.height, region.dv
            )));
        }
        Ok(())
    }

    /// Closed footprint test on the floor plane.
    pub fn covers_footprint(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Reflection about the plane `y = 0`.
    pub fn mirrored(&self) -> Blockage {
        Blockage {
            y_min: -self.y_max,
            y_max: -self.y_min,
            ..*self
        }
    }

    fn lower(&self) -> Point3 {
        [self.x_min, self.y_min, 0.0]
    }

    fn upper(&self) -> Point3 {
        [self.x_max, self.y_max, self.height]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nh: usize,
    pub nv: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nh == 0 || self.nv == 0 {
            return Err(Error::Validation(format!(
                "grid must have nh >= 1 and nv >= 1, got {}x{}",
                self.nh, self.nv
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nh * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat row-major index, `u` outer and `v` inner.
    pub fn index(&self, u: usize, v: usize) -> usize {
        u * self.nv + v
    }

    pub fn du(&self, region: &Region) -> f64 {
        region.dx / self.nh as f64
    }

    pub fn dvv(&self, region: &Region) -> f64 {
        region.dy / self.nv as f64
    }

    pub fn x(&self, u: usize, region: &Region) -> f64 {
        (u as f64 + 0.5) * self.du(region)
    }

    /// `-dy/2 + (v + ½)·Δv`, evaluated so that `y(nv-1-v) == -y(v)` exactly.
    pub fn y(&self, v: usize, region: &Region) -> f64 {
        let steps = (2 * v + 1) as f64 - self.nv as f64;
        steps * (0.5 * self.dvv(region))
    }

    /// Scales both resolutions, keeping at least one cell per axis.
    pub fn scaled(&self, factor: f64) -> GridSpec {
        let scale = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        GridSpec {
            nh: scale(self.nh),
            nv: scale(self.nv),
        }
    }
}

/// Everything geometric about a deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub region: Region,
    pub layout: WaveguideLayout,
    pub candidates: CandidateGrid,
    pub blockages: Vec<Blockage>,
    pub grid: GridSpec,
}

impl Geometry {
    pub fn new(
        region: Region,
        n_waveguides: usize,
        candidates: CandidateGrid,
        blockages: Vec<Blockage>,
        grid: GridSpec,
    ) -> Result<Self> {
        region.validate()?;
        let layout = WaveguideLayout::new(n_waveguides, &region)?;
        candidates.validate(n_waveguides, &region)?;
        for blockage in &blockages {
            blockage.validate(&region)?;
        }
        grid.validate()?;
        Ok(Geometry {
            region,
            layout,
            candidates,
            blockages,
            grid,
        })
    }

    pub fn n_waveguides(&self) -> usize {
        self.layout.n_waveguides()
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.n_candidates()
    }

    pub fn n_grids(&self) -> usize {
        self.grid.len()
    }

    /// Position of tap `m` on waveguide `n`.
    pub fn candidate_position(&self, n: usize, m: usize) -> Result<Point3> {
        if n >= self.n_waveguides() || m >= self.n_candidates() {
            return Err(Error::Usage(format!(
                "candidate ({}, {}) out of range for N = {}, M = {}",
                n + 1,
                m + 1,
                self.n_waveguides(),
                self.n_candidates()
            )));
        }
        Ok([self.candidates.x(n, m), self.layout.y(n), self.region.dv])
    }

    /// Floor-level centre of grid cell `(u, v)`.
    pub fn grid_point(&self, u: usize, v: usize) -> Point3 {
        [self.grid.x(u, &self.region), self.grid.y(v, &self.region), 0.0]
    }

    /// Grid centres in flat row-major order.
    pub fn grid_points(&self) -> Vec<Point3> {
        let mut points = Vec::with_capacity(self.n_grids());
        for u in 0..self.grid.nh {
            for v in 0..self.grid.nv {
                points.push(self.grid_point(u, v));
            }
        }
        points
    }

    /// `false` for every cell whose centre lies inside an obstacle footprint.
    pub fn valid_mask(&self) -> Vec<bool> {
        self.grid_points()
            .iter()
            .map(|p| !self.blockages.iter().any(|b| b.covers_footprint(p[0], p[1])))
            .collect()
    }

    /// LoS flags from one source point to every grid centre.
    pub fn line_of_sight(&self, source: Point3) -> Vec<bool> {
        self.grid_points()
            .iter()
            .map(|p| !self.blockages.iter().any(|b| segment_blocked(source, *p, b)))
            .collect()
    }

    /// Reflection about `y = 0`: blockages mirror and waveguide order reverses.
    pub fn mirrored(&self) -> Geometry {
        let mut rows = self.candidates.rows().to_vec();
        rows.reverse();
        Geometry {
            region: self.region,
            layout: self.layout.clone(),
            candidates: CandidateGrid::explicit(rows),
            blockages: self.blockages.iter().map(Blockage::mirrored).collect(),
            grid: self.grid,
        }
    }
}

/// Closed segment–cuboid intersection by the parametric slab method.
///
/// Touching a face, edge or corner counts as blocked.
pub fn segment_blocked(start: Point3, end: Point3, blockage: &Blockage) -> bool {
    let lower = blockage.lower();
    let upper = blockage.upper();
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for axis in 0..3 {
        let lo = lower[axis] - SLAB_TOLERANCE;
        let hi = upper[axis] + SLAB_TOLERANCE;
        let origin = start[axis];
        let delta = end[axis] - origin;
        if delta == 0.0 {
            if origin < lo || origin > hi {
                return false;
            }
            continue;
        }
        let t_lo = (lo - origin) / delta;
        let t_hi = (hi - origin) / delta;
        let (near, far) = if t_lo <= t_hi { (t_lo, t_hi) } else { (t_hi, t_lo) };
        t_enter = t_enter.max(near);
        t_exit = t_exit.min(far);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}

/// LoS indicator for every (candidate, grid) pair plus the grid validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMap {
    n_waveguides: usize,
    n_candidates: usize,
    grid: GridSpec,
    chi: Vec<bool>,
    valid: Vec<bool>,
}

impl VisibilityMap {
    /// Assembles a map from per-candidate rows of length `grid.len()`,
    /// ordered waveguide-major.
    pub fn from_rows(
        n_waveguides: usize,
        n_candidates: usize,
        grid: GridSpec,
        rows: Vec<Vec<bool>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let g = grid.len();
        if rows.len() != n_waveguides * n_candidates || rows.iter().any(|r| r.len() != g) || valid.len() != g {
            return Err(Error::Usage("visibility rows do not match the stated dimensions".into()));
        }
        Ok(VisibilityMap {
            n_waveguides,
            n_candidates,
            grid,
            chi: rows.concat(),
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

    /// LoS flags of candidate `(n, m)` over the flat grid.
    pub fn row(&self, n: usize, m: usize) -> &[bool] {
        let g = self.grid.len();
        let start = (n * self.n_candidates + m) * g;
        &self.chi[start..start + g]
    }

    pub fn chi(&self, n: usize, m: usize, u: usize, v: usize) -> bool {
        self.row(n, m)[self.grid.index(u, v)]
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.grid.index(u, v)]
    }

    /// Fraction of `(n, m, u, v)` entries without line of sight.
    pub fn blocked_fraction(&self) -> f64 {
        let blocked = self.chi.iter().filter(|c| !**c).count();
        blocked as f64 / self.chi.len() as f64
    }
}

/// Computes the LoS tensor for every candidate tap of `geometry`.
pub fn visibility(geometry: &Geometry) -> VisibilityMap {
    let (n_wg, n_cand) = (geometry.n_waveguides(), geometry.n_candidates());
    let rows: Vec<Vec<bool>> = (0..n_wg * n_cand)
        .into_par_iter()
        .map(|k| {
            let source = [
                geometry.candidates.x(k / n_cand, k % n_cand),
                geometry.layout.y(k / n_cand),
                geometry.region.dv,
            ];
            geometry.line_of_sight(source)
        })
        .collect();
    VisibilityMap {
        n_waveguides: n_wg,
        n_candidates: n_cand,
        grid: geometry.grid,
        chi: rows.concat(),
        valid: geometry.valid_mask(),
    }
}

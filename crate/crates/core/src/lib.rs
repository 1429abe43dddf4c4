//! Blockage-aware average-SNR maps and activation optimization for
//! pinching-antenna systems.
//!
//! The pipeline is offline/online: [`geometry::visibility`] and
//! [`channel::precompute_gain_map`] build the per-candidate gain tensor once,
//! after which [`coverage`] and [`minmax`] search over activations using only
//! additions and comparisons on that tensor.

pub mod activation;
pub mod channel;
pub mod coverage;
mod enumerate;
pub mod error;
pub mod export;
pub mod geometry;
pub mod milp;
pub mod minmax;
pub mod scenario;
pub mod sweep;
pub mod units;

pub use activation::Activation;
pub use channel::{ChannelParams, GainMap};
pub use error::{Error, Result};
pub use geometry::{Blockage, CandidateGrid, Geometry, GridSpec, Region, VisibilityMap};
pub use coverage::{CoverageMethod, CoverageResult};
pub use minmax::{Feasibility, MinMaxResult};
pub use scenario::Scenario;

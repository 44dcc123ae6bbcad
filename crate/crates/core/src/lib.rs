//! Best-covering and Riesz polarization configurations on compact sets.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod covering;
pub mod error;
pub mod geometry;
pub mod polarization;
pub mod renewal;
pub mod sets;
pub mod verify;
mod spatial;

pub use error::{Error, Result};
pub use geometry::{
    covering_radius_on_sample, dist_to_configuration, polarization_value, riesz_potential, unit_ball_volume,
    Configuration, NormKind, NormSpec, Point, PointCloud, Potential, SampledSet,
};
pub use asymptotics::{LimitWindow, SequenceRecord};
pub use covering::{CoveringOptions, CoveringResult, CoveringTable};
pub use polarization::{PolarizationOptions, PolarizationResult};
pub use renewal::{LatticeClassification, LatticeVerdict};
pub use sets::{Contraction, IfsModel, Interval, SetKind, SetModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

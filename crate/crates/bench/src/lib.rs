//! Fixtures shared by the benchmarks.

use covlab_core::{NormSpec, SampledSet, SetModel};

/// The 41-point grid on `[0, 1]` used by the polarization oracle.
pub fn grid41() -> SampledSet {
    SetModel::unit_interval().sample(1.0 / 40.0).expect("valid mesh")
}

pub fn unit_square() -> SetModel {
    SetModel::cube(2, 1.0, NormSpec::euclidean(2)).expect("valid box")
}

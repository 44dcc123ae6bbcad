use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::net::farthest_point_net_from;
use super::refine::{minimax_refine_with, RefineOptions};
use crate::error::Result;
use crate::geometry::{Configuration, NormSpec, SampledSet};

/// Start index of multistart `k`; the first start uses the first point.
pub(crate) fn start_index(seed: u64, k: usize, len: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng.gen_range(0..len)
}

/// Pads with copies of the last point up to `n` points.
pub(crate) fn pad(mut w: Configuration, n: usize) -> Configuration {
    let last = w.get(w.len() - 1).to_vec();
    while w.len() < n {
        w.push(&last);
    }
    w
}

/// Multistart farthest-point net plus refinement on a sample. Returns the
/// best configuration (exactly `n` points) and its covering radius on `Y`.
pub(crate) fn cover_sample(
    y: &SampledSet,
    n: usize,
    norm: &NormSpec,
    restarts: usize,
    seed: u64,
    refine: &RefineOptions,
) -> Result<(Configuration, f64)> {
    let runs: Vec<Result<(Configuration, f64)>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let net = farthest_point_net_from(y, n, start_index(seed, k, y.len()), norm)?;
            Ok(minimax_refine_with(&net, y, refine, norm))
        })
        .collect();
    let mut best: Option<(Configuration, f64)> = None;
    for run in runs {
        let (w, r) = run?;
        if best.as_ref().map_or(true, |b| r < b.1) {
            best = Some((w, r));
        }
    }
    let (w, r) = best.expect("at least one start");
    Ok((pad(w, n), r))
}

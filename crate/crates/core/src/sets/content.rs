use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SetModel;
use crate::error::{domain, Error, Result};
use crate::geometry::{unit_ball_volume, NormSpec, SampledSet};
use crate::spatial::GridIndex;

/// Largest grid the volume counter will allocate.
pub const MAX_VOLUME_CELLS: f64 = 5e7;

/// Cells per radius in the counting grid.
const CELLS_PER_RADIUS: f64 = 20.0;

/// Lebesgue volume of `B_r(Y)`.
///
/// On the line the neighborhood is a finite union of intervals and its
/// length is computed exactly. In higher dimension the padded bounding box is
/// cut into cells of side at most `r/20` and the cells whose center lies
/// within `r` of `Y` are counted.
pub fn neighborhood_volume(y: &SampledSet, r: f64, norm: &NormSpec) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("neighborhood radius must be positive, got {r}"));
    }
    if y.ambient_dim() != norm.ambient_dim {
        return domain("sample and norm dimensions differ");
    }
    if norm.ambient_dim == 1 {
        let mut xs: Vec<f64> = y.points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let (mut lo, mut hi) = (xs[0] - r, xs[0] + r);
        for &x in &xs[1..] {
            if x - r > hi {
                total += hi - lo;
                lo = x - r;
            }
            hi = x + r;
        }
        return Ok(total + hi - lo);
    }

    let p = norm.ambient_dim;
    let (mut lo, mut hi) = y.points.bounding_box().expect("samples are nonempty");
    for k in 0..p {
        lo[k] -= r;
        hi[k] += r;
    }
    let target = r / CELLS_PER_RADIUS;
    let counts: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / target).ceil().max(1.0) as usize).collect();
    let total: f64 = counts.iter().map(|&c| c as f64).product();
    if total > MAX_VOLUME_CELLS {
        return Err(Error::Budget { what: "neighborhood volume grid".into(), required: total, limit: MAX_VOLUME_CELLS });
    }
    let steps: Vec<f64> = (0..p).map(|k| (hi[k] - lo[k]) / counts[k] as f64).collect();
    let cell_volume: f64 = steps.iter().product();
    let index = GridIndex::build(&y.points);

    // Rows along the first axis are processed in parallel.
    let rest: usize = counts[1..].iter().product();
    let inside: usize = (0..rest)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; p];
            for k in 1..p {
                x[k] = lo[k] + (idx % counts[k]) as f64 * steps[k] + 0.5 * steps[k];
                idx /= counts[k];
            }
            let mut n = 0;
            for i in 0..counts[0] {
                x[0] = lo[0] + (i as f64 + 0.5) * steps[0];
                if index.nearest(&x, norm).1 <= r {
                    n += 1;
                }
            }
            n
        })
        .sum();
    Ok(inside as f64 * cell_volume)
}

/// Minkowski content ratios along a radius schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiEstimate {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// False when `p - d` is fractional and the ratios are `H_p(B_r) r^{d-p}`.
    pub normalized: bool,
    /// `(min, max)` of the ratios over the last half of the schedule.
    pub window: (f64, f64),
}

impl MinkowskiEstimate {
    /// Estimate of the lower Minkowski content.
    pub fn lower(&self) -> f64 {
        self.window.0
    }

    /// Estimate of the upper Minkowski content.
    pub fn upper(&self) -> f64 {
        self.window.1
    }
}

/// Ratios `H_p(B_r(A)) / (v_{p-d} r^{p-d})` for each radius, where `v_k` is
/// the volume of the unit ball of `R^k` in the ambient norm family (`v_0 = 1`).
/// Each neighborhood is measured on a sample of mesh `r/20`, or `r/1000` on
/// the line, where the length is exact.
pub fn minkowski_estimate(model: &SetModel, d: f64, radii: &[f64]) -> Result<MinkowskiEstimate> {
    let p = model.ambient_dim() as f64;
    let codim = p - d;
    if codim < -1e-12 {
        return domain(format!("p - d = {codim} is negative"));
    }
    if radii.len() < 5 {
        return domain("a Minkowski schedule needs at least five radii");
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return domain("radii must be positive and strictly decreasing");
    }
    let codim = codim.max(0.0);
    let integer = (codim - codim.round()).abs() < 1e-12;
    let norm = model.norm;
    let unit = if integer {
        let k = codim.round() as usize;
        let kn = NormSpec::new(norm.kind, k.max(1))?;
        Some(unit_ball_volume(&kn, k)?)
    } else {
        None
    };
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let mesh = if model.ambient_dim() == 1 { r / 1000.0 } else { r / CELLS_PER_RADIUS };
        let sample = model.sample(mesh)?;
        let vol = neighborhood_volume(&sample, r, &norm)?;
        ratios.push(match unit {
            Some(v) => vol / (v * r.powf(codim)),
            None => vol * r.powf(-codim),
        });
    }
    let tail = &ratios[radii.len() / 2..];
    let window = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(MinkowskiEstimate { radii: radii.to_vec(), ratios, normalized: unit.is_some(), window })
}

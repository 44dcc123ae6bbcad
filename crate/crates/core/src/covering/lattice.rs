//! Lattice candidates for planar boxes.
//!
//! A lattice with basis `(a, 0), (a t, a h)` covers the plane with radius
//! `a R(t, h)`. Keeping the lattice points within that radius of the box
//! covers the box; the shape, offset and scale are searched so that at most
//! `N` points remain. Square grids (`t = 0, h = 1`) are one member.

use rayon::prelude::*;

use crate::geometry::{Configuration, NormSpec, PointCloud};

const SHEARS: [f64; 5] = [0.0, 0.25, 1.0 / 3.0, 0.4, 0.5];
const OFFSETS: usize = 4;
const CELL_RES: usize = 48;

/// Covering radius of the unit-scale lattice, measured on a grid over its
/// fundamental cell.
fn lattice_radius(t: f64, h: f64, norm: &NormSpec) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..=CELL_RES {
        for j in 0..=CELL_RES {
            let (al, be) = (i as f64 / CELL_RES as f64, j as f64 / CELL_RES as f64);
            let x = [al + be * t, be * h];
            let mut best = f64::INFINITY;
            for di in -2i32..=2 {
                for dj in -2i32..=2 {
                    let l = [di as f64 + dj as f64 * t, dj as f64 * h];
                    best = best.min(norm.dist(&x, &l));
                }
            }
            worst = worst.max(best);
        }
    }
    worst
}

fn dist_to_box(x: &[f64; 2], lo: &[f64], hi: &[f64], norm: &NormSpec) -> f64 {
    let v = [
        (lo[0] - x[0]).max(0.0).max(x[0] - hi[0]),
        (lo[1] - x[1]).max(0.0).max(x[1] - hi[1]),
    ];
    norm.norm(&v)
}

/// Lattice points within `radius` of the box, or `None` once past `limit`.
fn lattice_points(
    t: f64,
    h: f64,
    a: f64,
    offset: [f64; 2],
    radius: f64,
    lo: &[f64],
    hi: &[f64],
    norm: &NormSpec,
    limit: usize,
) -> Option<Vec<[f64; 2]>> {
    let pad = 2.0 * radius + 2.0 * a;
    let jmin = ((lo[1] - pad - offset[1]) / (a * h)).floor() as i64;
    let jmax = ((hi[1] + pad - offset[1]) / (a * h)).ceil() as i64;
    let mut out = Vec::new();
    for j in jmin..=jmax {
        let y = offset[1] + j as f64 * a * h;
        let shift = offset[0] + j as f64 * a * t;
        let imin = ((lo[0] - pad - shift) / a).floor() as i64;
        let imax = ((hi[0] + pad - shift) / a).ceil() as i64;
        for i in imin..=imax {
            let x = [shift + i as f64 * a, y];
            if dist_to_box(&x, lo, hi, norm) <= radius {
                out.push(x);
                if out.len() > limit {
                    return None;
                }
            }
        }
    }
    Some(out)
}

/// Smallest-radius lattice covering of the box `[lo, hi]` (planar) with at
/// most `n` points, with its covering radius as a lattice.
pub(crate) fn best_lattice(lo: &[f64], hi: &[f64], n: usize, norm: &NormSpec) -> Option<(Configuration, f64)> {
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mut shapes = Vec::new();
    for &t in &SHEARS {
        for k in 0..=10 {
            shapes.push((t, 0.5 + 0.05 * k as f64));
        }
    }
    shapes.push((0.5, 3f64.sqrt() / 2.0));
    let results: Vec<Option<(f64, Vec<[f64; 2]>)>> = shapes
        .par_iter()
        .map(|&(t, h)| {
            let unit = lattice_radius(t, h, norm);
            let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
            for oi in 0..OFFSETS {
                for oj in 0..OFFSETS {
                    let frac = [oi as f64 / OFFSETS as f64, oj as f64 / OFFSETS as f64];
                    let fits = |a: f64| {
                        let offset = [lo[0] + a * (frac[0] + frac[1] * t), lo[1] + a * frac[1] * h];
                        lattice_points(t, h, a, offset, a * unit, lo, hi, norm, n)
                    };
                    // Scale bracket: too small needs many points, `2 extent` needs few.
                    let (mut small, mut big) = (extent * 1e-6, 2.0 * extent / unit.max(1e-9));
                    if fits(big).is_none() {
                        continue;
                    }
                    for _ in 0..40 {
                        let mid = 0.5 * (small + big);
                        if fits(mid).is_some() {
                            big = mid;
                        } else {
                            small = mid;
                        }
                    }
                    let pts = fits(big).expect("upper scale fits");
                    let r = big * unit;
                    if best.as_ref().map_or(true, |b| r < b.0) {
                        best = Some((r, pts));
                    }
                }
            }
            best
        })
        .collect();
    let (r, pts) = results
        .into_iter()
        .flatten()
        .min_by(|x, y| x.0.total_cmp(&y.0))?;
    let mut cloud = PointCloud::with_capacity(2, n);
    for p in &pts {
        cloud.push(p);
    }
    if cloud.is_empty() {
        return None;
    }
    Some((Configuration::new(cloud), r))
}

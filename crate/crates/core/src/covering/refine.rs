//! Minimax (and centroid) refinement of covering configurations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{Configuration, NormKind, NormSpec, PointCloud, SampledSet};
use crate::spatial::GridIndex;

/// Options for [`minimax_refine_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct RefineOptions {
    /// Minimax iterations.
    pub iters: usize,
    /// Centroid iterations run first; they spread the centers evenly.
    pub lloyd_iters: usize,
    /// Exponents `q` of the power-mean stages run after the centroid
    /// iterations; each minimizes `sum dist(y, ω)^q` for `stage_iters` steps.
    pub power_stages: Vec<f64>,
    pub stage_iters: usize,
    /// Keep every center on a sample point.
    pub constrained: bool,
    /// Stop after this many iterations without improvement.
    pub patience: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            iters: 60,
            lloyd_iters: 0,
            power_stages: Vec::new(),
            stage_iters: 0,
            constrained: false,
            patience: 15,
        }
    }
}

/// Nearest-center assignment of every sample point.
pub(crate) struct Assignment {
    pub owner: Vec<u32>,
    pub radius: f64,
}

pub(crate) fn assign(centers: &PointCloud, y: &PointCloud, norm: &NormSpec) -> Assignment {
    let index = GridIndex::build(centers);
    let (owner, dist): (Vec<u32>, Vec<f64>) = y
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| {
            let (i, d) = index.nearest(x, norm);
            (i as u32, d)
        })
        .unzip();
    let radius = dist.iter().copied().fold(0.0, f64::max);
    Assignment { owner, radius }
}

/// Sample indices grouped by owning center (CSR layout).
fn cells(owner: &[u32], n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut starts = vec![0usize; n + 1];
    for &o in owner {
        starts[o as usize + 1] += 1;
    }
    for i in 0..n {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut items = vec![0usize; owner.len()];
    for (j, &o) in owner.iter().enumerate() {
        items[fill[o as usize]] = j;
        fill[o as usize] += 1;
    }
    (starts, items)
}

fn bbox_mid(points: &[&[f64]]) -> Vec<f64> {
    let p = points[0].len();
    let mut lo = points[0].to_vec();
    let mut hi = points[0].to_vec();
    for x in points {
        for k in 0..p {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

fn circumcenter(a: &[f64], b: &[f64], c: &[f64]) -> Option<[f64; 2]> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some([a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d])
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Smallest Euclidean enclosing circle (Welzl's incremental form).
fn min_circle(points: &[&[f64]]) -> [f64; 2] {
    let mut pts: Vec<&[f64]> = points.to_vec();
    // Fixed shuffle: expected linear time, deterministic output.
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let slack = 1.0 + 1e-12;
    let inside = |c: &[f64; 2], r2: f64, x: &[f64]| dist2(c, x) <= r2 * slack;
    let mut c = [pts[0][0], pts[0][1]];
    let mut r2 = 0.0;
    for i in 1..pts.len() {
        if inside(&c, r2, pts[i]) {
            continue;
        }
        c = [pts[i][0], pts[i][1]];
        r2 = 0.0;
        for j in 0..i {
            if inside(&c, r2, pts[j]) {
                continue;
            }
            c = [0.5 * (pts[i][0] + pts[j][0]), 0.5 * (pts[i][1] + pts[j][1])];
            r2 = dist2(&c, pts[i]);
            for k in 0..j {
                if inside(&c, r2, pts[k]) {
                    continue;
                }
                match circumcenter(pts[i], pts[j], pts[k]) {
                    Some(cc) => {
                        c = cc;
                        r2 = dist2(&c, pts[i]);
                    }
                    None => {
                        // Collinear: the farthest pair spans the circle.
                        let cand = [(pts[i], pts[j]), (pts[i], pts[k]), (pts[j], pts[k])];
                        let (a, b) = cand
                            .into_iter()
                            .max_by(|x, y| dist2(x.0, x.1).total_cmp(&dist2(y.0, y.1)))
                            .expect("three pairs");
                        c = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                        r2 = dist2(&c, a);
                    }
                }
            }
        }
    }
    c
}

fn max_dist(c: &[f64], points: &[&[f64]], norm: &NormSpec) -> f64 {
    points.iter().map(|x| norm.dist(c, x)).fold(0.0, f64::max)
}

/// Bădoiu–Clarkson iteration followed by shrinking coordinate steps; for
/// norms without an exact closed form.
fn approx_center(points: &[&[f64]], start: &[f64], norm: &NormSpec) -> Vec<f64> {
    let p = start.len();
    let mut c = start.to_vec();
    let mut best = (max_dist(&c, points, norm), c.clone());
    for t in 1..=100 {
        let far = points
            .iter()
            .max_by(|a, b| norm.dist(&c, a).total_cmp(&norm.dist(&c, b)))
            .expect("nonempty cell");
        for k in 0..p {
            c[k] += (far[k] - c[k]) / (t as f64 + 1.0);
        }
        let r = max_dist(&c, points, norm);
        if r < best.0 {
            best = (r, c.clone());
        }
    }
    let mut step = best.0 / 4.0;
    let mut c = best.1;
    let mut r = best.0;
    while step > r * 1e-6 && step > 0.0 {
        let mut moved = false;
        for k in 0..p {
            for sign in [1.0, -1.0] {
                c[k] += sign * step;
                let rr = max_dist(&c, points, norm);
                if rr < r {
                    r = rr;
                    moved = true;
                } else {
                    c[k] -= sign * step;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    c
}

/// Center of a smallest enclosing ball of `points` in the given norm (exact
/// for the line, `l_inf`, planar `l_1` and planar `l_2`).
pub fn enclosing_center(points: &[&[f64]], norm: &NormSpec) -> Vec<f64> {
    let p = points[0].len();
    if points.len() == 1 {
        return points[0].to_vec();
    }
    if p == 1 || norm.kind == NormKind::Linf {
        return bbox_mid(points);
    }
    match (norm.kind, p) {
        (NormKind::L1, 2) => {
            // l_1 in the plane is l_inf after a 45 degree rotation.
            let rot: Vec<[f64; 2]> = points.iter().map(|x| [x[0] + x[1], x[0] - x[1]]).collect();
            let refs: Vec<&[f64]> = rot.iter().map(|x| x.as_slice()).collect();
            let m = bbox_mid(&refs);
            vec![0.5 * (m[0] + m[1]), 0.5 * (m[0] - m[1])]
        }
        (NormKind::Euclidean, 2) => min_circle(points).to_vec(),
        _ => approx_center(points, &bbox_mid(points), norm),
    }
}

fn centroid(points: &[&[f64]]) -> Vec<f64> {
    let p = points[0].len();
    let mut c = vec![0.0; p];
    for x in points {
        for k in 0..p {
            c[k] += x[k];
        }
    }
    let n = points.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// Fixed-point step for `min_c sum |x - c|^q`: the mean of the cell
/// weighted by `|x - c|^(q-2)`.
fn power_mean(points: &[&[f64]], c: &[f64], q: f64, norm: &NormSpec) -> Vec<f64> {
    let ds: Vec<f64> = points.iter().map(|x| norm.dist(x, c)).collect();
    let dmax = ds.iter().copied().fold(0.0, f64::max);
    if dmax == 0.0 {
        return c.to_vec();
    }
    let mut acc = vec![0.0; c.len()];
    let mut total = 0.0;
    for (x, d) in points.iter().zip(&ds) {
        let w = (d / dmax).powf(q - 2.0);
        total += w;
        for k in 0..c.len() {
            acc[k] += w * x[k];
        }
    }
    acc.iter_mut().for_each(|v| *v /= total);
    acc
}

/// Moves every center to the given statistic of its Voronoi cell in `Y`.
fn step(
    centers: &PointCloud,
    y: &PointCloud,
    a: &Assignment,
    norm: &NormSpec,
    snap: Option<&GridIndex<'_>>,
    stat: impl Fn(&[&[f64]], &[f64]) -> Vec<f64> + Sync,
) -> PointCloud {
    let n = centers.len();
    let (starts, items) = cells(&a.owner, n);
    let moved: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let members = &items[starts[i]..starts[i + 1]];
            if members.is_empty() {
                return centers.get(i).to_vec();
            }
            let pts: Vec<&[f64]> = members.iter().map(|&j| y.get(j)).collect();
            let c = stat(&pts, centers.get(i));
            match snap {
                Some(index) => y.get(index.nearest(&c, norm).0).to_vec(),
                None => c,
            }
        })
        .collect();
    let mut out = PointCloud::with_capacity(centers.dim(), n);
    for c in &moved {
        out.push(c);
    }
    out
}

/// [`minimax_refine_with`] using default options and `iters` iterations.
pub fn minimax_refine(omega: &Configuration, y: &SampledSet, iters: usize, norm: &NormSpec) -> Configuration {
    minimax_refine_with(omega, y, &RefineOptions { iters, ..RefineOptions::default() }, norm).0
}

/// Alternates nearest-center assignment with moving each center to the
/// smallest-enclosing-ball center of its cell. Returns the best iterate and
/// its covering radius on `Y`; never worse than the input.
pub fn minimax_refine_with(
    omega: &Configuration,
    y: &SampledSet,
    opts: &RefineOptions,
    norm: &NormSpec,
) -> (Configuration, f64) {
    let pts = &y.points;
    let snap_index = opts.constrained.then(|| GridIndex::build(pts));
    let snap = snap_index.as_ref();
    let mut centers = omega.points().clone();
    let mut a = assign(&centers, pts, norm);
    let mut best = (centers.clone(), a.radius);
    for _ in 0..opts.lloyd_iters {
        centers = step(&centers, pts, &a, norm, snap, |c, _| centroid(c));
        a = assign(&centers, pts, norm);
        if a.radius < best.1 {
            best = (centers.clone(), a.radius);
        }
    }
    for &q in &opts.power_stages {
        for _ in 0..opts.stage_iters {
            centers = step(&centers, pts, &a, norm, snap, |c, x| power_mean(c, x, q, norm));
            a = assign(&centers, pts, norm);
            if a.radius < best.1 {
                best = (centers.clone(), a.radius);
            }
        }
    }
    let mut stale = 0;
    for _ in 0..opts.iters {
        centers = step(&centers, pts, &a, norm, snap, |c, _| enclosing_center(c, norm));
        a = assign(&centers, pts, norm);
        if a.radius < best.1 {
            let gain = best.1 - a.radius;
            best = (centers.clone(), a.radius);
            stale = if gain > 1e-9 * best.1 { 0 } else { stale + 1 };
        } else {
            stale += 1;
        }
        if stale >= opts.patience {
            break;
        }
    }
    (Configuration::new(best.0), best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::covering_radius_on_sample;
    use crate::sets::SetModel;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_centers_on_the_unit_interval() {
        let y = SetModel::unit_interval().sample(0.01).unwrap();
        let norm = NormSpec::euclidean(1);
        let w = minimax_refine(&Configuration::from_scalars(&[0.0, 1.0]), &y, 50, &norm);
        let xs = w.scalars();
        assert_abs_diff_eq!(xs[0], 0.25, epsilon = 0.01);
        assert_abs_diff_eq!(xs[1], 0.75, epsilon = 0.01);
        assert_abs_diff_eq!(covering_radius_on_sample(&w, &y, &norm).unwrap(), 0.25, epsilon = 0.01);
    }

    #[test]
    fn optimal_grid_is_a_fixed_point() {
        let y = SetModel::unit_interval().sample(0.01).unwrap();
        let norm = NormSpec::euclidean(1);
        let start = Configuration::from_scalars(&[0.125, 0.375, 0.625, 0.875]);
        let w = minimax_refine(&start, &y, 20, &norm);
        for (a, b) in w.scalars().iter().zip(start.scalars()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn linf_square_moves_to_box_centers() {
        let norm = NormSpec::linf(2);
        let y = SetModel::cube(2, 1.0, norm).unwrap().sample(0.05).unwrap();
        let start = Configuration::from_rows(&[[0.1, 0.1], [0.9, 0.9]]).unwrap();
        let a = assign(start.points(), &y.points, &norm);
        let moved = step(start.points(), &y.points, &a, &norm, None, |c, _| enclosing_center(c, &norm));
        // Ties go to the first center, so its cell reaches the corners (1, 0)
        // and (0, 1); the second cell starts one grid step in.
        let c0 = moved.get(0);
        let c1 = moved.get(1);
        assert_abs_diff_eq!(c0[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c0[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c1[0], 0.525, epsilon = 1e-12);
        assert_abs_diff_eq!(c1[1], 0.525, epsilon = 1e-12);
        let refined = minimax_refine(&start, &y, 30, &norm);
        let before = covering_radius_on_sample(&start, &y, &norm).unwrap();
        let after = covering_radius_on_sample(&refined, &y, &norm).unwrap();
        assert!(after <= before);
    }

    #[test]
    fn enclosing_centers_are_optimal() {
        let tri: [[f64; 2]; 4] = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [1.0, -0.2]];
        let refs: Vec<&[f64]> = tri.iter().map(|x| x.as_slice()).collect();
        let e2 = NormSpec::euclidean(2);
        let c = enclosing_center(&refs, &e2);
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-12);
        let l1 = NormSpec::l1(2);
        let c = enclosing_center(&refs, &l1);
        let r = max_dist(&c, &refs, &l1);
        // Any center is at least half the largest l_1 diameter away.
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        let p3 = NormSpec::new(NormKind::Pnorm(3.0), 2).unwrap();
        let c = enclosing_center(&refs, &p3);
        assert!(max_dist(&c, &refs, &p3) <= 1.0 + 1e-5);
    }
}

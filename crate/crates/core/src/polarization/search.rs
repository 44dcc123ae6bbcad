//! Maximin local search for polarization on a sample.
//!
//! The state keeps the potential `U(y_j)` at every sample point, with exact
//! hits (`y_j` equal to a configuration point) counted separately so that
//! moves never subtract infinities. The minimum is tracked exactly.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{polarization_points, riesz_kernel, NormKind, NormSpec, PointCloud};
use crate::spatial::GridIndex;

/// Candidates tried per move, after deterministic subsampling.
const MOVE_CANDIDATES: usize = 24;
/// Configuration points considered for relocation per move.
const MOVERS: usize = 4;
const SHRINK: f64 = 0.7;
/// Relative gains below this count as stagnation for the radius schedule.
const SLOW_GAIN: f64 = 1e-3;
/// Sample sizes above this evaluate moves in parallel.
const PAR_THRESHOLD: usize = 16_384;
/// Accepted moves between full recomputations of the potentials.
const REFRESH: usize = 64;
/// Exhaustive 1-swap polishing is used when `N |C| |Y|` stays below this.
const SWAP_WORK: f64 = 4e6;
/// Cap on polishing rounds.
const POLISH_ROUNDS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchParams {
    pub max_iters: usize,
    pub initial_radius: f64,
    pub min_radius: f64,
    /// Typical distance between configuration points; zero skips the
    /// smoothed ascent phase.
    pub spacing: f64,
    pub seed: u64,
    pub stream: u64,
}

struct State<'a> {
    y: &'a PointCloud,
    s: f64,
    norm: &'a NormSpec,
    points: PointCloud,
    u: Vec<f64>,
    hits: Vec<u32>,
}

fn kernel_or_hit(r: f64, s: f64) -> (f64, u32) {
    if r == 0.0 {
        (0.0, 1)
    } else {
        (riesz_kernel(r, s), 0)
    }
}

impl<'a> State<'a> {
    fn new(y: &'a PointCloud, points: PointCloud, s: f64, norm: &'a NormSpec) -> Self {
        let mut st = State { y, s, norm, points, u: vec![0.0; y.len()], hits: vec![0; y.len()] };
        st.refresh();
        st
    }

    fn refresh(&mut self) {
        let (points, s, norm) = (&self.points, self.s, self.norm);
        let fill = |(yj, (u, h)): (&[f64], (&mut f64, &mut u32))| {
            *u = 0.0;
            *h = 0;
            for x in points.iter() {
                let (k, hit) = kernel_or_hit(norm.dist(x, yj), s);
                *u += k;
                *h += hit;
            }
        };
        if self.y.len() > PAR_THRESHOLD {
            let rows: Vec<&[f64]> = self.y.iter().collect();
            rows.into_par_iter().zip(self.u.par_iter_mut().zip(self.hits.par_iter_mut())).for_each(fill);
        } else {
            self.y.iter().zip(self.u.iter_mut().zip(self.hits.iter_mut())).for_each(fill);
        }
    }

    /// `(min U, argmin)` with the smallest index on ties; `inf` when every
    /// sample point is hit.
    fn minimum(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (j, (&u, &h)) in self.u.iter().zip(&self.hits).enumerate() {
            if h == 0 && u < best.0 {
                best = (u, j);
            }
        }
        best
    }

    /// Minimum of `U` after moving point `i` to `c`.
    fn min_after_move(&self, i: usize, c: &[f64]) -> f64 {
        let old = self.points.get(i);
        let one = |(yj, (&u, &h)): (&[f64], (&f64, &u32))| {
            let (ko, ho) = kernel_or_hit(self.norm.dist(old, yj), self.s);
            let (kn, hn) = kernel_or_hit(self.norm.dist(c, yj), self.s);
            if h - ho + hn > 0 {
                f64::INFINITY
            } else {
                u - ko + kn
            }
        };
        if self.y.len() > PAR_THRESHOLD {
            let rows: Vec<&[f64]> = self.y.iter().collect();
            rows.into_par_iter()
                .zip(self.u.par_iter().zip(self.hits.par_iter()))
                .map(one)
                .reduce(|| f64::INFINITY, f64::min)
        } else {
            self.y.iter().zip(self.u.iter().zip(&self.hits)).map(one).fold(f64::INFINITY, f64::min)
        }
    }

    fn apply(&mut self, i: usize, c: &[f64]) {
        let old = self.points.get(i).to_vec();
        for (j, yj) in self.y.iter().enumerate() {
            let (ko, ho) = kernel_or_hit(self.norm.dist(&old, yj), self.s);
            let (kn, hn) = kernel_or_hit(self.norm.dist(c, yj), self.s);
            self.u[j] += kn - ko;
            self.hits[j] = self.hits[j] - ho + hn;
        }
        self.points.get_mut(i).copy_from_slice(c);
    }
}

/// Ascent steps taken on the smoothed objective.
const ASCENT_ITERS: usize = 240;
/// Exact evaluations of the snapped configuration happen this often.
const ASCENT_CHECK: usize = 8;

/// `∂ ||x - y|| / ∂x` into `out`, for `r = ||x - y|| > 0`.
fn dist_grad(x: &[f64], y: &[f64], r: f64, norm: &NormSpec, out: &mut [f64]) {
    match norm.kind {
        NormKind::Euclidean => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = (a - b) / r;
            }
        }
        NormKind::L1 => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = (a - b).signum() * ((a - b) != 0.0) as u8 as f64;
            }
        }
        NormKind::Linf => {
            let mut k = 0;
            for i in 0..x.len() {
                if (x[i] - y[i]).abs() > (x[k] - y[k]).abs() {
                    k = i;
                }
            }
            out.iter_mut().for_each(|o| *o = 0.0);
            out[k] = (x[k] - y[k]).signum();
        }
        NormKind::Pnorm(q) => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                let v = a - b;
                *o = v.signum() * (v.abs() / r).powf(q - 1.0);
            }
        }
    }
}

/// Moves all points at once along the gradient of the power mean
/// `(Σ_j U_j^{-q})^{-1/q}`, a smooth stand-in for `min_j U_j` that lets
/// every point react to every near-minimal sample point. Positions are
/// snapped to the nearest candidate for evaluation; the best snapped
/// configuration by the exact minimum is returned with its value.
fn smooth_ascent(
    y: &PointCloud,
    index: &GridIndex<'_>,
    candidates: &PointCloud,
    start: &PointCloud,
    s: f64,
    norm: &NormSpec,
    spacing: f64,
) -> (PointCloud, f64) {
    let n = start.len();
    let p = start.dim();
    let snap = |pts: &PointCloud| {
        let mut out = PointCloud::with_capacity(p, n);
        for x in pts.iter() {
            out.push(candidates.get(index.nearest(x, norm).0));
        }
        out
    };
    let mut best_val = polarization_points(start, y, s, norm);
    let mut best = start.clone();
    if best_val.is_infinite() {
        return (best, best_val);
    }
    let mut pos = start.clone();
    let mut step = 0.25 * spacing;
    for it in 0..ASCENT_ITERS {
        let q = 8.0 * 2f64.powf(3.0 * it as f64 / ASCENT_ITERS as f64);
        let u: Vec<f64> = y.iter().map(|yj| pos.iter().map(|x| riesz_kernel(norm.dist(x, yj), s)).sum()).collect();
        let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
        if !umin.is_finite() {
            break;
        }
        let w: Vec<f64> = u.iter().map(|&uj| (umin / uj).powf(q + 1.0)).collect();
        let grads: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = pos.get(i);
                let mut g = vec![0.0; p];
                let mut dr = vec![0.0; p];
                for (yj, &wj) in y.iter().zip(&w) {
                    if wj < 1e-12 {
                        continue;
                    }
                    let r = norm.dist(x, yj);
                    if r == 0.0 {
                        continue;
                    }
                    dist_grad(x, yj, r, norm, &mut dr);
                    // dU/dx = -s r^{-s-1} dr/dx.
                    let scale = -wj * s * riesz_kernel(r, s) / r;
                    for (gk, dk) in g.iter_mut().zip(&dr) {
                        *gk += scale * dk;
                    }
                }
                g
            })
            .collect();
        let gmax = grads.iter().map(|g| norm.norm(g)).fold(0.0, f64::max);
        if !(gmax > 0.0) {
            break;
        }
        for (i, g) in grads.iter().enumerate() {
            for (xk, gk) in pos.get_mut(i).iter_mut().zip(g) {
                *xk += step * gk / gmax;
            }
        }
        step *= 0.985;
        if (it + 1) % ASCENT_CHECK == 0 || it + 1 == ASCENT_ITERS {
            let snapped = snap(&pos);
            let v = polarization_points(&snapped, y, s, norm);
            if v > best_val {
                best_val = v;
                best = snapped;
            }
        }
    }
    (best, best_val)
}

/// Improves `start` by relocation moves toward the minimizing sample point,
/// then by exhaustive 1-swaps when affordable. Only strict improvements of
/// the minimum are accepted, so the result is never worse than the start.
pub(crate) fn local_search(
    y: &PointCloud,
    candidates: &PointCloud,
    start: PointCloud,
    s: f64,
    norm: &NormSpec,
    params: &SearchParams,
) -> PointCloud {
    let index = GridIndex::build(candidates);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(params.stream);
    let start = if params.spacing > 0.0 {
        smooth_ascent(y, &index, candidates, &start, s, norm, params.spacing).0
    } else {
        start
    };
    let mut st = State::new(y, start, s, norm);
    let n = st.points.len();
    let mut radius = params.initial_radius;
    let mut accepted = 0usize;
    let (mut cur, mut jstar) = st.minimum();
    for _ in 0..params.max_iters {
        if cur.is_infinite() || radius < params.min_radius {
            break;
        }
        let ys = y.get(jstar).to_vec();
        // Farthest points contribute least at y*.
        let mut order: Vec<(f64, usize)> = (0..n).map(|i| (norm.dist(st.points.get(i), &ys), i)).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let movers: Vec<usize> = order.iter().take(MOVERS).map(|&(_, i)| i).collect();
        let mut near = Vec::new();
        index.for_each_within(&ys, radius, norm, |c, _| near.push(c));
        near.sort_unstable();
        if near.len() > MOVE_CANDIDATES {
            let mut picked: Vec<usize> = sample_indices(&mut rng, near.len(), MOVE_CANDIDATES - 1).into_iter().map(|k| near[k]).collect();
            picked.push(index.nearest(&ys, norm).0);
            near = picked;
        } else if near.is_empty() {
            near.push(index.nearest(&ys, norm).0);
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in &movers {
            for &c in &near {
                let v = st.min_after_move(i, candidates.get(c));
                if v > cur && best.map_or(true, |b| v > b.0) {
                    best = Some((v, i, c));
                }
            }
        }
        match best {
            Some((_, i, c)) => {
                st.apply(i, candidates.get(c));
                accepted += 1;
                if accepted % REFRESH == 0 {
                    st.refresh();
                }
                let m = st.minimum();
                if m.0 <= cur {
                    // Drift in the incremental sums; restore and stop moving.
                    st.refresh();
                    (cur, jstar) = st.minimum();
                    radius *= SHRINK;
                    continue;
                }
                if m.0 < cur * (1.0 + SLOW_GAIN) {
                    radius *= SHRINK;
                }
                (cur, jstar) = m;
            }
            None => radius *= SHRINK,
        }
    }
    st.refresh();
    for _ in 0..POLISH_ROUNDS {
        swap_polish(&mut st, candidates);
        if !pair_polish(&mut st, candidates) {
            break;
        }
    }
    st.points
}

fn swap_polish(st: &mut State<'_>, candidates: &PointCloud) {
    let work = st.points.len() as f64 * candidates.len() as f64 * st.y.len() as f64;
    if work > SWAP_WORK {
        return;
    }
    for _ in 0..POLISH_ROUNDS {
        let (cur, _) = st.minimum();
        if cur.is_infinite() {
            return;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..st.points.len() {
            for c in 0..candidates.len() {
                let v = st.min_after_move(i, candidates.get(c));
                if v > cur * (1.0 + 1e-13) && best.map_or(true, |b| v > b.0) {
                    best = Some((v, i, c));
                }
            }
        }
        match best {
            Some((_, i, c)) => {
                st.apply(i, candidates.get(c));
                st.refresh();
            }
            None => return,
        }
    }
}

/// Best simultaneous relocation of two points, applied when it improves.
/// Single moves stall on symmetric optima that need both ends to shift.
fn pair_polish(st: &mut State<'_>, candidates: &PointCloud) -> bool {
    let n = st.points.len();
    let (m, ny) = (candidates.len(), st.y.len());
    let work = (n * n) as f64 / 2.0 * (m * m) as f64 / 2.0 * ny as f64;
    if n < 2 || work > SWAP_WORK {
        return false;
    }
    let (cur, _) = st.minimum();
    if cur.is_infinite() {
        return false;
    }
    let kernel = |x: &[f64]| -> Vec<f64> { st.y.iter().map(|yj| riesz_kernel(st.norm.dist(x, yj), st.s)).collect() };
    let cand_rows: Vec<Vec<f64>> = candidates.iter().map(kernel).collect();
    let point_rows: Vec<Vec<f64>> = st.points.iter().map(kernel).collect();
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    for i in 0..n {
        for k in i + 1..n {
            let base: Vec<f64> = (0..ny)
                .map(|j| (0..n).filter(|&t| t != i && t != k).map(|t| point_rows[t][j]).sum())
                .collect();
            for a in 0..m {
                for b in a..m {
                    let v = (0..ny)
                        .map(|j| base[j] + cand_rows[a][j] + cand_rows[b][j])
                        .fold(f64::INFINITY, f64::min);
                    if v > cur * (1.0 + 1e-13) && best.map_or(true, |x| v > x.0) {
                        best = Some((v, i, k, a, b));
                    }
                }
            }
        }
    }
    match best {
        Some((_, i, k, a, b)) => {
            st.points.get_mut(i).copy_from_slice(candidates.get(a));
            st.points.get_mut(k).copy_from_slice(candidates.get(b));
            st.refresh();
            true
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polarization_points;

    #[test]
    fn never_worse_than_the_start() {
        let y = PointCloud::from_scalars(&(0..=40).map(|i| i as f64 / 40.0).collect::<Vec<_>>());
        let norm = NormSpec::euclidean(1);
        let start = PointCloud::from_scalars(&[0.0, 0.05]);
        let before = polarization_points(&start, &y, 2.0, &norm);
        let params = SearchParams { max_iters: 200, initial_radius: 0.25, min_radius: 0.01, spacing: 0.0, seed: 1, stream: 0 };
        let out = local_search(&y, &y, start, 2.0, &norm, &params);
        let after = polarization_points(&out, &y, 2.0, &norm);
        assert!(after > before);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn one_point_goes_to_the_middle() {
        let y = PointCloud::from_scalars(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let norm = NormSpec::euclidean(1);
        let params = SearchParams { max_iters: 50, initial_radius: 0.25, min_radius: 0.01, spacing: 0.0, seed: 0, stream: 0 };
        let out = local_search(&y, &y, PointCloud::from_scalars(&[0.0]), 2.0, &norm, &params);
        assert_eq!(out.get(0), &[0.5]);
    }
}

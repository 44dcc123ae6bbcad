//! Exhaustive maximization over multisets of candidate points.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::{lex_cmp, riesz_kernel, Configuration, NormSpec, PointCloud, SampledSet};

/// Largest number of multisets the oracle will enumerate.
pub const MAX_COMBINATIONS: f64 = 1e7;

/// `C(m + n - 1, n)`: multisets of size `n` from `m` items.
pub fn multiset_count(m: usize, n: usize) -> f64 {
    let mut c = 1.0f64;
    for k in 1..=n {
        c *= (m + k - 1) as f64 / k as f64;
    }
    c.round()
}

/// Sorted, deduplicated candidates; order defines the tie-break.
pub(crate) fn sorted_candidates(candidates: &PointCloud) -> PointCloud {
    let mut rows: Vec<&[f64]> = candidates.iter().collect();
    rows.sort_by(|a, b| lex_cmp(a, b));
    rows.dedup();
    let mut out = PointCloud::with_capacity(candidates.dim(), rows.len());
    for r in rows {
        out.push(r);
    }
    out
}

struct Oracle {
    /// `kernel[c * ny + j] = ||y_j - c||^{-s}`.
    kernel: Vec<f64>,
    /// `suffix_max[c * ny + j] = max_{c' >= c} kernel[c'][j]`.
    suffix_max: Vec<f64>,
    ny: usize,
    m: usize,
    n: usize,
}

struct Best {
    value: f64,
    choice: Vec<usize>,
}

impl Oracle {
    fn row(&self, c: usize) -> &[f64] {
        &self.kernel[c * self.ny..(c + 1) * self.ny]
    }

    /// Depth-first search over nondecreasing index sequences, in
    /// lexicographic order, so the first maximizer found is the smallest.
    fn search(&self, from: usize, partial: &mut Vec<f64>, stack: &mut Vec<usize>, best: &mut Best) {
        let left = self.n - stack.len();
        if left == 0 {
            let v = partial.iter().copied().fold(f64::INFINITY, f64::min);
            if v > best.value || best.choice.is_empty() {
                best.value = v;
                best.choice = stack.clone();
            }
            return;
        }
        for c in from..self.m {
            let sm = &self.suffix_max[c * self.ny..(c + 1) * self.ny];
            let bound = partial
                .iter()
                .zip(sm)
                .map(|(p, k)| p + left as f64 * k)
                .fold(f64::INFINITY, f64::min);
            // Rounding cannot hide a strict improvement behind this margin.
            if !best.choice.is_empty() && bound < best.value * (1.0 - 1e-12) {
                continue;
            }
            let row = self.row(c);
            for (p, k) in partial.iter_mut().zip(row) {
                *p += k;
            }
            stack.push(c);
            self.search(c, partial, stack, best);
            stack.pop();
            for (p, k) in partial.iter_mut().zip(row) {
                *p -= k;
            }
            // Undo can leave NaN from inf - inf; restore exactly.
            if row.iter().any(|k| k.is_infinite()) {
                self.recompute(stack, partial);
            }
        }
    }

    fn recompute(&self, stack: &[usize], partial: &mut [f64]) {
        partial.iter_mut().for_each(|p| *p = 0.0);
        for &c in stack {
            for (p, k) in partial.iter_mut().zip(self.row(c)) {
                *p += k;
            }
        }
    }
}

/// Exact maximum of `P_s(ω, Y)` over all `N`-point multisets `ω` of the
/// candidates. Ties go to the lexicographically smallest sorted multiset.
pub fn brute_force_polarization(
    candidates: &PointCloud,
    y: &SampledSet,
    n: usize,
    s: f64,
    norm: &NormSpec,
) -> Result<(f64, Configuration)> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if !(s > 0.0) {
        return domain(format!("Riesz exponent must be positive, got {s}"));
    }
    if candidates.is_empty() || y.is_empty() {
        return domain("brute force needs candidates and a sample");
    }
    if candidates.dim() != norm.ambient_dim || y.ambient_dim() != norm.ambient_dim {
        return domain("candidates, sample and norm must share the ambient dimension");
    }
    let cands = sorted_candidates(candidates);
    let m = cands.len();
    let combos = multiset_count(m, n);
    if combos > MAX_COMBINATIONS {
        return Err(Error::Budget { what: "polarization multisets".into(), required: combos, limit: MAX_COMBINATIONS });
    }
    let ny = y.len();
    let mut kernel = vec![0.0; m * ny];
    kernel.par_chunks_mut(ny).enumerate().for_each(|(c, row)| {
        let x = cands.get(c);
        for (j, yj) in y.points.iter().enumerate() {
            row[j] = riesz_kernel(norm.dist(x, yj), s);
        }
    });
    let mut suffix_max = kernel.clone();
    for c in (0..m.saturating_sub(1)).rev() {
        for j in 0..ny {
            let next = suffix_max[(c + 1) * ny + j];
            let cur = &mut suffix_max[c * ny + j];
            *cur = cur.max(next);
        }
    }
    let oracle = Oracle { kernel, suffix_max, ny, m, n };
    let results: Vec<Best> = (0..m)
        .into_par_iter()
        .map(|lead| {
            let mut partial = oracle.row(lead).to_vec();
            let mut stack = vec![lead];
            let mut best = Best { value: f64::NEG_INFINITY, choice: Vec::new() };
            oracle.search(lead, &mut partial, &mut stack, &mut best);
            best
        })
        .collect();
    let mut winner: Option<Best> = None;
    for b in results {
        // Leading indices arrive in order, so strict comparison keeps the smallest.
        if !b.choice.is_empty() && winner.as_ref().map_or(true, |w| b.value > w.value) {
            winner = Some(b);
        }
    }
    let best = winner.expect("at least one multiset");
    let mut w = PointCloud::with_capacity(norm.ambient_dim, n);
    for &c in &best.choice {
        w.push(cands.get(c));
    }
    Ok((best.value, Configuration::new(w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polarization_value;
    use crate::sets::SetModel;
    use approx::assert_relative_eq;

    fn line(xs: &[f64]) -> SampledSet {
        SampledSet::from_points(PointCloud::from_scalars(xs), 1.0).unwrap()
    }

    /// Plain enumeration without pruning or parallel split.
    fn naive(cands: &[f64], y: &[f64], n: usize, s: f64) -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut idx = vec![0usize; n];
        loop {
            let w: Vec<f64> = idx.iter().map(|&i| cands[i]).collect();
            let v = y
                .iter()
                .map(|yy| w.iter().map(|x| riesz_kernel((x - yy).abs(), s)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if v > best.0 {
                best = (v, w);
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] + 1 < cands.len() {
                    idx[k] += 1;
                    for t in k + 1..n {
                        idx[t] = idx[k];
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn three_point_set() {
        let y = line(&[0.0, 0.5, 1.0]);
        let (v, w) = brute_force_polarization(&y.points, &y, 1, 2.0, &NormSpec::euclidean(1)).unwrap();
        assert_eq!(v, 4.0);
        assert_eq!(w.scalars(), vec![0.5]);
    }

    #[test]
    fn ties_go_to_the_smallest_multiset() {
        let cands = PointCloud::from_scalars(&[1.0, 0.0]);
        let (v, w) = brute_force_polarization(&cands, &line(&[0.5]), 2, 2.0, &NormSpec::euclidean(1)).unwrap();
        assert_eq!(v, 8.0);
        assert_eq!(w.scalars(), vec![0.0, 0.0]);
    }

    #[test]
    fn grid_of_41_points() {
        let y = SetModel::unit_interval().sample(1.0 / 40.0).unwrap();
        assert_eq!(y.len(), 41);
        let (v, w) = brute_force_polarization(&y.points, &y, 2, 2.0, &NormSpec::euclidean(1)).unwrap();
        // Optimum {0.2, 0.8}; the worst point is the middle: 2 / 0.3^2.
        assert_relative_eq!(v, 200.0 / 9.0, max_relative = 1e-12);
        assert_eq!(w.scalars(), vec![0.2, 0.8]);
        let check = polarization_value(&w, &y, 2.0, &NormSpec::euclidean(1)).unwrap().to_f64();
        assert_relative_eq!(v, check, max_relative = 1e-12);
    }

    #[test]
    fn matches_plain_enumeration() {
        let cands = [0.0, 0.13, 0.3, 0.41, 0.77, 1.0];
        let ys = [0.0, 0.05, 0.2, 0.5, 0.6, 0.9, 1.0];
        for n in 1..=4 {
            for s in [1.0, 2.0, 3.5] {
                let (v, w) = brute_force_polarization(&PointCloud::from_scalars(&cands), &line(&ys), n, s, &NormSpec::euclidean(1)).unwrap();
                let (nv, nw) = naive(&cands, &ys, n, s);
                assert_relative_eq!(v, nv, max_relative = 1e-12);
                assert_eq!(w.scalars(), nw, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let y = SetModel::unit_interval().sample(1e-3).unwrap();
        let r = brute_force_polarization(&y.points, &y, 4, 2.0, &NormSpec::euclidean(1));
        assert!(matches!(r, Err(Error::Budget { .. })));
        assert_eq!(multiset_count(3, 2), 6.0);
        assert_eq!(multiset_count(41, 4), 135_751.0);
    }
}

//! Uniform-grid bucketing for nearest-point and fixed-radius queries.
//!
//! Every supported norm dominates the `l_inf` norm, so the `l_inf` distance to
//! the unvisited cells is a valid lower bound for any of them.

use crate::geometry::{NormSpec, PointCloud};

const MAX_CELLS_PER_DIM: usize = 1 << 16;

pub(crate) struct GridIndex<'a> {
    cloud: &'a PointCloud,
    lo: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    pub fn build(cloud: &'a PointCloud) -> Self {
        Self::with_density(cloud, 2.0)
    }

    /// `per_cell` is the target average occupancy of a cell.
    pub fn with_density(cloud: &'a PointCloud, per_cell: f64) -> Self {
        let p = cloud.dim();
        let n = cloud.len();
        let (lo, hi) = cloud.bounding_box().unwrap_or((vec![0.0; p], vec![0.0; p]));
        let ext: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let positive: Vec<f64> = ext.iter().copied().filter(|e| *e > 0.0).collect();
        let target = (n as f64 / per_cell).max(1.0);
        let cell = if positive.is_empty() {
            1.0
        } else {
            let vol: f64 = positive.iter().map(|e| e.ln()).sum::<f64>();
            let c = ((vol - target.ln()) / positive.len() as f64).exp();
            // Elongated sets: do not let one axis take all the cells.
            let min_cell = positive.iter().fold(f64::INFINITY, |m, e| m.min(*e)) / MAX_CELLS_PER_DIM as f64;
            c.max(min_cell).max(f64::MIN_POSITIVE)
        };
        let dims: Vec<usize> = ext
            .iter()
            .map(|e| (((e / cell).floor() as usize) + 1).min(MAX_CELLS_PER_DIM))
            .collect();
        let mut strides = vec![1usize; p];
        for k in 1..p {
            strides[k] = strides[k - 1] * dims[k - 1];
        }
        let total: usize = dims.iter().product();
        let mut index = GridIndex { cloud, lo, cell, dims, strides, starts: Vec::new(), items: Vec::new() };
        let mut counts = vec![0u32; total + 1];
        let cell_ids: Vec<usize> = cloud.iter().map(|x| index.cell_id(&index.cell_of(x))).collect();
        for &c in &cell_ids {
            counts[c + 1] += 1;
        }
        for c in 0..total {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; n];
        for (i, &c) in cell_ids.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        index.starts = counts;
        index.items = items;
        index
    }

    fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .enumerate()
            .map(|(k, v)| {
                let c = ((v - self.lo[k]) / self.cell).floor();
                if c < 0.0 {
                    0
                } else {
                    (c as usize).min(self.dims[k] - 1)
                }
            })
            .collect()
    }

    fn cell_id(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    fn bucket(&self, id: usize) -> &[u32] {
        &self.items[self.starts[id] as usize..self.starts[id + 1] as usize]
    }

    /// Visits every cell id in the block `[lo_c, hi_c]` (inclusive) whose
    /// Chebyshev offset from `center` equals `ring`.
    fn for_each_cell_in_ring(&self, center: &[usize], ring: usize, mut f: impl FnMut(usize)) {
        let p = self.dims.len();
        let lo_c: Vec<usize> = center.iter().map(|c| c.saturating_sub(ring)).collect();
        let hi_c: Vec<usize> = center.iter().zip(&self.dims).map(|(c, d)| (c + ring).min(d - 1)).collect();
        let mut cur = lo_c.clone();
        loop {
            let on_ring = ring == 0
                || cur.iter().zip(center).any(|(a, c)| a.abs_diff(*c) == ring);
            if on_ring {
                f(self.cell_id(&cur));
            }
            let mut k = 0;
            loop {
                if k == p {
                    return;
                }
                if cur[k] < hi_c[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo_c[k];
                k += 1;
            }
        }
    }

    /// `l_inf` distance from `x` to the complement of the scanned block, or
    /// `None` when the block already spans the whole grid.
    fn unscanned_lower_bound(&self, x: &[f64], center: &[usize], ring: usize) -> Option<f64> {
        let mut lb = f64::INFINITY;
        let mut complete = true;
        for k in 0..self.dims.len() {
            if center[k] > ring {
                complete = false;
                let face = self.lo[k] + (center[k] - ring) as f64 * self.cell;
                lb = lb.min(x[k] - face);
            }
            if center[k] + ring + 1 < self.dims[k] {
                complete = false;
                let face = self.lo[k] + (center[k] + ring + 1) as f64 * self.cell;
                lb = lb.min(face - x[k]);
            }
        }
        if complete {
            None
        } else {
            Some(lb.max(0.0))
        }
    }

    /// Index and distance of the nearest indexed point (smallest index on ties).
    pub fn nearest(&self, x: &[f64], norm: &NormSpec) -> (usize, f64) {
        let center = self.cell_of(x);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0;
        loop {
            self.for_each_cell_in_ring(&center, ring, |id| {
                for &i in self.bucket(id) {
                    let i = i as usize;
                    let d = norm.dist(self.cloud.get(i), x);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        best = (i, d);
                    }
                }
            });
            match self.unscanned_lower_bound(x, &center, ring) {
                None => break,
                Some(lb) if lb > best.1 => break,
                _ => ring += 1,
            }
        }
        best
    }

    /// Calls `f(i, dist)` for every indexed point with `dist <= radius`.
    pub fn for_each_within(&self, x: &[f64], radius: f64, norm: &NormSpec, mut f: impl FnMut(usize, f64)) {
        let p = self.dims.len();
        let lo_c: Vec<usize> = (0..p)
            .map(|k| {
                let c = ((x[k] - radius - self.lo[k]) / self.cell).floor();
                if c < 0.0 {
                    0
                } else {
                    (c as usize).min(self.dims[k] - 1)
                }
            })
            .collect();
        let hi_c: Vec<usize> = (0..p)
            .map(|k| {
                let c = ((x[k] + radius - self.lo[k]) / self.cell).floor();
                if c < 0.0 {
                    0
                } else {
                    (c as usize).min(self.dims[k] - 1)
                }
            })
            .collect();
        let mut cur = lo_c.clone();
        loop {
            for &i in self.bucket(self.cell_id(&cur)) {
                let i = i as usize;
                let d = norm.dist(self.cloud.get(i), x);
                if d <= radius {
                    f(i, d);
                }
            }
            let mut k = 0;
            loop {
                if k == p {
                    return;
                }
                if cur[k] < hi_c[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo_c[k];
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (p, kind) in [(1, NormKind::Euclidean), (2, NormKind::L1), (2, NormKind::Euclidean), (3, NormKind::Linf)] {
            let norm = NormSpec::new(kind, p).unwrap();
            let flat: Vec<f64> = (0..300 * p).map(|_| rng.gen_range(0.0..1.0)).collect();
            let cloud = PointCloud::from_flat(p, flat).unwrap();
            let index = GridIndex::build(&cloud);
            for _ in 0..200 {
                let q: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let (_, d) = index.nearest(&q, &norm);
                let brute = cloud.iter().map(|x| norm.dist(x, &q)).fold(f64::INFINITY, f64::min);
                assert_eq!(d, brute);
                let mut count = 0;
                index.for_each_within(&q, 0.2, &norm, |_, _| count += 1);
                let brute_count = cloud.iter().filter(|x| norm.dist(x, &q) <= 0.2).count();
                assert_eq!(count, brute_count);
            }
        }
    }

    #[test]
    fn degenerate_clouds() {
        let norm = NormSpec::euclidean(2);
        let seg = PointCloud::from_rows(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]).unwrap();
        let index = GridIndex::build(&seg);
        assert_eq!(index.nearest(&[0.4, 3.0], &norm).0, 1);
        let single = PointCloud::from_rows(&[[2.0, 2.0]]).unwrap();
        let index = GridIndex::build(&single);
        assert_eq!(index.nearest(&[0.0, 0.0], &norm).0, 0);
    }
}

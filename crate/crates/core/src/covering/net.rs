use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Result};
use crate::geometry::{Configuration, NormSpec, SampledSet};
use crate::spatial::GridIndex;

/// Heap entry ordered by distance, then by smaller index.
#[derive(Clone, Copy, PartialEq)]
struct Far(f64, usize);

impl Eq for Far {}

impl Ord for Far {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Far {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy farthest-point traversal of `Y` seeded at its first point.
///
/// Each step adds the sample point farthest from the current centers, so the
/// result is a 2-approximation of the constrained optimum on `Y`. Returns all
/// of `Y` when `n >= |Y|`.
pub fn farthest_point_net(y: &SampledSet, n: usize, norm: &NormSpec) -> Result<Configuration> {
    farthest_point_net_from(y, n, 0, norm)
}

/// As [`farthest_point_net`], seeded at sample index `start`.
pub fn farthest_point_net_from(y: &SampledSet, n: usize, start: usize, norm: &NormSpec) -> Result<Configuration> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if start >= y.len() {
        return domain(format!("seed index {start} outside a sample of {} points", y.len()));
    }
    let pts = &y.points;
    let index = GridIndex::build(pts);
    let mut dist = vec![f64::INFINITY; pts.len()];
    let mut heap = BinaryHeap::with_capacity(pts.len());
    let mut chosen = Vec::with_capacity(n.min(pts.len()));
    let mut next = start;
    let mut radius = f64::INFINITY;
    while chosen.len() < n {
        chosen.push(next);
        let c = pts.get(next);
        if radius.is_infinite() {
            for (i, x) in pts.iter().enumerate() {
                dist[i] = norm.dist(x, c);
                heap.push(Far(dist[i], i));
            }
        } else {
            index.for_each_within(c, radius, norm, |i, d| {
                if d < dist[i] {
                    dist[i] = d;
                    heap.push(Far(d, i));
                }
            });
        }
        // Drop stale entries; the top is then the farthest point.
        loop {
            let Far(d, i) = *heap.peek().expect("every point keeps a live entry");
            if d == dist[i] {
                radius = d;
                next = i;
                break;
            }
            heap.pop();
        }
        if radius == 0.0 {
            break;
        }
    }
    let mut out = Configuration::new(crate::geometry::PointCloud::with_capacity(pts.dim(), chosen.len()));
    for i in chosen {
        out.push(pts.get(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::exact_covering_1d;
    use crate::geometry::{covering_radius_on_sample, PointCloud};
    use crate::sets::{Interval, SetModel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_interval_examples() {
        let y = SetModel::unit_interval().sample(0.01).unwrap();
        let norm = NormSpec::euclidean(1);
        let expect = [vec![0.0], vec![0.0, 1.0], vec![0.0, 1.0, 0.5]];
        let radii = [1.0, 0.5, 0.25];
        for n in 1..=3 {
            let w = farthest_point_net(&y, n, &norm).unwrap();
            for (a, b) in w.scalars().iter().zip(&expect[n - 1]) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(covering_radius_on_sample(&w, &y, &norm).unwrap(), radii[n - 1], epsilon = 1e-12);
        }
    }

    #[test]
    fn returns_everything_when_n_is_large() {
        let y = SampledSet::from_points(PointCloud::from_scalars(&[0.0, 1.0, 2.0]), 1.0).unwrap();
        let w = farthest_point_net(&y, 10, &NormSpec::euclidean(1)).unwrap();
        assert_eq!(w.len(), 3);
    }

    proptest! {
        #[test]
        fn two_approximation(xs in prop::collection::vec(0.0f64..10.0, 1..60), n in 1usize..12) {
            let norm = NormSpec::euclidean(1);
            let y = SampledSet::from_points(PointCloud::from_scalars(&xs), 1.0).unwrap();
            let w = farthest_point_net(&y, n, &norm).unwrap();
            let r = covering_radius_on_sample(&w, &y, &norm).unwrap();
            let pts: Vec<Interval> = y.points.sorted_dedup().iter().map(|p| Interval::point(p[0])).collect();
            let (opt, _) = exact_covering_1d(&pts, n, true).unwrap();
            prop_assert!(r <= 2.0 * opt + 1e-12, "{} > 2 * {}", r, opt);
        }
    }
}

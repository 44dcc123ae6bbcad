//! Exact N-point coverings of closed subsets of the line.
//!
//! For a fixed radius `r` the greedy sweep is optimal: the leftmost uncovered
//! point `u` needs a center in `[u - r, u + r]`, and the rightmost admissible
//! choice covers the most to the right. The optimal radius is the smallest
//! feasible one, found by bisection down to adjacent floats.

use crate::error::{domain, Result};
use crate::geometry::Configuration;
use crate::sets::{normalize_intervals, Interval};

/// Centers used by the sweep at radius `r`, or `None` if more than `n` are needed.
///
/// `targets` and `allowed` must be sorted and disjoint. `allowed = None`
/// lets centers sit anywhere on the line.
pub(crate) fn sweep(targets: &[Interval], allowed: Option<&[Interval]>, n: usize, r: f64) -> Option<Vec<f64>> {
    let mut centers = Vec::new();
    let mut u = targets[0].lo;
    loop {
        if centers.len() == n {
            return None;
        }
        let reach = u + r;
        let c = match allowed {
            None => reach,
            Some(allowed) => {
                // Rightmost allowed point not beyond `reach`.
                let i = allowed.partition_point(|iv| iv.lo <= reach);
                if i == 0 {
                    return None;
                }
                let c = allowed[i - 1].hi.min(reach);
                if c < u - r {
                    return None;
                }
                c
            }
        };
        centers.push(c);
        let covered = c + r;
        let j = targets.partition_point(|iv| iv.hi <= covered);
        if j == targets.len() {
            return Some(centers);
        }
        u = targets[j].lo.max(covered);
    }
}

/// Smallest `r` for which the sweep succeeds, with its centers.
pub(crate) fn cover_line(targets: &[Interval], allowed: Option<&[Interval]>, n: usize) -> (f64, Vec<f64>) {
    let span = targets[targets.len() - 1].hi - targets[0].lo;
    let mut hi = match allowed {
        None => span / 2.0,
        Some(a) => {
            let lo = a[0].lo.min(targets[0].lo);
            let top = a[a.len() - 1].hi.max(targets[targets.len() - 1].hi);
            top - lo
        }
    };
    while sweep(targets, allowed, n, hi).is_none() {
        hi = if hi > 0.0 { hi * 2.0 } else { f64::MIN_POSITIVE };
    }
    if span == 0.0 && allowed.is_none() {
        return (0.0, sweep(targets, allowed, n, 0.0).expect("a point is covered by one center"));
    }
    let mut lo = 0.0;
    if sweep(targets, allowed, n, lo).is_some() {
        hi = lo;
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if sweep(targets, allowed, n, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, sweep(targets, allowed, n, hi).expect("upper end of the bracket is feasible"))
}

/// Optimal N-point covering of a finite union of closed intervals.
///
/// With `constrained` the centers must lie in the set. Returns the radius and
/// exactly `n` centers; surplus centers repeat the last one.
pub fn exact_covering_1d(intervals: &[Interval], n: usize, constrained: bool) -> Result<(f64, Configuration)> {
    if intervals.is_empty() {
        return domain("cannot cover an empty set");
    }
    if n == 0 {
        return domain("N must be at least 1");
    }
    let ivs = normalize_intervals(intervals.to_vec())?;
    let allowed = if constrained { Some(ivs.as_slice()) } else { None };
    let (r, mut centers) = cover_line(&ivs, allowed, n);
    let last = *centers.last().expect("at least one center");
    centers.resize(n, last);
    Ok((r, Configuration::from_scalars(&centers)))
}

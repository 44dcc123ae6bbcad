//! Independent oracles for the integration tests.

#![allow(dead_code)]

/// Triangular-lattice covering of the unit square with at most `n` points:
/// the smallest spacing `a` whose lattice, over a grid of offsets, needs at
/// most `n` points within `a / sqrt(3)` of the square. Returns
/// `(sqrt(n) R, R, points)` with `R = a / sqrt(3)` and the points used.
pub fn hex_covering(n: usize) -> (f64, f64, Vec<[f64; 2]>) {
    let sqrt3 = 3f64.sqrt();
    let a_star = (2.0 / (sqrt3 * n as f64)).sqrt();
    let mut a = 0.9 * a_star;
    loop {
        let r = a / sqrt3;
        let h = a * sqrt3 / 2.0;
        let mut best: Option<Vec<[f64; 2]>> = None;
        for ix in 0..6 {
            for iy in 0..6 {
                let (ox, oy) = (a * ix as f64 / 6.0, 2.0 * h * iy as f64 / 6.0);
                let pts = lattice_points(a, h, ox, oy, r);
                if best.as_ref().map_or(true, |b| pts.len() < b.len()) {
                    best = Some(pts);
                }
            }
        }
        let pts = best.expect("offsets tried");
        if pts.len() <= n {
            return ((n as f64).sqrt() * r, r, pts);
        }
        a *= 1.0005;
    }
}

fn lattice_points(a: f64, h: f64, ox: f64, oy: f64, r: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let j0 = ((-r - oy) / h).floor() as i64;
    let j1 = ((1.0 + r - oy) / h).ceil() as i64;
    for j in j0..=j1 {
        let y = oy + j as f64 * h;
        let shift = ox + if j.rem_euclid(2) == 1 { a / 2.0 } else { 0.0 };
        let i0 = ((-r - shift) / a).floor() as i64;
        let i1 = ((1.0 + r - shift) / a).ceil() as i64;
        for i in i0..=i1 {
            let x = shift + i as f64 * a;
            let dx = (0.0f64).max(-x).max(x - 1.0);
            let dy = (0.0f64).max(-y).max(y - 1.0);
            if (dx * dx + dy * dy).sqrt() <= r {
                out.push([x, y]);
            }
        }
    }
    out
}

/// Least covering radius of a finite set of reals by `n` centers anywhere on
/// the line: scans every half-gap `(x_j - x_i) / 2` in increasing order and
/// stops at the first that a left-to-right greedy cover achieves.
pub fn brute_covering_1d(points: &[f64], n: usize) -> f64 {
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut radii = vec![0.0];
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            radii.push((xs[j] - xs[i]) / 2.0);
        }
    }
    radii.sort_by(f64::total_cmp);
    for r in radii {
        let mut used = 0;
        let mut k = 0;
        while k < xs.len() {
            used += 1;
            let reach = xs[k] + 2.0 * r;
            let reach = reach + 1e-15 * (1.0 + reach.abs());
            while k < xs.len() && xs[k] <= reach {
                k += 1;
            }
        }
        if used <= n {
            return r;
        }
    }
    unreachable!("the largest half-gap covers with one center")
}

/// `max` over `n`-point multisets of the candidates of `min_y Σ |y - x|^{-s}`,
/// by plain enumeration.
pub fn naive_polarization(cands: &[f64], ys: &[f64], n: usize, s: f64) -> f64 {
    fn rec(cands: &[f64], ys: &[f64], s: f64, from: usize, left: usize, sums: &mut Vec<f64>, best: &mut f64) {
        if left == 0 {
            let v = sums.iter().copied().fold(f64::INFINITY, f64::min);
            *best = best.max(v);
            return;
        }
        for c in from..cands.len() {
            let saved = sums.clone();
            for (acc, y) in sums.iter_mut().zip(ys) {
                *acc += (y - cands[c]).abs().powf(-s);
            }
            rec(cands, ys, s, c, left - 1, sums, best);
            *sums = saved;
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(cands, ys, s, 0, n, &mut vec![0.0; ys.len()], &mut best);
    best
}

#[cfg(test)]
mod tests {}

//! Best coverings of separated self-similar sets by allocation over the
//! first-level pieces.
//!
//! If a configuration of radius below `h` exists, no optimal ball meets two
//! pieces (they are `2h` apart), so the optimum splits as
//! `ρ(A, N) = min over N_1 + .. + N_M = N of max_m r_m ρ(A, N_m)`.
//! Values that fail this guard come from a base solver.

use serde::{Deserialize, Serialize};

use super::exact1d::cover_line;
use super::heuristic::cover_sample;
use super::refine::RefineOptions;
use crate::error::{domain, Error, Result};
use crate::geometry::{Configuration, PointCloud};
use crate::sets::{IfsModel, Interval};

/// Relative slack for ties and for the `< h` guard.
const TIE_TOL: f64 = 1e-12;

/// Largest one-dimensional sandwich level, in cylinder count.
const SANDWICH_MAX_CYLINDERS: f64 = (1u64 << 21) as f64;

/// How a table entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrySource {
    /// Computed directly on the whole set.
    Base,
    /// Assembled from smaller entries on the pieces.
    Recursion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringEntry {
    pub n: usize,
    pub radius: f64,
    pub exact: bool,
    pub source: EntrySource,
    /// Zero for exact entries; otherwise the slack of the upper bound.
    pub mesh_certificate: f64,
}

/// Allocation of the `n` centers over nested pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationTree {
    pub n: usize,
    pub radius: f64,
    /// One subtree per map, empty for base entries.
    pub children: Vec<AllocationTree>,
}

/// `ρ(A, N)` (or `ρ*(A, N)`) for `N = 1..=n_max`.
#[derive(Clone, Debug)]
pub struct CoveringTable {
    pub ifs: IfsModel,
    pub constrained: bool,
    entries: Vec<CoveringEntry>,
    /// `fold[k][n]`: best `max_{m >= k} r_m ρ(N_m)` over `N_k + .. + N_M = n`.
    fold: Vec<Vec<f64>>,
    base_configs: Vec<Option<PointCloud>>,
}

impl CoveringTable {
    pub fn n_max(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, n: usize) -> Option<&CoveringEntry> {
        n.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn entries(&self) -> &[CoveringEntry] {
        &self.entries
    }

    pub fn radius(&self, n: usize) -> Option<f64> {
        self.entry(n).map(|e| e.radius)
    }

    /// True when every entry up to `n` is exact.
    pub fn exact_through(&self, n: usize) -> bool {
        self.entries.iter().take(n).all(|e| e.exact)
    }

    fn value(&self, n: usize) -> f64 {
        self.entries[n - 1].radius
    }

    /// Lexicographically smallest optimal allocation for a recursive entry.
    pub fn composition(&self, n: usize) -> Option<Vec<usize>> {
        let e = self.entry(n)?;
        if e.source != EntrySource::Recursion {
            return None;
        }
        let target = e.radius * (1.0 + TIE_TOL);
        let ratios = self.ifs.ratios();
        let m = ratios.len();
        let mut rest = n;
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            if k == m - 1 {
                out.push(rest);
                break;
            }
            let a = (1..=rest - (m - 1 - k))
                .find(|&a| ratios[k] * self.value(a) <= target && self.fold[k + 1][rest - a] <= target)
                .expect("the stored value is attained");
            out.push(a);
            rest -= a;
        }
        Some(out)
    }

    pub fn allocation(&self, n: usize) -> Option<AllocationTree> {
        let e = self.entry(n)?;
        let children = match self.composition(n) {
            Some(parts) => parts.iter().map(|&k| self.allocation(k)).collect::<Option<Vec<_>>>()?,
            None => Vec::new(),
        };
        Some(AllocationTree { n, radius: e.radius, children })
    }

    /// A configuration attaining the tabulated radius (up to its certificate).
    pub fn configuration(&self, n: usize) -> Result<Configuration> {
        if self.entry(n).is_none() {
            return domain(format!("N = {n} is outside the table"));
        }
        if let Some(parts) = self.composition(n) {
            let p = self.ifs.ambient_dim();
            let mut out = PointCloud::with_capacity(p, n);
            let mut buf = vec![0.0; p];
            for (map, &k) in self.ifs.maps.iter().zip(&parts) {
                for x in self.configuration(k)?.points().iter() {
                    map.apply(x, &mut buf);
                    out.push(&buf);
                }
            }
            return Ok(Configuration::new(out));
        }
        let cloud = self.base_configs[n - 1].clone().expect("base entries keep their configuration");
        Ok(Configuration::new(cloud))
    }
}

struct Base {
    radius: f64,
    exact: bool,
    mesh: f64,
    config: PointCloud,
}

/// Depth-`k` cylinder hulls of a one-dimensional IFS, merged, with the
/// cylinder endpoints (points of `A`).
struct LineLevel {
    hulls: Vec<Interval>,
    points: Vec<Interval>,
}

fn line_level(ifs: &IfsModel, depth: u32) -> LineLevel {
    let mut ivs = vec![(ifs.base_hull.0[0], ifs.base_hull.1[0])];
    let (mut a, mut b) = ([0.0], [0.0]);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(ivs.len() * ifs.maps.len());
        for map in &ifs.maps {
            for &(lo, hi) in &ivs {
                map.apply(&[lo], &mut a);
                map.apply(&[hi], &mut b);
                next.push((a[0].min(b[0]), a[0].max(b[0])));
            }
        }
        ivs = next;
    }
    ivs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pts: Vec<f64> = ivs.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut hulls: Vec<Interval> = Vec::with_capacity(ivs.len());
    for (lo, hi) in ivs {
        match hulls.last_mut() {
            Some(last) if lo <= last.hi => last.hi = last.hi.max(hi),
            _ => hulls.push(Interval { lo, hi }),
        }
    }
    LineLevel { hulls, points: pts.into_iter().map(Interval::point).collect() }
}

/// Sandwich for a set on the line: covering the cylinder endpoints (a subset
/// of `A`) bounds the radius below; covering the cylinder hulls (a superset)
/// bounds it above. Constrained runs allow centers on the hulls for the lower
/// bound and on the endpoints for the upper one. Equal bounds are exact.
struct LineSandwich<'a> {
    ifs: &'a IfsModel,
    levels: Vec<LineLevel>,
}

impl<'a> LineSandwich<'a> {
    fn level(&mut self, depth: u32) -> &LineLevel {
        while self.levels.len() <= depth as usize {
            let k = self.levels.len() as u32;
            self.levels.push(line_level(self.ifs, k));
        }
        &self.levels[depth as usize]
    }

    fn solve(&mut self, n: usize, constrained: bool) -> Base {
        let m = self.ifs.maps.len() as f64;
        let mut depth = ((4.0 * n as f64).ln() / m.ln()).ceil().max(1.0) as u32;
        let mut best: Option<Base> = None;
        while m.powi(depth as i32) <= SANDWICH_MAX_CYLINDERS {
            let level = self.level(depth);
            let (lower, upper, centers) = if constrained {
                let (lo, _) = cover_line(&level.points, Some(&level.hulls), n);
                let (up, c) = cover_line(&level.hulls, Some(&level.points), n);
                (lo, up, c)
            } else {
                let (lo, _) = cover_line(&level.points, None, n);
                let (up, c) = cover_line(&level.hulls, None, n);
                (lo, up, c)
            };
            let mut config = PointCloud::from_scalars(&centers);
            let last = centers[centers.len() - 1];
            while config.len() < n {
                config.push(&[last]);
            }
            let gap = (upper - lower).max(0.0);
            let exact = gap <= TIE_TOL * upper.max(1e-300) || gap <= 1e-15;
            let cand = Base { radius: upper, exact, mesh: if exact { 0.0 } else { gap }, config };
            if exact {
                return cand;
            }
            if best.as_ref().map_or(true, |b| cand.mesh < b.mesh) {
                best = Some(cand);
            }
            depth += 1;
        }
        best.expect("the first level fits the budget")
    }
}

/// Heuristic base values on a deep sample, as certified upper bounds.
fn sampled_base(ifs: &IfsModel, n: usize, constrained: bool) -> Result<Base> {
    let m = ifs.maps.len() as f64;
    let mut depth = 1u32;
    while m.powi(depth as i32 + 1) * 4.0 <= 2e5 {
        depth += 1;
    }
    let sample = if constrained { ifs.points_in_set(depth)? } else { ifs.points(depth)? };
    let refine = RefineOptions { constrained, lloyd_iters: 5, ..RefineOptions::default() };
    let (w, r) = cover_sample(&sample, n, &ifs.norm, 8, 0x0c0e, &refine)?;
    Ok(Base { radius: r + sample.mesh, exact: false, mesh: sample.mesh, config: w.into_points() })
}

/// Tabulates `ρ(A, N)` (constrained) or `ρ*(A, N)` for `N = 1..=n_max`.
///
/// On the line, base values are exact whenever the sandwich closes; in
/// higher dimension they are heuristic upper bounds and flagged inexact.
pub fn fractal_covering_dp(ifs: &IfsModel, n_max: usize, constrained: bool) -> Result<CoveringTable> {
    if n_max == 0 {
        return domain("N must be at least 1");
    }
    if !(ifs.separation_h > 0.0) {
        return Err(Error::Strategy("the IFS has no certified separation".into()));
    }
    let ratios = ifs.ratios();
    let m = ratios.len();
    let guard = ifs.separation_h * (1.0 - TIE_TOL);
    let mut sandwich = (ifs.ambient_dim() == 1).then(|| LineSandwich { ifs, levels: Vec::new() });

    let mut entries: Vec<CoveringEntry> = Vec::with_capacity(n_max);
    let mut base_configs: Vec<Option<PointCloud>> = Vec::with_capacity(n_max);
    let mut fold = vec![vec![f64::INFINITY; n_max + 1]; m];
    // Certificate of the allocation attaining fold[k][n].
    let mut fold_cert = vec![vec![0.0f64; n_max + 1]; m];
    let mut fold_exact = vec![vec![true; n_max + 1]; m];

    for n in 1..=n_max {
        // fold[k][n] for k < m - 1 uses entries below n only.
        for k in (0..m - 1).rev() {
            if n < m - k {
                continue;
            }
            let mut best = (f64::INFINITY, 0.0, true);
            for a in 1..=n - (m - 1 - k) {
                let e = &entries[a - 1];
                let v = (ratios[k] * e.radius).max(fold[k + 1][n - a]);
                if v < best.0 * (1.0 - TIE_TOL) || best.0.is_infinite() {
                    let cert = (ratios[k] * e.mesh_certificate).max(fold_cert[k + 1][n - a]);
                    best = (v, cert, e.exact && fold_exact[k + 1][n - a]);
                }
            }
            fold[k][n] = best.0;
            fold_cert[k][n] = best.1;
            fold_exact[k][n] = best.2;
        }

        let recursive = fold[0][n];
        let entry = if recursive < guard {
            base_configs.push(None);
            CoveringEntry {
                n,
                radius: recursive,
                exact: fold_exact[0][n],
                source: EntrySource::Recursion,
                mesh_certificate: fold_cert[0][n],
            }
        } else {
            let base = match sandwich.as_mut() {
                Some(s) => s.solve(n, constrained),
                None => sampled_base(ifs, n, constrained)?,
            };
            if !base.exact {
                log::debug!("{}: base N = {n} inexact, slack {}", ifs.name, base.mesh);
            }
            base_configs.push(Some(base.config));
            CoveringEntry {
                n,
                radius: base.radius,
                exact: base.exact,
                source: EntrySource::Base,
                mesh_certificate: base.mesh,
            }
        };
        fold[m - 1][n] = ratios[m - 1] * entry.radius;
        fold_cert[m - 1][n] = ratios[m - 1] * entry.mesh_certificate;
        fold_exact[m - 1][n] = entry.exact;
        entries.push(entry);
    }
    Ok(CoveringTable { ifs: ifs.clone(), constrained, entries, fold, base_configs })
}

//! Maximal Riesz polarization: an exact multiset oracle on small candidate
//! sets, maximin local search at scale, and the classical upper bounds.
//!
//! Values are `min_{y ∈ Y} Σ ||y - x||^{-s}` on a sample `Y`, so they are
//! exact for the sampled problem only. Each result also carries a certified
//! lower bound for the true set, obtained by inflating every distance by the
//! sample mesh.

mod bounds;
mod brute;
mod search;

use std::collections::HashMap;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::{
    frostman_upper_bound, neighborhood_stability_check, superadditivity_check, weak_separation_audit, FrostmanBound,
    StabilityReport,
};
pub use brute::{brute_force_polarization, multiset_count, MAX_COMBINATIONS};

use crate::asymptotics::SequenceRecord;
use crate::covering::{best_covering, farthest_point_net_from, start_index, CoveringOptions};
use crate::error::{domain, Error, Result};
use crate::geometry::{polarization_points, riesz_kernel, Configuration, NormSpec, PointCloud, SampledSet};
use crate::sets::{uniform_grid, SetKind, SetModel};
use search::{local_search, SearchParams};

/// Brute force in `Auto` mode also needs `combinations * |Y|` below this.
const AUTO_WORK: f64 = 2e9;
/// Default sample size per configuration point.
const SAMPLES_PER_POINT: f64 = 32.0;
/// Largest ambient grid used as unconstrained candidates, relative to `|Y|`.
const AMBIENT_FACTOR: f64 = 4.0;
const AMBIENT_MIN: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarStrategy {
    /// Brute force when within budget, local search otherwise.
    Auto,
    BruteForce,
    LocalSearch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationOptions {
    pub strategy: PolarStrategy,
    /// Sample mesh; chosen from `N` when absent.
    pub mesh: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Seed the search with a best-covering configuration.
    pub covering_seed: bool,
}

impl Default for PolarizationOptions {
    fn default() -> Self {
        PolarizationOptions {
            strategy: PolarStrategy::Auto,
            mesh: None,
            restarts: 8,
            seed: 0,
            max_iters: 4000,
            covering_seed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationResult {
    /// `P_s(ω, Y)`, a lower bound for the sampled maximum (exact when
    /// `exact`).
    pub value: f64,
    pub configuration: Configuration,
    /// Maximum over all `N`-multisets of the candidates.
    pub exact: bool,
    pub sample_mesh: f64,
    /// Lower bound for `P_s(ω, A)` on the true set.
    pub certified_lower: f64,
    pub strategy: PolarStrategy,
}

/// `min_y Σ (||y - x|| + δ)^{-s}`: a lower bound for `P_s(ω, A)` when `Y` is
/// `δ`-dense in `A`.
pub fn certified_lower_bound(omega: &Configuration, y: &SampledSet, s: f64, norm: &NormSpec) -> f64 {
    let delta = y.mesh;
    let one = |yj: &[f64]| omega.points().iter().map(|x| riesz_kernel(norm.dist(x, yj) + delta, s)).sum::<f64>();
    y.points.iter().map(one).fold(f64::INFINITY, f64::min)
}

/// Evenly spaced candidate subset by greedy thinning: keeps a point unless
/// one already kept lies within `t`. The result is `(mesh + t)`-dense.
pub fn thin_sample(y: &SampledSet, t: f64, norm: &NormSpec) -> Result<SampledSet> {
    if !(t > 0.0) {
        return domain(format!("thinning distance must be positive, got {t}"));
    }
    let p = y.ambient_dim();
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|c| (c / t).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept = PointCloud::new(p);
    let mut probe = vec![0i64; p];
    for x in y.points.iter() {
        let k = key(x);
        let mut clash = false;
        let total = 3usize.pow(p as u32);
        'scan: for idx in 0..total {
            let mut rem = idx;
            for (c, kc) in probe.iter_mut().zip(&k) {
                *c = kc + (rem % 3) as i64 - 1;
                rem /= 3;
            }
            if let Some(list) = cells.get(&probe) {
                for &i in list {
                    if norm.dist(kept.get(i), x) <= t {
                        clash = true;
                        break 'scan;
                    }
                }
            }
        }
        if !clash {
            cells.entry(k).or_default().push(kept.len());
            kept.push(x);
        }
    }
    let mut out = SampledSet::new(kept, y.mesh + t, y.model_id.clone(), y.dim_d)?;
    out.known_measure = y.known_measure;
    Ok(out)
}

/// Midpoints of `N` equal-length pieces of a one-dimensional model.
pub fn equal_spacing_construction(model: &SetModel, n: usize) -> Result<Configuration> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    let line = model
        .line_embedding()
        .ok_or_else(|| Error::Strategy(format!("{} is not a subset of a line", model.id())))?;
    let total: f64 = line.intervals.iter().map(|i| i.len()).sum();
    let mut ts = Vec::with_capacity(n);
    let mut iv = 0;
    let mut before = 0.0;
    for k in 0..n {
        let target = total * (2 * k + 1) as f64 / (2 * n) as f64;
        while iv + 1 < line.intervals.len() && before + line.intervals[iv].len() < target {
            before += line.intervals[iv].len();
            iv += 1;
        }
        let i = &line.intervals[iv];
        ts.push((i.lo + (target - before)).min(i.hi));
    }
    Ok(Configuration::new(line.embed(&ts)))
}

/// `P_s(ω, A)` for a one-dimensional model, minimizing the potential over
/// the continuum. Between consecutive configuration points the potential
/// is convex, so each piece is minimized by ternary search.
pub fn line_polarization(omega: &Configuration, model: &SetModel, s: f64) -> Result<f64> {
    let line = model
        .line_embedding()
        .ok_or_else(|| Error::Strategy(format!("{} is not a subset of a line", model.id())))?;
    if omega.is_empty() || !(s > 0.0) {
        return domain("line polarization needs points and s > 0");
    }
    // Coordinates along the line; points off the line keep their offset.
    let p = line.origin.len();
    let mut along = Vec::with_capacity(omega.len());
    let mut off = Vec::with_capacity(omega.len());
    for x in omega.points().iter() {
        let t: f64 = (0..p).map(|k| (x[k] - line.origin[k]) * line.direction[k]).sum();
        let foot = line.embed(&[t]);
        along.push(t);
        off.push(model.norm.dist(x, foot.get(0)));
    }
    let euclid_line = off.iter().all(|&o| o == 0.0);
    let at = |t: f64| -> f64 {
        if euclid_line {
            along.iter().map(|&a| riesz_kernel((t - a).abs(), s)).sum()
        } else {
            let y = line.embed(&[t]);
            omega.points().iter().map(|x| riesz_kernel(model.norm.dist(x, y.get(0)), s)).sum()
        }
    };
    let mut cuts: Vec<f64> = along.clone();
    cuts.sort_by(f64::total_cmp);
    let mut best = f64::INFINITY;
    for iv in &line.intervals {
        let mut edges = vec![iv.lo];
        edges.extend(cuts.iter().copied().filter(|&c| c > iv.lo && c < iv.hi));
        edges.push(iv.hi);
        for w in edges.windows(2) {
            best = best.min(at(w[0])).min(at(w[1]));
            let (mut a, mut b) = (w[0], w[1]);
            for _ in 0..200 {
                if b - a <= 1e-15 * (1.0 + b.abs()) {
                    break;
                }
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if at(m1) <= at(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            best = best.min(at(0.5 * (a + b)));
        }
    }
    Ok(best)
}

/// Candidate points: the sample itself when constrained, otherwise an
/// ambient grid over the bounding box when it stays small.
fn candidates_for(model: &SetModel, y: &SampledSet, constrained: bool) -> PointCloud {
    if constrained {
        return y.points.clone();
    }
    if model.line_embedding().is_some() || matches!(model.kind, SetKind::Box { .. }) {
        // The sample already is the ambient grid over the hull of each piece.
        return y.points.clone();
    }
    let p = y.ambient_dim();
    let Some((lo, hi)) = y.points.bounding_box() else { return y.points.clone() };
    let step = 2.0 * y.mesh / model.norm.ones_norm(p);
    let axes: Vec<Vec<f64>> = lo.iter().zip(&hi).map(|(a, b)| uniform_grid(*a, *b, step)).collect();
    let total: f64 = axes.iter().map(|a| a.len() as f64).product();
    if p > 2 || total > (AMBIENT_FACTOR * y.len() as f64).max(AMBIENT_MIN) {
        return y.points.clone();
    }
    let mut out = PointCloud::with_capacity(p, total as usize);
    let mut buf = vec![0.0; p];
    for idx in 0..total as usize {
        let mut rem = idx;
        for (k, ax) in axes.iter().enumerate() {
            buf[k] = ax[rem % ax.len()];
            rem /= ax.len();
        }
        out.push(&buf);
    }
    out
}

/// Sample with roughly `target` points.
pub(crate) fn sample_near(model: &SetModel, target: f64) -> Result<SampledSet> {
    if let Some(line) = model.line_embedding() {
        let total: f64 = line.intervals.iter().map(|i| i.len()).sum();
        return model.sample(total / target.round().max(2.0));
    }
    let d = model.dim_d().max(1e-3);
    let mut mesh = model.diameter_bound()? / 10.0;
    for _ in 0..3 {
        let probe = model.sample(mesh)?;
        let ratio = probe.len() as f64 / target;
        if (0.7..1.4).contains(&ratio) {
            return Ok(probe);
        }
        mesh *= ratio.powf(1.0 / d);
    }
    model.sample(mesh)
}

/// Best configuration among brute force (when allowed), multistart local
/// search and the given seeds, all measured on `y`.
pub fn maximize_on_sample(
    y: &SampledSet,
    candidates: &PointCloud,
    n: usize,
    s: f64,
    norm: &NormSpec,
    opts: &PolarizationOptions,
    seeds: &[Configuration],
) -> Result<PolarizationResult> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if !(s > 0.0) {
        return domain(format!("Riesz exponent must be positive, got {s}"));
    }
    if candidates.is_empty() {
        return domain("no candidate points");
    }
    let combos = multiset_count(brute::sorted_candidates(candidates).len(), n);
    let brute_ok = combos <= MAX_COMBINATIONS;
    let use_brute = match opts.strategy {
        PolarStrategy::BruteForce => true,
        PolarStrategy::Auto => brute_ok && combos * y.len() as f64 <= AUTO_WORK,
        PolarStrategy::LocalSearch => false,
    };
    let finish = |w: Configuration, value: f64, exact: bool, strategy: PolarStrategy| PolarizationResult {
        certified_lower: certified_lower_bound(&w, y, s, norm),
        value,
        configuration: w,
        exact,
        sample_mesh: y.mesh,
        strategy,
    };
    if use_brute {
        let (v, w) = brute_force_polarization(candidates, y, n, s, norm)?;
        return Ok(finish(w, v, true, PolarStrategy::BruteForce));
    }
    let (lo, hi) = candidates.bounding_box().expect("nonempty candidates");
    let diam = norm.dist(&lo, &hi).max(f64::MIN_POSITIVE);
    let cand_set = SampledSet::new(candidates.clone(), 0.0, "candidates", y.dim_d.min(candidates.dim() as f64))?;
    let mut starts: Vec<PointCloud> = seeds
        .iter()
        .filter(|w| w.len() == n && w.dim() == norm.ambient_dim)
        .map(|w| w.points().clone())
        .collect();
    for k in 0..opts.restarts.max(1) {
        if k % 2 == 0 {
            let net = farthest_point_net_from(&cand_set, n, start_index(opts.seed, k, candidates.len()), norm)?;
            let mut pts = net.into_points();
            while pts.len() < n {
                let last = pts.get(pts.len() - 1).to_vec();
                pts.push(&last);
            }
            starts.push(pts);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let mut pts = PointCloud::with_capacity(norm.ambient_dim, n);
            if n <= candidates.len() {
                for i in sample_indices(&mut rng, candidates.len(), n).into_iter() {
                    pts.push(candidates.get(i));
                }
            } else {
                for i in 0..n {
                    pts.push(candidates.get(i % candidates.len()));
                }
            }
            starts.push(pts);
        }
    }
    let spacing = (y.mesh).max(diam * 1e-9);
    let typical = diam * (n as f64).powf(-1.0 / y.dim_d.max(1e-3));
    let runs: Vec<(f64, PointCloud)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| {
            let params = SearchParams {
                max_iters: opts.max_iters,
                initial_radius: diam / 4.0,
                min_radius: spacing / 2.0,
                spacing: typical,
                seed: opts.seed,
                stream: 1000 + k as u64,
            };
            let before = polarization_points(&start, &y.points, s, norm);
            let out = local_search(&y.points, candidates, start.clone(), s, norm, &params);
            let after = polarization_points(&out, &y.points, s, norm);
            if after >= before {
                (after, out)
            } else {
                (before, start)
            }
        })
        .collect();
    let mut best: Option<(f64, PointCloud)> = None;
    for (v, w) in runs {
        if best.as_ref().map_or(true, |b| v > b.0) {
            best = Some((v, w));
        }
    }
    let (v, w) = best.expect("at least one start");
    Ok(finish(Configuration::new(w), v, false, PolarStrategy::LocalSearch))
}

/// Polarization sample for `model` and `N` under the options.
pub fn polarization_sample(model: &SetModel, n: usize, opts: &PolarizationOptions) -> Result<SampledSet> {
    match opts.mesh {
        Some(m) => model.sample(m),
        None => sample_near(model, (SAMPLES_PER_POINT * n as f64).max(64.0)),
    }
}

/// Maximal polarization of `model` with `N` points, on a sample of the set.
pub fn maximize_polarization(
    model: &SetModel,
    n: usize,
    s: f64,
    constrained: bool,
    opts: &PolarizationOptions,
) -> Result<PolarizationResult> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if !(s > 0.0) {
        return domain(format!("Riesz exponent must be positive, got {s}"));
    }
    let y = polarization_sample(model, n, opts)?;
    let candidates = candidates_for(model, &y, constrained);
    let mut seeds = Vec::new();
    if model.line_embedding().is_some() {
        seeds.push(equal_spacing_construction(model, n)?);
    }
    let brute_ok = matches!(opts.strategy, PolarStrategy::Auto)
        && multiset_count(brute::sorted_candidates(&candidates).len(), n) * y.len() as f64 <= AUTO_WORK
        && multiset_count(brute::sorted_candidates(&candidates).len(), n) <= MAX_COMBINATIONS;
    if opts.covering_seed && !brute_ok {
        let cov_opts = CoveringOptions { seed: opts.seed, ..CoveringOptions::default() };
        match best_covering(model, n, constrained, &cov_opts) {
            Ok(c) => seeds.push(c.configuration),
            Err(e) => log::warn!("covering seed unavailable: {e}"),
        }
    }
    let res = maximize_on_sample(&y, &candidates, n, s, &model.norm, opts, &seeds)?;
    log::info!(
        "polarization {} N={n} s={s}: sample value {} (mesh {}), certified true-set bound {}",
        model.id(),
        res.value,
        res.sample_mesh,
        res.certified_lower
    );
    Ok(res)
}

/// `(N, P̂, P̂ / N^{s/d})` along an increasing schedule.
pub fn polarization_sequence(
    model: &SetModel,
    schedule: &[usize],
    s: f64,
    constrained: bool,
    opts: &PolarizationOptions,
) -> Result<Vec<SequenceRecord>> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return domain("schedule must be nonempty, positive and strictly increasing");
    }
    let d = model.dim_d();
    if !(s > d) {
        return domain(format!("polarization asymptotics need s > d, got s = {s}, d = {d}"));
    }
    schedule
        .iter()
        .map(|&n| {
            let r = maximize_polarization(model, n, s, constrained, opts)?;
            // Sample values are exact only when the sample is the set.
            let exact = r.exact && r.sample_mesh == 0.0;
            Ok(SequenceRecord::polarization(n, r.value, s, d, exact, r.sample_mesh))
        })
        .collect()
}

/// Records of the equal-spacing construction on a line model, each value
/// evaluated on the continuum. The certificate is the resolution of the
/// minimization.
pub fn construction_sequence(model: &SetModel, schedule: &[usize], s: f64) -> Result<Vec<SequenceRecord>> {
    let d = model.dim_d();
    let scale = model.diameter_bound()?;
    schedule
        .par_iter()
        .map(|&n| {
            let w = equal_spacing_construction(model, n)?;
            let v = line_polarization(&w, model, s)?;
            Ok(SequenceRecord::polarization(n, v, s, d, false, 1e-15 * (1.0 + scale)))
        })
        .collect()
}

/// Exact table `N -> max P_s(ω, Y)` over multisets of the candidates, for
/// `N = 1..=n_max`. Entries are exact for the finite problem.
pub fn oracle_table(
    candidates: &PointCloud,
    y: &SampledSet,
    n_max: usize,
    s: f64,
    norm: &NormSpec,
) -> Result<Vec<(SequenceRecord, Configuration)>> {
    (1..=n_max)
        .map(|n| {
            let (v, w) = brute_force_polarization(candidates, y, n, s, norm)?;
            Ok((SequenceRecord::polarization(n, v, s, y.dim_d, true, 0.0), w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{IfsModel, Interval};
    use approx::assert_relative_eq;

    fn local() -> PolarizationOptions {
        PolarizationOptions { strategy: PolarStrategy::LocalSearch, covering_seed: false, ..Default::default() }
    }

    #[test]
    fn one_point_on_the_interval() {
        let model = SetModel::unit_interval();
        let r = maximize_polarization(&model, 1, 2.0, false, &PolarizationOptions::default()).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.configuration.scalars(), vec![0.5]);
        assert!(r.exact);
        assert!(r.certified_lower < 4.0);
    }

    #[test]
    fn local_search_matches_the_oracle() {
        let y = SetModel::unit_interval().sample(1.0 / 40.0).unwrap();
        let norm = NormSpec::euclidean(1);
        for n in 1..=4 {
            for s in [2.0, 3.0] {
                let (exact, _) = brute_force_polarization(&y.points, &y, n, s, &norm).unwrap();
                let r = maximize_on_sample(&y, &y.points, n, s, &norm, &local(), &[]).unwrap();
                assert!((r.value - exact).abs() <= 1e-9 * exact, "n={n} s={s}: {} vs {exact}", r.value);
                assert!(!r.exact);
            }
        }
    }

    #[test]
    fn cantor_two_points() {
        // Unconstrained points near the child centers 1/6 and 5/6.
        let model = SetModel::ifs(IfsModel::cantor());
        let mesh = IfsModel::cantor().mesh_at_depth(6);
        let opts = PolarizationOptions { mesh: Some(mesh), ..Default::default() };
        let r = maximize_polarization(&model, 2, 2.0, false, &opts).unwrap();
        assert!(r.value >= 36.0, "{}", r.value);
        let c = maximize_polarization(&model, 2, 2.0, true, &opts).unwrap();
        assert!(c.value <= r.value);
    }

    #[test]
    fn construction_sequence_settles() {
        let model = SetModel::unit_interval();
        let recs = construction_sequence(&model, &[200, 1000], 3.0).unwrap();
        let rel = (recs[0].normalized / recs[1].normalized - 1.0).abs();
        assert!(rel < 0.05, "{rel}");
        // Endpoints are worst: (2N)^s Σ (2i - 1)^{-s}.
        let w = equal_spacing_construction(&model, 4).unwrap();
        let expect: f64 = (1..=4).map(|i| (8.0 / (2 * i - 1) as f64).powi(3)).sum();
        assert_relative_eq!(line_polarization(&w, &model, 3.0).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn construction_on_two_intervals() {
        let model = SetModel::interval_union(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(3.0, 4.0).unwrap()]).unwrap();
        let w = equal_spacing_construction(&model, 4).unwrap();
        assert_eq!(w.scalars(), vec![0.25, 0.75, 3.25, 3.75]);
    }

    #[test]
    fn increasing_toward_a_plateau() {
        let model = SetModel::unit_interval();
        let opts = PolarizationOptions { mesh: Some(1e-3), ..Default::default() };
        let recs = polarization_sequence(&model, &[1, 2, 3, 4, 5, 6], 3.0, false, &opts).unwrap();
        for w in recs.windows(2) {
            assert!(w[1].normalized >= w[0].normalized, "{recs:?}");
        }
        // The gains shrink: the sequence levels off.
        let gain = |k: usize| recs[k + 1].normalized / recs[k].normalized - 1.0;
        assert!(gain(4) < gain(0) / 5.0, "{recs:?}");
        assert!(recs.iter().all(|r| !r.exact && r.mesh_certificate > 0.0));
        assert!(polarization_sequence(&model, &[1, 2], 1.0, false, &opts).is_err());
    }

    #[test]
    fn thinning_keeps_spacing() {
        let y = SetModel::cube(2, 1.0, NormSpec::euclidean(2)).unwrap().sample(0.01).unwrap();
        let t = thin_sample(&y, 0.05, &NormSpec::euclidean(2)).unwrap();
        assert!(t.len() < y.len() / 10);
        assert_relative_eq!(t.mesh, 0.06, epsilon = 1e-12);
        let norm = NormSpec::euclidean(2);
        let r = crate::geometry::covering_radius_on_sample(&Configuration::new(t.points.clone()), &y, &norm).unwrap();
        assert!(r <= 0.05 + 1e-12);
    }

    #[test]
    fn certified_bound_is_below_the_value() {
        let model = SetModel::unit_interval();
        let y = model.sample(0.01).unwrap();
        let w = Configuration::from_scalars(&[0.25, 0.75]);
        let v = polarization_points(w.points(), &y.points, 2.0, &model.norm);
        let lb = certified_lower_bound(&w, &y, 2.0, &model.norm);
        let exact = line_polarization(&w, &model, 2.0).unwrap();
        assert!(lb <= exact && exact <= v + 1e-12, "{lb} {exact} {v}");
    }
}

//! Property suite: every assertable invariant of the toolkit, run on
//! desk-scale instances and reported as pass, fail or skipped.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{bridge_check, generalest_check, limit_window, theta_check, uniformity_discrepancy, SequenceRecord, COVERING_TOL};
use crate::covering::{best_covering, exact_covering_1d, farthest_point_net, fractal_covering_dp};
use crate::error::{Error, Result};
use crate::geometry::{covering_radius_on_sample, polarization_value, Configuration, NormSpec, PointCloud, SampledSet};
use crate::polarization::{
    brute_force_polarization, construction_sequence, equal_spacing_construction, frostman_upper_bound, multiset_count,
    neighborhood_stability_check, oracle_table, superadditivity_check, weak_separation_audit, FrostmanBound,
};
use crate::renewal::{classify_lattice, renewal_covering_sequence, LatticeVerdict};
use crate::sets::{hausdorff_dimension, minkowski_estimate, regularity_audit, Contraction, IfsModel, Interval, SetModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub checks: Vec<CheckOutcome>,
}

impl VerifySummary {
    /// No check failed; skipped checks do not count against the suite.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Largest number of multisets a brute-force check may enumerate.
    pub brute_force_limit: f64,
    /// Test fixture: halves the exact 1D radius at one seeded `N`.
    pub perturb_exact_1d: Option<u64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, brute_force_limit: crate::polarization::MAX_COMBINATIONS, perturb_exact_1d: None }
    }
}

/// Outcome of a single check body.
enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn judge(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

const NESTED_INSTANCES: usize = 20;
const N_MAX_1D: usize = 100;
const SHORT_RANGE_MAX: usize = 30;

struct Exact1d {
    perturb_at: Option<usize>,
}

impl Exact1d {
    fn radius(&self, ivs: &[Interval], n: usize, constrained: bool) -> Result<f64> {
        let (r, _) = exact_covering_1d(ivs, n, constrained)?;
        Ok(if self.perturb_at == Some(n) { 0.5 * r } else { r })
    }

    fn radii(&self, ivs: &[Interval], n_max: usize, constrained: bool) -> Result<Vec<f64>> {
        (1..=n_max).map(|n| self.radius(ivs, n, constrained)).collect()
    }
}

/// Random union of 1 to 4 intervals in `[0, 10]` and a subset of it.
fn nested_pair(rng: &mut ChaCha8Rng) -> (Vec<Interval>, Vec<Interval>) {
    let k = rng.gen_range(1..=4);
    let mut cuts: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(0.0..10.0)).collect();
    cuts.sort_by(f64::total_cmp);
    let big: Vec<Interval> = cuts.chunks(2).map(|c| Interval { lo: c[0], hi: c[1] }).collect();
    let mut small = Vec::new();
    for iv in &big {
        if small.is_empty() || rng.gen_bool(0.6) {
            let a = rng.gen_range(iv.lo..=iv.hi);
            let b = rng.gen_range(iv.lo..=iv.hi);
            small.push(Interval { lo: a.min(b), hi: a.max(b) });
        }
    }
    (small, big)
}

fn check_nested_monotonicity(opts: &VerifyOptions, solver: &Exact1d) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut issues = Vec::new();
    for inst in 0..NESTED_INSTANCES {
        let (a, b) = nested_pair(&mut rng);
        let ra = solver.radii(&a, N_MAX_1D, false)?;
        let rb = solver.radii(&b, N_MAX_1D, false)?;
        let ca = solver.radii(&a, N_MAX_1D, true)?;
        for n in 0..N_MAX_1D {
            if ra[n] > rb[n] * (1.0 + 1e-12) {
                issues.push(format!("instance {inst}: ρ*(A,{}) = {} > ρ*(B,{}) = {}", n + 1, ra[n], n + 1, rb[n]));
            }
            if n > 0 && (ra[n] > ra[n - 1] * (1.0 + 1e-12) || rb[n] > rb[n - 1] * (1.0 + 1e-12)) {
                issues.push(format!("instance {inst}: radius increases from N = {} to N = {}", n, n + 1));
            }
            if ca[n] < ra[n] * (1.0 - 1e-12) {
                issues.push(format!("instance {inst}: constrained radius below unconstrained at N = {}", n + 1));
            }
        }
    }
    Ok(judge(
        issues.is_empty(),
        if issues.is_empty() {
            format!("{NESTED_INSTANCES} nested pairs, N <= {N_MAX_1D}")
        } else {
            format!("{} violations; first: {}", issues.len(), issues[0])
        },
    ))
}

fn check_short_range_covering(solver: &Exact1d) -> Result<Verdict> {
    let pairs = [
        (vec![Interval { lo: 0.0, hi: 1.0 }], vec![Interval { lo: 3.0, hi: 3.5 }]),
        (vec![Interval { lo: 0.0, hi: 0.3 }, Interval { lo: 0.5, hi: 2.0 }], vec![Interval { lo: 4.0, hi: 7.0 }]),
        (vec![Interval { lo: -2.0, hi: -1.0 }], vec![Interval { lo: 0.0, hi: 0.1 }, Interval { lo: 0.4, hi: 0.45 }]),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (a1, a2) in &pairs {
        let union = SetModel::separated_union(vec![
            SetModel::interval_union(a1.clone())?,
            SetModel::interval_union(a2.clone())?,
        ])?;
        let all = union.as_intervals().ok_or_else(|| Error::Unsupported("union of intervals".into()))?;
        let r1 = solver.radii(a1, SHORT_RANGE_MAX, false)?;
        let r2 = solver.radii(a2, SHORT_RANGE_MAX, false)?;
        let ru = solver.radii(&all, 2 * SHORT_RANGE_MAX, false)?;
        for n1 in 1..=SHORT_RANGE_MAX {
            for n2 in 1..=SHORT_RANGE_MAX {
                let bound = r1[n1 - 1].max(r2[n2 - 1]);
                worst = worst.max(ru[n1 + n2 - 1] / bound - 1.0);
            }
        }
    }
    Ok(judge(worst <= 1e-12, format!("max relative excess {worst:.3e} over N1, N2 <= {SHORT_RANGE_MAX}")))
}

fn check_greedy_two_approx(opts: &VerifyOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37);
    let norm = NormSpec::euclidean(1);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (_, b) = nested_pair(&mut rng);
        let model = SetModel::interval_union(b.clone())?;
        let y = model.sample(1e-3)?;
        for n in [1, 2, 5, 10, 25] {
            let net = farthest_point_net(&y, n, &norm)?;
            let r = covering_radius_on_sample(&net, &y, &norm)?;
            let (exact, _) = exact_covering_1d(&b, n, false)?;
            worst = worst.max(r / (2.0 * exact + 2.0 * y.mesh));
        }
    }
    Ok(judge(worst <= 1.0, format!("max net radius / (2 exact + 2 mesh) = {worst:.4}")))
}

fn random_cloud(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> PointCloud {
    let mut pc = PointCloud::with_capacity(dim, n);
    for _ in 0..n {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        pc.push(&p);
    }
    pc
}

fn check_geometry(opts: &VerifyOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x51);
    let mut issues = Vec::new();
    for norm in [NormSpec::euclidean(2), NormSpec::l1(2), NormSpec::linf(2)] {
        for trial in 0..10 {
            let omega = Configuration::new(random_cloud(&mut rng, 2, 6));
            let y = SampledSet::from_points(random_cloud(&mut rng, 2, 40), 2.0)?;
            let mut wider_pts = y.points.clone();
            wider_pts.extend(&random_cloud(&mut rng, 2, 20));
            let wider = SampledSet::from_points(wider_pts, 2.0)?;
            let s = 3.0;
            let r = covering_radius_on_sample(&omega, &y, &norm)?;
            let p = polarization_value(&omega, &y, s, &norm)?.to_f64();
            if covering_radius_on_sample(&omega, &wider, &norm)? < r {
                issues.push(format!("trial {trial}: sample extension lowered R"));
            }
            let mut more = omega.clone();
            more.push(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            if covering_radius_on_sample(&more, &y, &norm)? > r || polarization_value(&more, &y, s, &norm)?.to_f64() < p {
                issues.push(format!("trial {trial}: adding a point made things worse"));
            }
            if p < r.powf(-s) * (1.0 - 1e-12) {
                issues.push(format!("trial {trial}: P = {p} below R^-s = {}", r.powf(-s)));
            }
            let t = 2.5;
            let ys = SampledSet::from_points(y.points.scaled(t), 2.0)?;
            let os = Configuration::new(omega.points().scaled(t));
            let rs = covering_radius_on_sample(&os, &ys, &norm)?;
            let ps = polarization_value(&os, &ys, s, &norm)?.to_f64();
            if (rs / (t * r) - 1.0).abs() > 1e-12 || (ps / (t.powf(-s) * p) - 1.0).abs() > 1e-12 {
                issues.push(format!("trial {trial}: scaling covariance off ({rs} vs {}, {ps} vs {})", t * r, t.powf(-s) * p));
            }
        }
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "30 random instances in three norms".into())))
}

fn check_sample_refinement() -> Result<Verdict> {
    let norm = NormSpec::euclidean(2);
    let sq = SetModel::cube(2, 1.0, norm)?;
    let omega = Configuration::from_rows(&[[0.2, 0.3], [0.7, 0.8], [0.6, 0.1]])?;
    let coarse = sq.sample(0.05)?;
    let fine = sq.sample(0.01)?;
    let rc = covering_radius_on_sample(&omega, &coarse, &norm)?;
    let rf = covering_radius_on_sample(&omega, &fine, &norm)?;
    Ok(judge((rf - rc).abs() <= coarse.mesh, format!("R at mesh {}: {rc}, at mesh {}: {rf}", coarse.mesh, fine.mesh)))
}

fn test_ifs() -> Result<Vec<IfsModel>> {
    Ok(vec![
        IfsModel::cantor(),
        IfsModel::two_map_interval(Contraction::rational(1, 2)?, Contraction::rational(1, 3)?)?,
        IfsModel::two_map_interval(Contraction::rational(1, 2)?, Contraction::rational(1, 4)?)?,
        IfsModel::cantor_dust(Contraction::rational(1, 4)?, NormSpec::euclidean(2))?,
    ])
}

fn check_ifs_structure() -> Result<Verdict> {
    let mut issues = Vec::new();
    for ifs in test_ifs()? {
        let ratios = ifs.ratios();
        let d = hausdorff_dimension(&ratios, ifs.ambient_dim() as f64)?;
        let resid = (ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0).abs();
        if resid > 1e-12 {
            issues.push(format!("{}: Σ r^d - 1 = {resid:e}", ifs.name));
        }
        for k in 2..5 {
            let coarse = ifs.points(k)?;
            let fine = ifs.points(k + 1)?;
            let tol = ifs.max_ratio().powi(k as i32) * ifs.diameter();
            let r = covering_radius_on_sample(&Configuration::new(fine.points.clone()), &coarse, &ifs.norm)?;
            if r > tol * (1.0 + 1e-12) {
                issues.push(format!("{}: depth {k} sample not within {tol} of depth {}", ifs.name, k + 1));
            }
        }
        let audit = regularity_audit(&ifs, 8, 8)?;
        if !(audit.min_ratio > 0.0 && audit.c.is_finite()) {
            issues.push(format!("{}: regularity audit degenerate {audit:?}", ifs.name));
        }
        log::info!("{}: fitted regularity c = {}", ifs.name, audit.c);
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "dimension residual, sample nesting, regularity".into())))
}

fn check_cantor_band() -> Result<Verdict> {
    let ifs = IfsModel::cantor();
    let table = fractal_covering_dp(&ifs, 4096, false)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in table.entries() {
        let v = (e.n as f64).powf(1.0 / ifs.dim_d) * e.radius;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(judge(lo >= 0.4 && hi <= 1.6, format!("N^(1/d) ρ in [{lo:.4}, {hi:.4}] for N <= 4096")))
}

fn check_generalest() -> Result<Verdict> {
    let mut detail = Vec::new();
    let mut ok = true;
    let unit = SetModel::unit_interval();
    let sched: Vec<usize> = (1..=64).collect();
    let seq: Vec<SequenceRecord> = sched
        .iter()
        .map(|&n| SequenceRecord::covering(n, 0.5 / n as f64, 1.0, true, 0.0))
        .collect();
    let radii: Vec<f64> = (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect();
    let rep = generalest_check(&seq, 1.0, &minkowski_estimate(&unit, 1.0, &radii)?)?;
    ok &= rep.ratios.iter().all(|r| *r > 0.0 && r.is_finite());
    detail.push(format!("interval {:?}", rep.ratios));
    let ifs = IfsModel::cantor();
    let table = fractal_covering_dp(&ifs, 1024, false)?;
    let cseq: Vec<SequenceRecord> =
        table.entries().iter().map(|e| SequenceRecord::covering(e.n, e.radius, ifs.dim_d, true, 0.0)).collect();
    let cradii: Vec<f64> = (0..6).map(|k| 0.05 * 0.5f64.powi(k)).collect();
    let cm = minkowski_estimate(&SetModel::ifs(ifs.clone()), ifs.dim_d, &cradii)?;
    let crep = generalest_check(&cseq, ifs.dim_d, &cm)?;
    ok &= crep.ratios.iter().all(|r| *r > 0.0 && r.is_finite());
    detail.push(format!("cantor {:?}", crep.ratios));
    Ok(judge(ok, detail.join("; ")))
}

/// Grid of `k + 1` points on `[lo, hi]`.
fn grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
}

fn line_sample(xs: &[f64], mesh: f64) -> Result<SampledSet> {
    SampledSet::new(PointCloud::from_scalars(xs), mesh, "grid", 1.0)
}

fn check_polarization_oracles(opts: &VerifyOptions) -> Result<Verdict> {
    let norm = NormSpec::euclidean(1);
    let ys = grid(0.0, 1.0, 20);
    let y = line_sample(&ys, 0.025)?;
    let mut wide = ys.clone();
    wide.extend(grid(-0.2, 1.2, 28));
    let wide = PointCloud::from_scalars(&wide);
    let n_max = 4;
    let need = multiset_count(wide.sorted_dedup().len(), n_max);
    if need > opts.brute_force_limit {
        return Ok(Verdict::Skip(format!("needs {need} multisets, limit {}", opts.brute_force_limit)));
    }
    let mut issues = Vec::new();
    for s in [2.0, 3.0] {
        let fb = FrostmanBound::for_model(&SetModel::unit_interval(), s)?;
        for n in 1..=n_max {
            let (pc, _) = brute_force_polarization(&y.points, &y, n, s, &norm)?;
            let (pu, _) = brute_force_polarization(&wide, &y, n, s, &norm)?;
            if pc > pu * (1.0 + 1e-12) {
                issues.push(format!("s={s} N={n}: constrained {pc} above unconstrained {pu}"));
            }
            if pu > frostman_upper_bound(&fb, n)? {
                issues.push(format!("s={s} N={n}: {pu} above the Frostman bound"));
            }
            let t = 3.0;
            let ysc = line_sample(&ys.iter().map(|v| v * t).collect::<Vec<_>>(), 0.025 * t)?;
            let (ps, _) = brute_force_polarization(&ysc.points, &ysc, n, s, &norm)?;
            if (ps / (pc * t.powf(-s)) - 1.0).abs() > 1e-9 {
                issues.push(format!("s={s} N={n}: scaled value {ps} vs {}", pc * t.powf(-s)));
            }
        }
        let table: Vec<SequenceRecord> = oracle_table(&y.points, &y, 6, s, &norm)?.into_iter().map(|(r, _)| r).collect();
        let slack = superadditivity_check(&table)?;
        if slack < -1e-9 {
            issues.push(format!("s={s}: superadditivity slack {slack}"));
        }
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "constrained <= unconstrained, Frostman, scaling, superadditivity".into())))
}

fn check_polarization_short_range(opts: &VerifyOptions) -> Result<Verdict> {
    let norm = NormSpec::euclidean(1);
    let a1 = grid(0.0, 1.0, 10);
    let a2 = grid(2.0, 2.5, 5);
    let h: f64 = 0.5;
    let s = 3.0;
    let mut both = a1.clone();
    both.extend(&a2);
    let n_max = 4;
    let need = multiset_count(both.len(), n_max);
    if need > opts.brute_force_limit {
        return Ok(Verdict::Skip(format!("needs {need} multisets, limit {}", opts.brute_force_limit)));
    }
    let (y1, y2, yu) = (line_sample(&a1, 0.05)?, line_sample(&a2, 0.05)?, line_sample(&both, 0.05)?);
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut part = |which: usize, n: usize| -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        if let Some(v) = cache.get(&(which, n)) {
            return Ok(*v);
        }
        let y = if which == 1 { &y1 } else { &y2 };
        let v = brute_force_polarization(&y.points, y, n, s, &norm)?.0;
        cache.insert((which, n), v);
        Ok(v)
    };
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let (pu, w) = brute_force_polarization(&yu.points, &yu, n, s, &norm)?;
        let n1 = w.scalars().iter().filter(|x| **x <= 1.0).count();
        let bound = part(1, n1)?.min(part(2, n - n1)?) + h.powf(-s) * n as f64;
        worst = worst.max(pu - bound);
    }
    Ok(judge(worst <= 1e-9, format!("max excess over min(P1, P2) + N h^-s: {worst:.4e}")))
}

fn check_covering_seeded_polarization() -> Result<Verdict> {
    let model = SetModel::cube(2, 1.0, NormSpec::euclidean(2))?;
    let y = model.sample(0.02)?;
    let mut issues = Vec::new();
    for n in [4, 9, 16] {
        let c = best_covering(&model, n, false, &Default::default())?;
        let r = covering_radius_on_sample(&c.configuration, &y, &model.norm)?;
        for s in [3.0, 6.0] {
            let p = polarization_value(&c.configuration, &y, s, &model.norm)?.to_f64();
            if p < r.powf(-s) * (1.0 - 1e-12) {
                issues.push(format!("N={n} s={s}: {p} < R^-s = {}", r.powf(-s)));
            }
        }
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "covering-seeded configurations".into())))
}

fn check_frostman_constructions() -> Result<Verdict> {
    let fb = FrostmanBound::for_model(&SetModel::unit_interval(), 3.0)?;
    let sched: Vec<usize> = (1..=300).collect();
    let seq = construction_sequence(&SetModel::unit_interval(), &sched, 3.0)?;
    let worst = seq.iter().map(|r| r.value / fb.bound(r.n)).fold(0.0, f64::max);
    Ok(judge(worst <= 1.0, format!("max P / (96 N^3) = {worst:.4}")))
}

fn check_stability_and_separation(opts: &VerifyOptions) -> Result<Verdict> {
    let model = SetModel::unit_interval();
    let norm = model.norm;
    let y = model.sample(1e-3)?;
    let mut issues = Vec::new();
    for n in [2, 5, 10, 20] {
        let w = equal_spacing_construction(&model, n)?;
        let rep = neighborhood_stability_check(&w, &model, &y, 3.0, 0.05, n)?;
        if !rep.passed {
            issues.push(format!("stability N={n}: ratio {} < {}", rep.ratio, rep.threshold));
        }
    }
    for n in 1..=50 {
        let (_, w) = exact_covering_1d(&[Interval { lo: 0.0, hi: 1.0 }], n, false)?;
        let v = weak_separation_audit(&w, &y, n, 1.0, 1, 0.2, &norm)?;
        if v > 0 {
            issues.push(format!("covering optimum N={n}: {v} crowded balls"));
        }
    }
    let grid41 = model.sample(1.0 / 40.0)?;
    if multiset_count(grid41.len(), 4) <= opts.brute_force_limit {
        for s in [2.0, 3.0] {
            for (rec, w) in oracle_table(&grid41.points, &grid41, 4, s, &norm)? {
                let v = weak_separation_audit(&w, &y, rec.n, 1.0, 1, 0.2, &norm)?;
                if v > 0 {
                    issues.push(format!("polarization optimum s={s} N={}: {v} crowded balls", rec.n));
                }
            }
        }
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "ε = 0.05 stability, η = 0.2 separation".into())))
}

fn check_renewal() -> Result<Verdict> {
    let mut issues = Vec::new();
    let third = Contraction::rational(1, 3)?;
    let ninth = Contraction::rational(1, 9)?;
    let before = classify_lattice(&[third, third]).verdict;
    let after = classify_lattice(&[third, third, ninth]).verdict;
    match (before, after) {
        (LatticeVerdict::Lattice { base: b0, .. }, LatticeVerdict::Lattice { base: b1, .. }) if b0 == b1 => {}
        other => issues.push(format!("appending r^2 changed the verdict: {other:?}")),
    }
    for ifs in [IfsModel::cantor(), IfsModel::two_map_interval(Contraction::rational(1, 2)?, Contraction::rational(1, 4)?)?] {
        let table = fractal_covering_dp(&ifs, 4096, false)?;
        let seq = renewal_covering_sequence(&ifs, 10, &table)?;
        // `N(r^0) = N(r^1) = 1` whenever one ball of radius `r` covers the set.
        if seq[1..].windows(2).any(|w| w[1] <= w[0]) {
            issues.push(format!("{}: R_n not strictly increasing for n >= 1: {seq:?}", ifs.name));
        }
        let r = ifs.max_ratio();
        let n = seq.len() - 1;
        let est = (seq[n] as f64).ln() / (n as f64 * (1.0 / r).ln());
        log::info!("{}: log R_n / (n log 1/r) = {est} at n = {n}, d = {}", ifs.name, ifs.dim_d);
        if ifs.name == IfsModel::cantor().name && (est / ifs.dim_d - 1.0).abs() > 0.02 {
            issues.push(format!("{}: growth exponent {est} vs d = {}", ifs.name, ifs.dim_d));
        }
    }
    Ok(judge(issues.is_empty(), issues.first().cloned().unwrap_or_else(|| "scale-consistent lattice, growth of R_n".into())))
}

fn check_theta_agreement() -> Result<Verdict> {
    let sched: Vec<usize> = (1..=64).collect();
    let models = [
        SetModel::unit_interval(),
        SetModel::interval_union(vec![Interval { lo: 3.0, hi: 4.0 }])?,
        SetModel::interval_union(vec![Interval { lo: -1.0, hi: 1.5 }])?,
        SetModel::cube(1, 0.75, NormSpec::linf(1))?,
    ];
    let mut est = Vec::new();
    for m in &models {
        let ivs = m.as_intervals().ok_or_else(|| Error::Unsupported("1D model".into()))?;
        let seq: Vec<SequenceRecord> = sched
            .iter()
            .map(|&n| exact_covering_1d(&ivs, n, false).map(|(r, _)| SequenceRecord::covering(n, r, 1.0, true, 0.0)))
            .collect::<Result<_>>()?;
        let rep = theta_check(m, &seq, None, COVERING_TOL)?;
        est.push(rep.estimate.unwrap_or(f64::NAN));
    }
    let spread = est.iter().map(|e| (e - est[0]).abs()).fold(0.0, f64::max);
    Ok(judge(spread <= 1e-9, format!("θ̂_1 estimates {est:?}")))
}

fn check_sigma_scaling() -> Result<Verdict> {
    let sched: Vec<usize> = (100..=300).step_by(20).collect();
    let s = 3.0;
    let mut mids = Vec::new();
    for len in [1.0, 2.0, 0.4] {
        let m = SetModel::interval_union(vec![Interval { lo: 0.0, hi: len }])?;
        let seq = construction_sequence(&m, &sched, s)?;
        mids.push(limit_window(&seq, 0.5, 0.1)?.mid() * f64::powf(len, s));
    }
    let spread = mids.iter().map(|m| (m / mids[0] - 1.0).abs()).fold(0.0, f64::max);
    Ok(judge(spread <= 1e-9, format!("H^(s/d)-normalized plateaus {mids:?}")))
}

fn check_bridge_exact() -> Result<Verdict> {
    let unit = SetModel::unit_interval();
    let sched: Vec<usize> = (1..=40).collect();
    let cov: Vec<SequenceRecord> =
        sched.iter().map(|&n| SequenceRecord::covering(n, 0.5 / n as f64, 1.0, true, 0.0)).collect();
    let mut ok = true;
    for s in [2.0, 3.0, 6.0] {
        let pol = construction_sequence(&unit, &sched, s)?;
        ok &= bridge_check(&cov, &pol, s, 1.0, 1.0)?.trivial_direction;
    }
    Ok(judge(ok, "midpoint coverings against midpoint polarization, s in {2, 3, 6}".into()))
}

fn check_uniformity_exact() -> Result<Verdict> {
    let unit = SetModel::unit_interval();
    let mut worst = 0.0f64;
    for n in [10, 37, 100, 1000] {
        let (_, w) = exact_covering_1d(&[Interval { lo: 0.0, hi: 1.0 }], n, false)?;
        for k in [4, 10] {
            let dev = uniformity_discrepancy(&w, &unit, k)?;
            worst = worst.max(dev * n as f64 / k as f64);
        }
    }
    Ok(judge(worst <= 1.0, format!("max deviation · N / K = {worst:.4}")))
}

type CheckFn<'a> = Box<dyn Fn() -> Result<Verdict> + 'a>;

/// Runs every check. Budget errors become skipped entries; any other
/// error is a failure of that check.
pub fn verify_suite(opts: &VerifyOptions) -> VerifySummary {
    let perturb_at = opts.perturb_exact_1d.map(|seed| ChaCha8Rng::seed_from_u64(seed).gen_range(2..=N_MAX_1D));
    let solver = Exact1d { perturb_at };
    let checks: Vec<(&str, CheckFn)> = vec![
        ("geometry_properties", Box::new(|| check_geometry(opts))),
        ("sample_refinement", Box::new(check_sample_refinement)),
        ("ifs_structure", Box::new(check_ifs_structure)),
        ("covering_monotonicity", Box::new(|| check_nested_monotonicity(opts, &solver))),
        ("covering_short_range", Box::new(|| check_short_range_covering(&solver))),
        ("greedy_two_approximation", Box::new(|| check_greedy_two_approx(opts))),
        ("cantor_band", Box::new(check_cantor_band)),
        ("minkowski_sandwich", Box::new(check_generalest)),
        ("polarization_oracles", Box::new(|| check_polarization_oracles(opts))),
        ("polarization_short_range", Box::new(|| check_polarization_short_range(opts))),
        ("covering_seeded_polarization", Box::new(check_covering_seeded_polarization)),
        ("frostman_bound", Box::new(check_frostman_constructions)),
        ("stability_and_separation", Box::new(|| check_stability_and_separation(opts))),
        ("renewal_structure", Box::new(check_renewal)),
        ("theta_agreement", Box::new(check_theta_agreement)),
        ("sigma_scaling", Box::new(check_sigma_scaling)),
        ("bridge_trivial_direction", Box::new(check_bridge_exact)),
        ("uniformity_exact_1d", Box::new(check_uniformity_exact)),
    ];
    let mut out = Vec::with_capacity(checks.len());
    for (name, f) in checks {
        let t0 = Instant::now();
        let (status, detail) = match f() {
            Ok(Verdict::Pass(d)) => (CheckStatus::Pass, d),
            Ok(Verdict::Fail(d)) => (CheckStatus::Fail, d),
            Ok(Verdict::Skip(d)) => (CheckStatus::Skipped, d),
            Err(e @ Error::Budget { .. }) => (CheckStatus::Skipped, e.to_string()),
            Err(e) => (CheckStatus::Fail, format!("error: {e}")),
        };
        let seconds = t0.elapsed().as_secs_f64();
        log::info!("verify {name}: {status:?} ({seconds:.2}s) {detail}");
        out.push(CheckOutcome { name: name.to_string(), status, detail, seconds });
    }
    VerifySummary { checks: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_pairs_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (a, b) = nested_pair(&mut rng);
            assert!(!a.is_empty());
            for iv in &a {
                assert!(b.iter().any(|j| j.lo <= iv.lo && iv.hi <= j.hi));
            }
        }
    }

    #[test]
    fn perturbation_breaks_monotonicity() {
        let opts = VerifyOptions::default();
        let solver = Exact1d { perturb_at: Some(40) };
        assert!(matches!(check_nested_monotonicity(&opts, &solver).unwrap(), Verdict::Fail(_)));
        let clean = Exact1d { perturb_at: None };
        assert!(matches!(check_nested_monotonicity(&opts, &clean).unwrap(), Verdict::Pass(_)));
    }

    #[test]
    fn tight_budget_skips_brute_force() {
        let opts = VerifyOptions { brute_force_limit: 10.0, ..Default::default() };
        assert!(matches!(check_polarization_oracles(&opts).unwrap(), Verdict::Skip(_)));
        assert!(matches!(check_polarization_short_range(&opts).unwrap(), Verdict::Skip(_)));
    }
}

//! Limit windows, asymptotic constants and consistency checks on sequences.

use serde::{Deserialize, Serialize};

use crate::covering::{best_covering, CoveringOptions};
use crate::error::{domain, Error, Result};
use crate::geometry::{Configuration, PointCloud};
use crate::polarization::{maximize_on_sample, thin_sample, PolarizationOptions};
use crate::sets::{box_distance, MinkowskiEstimate, SetKind, SetModel};

/// One entry of a covering or polarization sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    /// `N^{1/d} ρ` for coverings, `P / N^{s/d}` for polarization.
    pub normalized: f64,
    pub exact: bool,
    /// Zero for exact values.
    pub mesh_certificate: f64,
}

impl SequenceRecord {
    pub fn covering(n: usize, value: f64, d: f64, exact: bool, mesh: f64) -> Self {
        let normalized = (n as f64).powf(1.0 / d) * value;
        SequenceRecord { n, value, normalized, exact, mesh_certificate: if exact { 0.0 } else { mesh } }
    }

    pub fn polarization(n: usize, value: f64, s: f64, d: f64, exact: bool, mesh: f64) -> Self {
        let normalized = value / (n as f64).powf(s / d);
        SequenceRecord { n, value, normalized, exact, mesh_certificate: if exact { 0.0 } else { mesh } }
    }
}

/// Plateau tolerance for covering sequences.
pub const COVERING_TOL: f64 = 0.05;
/// Plateau tolerance for polarization sequences, which converge slower.
pub const POLARIZATION_TOL: f64 = 0.1;
/// Bridge runs thin the covering evaluation sample to about this many
/// points per configuration point.
const BRIDGE_SAMPLES_PER_POINT: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitWindow {
    pub liminf_est: f64,
    pub limsup_est: f64,
    pub window_fraction: f64,
    pub tol: f64,
    /// `limsup / liminf <= 1 + tol`.
    pub plateau: bool,
}

impl LimitWindow {
    pub fn mid(&self) -> f64 {
        0.5 * (self.liminf_est + self.limsup_est)
    }

    pub fn ratio(&self) -> f64 {
        self.limsup_est / self.liminf_est
    }
}

/// Extremes of the normalized values over the trailing `window_fraction` of
/// the records.
pub fn limit_window(seq: &[SequenceRecord], window_fraction: f64, tol: f64) -> Result<LimitWindow> {
    if seq.len() < 8 {
        return domain(format!("a limit window needs at least 8 records, got {}", seq.len()));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return domain(format!("window fraction must lie in (0, 1], got {window_fraction}"));
    }
    let k = ((seq.len() as f64 * window_fraction).ceil() as usize).clamp(1, seq.len());
    let tail = &seq[seq.len() - k..];
    let lo = tail.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    let hi = tail.iter().map(|r| r.normalized).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitWindow { liminf_est: lo, limsup_est: hi, window_fraction, tol, plateau: hi <= lo * (1.0 + tol) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Estimate of a normalized limit constant from one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub window: LimitWindow,
    pub measure: f64,
    /// `θ̂_d` or `σ̂_{s,d}`; absent without a plateau.
    pub estimate: Option<f64>,
    /// Relative difference to the reference estimate, when one is given.
    pub deviation: Option<f64>,
    pub verdict: Verdict,
}

fn constant_report(window: LimitWindow, measure: f64, estimate: f64, reference: Option<(f64, f64)>) -> ConstantReport {
    if !window.plateau {
        return ConstantReport { window, measure, estimate: None, deviation: None, verdict: Verdict::Inconclusive };
    }
    let (deviation, verdict) = match reference {
        Some((r, tol)) => {
            let dev = (estimate / r - 1.0).abs();
            (Some(dev), if dev <= tol { Verdict::Pass } else { Verdict::Fail })
        }
        None => (None, Verdict::Pass),
    };
    ConstantReport { window, measure, estimate: Some(estimate), deviation, verdict }
}

fn measure_of(model: &SetModel) -> Result<f64> {
    model
        .known_measure()
        .ok_or_else(|| Error::Unsupported(format!("{} has no known d-measure", model.id())))
}

/// `θ̂_d = plateau_mid / H_d(A)^{1/d}`, compared with a reference estimate
/// `(θ̂_ref, relative tolerance)` when given.
pub fn theta_check(
    model: &SetModel,
    seq: &[SequenceRecord],
    reference: Option<(f64, f64)>,
    tol: f64,
) -> Result<ConstantReport> {
    let h = measure_of(model)?;
    let w = limit_window(seq, 0.5, tol)?;
    let est = w.mid() / h.powf(1.0 / model.dim_d());
    Ok(constant_report(w, h, est, reference))
}

/// `σ̂_{s,d} = plateau_mid · H_d(A)^{s/d}`.
pub fn sigma_check(
    model: &SetModel,
    seq: &[SequenceRecord],
    s: f64,
    reference: Option<(f64, f64)>,
    tol: f64,
) -> Result<ConstantReport> {
    let h = measure_of(model)?;
    let w = limit_window(seq, 0.5, tol)?;
    let est = w.mid() * h.powf(s / model.dim_d());
    Ok(constant_report(w, h, est, reference))
}

/// Cells with their share of the normalized `H_d` measure, as boxes.
fn cells_of(model: &SetModel, k: usize) -> Result<Vec<((Vec<f64>, Vec<f64>), f64)>> {
    if k == 0 {
        return domain("need at least one cell");
    }
    if let Some(line) = model.line_embedding() {
        let total: f64 = line.intervals.iter().map(|i| i.len()).sum();
        let mut cuts = Vec::with_capacity(k + 1);
        for c in 0..=k {
            cuts.push(total * c as f64 / k as f64);
        }
        // Cells as parameter ranges along the concatenated intervals.
        let mut out = Vec::new();
        for c in 0..k {
            let (a, b) = (cuts[c], cuts[c + 1]);
            let (ta, tb) = (param_at(&line.intervals, a), param_at(&line.intervals, b));
            let pa = line.embed(&[ta]);
            let pb = line.embed(&[tb]);
            let lo: Vec<f64> = pa.get(0).iter().zip(pb.get(0)).map(|(x, y)| x.min(*y)).collect();
            let hi: Vec<f64> = pa.get(0).iter().zip(pb.get(0)).map(|(x, y)| x.max(*y)).collect();
            out.push(((lo, hi), 1.0 / k as f64));
        }
        return Ok(out);
    }
    match &model.kind {
        SetKind::Box { dim, side, origin } => {
            let m = (k as f64).powf(1.0 / *dim as f64).round() as usize;
            if m.pow(*dim as u32) != k {
                return domain(format!("{k} cells do not form a grid in dimension {dim}"));
            }
            let mut out = Vec::with_capacity(k);
            for idx in 0..k {
                let mut rem = idx;
                let mut lo = origin.clone();
                let mut hi = origin.clone();
                for c in 0..*dim {
                    let i = rem % m;
                    rem /= m;
                    lo[c] = origin[c] + side * i as f64 / m as f64;
                    hi[c] = origin[c] + side * (i + 1) as f64 / m as f64;
                }
                out.push(((lo, hi), 1.0 / k as f64));
            }
            Ok(out)
        }
        SetKind::Ifs(ifs) => {
            let m = ifs.maps.len();
            let mut depth = 0;
            let mut count = 1;
            while count < k {
                count *= m;
                depth += 1;
            }
            if count != k {
                return domain(format!("{k} cells are not a power of {m} cylinders"));
            }
            let mut level = vec![(ifs.base_hull.clone(), 1.0)];
            for _ in 0..depth {
                let mut next = Vec::with_capacity(level.len() * m);
                for map in &ifs.maps {
                    let w = map.ratio.value().powf(ifs.dim_d);
                    for ((lo, hi), wb) in &level {
                        next.push((map.image_box(lo, hi), wb * w));
                    }
                }
                level = next;
            }
            Ok(level)
        }
        _ => Err(Error::Unsupported(format!("no equal-measure cells for {}", model.id()))),
    }
}

fn param_at(ivs: &[crate::sets::Interval], arc: f64) -> f64 {
    let mut before = 0.0;
    for iv in ivs {
        if arc <= before + iv.len() {
            return iv.lo + (arc - before);
        }
        before += iv.len();
    }
    ivs.last().map_or(0.0, |i| i.hi)
}

/// `max_k |count_k / N - μ(cell_k)|` over `K` cells of (normalized) equal
/// measure; points go to the nearest cell, ties to the first.
pub fn uniformity_discrepancy(omega: &Configuration, model: &SetModel, k: usize) -> Result<f64> {
    if omega.is_empty() {
        return domain("empty configuration");
    }
    let cells = cells_of(model, k)?;
    let mut counts = vec![0usize; cells.len()];
    for x in omega.points().iter() {
        let mut best = (f64::INFINITY, 0);
        for (c, ((lo, hi), _)) in cells.iter().enumerate() {
            let d = box_distance((x, x), (lo, hi), &model.norm);
            if d < best.0 {
                best = (d, c);
            }
        }
        counts[best.1] += 1;
    }
    let n = omega.len() as f64;
    Ok(cells
        .iter()
        .zip(&counts)
        .map(|((_, w), &c)| (c as f64 / n - w).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub rho: f64,
    pub polarization: f64,
    /// `P̂ >= ρ̂^{-s} (1 - 1e-6)`.
    pub trivial_direction: bool,
    /// `Ĉ(N) = ρ̂ N^{-p/(d(s-p))} P̂^{1/(s-p)}`.
    pub c_hat: f64,
    /// `(P̂ / N^{s/d})^{1/s} - 1 / (ρ̂ N^{1/d})`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub s: f64,
    pub rows: Vec<BridgeRow>,
    pub trivial_direction: bool,
    /// `max/min - 1` of `Ĉ` over the last octave of `N`.
    pub c_hat_variation: f64,
}

/// Relative slack allowed in `P̂ >= ρ̂^{-s}`.
pub const BRIDGE_SLACK: f64 = 1e-6;

/// Compares matched covering and polarization sequences.
pub fn bridge_check(cov: &[SequenceRecord], pol: &[SequenceRecord], s: f64, d: f64, p: f64) -> Result<BridgeReport> {
    if !(s > p) {
        return domain(format!("the bridge needs s > p, got s = {s}, p = {p}"));
    }
    let mut rows = Vec::new();
    for c in cov {
        let Some(q) = pol.iter().find(|q| q.n == c.n) else { continue };
        let n = c.n as f64;
        let (rho, pv) = (c.value, q.value);
        let c_hat = rho * n.powf(-p / (d * (s - p))) * pv.powf(1.0 / (s - p));
        let gap = (pv / n.powf(s / d)).powf(1.0 / s) - 1.0 / (rho * n.powf(1.0 / d));
        rows.push(BridgeRow {
            n: c.n,
            rho,
            polarization: pv,
            trivial_direction: pv >= rho.powf(-s) * (1.0 - BRIDGE_SLACK),
            c_hat,
            gap,
        });
    }
    if rows.is_empty() {
        return Err(Error::Table("no matched N between the sequences".into()));
    }
    let n_last = rows.iter().map(|r| r.n).max().expect("nonempty");
    let octave: Vec<f64> = rows.iter().filter(|r| 2 * r.n >= n_last).map(|r| r.c_hat).collect();
    let mx = octave.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mn = octave.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BridgeReport { s, trivial_direction: rows.iter().all(|r| r.trivial_direction), rows, c_hat_variation: mx / mn - 1.0 })
}

/// Whether the gap shrinks strictly as `s` grows, at every matched `N`.
pub fn gap_decreases_in_s(reports: &[BridgeReport]) -> bool {
    let mut sorted: Vec<&BridgeReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.s.total_cmp(&b.s));
    sorted.windows(2).all(|w| {
        w[0].rows.iter().all(|r0| match w[1].rows.iter().find(|r1| r1.n == r0.n) {
            Some(r1) => r1.gap < r0.gap,
            None => true,
        })
    })
}

/// Matched runs for the bridge: per `N`, a best covering and then maximal
/// polarization on a thinned copy of the covering's evaluation sample,
/// seeded with the covering configuration and the optima for larger `s`. Thinning keeps the covering
/// radius on the polarization sample at most `ρ̂`, so `P̂ >= ρ̂^{-s}` holds
/// by construction.
pub fn bridge_runs(
    model: &SetModel,
    schedule: &[usize],
    s_values: &[f64],
    cov_opts: &CoveringOptions,
    pol_opts: &PolarizationOptions,
) -> Result<(Vec<SequenceRecord>, Vec<(f64, Vec<SequenceRecord>)>)> {
    let d = model.dim_d();
    let mut cov = Vec::new();
    let mut pol: Vec<(f64, Vec<SequenceRecord>)> = s_values.iter().map(|&s| (s, Vec::new())).collect();
    for &n in schedule {
        let c = best_covering(model, n, false, cov_opts)?;
        cov.push(SequenceRecord::covering(n, c.radius, d, c.exact, c.mesh_certificate));
        let eval = if c.exact {
            model.sample(model.diameter_bound()? * (n as f64).powf(-1.0 / d) / 50.0)?
        } else {
            model.sample(c.mesh_certificate)?
        };
        let scale = model.known_measure().unwrap_or(model.diameter_bound()?.powf(d));
        let t = (scale / (BRIDGE_SAMPLES_PER_POINT * n as f64)).powf(1.0 / d);
        let y = thin_sample(&eval, t, &model.norm)?;
        let candidates: PointCloud = y.points.clone();
        // `P_s(ω)^{1/s}` is nonincreasing in `s` for every `ω`, so optima for
        // larger exponents are good starts for smaller ones.
        let mut order: Vec<usize> = (0..pol.len()).collect();
        order.sort_by(|&a, &b| pol[b].0.total_cmp(&pol[a].0));
        let mut seeds = vec![c.configuration.clone()];
        for k in order {
            let s = pol[k].0;
            let r = maximize_on_sample(&y, &candidates, n, s, &model.norm, pol_opts, &seeds)?;
            log::info!("bridge N={n} s={s}: ρ̂ = {}, P̂ = {} on {} points", c.radius, r.value, y.len());
            pol[k].1.push(SequenceRecord::polarization(n, r.value, s, d, false, y.mesh));
            seeds.push(r.configuration);
        }
    }
    Ok((cov, pol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralestReport {
    pub window: LimitWindow,
    /// `liminf / M_lower^{1/d}`, `liminf / M_upper^{1/d}`, `limsup / M_lower^{1/d}`,
    /// `limsup / M_upper^{1/d}`.
    pub ratios: [f64; 4],
    pub verdict: Verdict,
}

/// Compares the covering limit window with Minkowski content estimates.
pub fn generalest_check(seq: &[SequenceRecord], d: f64, mink: &MinkowskiEstimate) -> Result<GeneralestReport> {
    let window = limit_window(seq, 0.5, COVERING_TOL)?;
    let (lo, hi) = (mink.lower(), mink.upper());
    if !(lo > 0.0) || !hi.is_finite() {
        let nan = f64::NAN;
        return Ok(GeneralestReport { window, ratios: [nan; 4], verdict: Verdict::Inconclusive });
    }
    let (l, u) = (lo.powf(1.0 / d), hi.powf(1.0 / d));
    let ratios = [window.liminf_est / l, window.liminf_est / u, window.limsup_est / l, window.limsup_est / u];
    log::info!("generalest ratios {ratios:?}");
    let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    Ok(GeneralestReport { window, ratios, verdict: if ok { Verdict::Pass } else { Verdict::Fail } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::covering_sequence;
    use crate::geometry::NormSpec;
    use crate::polarization::construction_sequence;
    use crate::sets::{minkowski_estimate, IfsModel, Interval};
    use approx::assert_relative_eq;

    fn constant(v: f64, n: usize) -> Vec<SequenceRecord> {
        (1..=n).map(|k| SequenceRecord { n: k, value: v, normalized: v, exact: true, mesh_certificate: 0.0 }).collect()
    }

    #[test]
    fn window_examples() {
        let w = limit_window(&constant(0.5, 10), 0.5, 0.05).unwrap();
        assert_eq!((w.liminf_est, w.limsup_est, w.plateau), (0.5, 0.5, true));
        assert!(limit_window(&constant(0.5, 7), 0.5, 0.05).is_err());
        let ifs = IfsModel::cantor();
        let table = crate::covering::fractal_covering_dp(&ifs, 4096, false).unwrap();
        let recs: Vec<SequenceRecord> =
            table.entries().iter().map(|e| SequenceRecord::covering(e.n, e.radius, ifs.dim_d, e.exact, 0.0)).collect();
        let w = limit_window(&recs, 0.5, 0.05).unwrap();
        assert!((w.liminf_est - 0.5).abs() < 1e-3 && (w.limsup_est - 1.5).abs() < 2e-3, "{w:?}");
        assert!(!w.plateau);
    }

    #[test]
    fn theta_on_exact_models() {
        let sched: Vec<usize> = (1..=200).collect();
        let unit = SetModel::unit_interval();
        let seq = covering_sequence(&unit, &sched, false, &Default::default()).unwrap();
        let th = theta_check(&unit, &seq, None, COVERING_TOL).unwrap();
        assert_relative_eq!(th.estimate.unwrap(), 0.5, max_relative = 1e-12);
        let two = SetModel::interval_union(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(5.0, 6.0).unwrap()]).unwrap();
        let seq2 = covering_sequence(&two, &sched, false, &Default::default()).unwrap();
        let th2 = theta_check(&two, &seq2, Some((0.5, 0.02)), COVERING_TOL).unwrap();
        assert_eq!(th2.verdict, Verdict::Pass, "{th2:?}");
        let c = SetModel::ifs(IfsModel::cantor());
        assert!(theta_check(&c, &seq, None, COVERING_TOL).is_err());
    }

    #[test]
    fn sigma_scaling_law() {
        let sched: Vec<usize> = (200..=300).step_by(10).collect();
        let unit = SetModel::unit_interval();
        let long = SetModel::interval_union(vec![Interval::new(0.0, 2.0).unwrap()]).unwrap();
        let a = construction_sequence(&unit, &sched, 3.0).unwrap();
        let b = construction_sequence(&long, &sched, 3.0).unwrap();
        let wa = limit_window(&a, 0.5, POLARIZATION_TOL).unwrap();
        let wb = limit_window(&b, 0.5, POLARIZATION_TOL).unwrap();
        assert!(wa.plateau);
        assert_relative_eq!(wb.mid() / wa.mid(), 0.125, max_relative = 0.05);
        let sa = sigma_check(&unit, &a, 3.0, None, POLARIZATION_TOL).unwrap();
        let sb = sigma_check(&long, &b, 3.0, sa.estimate.map(|e| (e, 0.01)), POLARIZATION_TOL).unwrap();
        assert_eq!(sb.verdict, Verdict::Pass);
    }

    #[test]
    fn uniformity_examples() {
        let unit = SetModel::unit_interval();
        let n = 37;
        let mids: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64 / (2 * n) as f64).collect();
        let dev = uniformity_discrepancy(&Configuration::from_scalars(&mids), &unit, 4).unwrap();
        assert!(dev <= 1.0 / n as f64, "{dev}");
        let lumped = Configuration::from_scalars(&[0.1; 10]);
        assert_relative_eq!(uniformity_discrepancy(&lumped, &unit, 4).unwrap(), 0.75, epsilon = 1e-12);
        let sq = SetModel::cube(2, 1.0, NormSpec::euclidean(2)).unwrap();
        let pts = Configuration::from_rows(&[[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]).unwrap();
        assert_eq!(uniformity_discrepancy(&pts, &sq, 4).unwrap(), 0.0);
        assert!(uniformity_discrepancy(&pts, &sq, 5).is_err());
        let cantor = SetModel::ifs(IfsModel::cantor());
        let w = Configuration::from_scalars(&[1.0 / 18.0, 5.0 / 18.0, 13.0 / 18.0, 17.0 / 18.0]);
        assert_eq!(uniformity_discrepancy(&w, &cantor, 4).unwrap(), 0.0);
    }

    #[test]
    fn bridge_on_midpoints() {
        let unit = SetModel::unit_interval();
        let sched: Vec<usize> = vec![8, 16, 32];
        let cov = covering_sequence(&unit, &sched, false, &Default::default()).unwrap();
        let pol = construction_sequence(&unit, &sched, 3.0).unwrap();
        let rep = bridge_check(&cov, &pol, 3.0, 1.0, 1.0).unwrap();
        assert!(rep.trivial_direction, "{rep:?}");
        assert!(bridge_check(&cov, &pol, 1.0, 1.0, 1.0).is_err());
        let pol9 = construction_sequence(&unit, &sched, 9.0).unwrap();
        let rep9 = bridge_check(&cov, &pol9, 9.0, 1.0, 1.0).unwrap();
        assert!(gap_decreases_in_s(&[rep9, rep]));
    }

    #[test]
    fn generalest_on_the_interval() {
        let unit = SetModel::unit_interval();
        let sched: Vec<usize> = (1..=64).collect();
        let seq = covering_sequence(&unit, &sched, false, &Default::default()).unwrap();
        let radii: Vec<f64> = (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let mink = minkowski_estimate(&unit, 1.0, &radii).unwrap();
        let rep = generalest_check(&seq, 1.0, &mink).unwrap();
        for r in rep.ratios {
            assert_relative_eq!(r, 0.5, max_relative = 0.03);
        }
    }
}

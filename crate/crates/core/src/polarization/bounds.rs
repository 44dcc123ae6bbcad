//! Upper bounds and structural checks for polarization values.

use serde::{Deserialize, Serialize};

use crate::asymptotics::SequenceRecord;
use crate::error::{domain, Error, Result};
use crate::geometry::{polarization_points, Configuration, NormSpec, PointCloud, SampledSet};
use crate::sets::{regularity_audit, SetKind, SetModel};
use crate::spatial::GridIndex;

/// Depth of the regularity audit behind `c` for self-similar sets.
const AUDIT_DEPTH_POINTS: f64 = 2e4;

/// Data of the Frostman-type bound `P_s(A, N) <= c_fro N^{s/d}`, valid for a
/// measure with `μ(B_r(x) ∩ A) <= c r^d` and total mass `μ(A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanBound {
    pub s: f64,
    pub d: f64,
    pub regularity_c: f64,
    pub mass: f64,
    pub c_fro: f64,
}

impl FrostmanBound {
    pub fn new(s: f64, d: f64, regularity_c: f64, mass: f64) -> Result<Self> {
        if !(d > 0.0) || !(s > d) {
            return domain(format!("the Frostman bound needs s > d > 0, got s = {s}, d = {d}"));
        }
        if !(regularity_c > 0.0) || !(mass > 0.0) {
            return domain("regularity constant and mass must be positive");
        }
        let c_fro = s / (s - d) * (2.0 * regularity_c).powf(s / d) / mass.powf(s / d);
        Ok(FrostmanBound { s, d, regularity_c, mass, c_fro })
    }

    /// Bound for a model: `c = 2^d` and `μ = H_d` on boxes and intervals,
    /// the natural measure with an audited `c` on self-similar sets.
    pub fn for_model(model: &SetModel, s: f64) -> Result<Self> {
        let (c, mass) = regularity_of(model)?;
        FrostmanBound::new(s, model.dim_d(), c, mass)
    }

    pub fn bound(&self, n: usize) -> f64 {
        self.c_fro * (n as f64).powf(self.s / self.d)
    }
}

fn regularity_of(model: &SetModel) -> Result<(f64, f64)> {
    if let Some(line) = model.line_embedding() {
        return Ok((2.0, line.intervals.iter().map(|i| i.len()).sum()));
    }
    match &model.kind {
        SetKind::Box { dim, side, .. } => Ok((2f64.powi(*dim as i32), side.powi(*dim as i32))),
        SetKind::Ifs(ifs) => {
            let m = ifs.maps.len() as f64;
            let depth = (AUDIT_DEPTH_POINTS.ln() / m.ln()).floor().max(2.0) as u32;
            let audit = regularity_audit(ifs, depth, 8)?;
            Ok((audit.max_ratio, 1.0))
        }
        SetKind::SeparatedUnion { parts, .. } => {
            let mut c = 0.0;
            let mut mass = 0.0;
            for p in parts {
                if matches!(p.kind, SetKind::Ifs(_)) || (p.dim_d() - model.dim_d()).abs() > 1e-12 {
                    return Err(Error::Unsupported("Frostman data for unions of self-similar parts".into()));
                }
                let (cp, mp) = regularity_of(p)?;
                c += cp;
                mass += mp;
            }
            Ok((c, mass))
        }
        _ => Err(Error::Unsupported(format!("no regularity constant known for {}", model.id()))),
    }
}

/// `P_s(A, N) <= c_fro N^{s/d}`.
pub fn frostman_upper_bound(fb: &FrostmanBound, n: usize) -> Result<f64> {
    if !(fb.s > fb.d) {
        return domain(format!("the Frostman bound needs s > d, got s = {}, d = {}", fb.s, fb.d));
    }
    Ok(fb.bound(n))
}

/// Number of balls of radius `η N^{-1/d}`, centered at sample points and at
/// the configuration points, that hold more than `p` points of `ω`.
pub fn weak_separation_audit(
    omega: &Configuration,
    sample: &SampledSet,
    n: usize,
    d: f64,
    p: usize,
    eta: f64,
    norm: &NormSpec,
) -> Result<usize> {
    if !(eta > 0.0) {
        return domain(format!("η must be positive, got {eta}"));
    }
    if n == 0 || !(d > 0.0) {
        return domain("N and d must be positive");
    }
    let r = eta * (n as f64).powf(-1.0 / d);
    let index = GridIndex::build(omega.points());
    let count_at = |x: &[f64]| {
        let mut k = 0usize;
        index.for_each_within(x, r, norm, |_, _| k += 1);
        k
    };
    let violations = sample.points.iter().chain(omega.points().iter()).filter(|x| count_at(x) > p).count();
    Ok(violations)
}

/// `min_{N1 + N2 <= N_max} P(N1 + N2) - P(N1) - P(N2)` over the entries
/// present, `+inf` when no triple is available.
pub fn superadditivity_check(values: &[SequenceRecord]) -> Result<f64> {
    if let Some(r) = values.iter().find(|r| !r.exact) {
        return Err(Error::Table(format!("superadditivity needs exact values; N = {} is not exact", r.n)));
    }
    let get = |n: usize| values.iter().find(|r| r.n == n).map(|r| r.value);
    let mut worst = f64::INFINITY;
    for a in values {
        for b in values {
            if b.n < a.n {
                continue;
            }
            if let Some(v) = get(a.n + b.n) {
                worst = worst.min(v - a.value - b.value);
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub passed: bool,
    /// `P(ω, B_{r_N}(A)) / P(ω, A)` on the samples.
    pub ratio: f64,
    pub threshold: f64,
    pub r_n: f64,
}

/// Polarization on the `r_N`-neighborhood versus on the set, with
/// `r_N = ε N^{-1/d}`: passes when the ratio is at least `1 - ε s c_fro^{1/s}`.
pub fn neighborhood_stability_check(
    omega: &Configuration,
    model: &SetModel,
    sample: &SampledSet,
    s: f64,
    eps: f64,
    n: usize,
) -> Result<StabilityReport> {
    let fb = FrostmanBound::for_model(model, s)?;
    let root = fb.c_fro.powf(1.0 / s);
    if !(eps > 0.0) || !(eps < 1.0 / (2.0 * root)) {
        return domain(format!("ε must lie in (0, {}), got {eps}", 1.0 / (2.0 * root)));
    }
    let d = model.dim_d();
    let r_n = eps * (n as f64).max(1.0).powf(-1.0 / d);
    let fat = fatten(&sample.points, r_n, sample.mesh.max(r_n / 8.0), &model.norm);
    let base = polarization_points(omega.points(), &sample.points, s, &model.norm);
    let wide = polarization_points(omega.points(), &fat, s, &model.norm);
    let ratio = if base.is_infinite() { 1.0 } else { wide / base };
    let threshold = 1.0 - eps * s * root;
    Ok(StabilityReport { passed: ratio >= threshold, ratio, threshold, r_n })
}

/// Sample of the closed `r`-neighborhood: every point shifted by the grid
/// offsets of spacing `h` that lie within `r`, plus the axis extremes.
fn fatten(points: &PointCloud, r: f64, h: f64, norm: &NormSpec) -> PointCloud {
    let p = points.dim();
    let k = (r / h).ceil() as i64;
    let step = r / k as f64;
    let mut offsets: Vec<Vec<f64>> = Vec::new();
    let side = (2 * k + 1) as usize;
    let total = side.pow(p as u32);
    let mut buf = vec![0.0; p];
    for idx in 0..total {
        let mut rem = idx;
        for c in buf.iter_mut() {
            *c = ((rem % side) as i64 - k) as f64 * step;
            rem /= side;
        }
        if norm.norm(&buf) <= r * (1.0 + 1e-12) {
            offsets.push(buf.clone());
        }
    }
    let mut out = PointCloud::with_capacity(p, points.len() * offsets.len());
    for x in points.iter() {
        for o in &offsets {
            for (b, (xi, oi)) in buf.iter_mut().zip(x.iter().zip(o)) {
                *b = xi + oi;
            }
            out.push(&buf);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn frostman_examples() {
        let f2 = FrostmanBound::new(2.0, 1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(f2.c_fro, 32.0, epsilon = 1e-12);
        assert_relative_eq!(frostman_upper_bound(&f2, 3).unwrap(), 288.0, epsilon = 1e-9);
        let f3 = FrostmanBound::new(3.0, 1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(f3.c_fro, 96.0, epsilon = 1e-12);
        assert!(4.0 <= f2.bound(1));
        assert!(matches!(FrostmanBound::new(1.0, 1.0, 2.0, 1.0), Err(Error::Domain(_))));
        let from_model = FrostmanBound::for_model(&SetModel::unit_interval(), 3.0).unwrap();
        assert_relative_eq!(from_model.c_fro, 96.0, epsilon = 1e-12);
        let sq = FrostmanBound::for_model(&SetModel::cube(2, 1.0, NormSpec::euclidean(2)).unwrap(), 6.0).unwrap();
        assert_eq!(sq.regularity_c, 4.0);
    }

    #[test]
    fn cantor_constant_comes_from_the_audit() {
        let fb = FrostmanBound::for_model(&SetModel::ifs(crate::sets::IfsModel::cantor()), 2.0).unwrap();
        assert_eq!(fb.mass, 1.0);
        assert!(fb.regularity_c >= 1.0 && fb.regularity_c < 4.0, "{}", fb.regularity_c);
    }

    #[test]
    fn weak_separation_examples() {
        let norm = NormSpec::euclidean(1);
        let mids: Vec<f64> = (0..10).map(|i| (2 * i + 1) as f64 / 20.0).collect();
        let w = Configuration::from_scalars(&mids);
        let y = SetModel::unit_interval().sample(1e-3).unwrap();
        assert_eq!(weak_separation_audit(&w, &y, 10, 1.0, 1, 0.4, &norm).unwrap(), 0);
        let dup = Configuration::from_scalars(&[0.3; 10]);
        assert!(weak_separation_audit(&dup, &y, 10, 1.0, 1, 0.4, &norm).unwrap() > 0);
        assert!(weak_separation_audit(&w, &y, 10, 1.0, 1, 0.0, &norm).is_err());
    }

    #[test]
    fn superadditivity_examples() {
        let rec = |n: usize, v: f64| SequenceRecord::polarization(n, v, 2.0, 1.0, true, 0.0);
        assert_eq!(superadditivity_check(&[rec(1, 4.0)]).unwrap(), f64::INFINITY);
        assert_eq!(superadditivity_check(&[rec(1, 4.0), rec(2, 7.0)]).unwrap(), -1.0);
        let mut loose = rec(2, 9.0);
        loose.exact = false;
        assert!(matches!(superadditivity_check(&[rec(1, 4.0), loose]), Err(Error::Table(_))));
    }

    #[test]
    fn stability_examples() {
        let model = SetModel::unit_interval();
        let y = model.sample(1e-3).unwrap();
        let w = Configuration::from_scalars(&[1.0 / 6.0, 0.5, 5.0 / 6.0]);
        let rep = neighborhood_stability_check(&w, &model, &y, 3.0, 0.05, 3).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.ratio < 1.0);
        let tiny = neighborhood_stability_check(&w, &model, &y, 3.0, 1e-6, 3).unwrap();
        assert!((tiny.ratio - 1.0).abs() < 1e-3, "{tiny:?}");
        let far = Configuration::from_scalars(&[10.0, 10.0, 10.0]);
        let rep = neighborhood_stability_check(&far, &model, &y, 3.0, 0.05, 3).unwrap();
        assert!(rep.passed && (rep.ratio - 1.0).abs() < 0.01, "{rep:?}");
        assert!(neighborhood_stability_check(&w, &model, &y, 3.0, 0.5, 3).is_err());
    }
}

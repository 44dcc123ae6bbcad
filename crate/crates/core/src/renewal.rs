//! Lattice structure of contraction ratios and the renewal recursions for
//! covering counts and polarization inverses on self-similar sets.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{limit_window, SequenceRecord};
use crate::covering::{fractal_covering_dp, CoveringTable};
use crate::error::{domain, Error, Result};
use crate::sets::{Contraction, IfsModel};

/// Largest exponent `i_m` accepted in a lattice representation.
pub const MAX_EXPONENT: u64 = 64;
/// Relative slack in `ρ(A, N) <= r^n`.
const COUNT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeVerdict {
    /// `r_m = base^{i_m}` for every ratio.
    Lattice {
        #[serde(with = "ratio_str")]
        base: Ratio<u64>,
        exponents: Vec<u64>,
    },
    NonLattice,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeClassification {
    pub verdict: LatticeVerdict,
    pub evidence: String,
}

impl LatticeClassification {
    pub fn is_lattice(&self) -> bool {
        matches!(self.verdict, LatticeVerdict::Lattice { .. })
    }
}

mod ratio_str {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let s = String::deserialize(d)?;
        let (n, m) = s.split_once('/').ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
        let n: u64 = n.trim().parse().map_err(serde::de::Error::custom)?;
        let m: u64 = m.trim().parse().map_err(serde::de::Error::custom)?;
        if m == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, m))
    }
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs.
fn factorize(mut n: u64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exponent vector of `num/den` over `primes`: `log r = Σ e_p log p`.
fn exponent_vector(r: &Ratio<u64>, primes: &[u64]) -> Vec<i64> {
    let mut v = vec![0i64; primes.len()];
    for (p, e) in factorize(*r.numer()) {
        v[primes.iter().position(|&q| q == p).expect("prime collected")] += e;
    }
    for (p, e) in factorize(*r.denom()) {
        v[primes.iter().position(|&q| q == p).expect("prime collected")] -= e;
    }
    v
}

fn power_of_primes(primes: &[u64], u: &[i64]) -> Option<Ratio<u64>> {
    let (mut num, mut den) = (1u64, 1u64);
    for (&p, &e) in primes.iter().zip(u) {
        let pe = p.checked_pow(e.unsigned_abs() as u32)?;
        if e > 0 {
            num = num.checked_mul(pe)?;
        } else {
            den = den.checked_mul(pe)?;
        }
    }
    Some(Ratio::new(num, den))
}

/// Decides whether all ratios are integer powers of one rational base.
///
/// By unique factorization, `log r_m` are commensurable exactly when the
/// prime exponent vectors are parallel, so a failure is a proof of the
/// nonlattice case. The base is the generator of the group spanned by the
/// ratios; exponents are listed with ratios in decreasing order.
pub fn classify_lattice(ratios: &[Contraction]) -> LatticeClassification {
    if ratios.is_empty() {
        return LatticeClassification { verdict: LatticeVerdict::Unknown, evidence: "no ratios".into() };
    }
    let mut exact = Vec::with_capacity(ratios.len());
    for c in ratios {
        match c.exact() {
            Some(r) => exact.push(r),
            None => {
                return LatticeClassification {
                    verdict: LatticeVerdict::Unknown,
                    evidence: format!("ratio {c} has no exact rational representation"),
                }
            }
        }
    }
    exact.sort_by(|a, b| b.cmp(a));
    let mut primes: Vec<u64> = exact
        .iter()
        .flat_map(|r| factorize(*r.numer()).into_iter().chain(factorize(*r.denom())).map(|(p, _)| p))
        .collect();
    primes.sort_unstable();
    primes.dedup();
    let vecs: Vec<Vec<i64>> = exact.iter().map(|r| exponent_vector(r, &primes)).collect();
    // Primitive direction of the first vector; every vector must be a
    // positive integer multiple of it.
    let g0 = vecs[0].iter().fold(0i64, |g, &e| g.gcd(&e));
    let u: Vec<i64> = vecs[0].iter().map(|e| e / g0).collect();
    let mut mult = Vec::with_capacity(vecs.len());
    for (r, v) in exact.iter().zip(&vecs) {
        let k = u.iter().zip(v).find(|(a, _)| **a != 0).map(|(a, b)| b / a).unwrap_or(0);
        if k <= 0 || u.iter().zip(v).any(|(a, b)| a * k != *b) {
            return LatticeClassification {
                verdict: LatticeVerdict::NonLattice,
                evidence: format!(
                    "prime exponents of {}/{} and {}/{} are not parallel, so their logarithms are incommensurable",
                    exact[0].numer(),
                    exact[0].denom(),
                    r.numer(),
                    r.denom()
                ),
            };
        }
        mult.push(k as u64);
    }
    let g = mult.iter().fold(0u64, |g, &k| g.gcd(&k));
    let exponents: Vec<u64> = mult.iter().map(|k| k / g).collect();
    if exponents.iter().any(|&i| i > MAX_EXPONENT) {
        return LatticeClassification {
            verdict: LatticeVerdict::Unknown,
            evidence: format!("exponents {exponents:?} exceed the search bound {MAX_EXPONENT}"),
        };
    }
    let scaled: Vec<i64> = u.iter().map(|e| e * g as i64).collect();
    match power_of_primes(&primes, &scaled) {
        Some(base) => LatticeClassification {
            evidence: format!("every ratio is ({}/{})^i with i in {exponents:?}", base.numer(), base.denom()),
            verdict: LatticeVerdict::Lattice { base, exponents },
        },
        None => LatticeClassification { verdict: LatticeVerdict::Unknown, evidence: "base does not fit in 64 bits".into() },
    }
}

/// Lattice data of an IFS in map order: `(r, i_m)` with `r_m = r^{i_m}`.
fn lattice_of(ifs: &IfsModel) -> Result<(f64, Vec<u64>)> {
    let ratios: Vec<Contraction> = ifs.maps.iter().map(|m| m.ratio).collect();
    let class = classify_lattice(&ratios);
    let LatticeVerdict::Lattice { base, .. } = class.verdict else {
        return Err(Error::Strategy(format!("{} is not a lattice system: {}", ifs.name, class.evidence)));
    };
    let r = *base.numer() as f64 / *base.denom() as f64;
    let mut exps = Vec::with_capacity(ratios.len());
    for c in &ratios {
        let target = c.exact().expect("classified as exact");
        let mut k = 1u64;
        let mut pow = base;
        while pow != target {
            pow *= base;
            k += 1;
        }
        exps.push(k);
    }
    Ok((r, exps))
}

/// `N(t) = min{N : ρ(A, N) <= t}` from a covering table, `None` when the
/// table ends before the threshold is met.
pub fn covering_count(table: &CoveringTable, t: f64) -> Option<u64> {
    (1..=table.n_max()).find(|&n| table.radius(n).expect("in range") <= t * (1.0 + COUNT_TOL)).map(|n| n as u64)
}

/// Validity threshold: smallest `J` with `2 r^J` below the separation of
/// the first-level pieces.
pub fn renewal_threshold(ifs: &IfsModel, r: f64) -> u32 {
    let gap = ifs.min_gap();
    let mut j = 0u32;
    while 2.0 * r.powi(j as i32) >= gap {
        j += 1;
    }
    j
}

/// `R_n = N(r^n)` for `n = 0..=n_max`: table lookups up to the threshold
/// `J`, then `R_n = Σ_m R_{n - i_m}`.
pub fn renewal_covering_sequence(ifs: &IfsModel, n_max: u32, table: &CoveringTable) -> Result<Vec<u64>> {
    let (r, exps) = lattice_of(ifs)?;
    let imax = *exps.iter().max().expect("nonempty") as u32;
    let j = renewal_threshold(ifs, r).max(imax);
    let mut out: Vec<u64> = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        if n <= j {
            if !table.exact_through(table.n_max()) {
                log::warn!("base values come from a table with inexact entries");
            }
            let v = covering_count(table, r.powi(n as i32)).ok_or_else(|| {
                Error::Table(format!("covering table up to N = {} does not reach radius r^{n}", table.n_max()))
            })?;
            out.push(v);
        } else {
            let v = exps.iter().map(|&i| out[(n - i as u32) as usize]).sum();
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub liminf_est: f64,
    pub limsup_est: f64,
    pub ratio: f64,
    /// `(2^k, max/min of N^{1/d} ρ over [2^k, 2^{k+1}))` per complete octave.
    pub octave_ratios: Vec<(usize, f64)>,
    /// `min_n ρ(A, R_n - 1) / r^n` for lattice systems.
    pub c_gap: Option<f64>,
}

/// Spread of the normalized values within each complete octave.
pub fn octave_ratios(records: &[SequenceRecord]) -> Vec<(usize, f64)> {
    let n_last = records.iter().map(|r| r.n).max().unwrap_or(0);
    let mut out = Vec::new();
    let mut lo = 1usize;
    while 2 * lo - 1 <= n_last {
        let vals: Vec<f64> = records.iter().filter(|r| r.n >= lo && r.n < 2 * lo).map(|r| r.normalized).collect();
        if vals.len() >= 2 {
            let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mn = vals.iter().copied().fold(f64::INFINITY, f64::min);
            out.push((lo, mx / mn));
        }
        lo *= 2;
    }
    out
}

/// Oscillation of `N^{1/d} ρ(A, N)` for `N <= n_max` from the exact DP, with
/// the trailing half of the records as the limit window.
pub fn oscillation_report(ifs: &IfsModel, n_max: usize, constrained: bool) -> Result<OscillationReport> {
    if n_max < 8 {
        return domain("oscillation needs N_max >= 8");
    }
    let table = fractal_covering_dp(ifs, n_max, constrained)?;
    let d = ifs.dim_d;
    let records: Vec<SequenceRecord> = table
        .entries()
        .iter()
        .map(|e| SequenceRecord::covering(e.n, e.radius, d, e.exact, e.mesh_certificate))
        .collect();
    let window = limit_window(&records, 0.5, 0.05)?;
    let c_gap = match lattice_of(ifs) {
        Ok((r, _)) => {
            let mut gap = f64::INFINITY;
            for n in 1..64 {
                let Some(rn) = covering_count(&table, r.powi(n)) else { break };
                if rn >= 2 {
                    gap = gap.min(table.radius(rn as usize - 1).expect("in range") / r.powi(n));
                }
            }
            gap.is_finite().then_some(gap)
        }
        Err(_) => None,
    };
    Ok(OscillationReport {
        liminf_est: window.liminf_est,
        limsup_est: window.limsup_est,
        ratio: window.limsup_est / window.liminf_est,
        octave_ratios: octave_ratios(&records),
        c_gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalResiduals {
    /// `(t, L(t))` with `L(t) = N(t) - Σ_m N(t r_m^s)`.
    pub points: Vec<(f64, f64)>,
    pub all_nonpositive: bool,
    /// `max |L| t^{-d/s + 0.01}` over the last decade of `t` is at most twice
    /// the first-decade value; `None` when the schedule spans under two decades.
    pub decay_ok: Option<bool>,
}

/// Generalized inverse `N(t) = min{N : P(N) >= t}` of a nondecreasing table.
fn inverse(table: &[(usize, f64)], t: f64) -> Option<u64> {
    table.iter().find(|(_, v)| *v >= t).map(|(n, _)| *n as u64).or(if t <= 0.0 { Some(1) } else { None })
}

/// Residuals of the polarization renewal equation on a table of maximal
/// polarization values. Points `t` above the largest tabulated value are
/// clipped, since `N(t)` is unknown there.
pub fn polarization_renewal_residual(
    ifs: &IfsModel,
    s: f64,
    t_schedule: &[f64],
    table: &[(usize, f64)],
) -> Result<RenewalResiduals> {
    if !(s > ifs.dim_d) {
        return domain(format!("need s > d = {}, got {s}", ifs.dim_d));
    }
    if table.is_empty() || table[0].0 != 1 || table.windows(2).any(|w| w[1].0 != w[0].0 + 1 || w[1].1 < w[0].1) {
        return Err(Error::Table("polarization table must list N = 1, 2, .. with nondecreasing values".into()));
    }
    let top = table.last().expect("nonempty").1;
    let ratios = ifs.ratios();
    let mut points = Vec::new();
    for &t in t_schedule {
        if !(t > 0.0) || t > top {
            continue;
        }
        let n_t = inverse(table, t).expect("t within the table") as f64;
        let mut rhs = 0.0;
        for r in &ratios {
            rhs += inverse(table, t * r.powf(s)).expect("smaller than t") as f64;
        }
        points.push((t, n_t - rhs));
    }
    let all_nonpositive = points.iter().all(|p| p.1 <= 0.0);
    let decay_ok = decay_check(&points, ifs.dim_d, s);
    Ok(RenewalResiduals { points, all_nonpositive, decay_ok })
}

fn decay_check(points: &[(f64, f64)], d: f64, s: f64) -> Option<bool> {
    let (t0, t1) = (points.first()?.0, points.last()?.0);
    if t1 < 100.0 * t0 {
        return None;
    }
    let weight = |&(t, l): &(f64, f64)| l.abs() * t.powf(-d / s + 0.01);
    let first = points.iter().filter(|p| p.0 <= 10.0 * t0).map(weight).fold(0.0, f64::max);
    let last = points.iter().filter(|p| p.0 >= t1 / 10.0).map(weight).fold(0.0, f64::max);
    Some(last <= 2.0 * first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{Contraction as C, SetModel};

    fn rat(n: u64, d: u64) -> C {
        C::rational(n, d).unwrap()
    }

    #[test]
    fn classification_examples() {
        let c = classify_lattice(&[rat(1, 3), rat(1, 3)]);
        assert_eq!(c.verdict, LatticeVerdict::Lattice { base: Ratio::new(1, 3), exponents: vec![1, 1] });
        let c = classify_lattice(&[rat(1, 4), rat(1, 2)]);
        assert_eq!(c.verdict, LatticeVerdict::Lattice { base: Ratio::new(1, 2), exponents: vec![1, 2] });
        assert_eq!(classify_lattice(&[rat(1, 2), rat(1, 3)]).verdict, LatticeVerdict::NonLattice);
        assert_eq!(classify_lattice(&[rat(1, 4), rat(1, 16)]).verdict, LatticeVerdict::Lattice { base: Ratio::new(1, 4), exponents: vec![1, 2] });
        assert_eq!(classify_lattice(&[rat(4, 9), rat(8, 27)]).verdict, LatticeVerdict::Lattice { base: Ratio::new(2, 3), exponents: vec![2, 3] });
        assert_eq!(classify_lattice(&[rat(2, 3), rat(1, 3)]).verdict, LatticeVerdict::NonLattice);
        assert_eq!(classify_lattice(&[C::real(0.5).unwrap(), rat(1, 4)]).verdict, LatticeVerdict::Unknown);
        let far = classify_lattice(&[rat(1, 2), C::rational(1, 1 << 63).unwrap()]);
        assert_eq!(far.verdict, LatticeVerdict::Lattice { base: Ratio::new(1, 2), exponents: vec![1, 63] });
    }

    #[test]
    fn appending_a_power_keeps_the_base() {
        for (base, extra) in [((1, 3), 5u32), ((2, 5), 2), ((1, 2), 7)] {
            let r = rat(base.0, base.1);
            let pow = C::rational(base.0.pow(extra), base.1.pow(extra)).unwrap();
            let before = classify_lattice(&[r, r]);
            let after = classify_lattice(&[r, r, pow]);
            let (LatticeVerdict::Lattice { base: b0, .. }, LatticeVerdict::Lattice { base: b1, exponents }) = (before.verdict, after.verdict) else {
                panic!("lattice expected");
            };
            assert_eq!(b0, b1);
            assert_eq!(exponents[2], extra as u64);
        }
    }

    #[test]
    fn cantor_counts_double() {
        let ifs = IfsModel::cantor();
        let table = fractal_covering_dp(&ifs, 1100, false).unwrap();
        let rn = renewal_covering_sequence(&ifs, 10, &table).unwrap();
        let expect: Vec<u64> = (0..=10).map(|n| 1u64 << n).collect();
        assert_eq!(rn, expect);
        for (n, &v) in rn.iter().enumerate() {
            assert_eq!(covering_count(&table, 3f64.powi(-(n as i32))), Some(v));
        }
        assert_eq!(renewal_threshold(&ifs, 1.0 / 3.0), 2);
    }

    #[test]
    fn fibonacci_counts() {
        let ifs = IfsModel::two_map_interval(rat(1, 2), rat(1, 4)).unwrap();
        let table = fractal_covering_dp(&ifs, 400, false).unwrap();
        let rn = renewal_covering_sequence(&ifs, 10, &table).unwrap();
        for n in 2..=10 {
            assert_eq!(rn[n], rn[n - 1] + rn[n - 2]);
            assert_eq!(covering_count(&table, 0.5f64.powi(n as i32)), Some(rn[n]), "n={n}");
        }
        assert!(renewal_covering_sequence(&IfsModel::two_map_interval(rat(1, 2), rat(1, 3)).unwrap(), 3, &table).is_err());
        let short = fractal_covering_dp(&ifs, 4, false).unwrap();
        assert!(matches!(renewal_covering_sequence(&ifs, 10, &short), Err(Error::Table(_))));
    }

    #[test]
    fn cantor_oscillation() {
        let rep = oscillation_report(&IfsModel::cantor(), 4096, false).unwrap();
        assert!(rep.ratio >= 2.9, "{rep:?}");
        assert!((rep.liminf_est - 0.5).abs() < 1e-3);
        assert!(rep.c_gap.unwrap() > 1.0);
        let unit = SetModel::unit_interval();
        let recs = crate::covering::covering_sequence(&unit, &(1..=64).collect::<Vec<_>>(), false, &Default::default()).unwrap();
        assert!(octave_ratios(&recs).iter().all(|&(_, r)| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn residual_floor_and_errors() {
        let ifs = IfsModel::cantor();
        let table = vec![(1, 4.0), (2, 20.0), (3, 50.0)];
        let res = polarization_renewal_residual(&ifs, 2.0, &[1.0, 2.0, 3.0], &table).unwrap();
        assert!(res.points.iter().all(|p| p.1 == -1.0));
        let clipped = polarization_renewal_residual(&ifs, 2.0, &[1.0, 1e9], &table).unwrap();
        assert_eq!(clipped.points.len(), 1);
        assert!(polarization_renewal_residual(&ifs, 2.0, &[1.0], &[(1, 5.0), (2, 4.0)]).is_err());
        assert!(polarization_renewal_residual(&ifs, 0.5, &[1.0], &table).is_err());
    }
}

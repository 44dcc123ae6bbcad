//! Norms, point clouds, configurations and the two evaluation functionals:
//! the covering radius `R(ω, Y)` and the Riesz polarization `P_s(ω, Y)` on a
//! finite sample `Y`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::spatial::GridIndex;

/// Absolute tolerance for floating comparisons of lengths.
pub const LENGTH_TOL: f64 = 1e-12;

/// Member of the supported family of norms on `R^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
    L1,
    Linf,
    /// `(sum |x_i|^q)^(1/q)` for `1 < q < inf`.
    Pnorm(f64),
}

/// A norm together with the ambient dimension it acts on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub ambient_dim: usize,
}

impl NormSpec {
    /// Validates the exponent and folds `q = 1, 2, inf` onto the dedicated
    /// variants.
    pub fn new(kind: NormKind, ambient_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return domain("ambient dimension must be at least 1");
        }
        let kind = match kind {
            NormKind::Pnorm(q) if q.is_nan() || q < 1.0 => {
                return domain(format!("p-norm exponent must be >= 1, got {q}"))
            }
            NormKind::Pnorm(q) if q == 1.0 => NormKind::L1,
            NormKind::Pnorm(q) if q == 2.0 => NormKind::Euclidean,
            NormKind::Pnorm(q) if q.is_infinite() => NormKind::Linf,
            k => k,
        };
        Ok(NormSpec { kind, ambient_dim })
    }

    pub fn euclidean(ambient_dim: usize) -> Self {
        NormSpec { kind: NormKind::Euclidean, ambient_dim }
    }

    pub fn l1(ambient_dim: usize) -> Self {
        NormSpec { kind: NormKind::L1, ambient_dim }
    }

    pub fn linf(ambient_dim: usize) -> Self {
        NormSpec { kind: NormKind::Linf, ambient_dim }
    }

    #[inline]
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::Pnorm(q) => v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q),
        }
    }

    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.kind {
            NormKind::Euclidean => {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let t = x - y;
                    acc += t * t;
                }
                acc.sqrt()
            }
            NormKind::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            NormKind::Linf => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            NormKind::Pnorm(q) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs().powf(q))
                .sum::<f64>()
                .powf(1.0 / q),
        }
    }

    /// Volume of the unit ball of this norm restricted to a coordinate
    /// `d`-plane, for integer `1 <= d <= p`.
    pub fn unit_ball_volume(&self, d: usize) -> Result<f64> {
        unit_ball_volume(self, d)
    }

    /// Smallest `C` with `||v|| <= C ||v||_2` on `R^p`.
    pub fn euclidean_upper_constant(&self) -> f64 {
        let p = self.ambient_dim as f64;
        match self.kind {
            NormKind::Euclidean | NormKind::Linf => 1.0,
            NormKind::L1 => p.sqrt(),
            NormKind::Pnorm(q) if q < 2.0 => p.powf(1.0 / q - 0.5),
            NormKind::Pnorm(_) => 1.0,
        }
    }

    /// Norm of the all-ones vector in `R^k`.
    pub(crate) fn ones_norm(&self, k: usize) -> f64 {
        self.norm(&vec![1.0; k])
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NormKind::Euclidean => write!(f, "l2(R^{})", self.ambient_dim),
            NormKind::L1 => write!(f, "l1(R^{})", self.ambient_dim),
            NormKind::Linf => write!(f, "linf(R^{})", self.ambient_dim),
            NormKind::Pnorm(q) => write!(f, "l{q}(R^{})", self.ambient_dim),
        }
    }
}

/// Lebesgue volume `v_d` of the `d`-dimensional unit ball of `norm`.
pub fn unit_ball_volume(norm: &NormSpec, d: usize) -> Result<f64> {
    if d == 0 {
        // Counting measure of a point: the empty product convention.
        return Ok(1.0);
    }
    if d > norm.ambient_dim {
        return domain(format!(
            "ball dimension {d} exceeds ambient dimension {}",
            norm.ambient_dim
        ));
    }
    let df = d as f64;
    Ok(match norm.kind {
        NormKind::Euclidean => PI.powf(df / 2.0) / libm::tgamma(df / 2.0 + 1.0),
        NormKind::Linf => 2f64.powi(d as i32),
        NormKind::L1 => 2f64.powi(d as i32) / libm::tgamma(df + 1.0),
        NormKind::Pnorm(q) => {
            (2.0 * libm::tgamma(1.0 + 1.0 / q)).powi(d as i32) / libm::tgamma(1.0 + df / q)
        }
    })
}

/// A single point of `R^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return domain("a point needs at least one coordinate");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return domain("point coordinates must be finite");
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

/// Points of `R^p` stored contiguously.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        PointCloud { dim, coords: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        PointCloud { dim, coords: Vec::with_capacity(dim * n) }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return domain(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return domain("point coordinates must be finite");
        }
        Ok(PointCloud { dim, coords })
    }

    /// Points of the real line.
    pub fn from_scalars(xs: &[f64]) -> Self {
        PointCloud { dim: 1, coords: xs.to_vec() }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut cloud = PointCloud::with_capacity(dim, rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return domain("rows of differing dimension");
            }
            cloud.coords.extend_from_slice(r);
        }
        PointCloud::from_flat(dim, cloud.coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn extend(&mut self, other: &PointCloud) {
        debug_assert_eq!(other.dim, self.dim);
        self.coords.extend_from_slice(&other.coords);
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|c| Point(c.to_vec())).collect()
    }

    /// Coordinate-wise `(min, max)`; `None` when empty.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.get(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }

    /// Applies `f` to every coordinate vector.
    pub fn map_points(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> PointCloud {
        let mut out = PointCloud::with_capacity(self.dim, self.len());
        let mut buf = vec![0.0; self.dim];
        for p in self.iter() {
            f(p, &mut buf);
            out.push(&buf);
        }
        out
    }

    /// Lexicographic sort with exact duplicates removed.
    pub fn sorted_dedup(&self) -> PointCloud {
        let mut rows: Vec<&[f64]> = self.iter().collect();
        rows.sort_by(|a, b| lex_cmp(a, b));
        rows.dedup_by(|a, b| a == b);
        let mut out = PointCloud::with_capacity(self.dim, rows.len());
        for r in rows {
            out.push(r);
        }
        out
    }

    pub fn scaled(&self, t: f64) -> PointCloud {
        PointCloud { dim: self.dim, coords: self.coords.iter().map(|c| c * t).collect() }
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// A multiset of points `ω_N`; repeated points are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    points: PointCloud,
}

impl Configuration {
    pub fn new(points: PointCloud) -> Self {
        Configuration { points }
    }

    pub fn from_scalars(xs: &[f64]) -> Self {
        Configuration { points: PointCloud::from_scalars(xs) }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Ok(Configuration { points: PointCloud::from_rows(rows)? })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut PointCloud {
        &mut self.points
    }

    pub fn into_points(self) -> PointCloud {
        self.points
    }

    pub fn get(&self, i: usize) -> &[f64] {
        self.points.get(i)
    }

    pub fn push(&mut self, p: &[f64]) {
        self.points.push(p)
    }

    /// Points sorted lexicographically; the canonical form of the multiset.
    pub fn canonical(&self) -> Configuration {
        let mut rows: Vec<&[f64]> = self.points.iter().collect();
        rows.sort_by(|a, b| lex_cmp(a, b));
        let mut out = PointCloud::with_capacity(self.dim(), rows.len());
        for r in rows {
            out.push(r);
        }
        Configuration { points: out }
    }

    pub fn scalars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }
}

/// A finite `δ`-dense sample `Y` of a compact set `A`: every point of `A` lies
/// within `mesh` of some sample point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSet {
    pub points: PointCloud,
    pub mesh: f64,
    pub model_id: String,
    pub dim_d: f64,
    pub known_measure: Option<f64>,
}

impl SampledSet {
    pub fn new(points: PointCloud, mesh: f64, model_id: impl Into<String>, dim_d: f64) -> Result<Self> {
        if points.is_empty() {
            return domain("sample must be nonempty");
        }
        if !(mesh >= 0.0) {
            return domain("mesh must be nonnegative");
        }
        if !(dim_d > 0.0) || dim_d > points.dim() as f64 + LENGTH_TOL {
            return domain(format!(
                "set dimension {dim_d} must lie in (0, {}]",
                points.dim()
            ));
        }
        Ok(SampledSet { points, mesh, model_id: model_id.into(), dim_d, known_measure: None })
    }

    /// An ad-hoc sample of explicit points (mesh 0, i.e. the set itself).
    pub fn from_points(points: PointCloud, dim_d: f64) -> Result<Self> {
        SampledSet::new(points, 0.0, "points", dim_d)
    }

    pub fn with_measure(mut self, measure: f64) -> Self {
        self.known_measure = Some(measure);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.dim()
    }
}

/// Riesz potential value that may be `+inf` when a sample point coincides
/// with a configuration point. `Infinite` compares above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Finite(f64),
    Infinite,
}

impl Potential {
    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            Potential::Infinite
        } else {
            Potential::Finite(v)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Potential::Finite(v) => Some(v),
            Potential::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Potential::Infinite)
    }

    /// `f64` view with `+inf` for the sentinel; for comparisons only.
    pub fn to_f64(self) -> f64 {
        match self {
            Potential::Finite(v) => v,
            Potential::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for Potential {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Potential::Infinite, Potential::Infinite) => Some(Ordering::Equal),
            (Potential::Infinite, _) => Some(Ordering::Greater),
            (_, Potential::Infinite) => Some(Ordering::Less),
            (Potential::Finite(a), Potential::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Finite(v) => write!(f, "{v}"),
            Potential::Infinite => write!(f, "inf"),
        }
    }
}

fn check_dims(ambient: usize, other: usize, what: &str) -> Result<()> {
    if ambient != other {
        return Err(Error::Domain(format!(
            "{what} has dimension {other}, norm acts on R^{ambient}"
        )));
    }
    Ok(())
}

/// `dist(y, ω) = min_{x ∈ ω} ||x - y||`.
pub fn dist_to_configuration(y: &[f64], omega: &Configuration, norm: &NormSpec) -> Result<f64> {
    if omega.is_empty() {
        return domain("distance to an empty configuration");
    }
    check_dims(norm.ambient_dim, y.len(), "point")?;
    check_dims(norm.ambient_dim, omega.dim(), "configuration")?;
    Ok(omega.points().iter().map(|x| norm.dist(x, y)).fold(f64::INFINITY, f64::min))
}

/// Covering radius of `ω` on the sample: `max_{y ∈ Y} dist(y, ω)`. The true
/// set satisfies `R(ω, A) <= result + Y.mesh`.
pub fn covering_radius_on_sample(omega: &Configuration, sample: &SampledSet, norm: &NormSpec) -> Result<f64> {
    if omega.is_empty() || sample.is_empty() {
        return domain("covering radius needs a nonempty configuration and sample");
    }
    check_dims(norm.ambient_dim, omega.dim(), "configuration")?;
    check_dims(norm.ambient_dim, sample.ambient_dim(), "sample")?;
    Ok(covering_radius_points(omega.points(), &sample.points, norm))
}

/// Unchecked covering radius of `targets` by `centers`.
pub(crate) fn covering_radius_points(centers: &PointCloud, targets: &PointCloud, norm: &NormSpec) -> f64 {
    if centers.len() * targets.len() <= 4096 || centers.len() <= 8 {
        return targets
            .iter()
            .map(|y| centers.iter().map(|x| norm.dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
    }
    let index = GridIndex::build(centers);
    targets
        .iter()
        .map(|y| index.nearest(y, norm).1)
        .fold(0.0, f64::max)
}

/// Riesz potential `U(y) = Σ_{x ∈ ω} ||y - x||^{-s}`, `+inf` on coincidence.
#[inline]
pub fn riesz_potential(y: &[f64], omega: &PointCloud, s: f64, norm: &NormSpec) -> f64 {
    let mut acc = 0.0;
    for x in omega.iter() {
        let r = norm.dist(x, y);
        if r == 0.0 {
            return f64::INFINITY;
        }
        acc += riesz_kernel(r, s);
    }
    acc
}

#[inline]
pub(crate) fn riesz_kernel(r: f64, s: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else if s == 2.0 {
        1.0 / (r * r)
    } else if s.fract() == 0.0 && s > 0.0 && s <= 64.0 {
        1.0 / r.powi(s as i32)
    } else {
        r.powf(-s)
    }
}

/// Polarization of `ω` on the sample: `min_{y ∈ Y} U(y)`.
pub fn polarization_value(omega: &Configuration, sample: &SampledSet, s: f64, norm: &NormSpec) -> Result<Potential> {
    if omega.is_empty() || sample.is_empty() {
        return domain("polarization needs a nonempty configuration and sample");
    }
    if !(s > 0.0) {
        return domain(format!("Riesz exponent must be positive, got {s}"));
    }
    check_dims(norm.ambient_dim, omega.dim(), "configuration")?;
    check_dims(norm.ambient_dim, sample.ambient_dim(), "sample")?;
    Ok(Potential::from_f64(polarization_points(omega.points(), &sample.points, s, norm)))
}

pub(crate) fn polarization_points(omega: &PointCloud, targets: &PointCloud, s: f64, norm: &NormSpec) -> f64 {
    targets
        .iter()
        .map(|y| riesz_potential(y, omega, s, norm))
        .fold(f64::INFINITY, f64::min)
}

//! Compact-set models, `δ`-dense samplers, self-similar fractals and
//! Minkowski content estimation.

mod content;
mod ifs;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{NormSpec, PointCloud, SampledSet};
use crate::spatial::GridIndex;

pub use content::{minkowski_estimate, neighborhood_volume, MinkowskiEstimate};
pub use ifs::{
    hausdorff_dimension, ifs_points, regularity_audit, Contraction, IfsModel, Orthogonal, RegularityAudit,
    Similitude, MAX_SAMPLE_POINTS,
};
pub(crate) use ifs::box_distance;

/// Closed interval `[lo, hi]` of the real line; `lo == hi` is a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return domain(format!("invalid interval [{lo}, {hi}]"));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Sorts and checks pairwise disjointness.
pub fn normalize_intervals(mut ivs: Vec<Interval>) -> Result<Vec<Interval>> {
    if ivs.is_empty() {
        return domain("empty interval union");
    }
    ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for w in ivs.windows(2) {
        if w[1].lo <= w[0].hi {
            return domain(format!(
                "intervals [{}, {}] and [{}, {}] are not disjoint",
                w[0].lo, w[0].hi, w[1].lo, w[1].hi
            ));
        }
    }
    Ok(ivs)
}

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Lipschitz image of a parameter interval.
#[derive(Clone)]
pub struct LipschitzCurve {
    param: Arc<CurveFn>,
    pub t0: f64,
    pub t1: f64,
    pub lipschitz: f64,
    /// `H_1` of the image when known in closed form.
    pub length: Option<f64>,
    pub label: String,
    /// Constant-speed parametrizations admit equal-length cells.
    pub constant_speed: bool,
    /// Endpoints when the curve is a straight segment.
    pub segment: Option<(Vec<f64>, Vec<f64>)>,
}

impl fmt::Debug for LipschitzCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzCurve")
            .field("label", &self.label)
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("lipschitz", &self.lipschitz)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for LipschitzCurve {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.param, &other.param) && self.t0 == other.t0 && self.t1 == other.t1
    }
}

impl LipschitzCurve {
    pub fn new(
        param: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        t0: f64,
        t1: f64,
        lipschitz: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(t1 > t0) || !(lipschitz > 0.0) {
            return domain("curve needs t1 > t0 and a positive Lipschitz constant");
        }
        Ok(LipschitzCurve {
            param: Arc::new(param),
            t0,
            t1,
            lipschitz,
            length: None,
            label: label.into(),
            constant_speed: false,
            segment: None,
        })
    }

    /// Segment from `a` to `b` parametrized over `[0, 1]`.
    pub fn segment(a: Vec<f64>, b: Vec<f64>, norm: &NormSpec) -> Result<Self> {
        if a.len() != b.len() || a.len() != norm.ambient_dim {
            return domain("segment endpoints must live in the ambient space");
        }
        let len = norm.dist(&a, &b);
        if !(len > 0.0) {
            return domain("degenerate segment");
        }
        let (pa, pb) = (a.clone(), b.clone());
        let mut c = LipschitzCurve::new(
            move |t| pa.iter().zip(&pb).map(|(x, y)| x + t * (y - x)).collect(),
            0.0,
            1.0,
            len,
            "segment",
        )?;
        c.length = Some(len);
        c.constant_speed = true;
        c.segment = Some((a, b));
        Ok(c)
    }

    /// Euclidean circle in the plane, parametrized by angle.
    pub fn circle(center: [f64; 2], radius: f64, norm: &NormSpec) -> Result<Self> {
        if norm.ambient_dim != 2 || !(radius > 0.0) {
            return domain("circle needs R^2 and a positive radius");
        }
        let lip = radius * norm.euclidean_upper_constant();
        let mut c = LipschitzCurve::new(
            move |t| vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()],
            0.0,
            2.0 * std::f64::consts::PI,
            lip,
            "circle",
        )?;
        if norm.kind == crate::geometry::NormKind::Euclidean {
            c.length = Some(2.0 * std::f64::consts::PI * radius);
            c.constant_speed = true;
        }
        Ok(c)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.param)(t)
    }
}

/// The supported families of compact sets.
#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    IntervalUnion(Vec<Interval>),
    /// `[origin, origin + side]^dim` in the first `dim` coordinates; the other
    /// coordinates are fixed at `origin`.
    Box { dim: usize, side: f64, origin: Vec<f64> },
    Curve(LipschitzCurve),
    Ifs(IfsModel),
    SeparatedUnion { parts: Vec<SetModel>, min_gap: f64 },
}

/// A compact set `A ⊂ R^p` together with the ambient norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SetModel {
    pub kind: SetKind,
    pub norm: NormSpec,
}

impl SetModel {
    pub fn interval_union(intervals: Vec<Interval>) -> Result<Self> {
        Ok(SetModel {
            kind: SetKind::IntervalUnion(normalize_intervals(intervals)?),
            norm: NormSpec::euclidean(1),
        })
    }

    pub fn unit_interval() -> Self {
        SetModel::interval_union(vec![Interval { lo: 0.0, hi: 1.0 }]).expect("unit interval")
    }

    pub fn cube(dim: usize, side: f64, norm: NormSpec) -> Result<Self> {
        let origin = vec![0.0; norm.ambient_dim];
        SetModel::cube_at(dim, side, origin, norm)
    }

    pub fn cube_at(dim: usize, side: f64, origin: Vec<f64>, norm: NormSpec) -> Result<Self> {
        if dim == 0 || dim > norm.ambient_dim {
            return domain(format!("cube dimension {dim} must lie in [1, {}]", norm.ambient_dim));
        }
        if !(side > 0.0) || origin.len() != norm.ambient_dim {
            return domain("cube needs a positive side and an ambient origin");
        }
        Ok(SetModel { kind: SetKind::Box { dim, side, origin }, norm })
    }

    pub fn curve(curve: LipschitzCurve, norm: NormSpec) -> Result<Self> {
        if curve.eval(curve.t0).len() != norm.ambient_dim {
            return domain("curve dimension differs from the ambient dimension");
        }
        Ok(SetModel { kind: SetKind::Curve(curve), norm })
    }

    pub fn ifs(ifs: IfsModel) -> Self {
        let norm = ifs.norm;
        SetModel { kind: SetKind::Ifs(ifs), norm }
    }

    /// Union of parts at positive mutual distance; the gap is certified from
    /// bounding boxes, or from fine samples when the boxes overlap.
    pub fn separated_union(parts: Vec<SetModel>) -> Result<Self> {
        if parts.len() < 2 {
            return domain("a separated union needs at least two parts");
        }
        let norm = parts[0].norm;
        if parts.iter().any(|p| p.norm != norm) {
            return domain("parts of a separated union must share the ambient norm");
        }
        let mut gap = f64::INFINITY;
        for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                gap = gap.min(parts_gap(&parts[i], &parts[j], &norm)?);
            }
        }
        if !(gap > 0.0) {
            return domain("parts of a separated union must be at positive distance");
        }
        Ok(SetModel { kind: SetKind::SeparatedUnion { parts, min_gap: gap }, norm })
    }

    pub fn ambient_dim(&self) -> usize {
        self.norm.ambient_dim
    }

    /// Dimension `d` of the set.
    pub fn dim_d(&self) -> f64 {
        match &self.kind {
            SetKind::IntervalUnion(_) | SetKind::Curve(_) => 1.0,
            SetKind::Box { dim, .. } => *dim as f64,
            SetKind::Ifs(ifs) => ifs.dim_d,
            SetKind::SeparatedUnion { parts, .. } => parts.iter().map(|p| p.dim_d()).fold(0.0, f64::max),
        }
    }

    /// `H_d(A)` with `H_d([0,1]^d) = 1`, when known in closed form.
    pub fn known_measure(&self) -> Option<f64> {
        match &self.kind {
            SetKind::IntervalUnion(ivs) => Some(ivs.iter().map(|i| i.len()).sum()),
            SetKind::Box { dim, side, .. } => Some(side.powi(*dim as i32)),
            SetKind::Curve(c) => c.length,
            SetKind::Ifs(_) => None,
            SetKind::SeparatedUnion { parts, .. } => {
                let d = self.dim_d();
                parts
                    .iter()
                    .filter(|p| p.dim_d() == d)
                    .map(|p| p.known_measure())
                    .sum::<Option<f64>>()
            }
        }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            SetKind::IntervalUnion(ivs) => format!("interval_union[{}]", ivs.len()),
            SetKind::Box { dim, side, .. } => format!("box(d={dim},L={side})"),
            SetKind::Curve(c) => format!("curve:{}", c.label),
            SetKind::Ifs(ifs) => format!("ifs:{}", ifs.name),
            SetKind::SeparatedUnion { parts, .. } => format!("union[{}]", parts.len()),
        }
    }

    /// Axis-aligned bounding box of the set.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            SetKind::IntervalUnion(ivs) => Ok((vec![ivs[0].lo], vec![ivs[ivs.len() - 1].hi])),
            SetKind::Box { dim, side, origin } => {
                let mut hi = origin.clone();
                for v in hi.iter_mut().take(*dim) {
                    *v += side;
                }
                Ok((origin.clone(), hi))
            }
            SetKind::Ifs(ifs) => Ok(ifs.base_hull.clone()),
            SetKind::Curve(c) => {
                let s = sample_curve(c, curve_mesh_hint(c))?;
                Ok(s.bounding_box().expect("curve samples are nonempty"))
            }
            SetKind::SeparatedUnion { parts, .. } => {
                let p = self.ambient_dim();
                let mut lo = vec![f64::INFINITY; p];
                let mut hi = vec![f64::NEG_INFINITY; p];
                for part in parts {
                    let (a, b) = part.bounding_box()?;
                    for k in 0..p {
                        lo[k] = lo[k].min(a[k]);
                        hi[k] = hi[k].max(b[k]);
                    }
                }
                Ok((lo, hi))
            }
        }
    }

    pub fn diameter_bound(&self) -> Result<f64> {
        let (lo, hi) = self.bounding_box()?;
        Ok(self.norm.dist(&lo, &hi))
    }

    /// A `δ`-dense sample; see [`sample`].
    pub fn sample(&self, mesh: f64) -> Result<SampledSet> {
        sample(self, mesh)
    }

    /// The set as a union of closed intervals of the line when it is one.
    pub fn as_intervals(&self) -> Option<Vec<Interval>> {
        if self.ambient_dim() != 1 {
            return None;
        }
        match &self.kind {
            SetKind::IntervalUnion(ivs) => Some(ivs.clone()),
            SetKind::Box { side, origin, .. } => Some(vec![Interval { lo: origin[0], hi: origin[0] + side }]),
            SetKind::SeparatedUnion { parts, .. } => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.as_intervals()?);
                }
                normalize_intervals(out).ok()
            }
            _ => None,
        }
    }

    /// Isometric copy of a one-dimensional piece on the line, for segments
    /// and one-dimensional boxes embedded in `R^p`.
    pub(crate) fn line_embedding(&self) -> Option<LineEmbedding> {
        if let Some(ivs) = self.as_intervals() {
            return Some(LineEmbedding { origin: vec![0.0], direction: vec![1.0], intervals: ivs });
        }
        match &self.kind {
            SetKind::Box { dim: 1, side, origin } => {
                let mut direction = vec![0.0; origin.len()];
                direction[0] = 1.0;
                Some(LineEmbedding {
                    origin: origin.clone(),
                    direction,
                    intervals: vec![Interval { lo: 0.0, hi: *side }],
                })
            }
            SetKind::Curve(LipschitzCurve { segment: Some((a, b)), length: Some(len), .. }) => {
                let direction = a.iter().zip(b).map(|(x, y)| (y - x) / len).collect();
                Some(LineEmbedding { origin: a.clone(), direction, intervals: vec![Interval { lo: 0.0, hi: *len }] })
            }
            _ => None,
        }
    }
}

/// `t -> origin + t * direction` with `||direction|| = 1`: an isometry from
/// the line onto its image. A ball meets a line in a segment of length at
/// most its diameter, so optimal centers may be taken on the line.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LineEmbedding {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub intervals: Vec<Interval>,
}

impl LineEmbedding {
    pub fn embed(&self, ts: &[f64]) -> PointCloud {
        let p = self.origin.len();
        let mut out = PointCloud::with_capacity(p, ts.len());
        let mut buf = vec![0.0; p];
        for t in ts {
            for k in 0..p {
                buf[k] = self.origin[k] + t * self.direction[k];
            }
            out.push(&buf);
        }
        out
    }
}

fn parts_gap(a: &SetModel, b: &SetModel, norm: &NormSpec) -> Result<f64> {
    let (alo, ahi) = a.bounding_box()?;
    let (blo, bhi) = b.bounding_box()?;
    let by_box = box_distance((&alo, &ahi), (&blo, &bhi), norm);
    if by_box > 0.0 {
        return Ok(by_box);
    }
    let scale = a.diameter_bound()?.max(b.diameter_bound()?).max(1e-9);
    let mesh = scale / 400.0;
    let sa = a.sample(mesh)?;
    let sb = b.sample(mesh)?;
    let index = GridIndex::build(&sa.points);
    let raw = sb.points.iter().map(|y| index.nearest(y, norm).1).fold(f64::INFINITY, f64::min);
    Ok((raw - sa.mesh - sb.mesh).max(0.0))
}

fn check_budget(what: &str, required: f64) -> Result<()> {
    if required > MAX_SAMPLE_POINTS as f64 {
        return Err(Error::Budget { what: what.into(), required, limit: MAX_SAMPLE_POINTS as f64 });
    }
    Ok(())
}

/// Uniform grid of `[lo, hi]` with spacing at most `step`, endpoints included.
pub(crate) fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let len = hi - lo;
    if len <= 0.0 {
        return vec![lo];
    }
    let n = (len / step - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { hi } else { lo + len * i as f64 / n as f64 }).collect()
}

fn curve_mesh_hint(c: &LipschitzCurve) -> f64 {
    c.lipschitz * (c.t1 - c.t0) / 1000.0
}

fn sample_curve(c: &LipschitzCurve, mesh: f64) -> Result<PointCloud> {
    let steps = (c.lipschitz * (c.t1 - c.t0) / mesh).ceil().max(1.0);
    check_budget("curve sample", steps + 1.0)?;
    let ts = uniform_grid(c.t0, c.t1, (c.t1 - c.t0) / steps);
    let first = c.eval(ts[0]);
    let mut out = PointCloud::with_capacity(first.len(), ts.len());
    for t in ts {
        out.push(&c.eval(t));
    }
    Ok(out)
}

/// A `δ`-dense sample of the model. The recorded mesh is the requested `δ`
/// (IFS samples record the achieved, smaller mesh of the chosen depth).
pub fn sample(model: &SetModel, mesh: f64) -> Result<SampledSet> {
    if !(mesh > 0.0) {
        return domain(format!("sample mesh must be positive, got {mesh}"));
    }
    let id = model.id();
    let d = model.dim_d();
    let sampled = match &model.kind {
        SetKind::IntervalUnion(ivs) => {
            let required: f64 = ivs.iter().map(|i| (i.len() / mesh).ceil() + 1.0).sum();
            check_budget("interval sample", required)?;
            let mut xs = Vec::new();
            for iv in ivs {
                xs.extend(uniform_grid(iv.lo, iv.hi, mesh));
            }
            SampledSet::new(PointCloud::from_scalars(&xs), mesh, id, d)?
        }
        SetKind::Box { dim, side, origin } => {
            // Grid spacing h keeps every cube point within (h/2)||1_d|| of a node.
            let h = mesh.min(2.0 * mesh / model.norm.ones_norm(*dim));
            let per_side = (side / h - 1e-9).ceil().max(1.0) + 1.0;
            check_budget("cube sample", per_side.powi(*dim as i32))?;
            let axis = uniform_grid(0.0, *side, h);
            let n = axis.len();
            let total = n.pow(*dim as u32);
            let mut cloud = PointCloud::with_capacity(origin.len(), total);
            let mut buf = origin.clone();
            for idx in 0..total {
                let mut rem = idx;
                for k in 0..*dim {
                    buf[k] = origin[k] + axis[rem % n];
                    rem /= n;
                }
                cloud.push(&buf);
            }
            SampledSet::new(cloud, mesh, id, d)?
        }
        SetKind::Curve(c) => SampledSet::new(sample_curve(c, mesh)?, mesh, id, d)?,
        SetKind::Ifs(ifs) => {
            let depth = ifs.depth_for_mesh(mesh);
            ifs_points(ifs, depth)?
        }
        SetKind::SeparatedUnion { parts, .. } => {
            let mut cloud = PointCloud::new(model.ambient_dim());
            let mut achieved: f64 = 0.0;
            for p in parts {
                let s = sample(p, mesh)?;
                achieved = achieved.max(s.mesh);
                cloud.extend(&s.points);
            }
            check_budget("union sample", cloud.len() as f64)?;
            SampledSet::new(cloud, achieved, id, d)?
        }
    };
    Ok(match model.known_measure() {
        Some(m) => sampled.with_measure(m),
        None => sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{covering_radius_on_sample, Configuration};

    #[test]
    fn box_and_interval_samples() {
        let unit = SetModel::cube(1, 1.0, NormSpec::euclidean(1)).unwrap();
        let s = unit.sample(0.25).unwrap();
        let xs: Vec<f64> = s.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.mesh, 0.25);
        assert_eq!(s.known_measure, Some(1.0));

        let two = SetModel::interval_union(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(2.0, 3.0).unwrap()])
            .unwrap();
        assert_eq!(two.sample(0.5).unwrap().len(), 6);
        assert_eq!(two.known_measure(), Some(2.0));
    }

    #[test]
    fn cantor_sample_by_depth() {
        let c = SetModel::ifs(IfsModel::cantor());
        for k in 1..8 {
            let s = c.sample(3f64.powi(-k) / 2.0).unwrap();
            assert_eq!(s.len(), 1 << (k + 1));
        }
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let err = SetModel::interval_union(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(0.5, 2.0).unwrap()]);
        assert!(err.is_err());
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    #[test]
    fn refusal_when_too_fine() {
        let sq = SetModel::cube(2, 1.0, NormSpec::euclidean(2)).unwrap();
        assert!(matches!(sq.sample(1e-5), Err(Error::Budget { .. })));
        assert!(matches!(sq.sample(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn samples_are_mesh_dense() {
        // A much finer sample stands in for the true set.
        for norm in [NormSpec::euclidean(2), NormSpec::l1(2), NormSpec::linf(2)] {
            let sq = SetModel::cube(2, 1.0, norm).unwrap();
            let coarse = sq.sample(0.1).unwrap();
            let fine = sq.sample(0.01).unwrap();
            let w = Configuration::new(coarse.points.clone());
            let r = covering_radius_on_sample(&w, &fine, &norm).unwrap();
            assert!(r <= coarse.mesh + 1e-12, "{norm}: {r} > {}", coarse.mesh);
        }
        let norm = NormSpec::euclidean(2);
        let circle = SetModel::curve(LipschitzCurve::circle([0.0, 0.0], 1.0, &norm).unwrap(), norm).unwrap();
        let coarse = circle.sample(0.05).unwrap();
        let fine = circle.sample(0.001).unwrap();
        let r = covering_radius_on_sample(&Configuration::new(coarse.points.clone()), &fine, &norm).unwrap();
        assert!(r <= 0.05);
    }

    #[test]
    fn separated_union_gap() {
        let norm = NormSpec::euclidean(2);
        let a = SetModel::cube_at(1, 1.0, vec![0.0, 0.0], norm).unwrap();
        let b = SetModel::cube_at(1, 1.0, vec![0.0, 2.0], norm).unwrap();
        let u = SetModel::separated_union(vec![a.clone(), b]).unwrap();
        match &u.kind {
            SetKind::SeparatedUnion { min_gap, .. } => assert_eq!(*min_gap, 2.0),
            _ => unreachable!(),
        }
        assert_eq!(u.known_measure(), Some(2.0));
        assert!(SetModel::separated_union(vec![a.clone(), a]).is_err());
    }
}

//! Self-similar sets generated by similitude contractions `x -> r O x + z`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{NormSpec, PointCloud, SampledSet};
use crate::spatial::GridIndex;

/// Hard cap on generated sample sizes.
pub const MAX_SAMPLE_POINTS: usize = 10_000_000;

const ORTHO_TOL: f64 = 1e-12;
const DIM_TOL: f64 = 1e-12;

/// Contraction ratio with an optional exact rational representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    exact: Option<Ratio<u64>>,
    value: f64,
}

impl Contraction {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return domain(format!("contraction ratio {num}/{den} must lie in (0, 1)"));
        }
        let r = Ratio::new(num, den);
        Ok(Contraction { exact: Some(r), value: num as f64 / den as f64 })
    }

    /// A ratio known only as a float; lattice classification treats it as
    /// unresolved.
    pub fn real(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return domain(format!("contraction ratio {value} must lie in (0, 1)"));
        }
        Ok(Contraction { exact: None, value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Ratio<u64>> {
        self.exact
    }
}

impl FromStr for Contraction {
    type Err = Error;

    /// Accepts `"num/den"` (exact) or a decimal literal (inexact).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| Error::Domain(format!("bad numerator in {s:?}")))?;
            let d: u64 = d.trim().parse().map_err(|_| Error::Domain(format!("bad denominator in {s:?}")))?;
            Contraction::rational(n, d)
        } else {
            let v: f64 = s.parse().map_err(|_| Error::Domain(format!("bad ratio {s:?}")))?;
            Contraction::real(v)
        }
    }
}

impl fmt::Display for Contraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Orthogonal `p x p` matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orthogonal {
    dim: usize,
    entries: Vec<f64>,
}

impl Orthogonal {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Orthogonal { dim, entries }
    }

    /// Planar rotation by `angle`, optionally preceded by the reflection
    /// `(x, y) -> (x, -y)`. In one dimension only the reflection is used.
    pub fn planar(dim: usize, angle: f64, reflect: bool) -> Result<Self> {
        match dim {
            1 => Ok(Orthogonal { dim: 1, entries: vec![if reflect { -1.0 } else { 1.0 }] }),
            2 => {
                let (s, c) = angle.sin_cos();
                let f = if reflect { -1.0 } else { 1.0 };
                Ok(Orthogonal { dim: 2, entries: vec![c, -s * f, s, c * f] })
            }
            _ => domain("planar rotations need ambient dimension 1 or 2"),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return domain("orthogonal matrix must be square and nonempty");
        }
        let o = Orthogonal { dim, entries: rows.into_iter().flatten().collect() };
        for i in 0..dim {
            for j in 0..dim {
                let dot: f64 = (0..dim).map(|k| o.entries[i * dim + k] * o.entries[j * dim + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHO_TOL {
                    return domain("matrix is not orthogonal to 1e-12");
                }
            }
        }
        Ok(o)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|k| self.entries[i * self.dim + k] * x[k]).sum();
        }
    }

    /// Signed permutation matrices preserve every `l_q` norm and map
    /// axis-aligned boxes to axis-aligned boxes.
    pub fn is_signed_permutation(&self) -> bool {
        (0..self.dim).all(|i| {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            row.iter().filter(|v| v.abs() > ORTHO_TOL).count() == 1
                && row.iter().any(|v| (v.abs() - 1.0).abs() <= ORTHO_TOL)
        })
    }
}

/// `x -> r O x + z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similitude {
    pub ratio: Contraction,
    pub rotation: Orthogonal,
    pub shift: Vec<f64>,
}

impl Similitude {
    pub fn new(ratio: Contraction, rotation: Orthogonal, shift: Vec<f64>) -> Result<Self> {
        if rotation.dim() != shift.len() {
            return domain("rotation and shift dimensions differ");
        }
        Ok(Similitude { ratio, rotation, shift })
    }

    /// Orientation-preserving map `x -> r x + z` on the line.
    pub fn affine_1d(ratio: Contraction, shift: f64) -> Self {
        Similitude { ratio, rotation: Orthogonal::identity(1), shift: vec![shift] }
    }

    pub fn scaled_translation(ratio: Contraction, shift: Vec<f64>) -> Self {
        let dim = shift.len();
        Similitude { ratio, rotation: Orthogonal::identity(dim), shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.rotation.apply(x, out);
        let r = self.ratio.value();
        for (o, z) in out.iter_mut().zip(&self.shift) {
            *o = r * *o + z;
        }
    }

    /// Fixed point of the contraction, by iteration.
    pub fn fixed_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut buf = x.clone();
        for _ in 0..4000 {
            self.apply(&x, &mut buf);
            if buf == x {
                break;
            }
            std::mem::swap(&mut x, &mut buf);
        }
        x
    }

    pub(crate) fn image_box(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = lo.len();
        let mut blo = vec![f64::INFINITY; p];
        let mut bhi = vec![f64::NEG_INFINITY; p];
        let mut img = vec![0.0; p];
        for corner in box_corners(lo, hi).iter() {
            self.apply(corner, &mut img);
            for k in 0..p {
                blo[k] = blo[k].min(img[k]);
                bhi[k] = bhi[k].max(img[k]);
            }
        }
        (blo, bhi)
    }
}

pub(crate) fn box_corners(lo: &[f64], hi: &[f64]) -> PointCloud {
    let p = lo.len();
    let mut out = PointCloud::with_capacity(p, 1 << p);
    let mut c = vec![0.0; p];
    for mask in 0..(1usize << p) {
        for k in 0..p {
            c[k] = if mask >> k & 1 == 1 { hi[k] } else { lo[k] };
        }
        out.push(&c);
    }
    out.sorted_dedup()
}

/// Distance between two axis-aligned boxes under a monotone norm.
pub(crate) fn box_distance(a: (&[f64], &[f64]), b: (&[f64], &[f64]), norm: &NormSpec) -> f64 {
    let gap: Vec<f64> = (0..a.0.len())
        .map(|k| (b.0[k] - a.1[k]).max(a.0[k] - b.1[k]).max(0.0))
        .collect();
    norm.norm(&gap)
}

/// Unique `d` with `Σ r_m^d = 1`, by bisection on the strictly decreasing map
/// `d -> Σ r_m^d` over `[0, upper]`.
pub fn hausdorff_dimension(ratios: &[f64], upper: f64) -> Result<f64> {
    if ratios.is_empty() {
        return domain("no contraction ratios");
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return domain("contraction ratios must lie in (0, 1)");
    }
    if ratios.len() == 1 {
        return domain("a single contraction has a point attractor: degenerate dimension 0");
    }
    let f = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    if f(upper) > DIM_TOL {
        return domain(format!(
            "similarity dimension exceeds {upper}: the open set condition cannot hold"
        ));
    }
    let (mut lo, mut hi) = (0.0f64, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    if f(d).abs() > DIM_TOL {
        return Err(Error::Domain(format!("dimension residual {} above 1e-12", f(d))));
    }
    Ok(d)
}

/// Self-similar set with certified first-level separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsModel {
    pub maps: Vec<Similitude>,
    /// Half of a certified lower bound on the least distance between
    /// first-level pieces `ψ_l(A)`, `ψ_k(A)`.
    pub separation_h: f64,
    pub dim_d: f64,
    pub base_hull: (Vec<f64>, Vec<f64>),
    pub norm: NormSpec,
    pub name: String,
}

impl IfsModel {
    pub fn new(maps: Vec<Similitude>, norm: NormSpec, name: impl Into<String>) -> Result<Self> {
        if maps.len() < 2 {
            return domain("an IFS needs at least two maps");
        }
        let p = norm.ambient_dim;
        if maps.iter().any(|m| m.dim() != p) {
            return domain("similitude dimension differs from the ambient dimension");
        }
        let ratios: Vec<f64> = maps.iter().map(|m| m.ratio.value()).collect();
        let dim_d = hausdorff_dimension(&ratios, p as f64)?;
        let base_hull = invariant_hull(&maps);
        let mut model = IfsModel { maps, separation_h: 0.0, dim_d, base_hull, norm, name: name.into() };
        let gap = model.certify_min_gap()?;
        if !(gap > 0.0) {
            return domain("first-level pieces are not certifiably separated");
        }
        model.separation_h = gap / 2.0;
        log::debug!("ifs {}: d = {}, h = {}", model.name, model.dim_d, model.separation_h);
        Ok(model)
    }

    /// Middle-thirds Cantor set.
    pub fn cantor() -> Self {
        let third = Contraction::rational(1, 3).expect("1/3");
        IfsModel::new(
            vec![Similitude::affine_1d(third, 0.0), Similitude::affine_1d(third, 2.0 / 3.0)],
            NormSpec::euclidean(1),
            "cantor",
        )
        .expect("Cantor IFS is valid")
    }

    /// Two-map set on `[0, 1]`: `x -> r1 x` and `x -> r2 x + 1 - r2`.
    pub fn two_map_interval(r1: Contraction, r2: Contraction) -> Result<Self> {
        IfsModel::new(
            vec![Similitude::affine_1d(r1, 0.0), Similitude::affine_1d(r2, complement(&r2))],
            NormSpec::euclidean(1),
            format!("two_map({r1},{r2})"),
        )
    }

    /// Four corner squares of side `ratio` in the unit square.
    pub fn cantor_dust(ratio: Contraction, norm: NormSpec) -> Result<Self> {
        let t = 1.0 - ratio.value();
        let maps = [[0.0, 0.0], [t, 0.0], [0.0, t], [t, t]]
            .iter()
            .map(|z| Similitude::scaled_translation(ratio, z.to_vec()))
            .collect();
        IfsModel::new(maps, norm, format!("cantor_dust({ratio})"))
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio.value()).collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    pub fn ambient_dim(&self) -> usize {
        self.norm.ambient_dim
    }

    pub fn diameter(&self) -> f64 {
        self.norm.dist(&self.base_hull.0, &self.base_hull.1)
    }

    /// Certified lower bound on `min_{l != k} dist(ψ_l(A), ψ_k(A))`.
    pub fn min_gap(&self) -> f64 {
        2.0 * self.separation_h
    }

    fn axis_aligned(&self) -> bool {
        self.maps.iter().all(|m| m.rotation.is_signed_permutation())
    }

    /// Distance bound from any point of a depth-`k` cylinder hull to the
    /// image of the nearest hull corner.
    pub fn mesh_at_depth(&self, k: u32) -> f64 {
        let (lo, hi) = &self.base_hull;
        let half_diag = if self.axis_aligned() {
            self.diameter() / 2.0
        } else {
            NormSpec::euclidean(self.ambient_dim()).dist(lo, hi) / 2.0 * self.norm.euclidean_upper_constant()
        };
        self.max_ratio().powi(k as i32) * half_diag
    }

    /// Mesh bound for samples seeded at the fixed points (which lie in `A`).
    pub fn fixed_point_mesh_at_depth(&self, k: u32) -> f64 {
        let (lo, hi) = &self.base_hull;
        let diam = if self.axis_aligned() {
            self.diameter()
        } else {
            NormSpec::euclidean(self.ambient_dim()).dist(lo, hi) * self.norm.euclidean_upper_constant()
        };
        self.max_ratio().powi(k as i32) * diam
    }

    pub fn fixed_points(&self) -> PointCloud {
        let mut out = PointCloud::new(self.ambient_dim());
        for m in &self.maps {
            out.push(&m.fixed_point());
        }
        out.sorted_dedup()
    }

    /// Images of `seeds` under all words of length `depth`, in word order.
    pub fn images(&self, seeds: &PointCloud, depth: u32) -> Result<PointCloud> {
        let m = self.maps.len() as f64;
        let required = seeds.len() as f64 * m.powi(depth as i32);
        if required > MAX_SAMPLE_POINTS as f64 {
            return Err(Error::Budget {
                what: format!("depth-{depth} IFS sample"),
                required,
                limit: MAX_SAMPLE_POINTS as f64,
            });
        }
        let p = self.ambient_dim();
        let mut level = seeds.clone();
        let mut buf = vec![0.0; p];
        for _ in 0..depth {
            let mut next = PointCloud::with_capacity(p, level.len() * self.maps.len());
            for map in &self.maps {
                for x in level.iter() {
                    map.apply(x, &mut buf);
                    next.push(&buf);
                }
            }
            level = next;
        }
        Ok(level)
    }

    /// Cylinder representatives at `depth` with their natural-measure weights
    /// `r_w^d` (which sum to one).
    pub fn weighted_cylinders(&self, depth: u32) -> Result<(PointCloud, Vec<f64>)> {
        let seed = PointCloud::from_flat(self.ambient_dim(), self.maps[0].fixed_point())?;
        let points = self.images(&seed, depth)?;
        let mut weights = vec![1.0];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(weights.len() * self.maps.len());
            for map in &self.maps {
                let w = map.ratio.value().powf(self.dim_d);
                next.extend(weights.iter().map(|x| x * w));
            }
            weights = next;
        }
        Ok((points, weights))
    }

    /// Depth-`k` word images of the hull corners as a sampled set.
    pub fn points(&self, depth: u32) -> Result<SampledSet> {
        ifs_points(self, depth)
    }

    /// Depth-`k` word images of the fixed points: every sample point lies in
    /// `A`, which constrained solvers need.
    pub fn points_in_set(&self, depth: u32) -> Result<SampledSet> {
        let pts = self.images(&self.fixed_points(), depth)?.sorted_dedup();
        SampledSet::new(pts, self.fixed_point_mesh_at_depth(depth), format!("ifs:{}", self.name), self.dim_d)
    }

    /// Smallest depth whose corner-seeded sample has mesh at most `mesh`.
    pub fn depth_for_mesh(&self, mesh: f64) -> u32 {
        let mut k = 0;
        while self.mesh_at_depth(k) > mesh && k < 200 {
            k += 1;
        }
        k
    }

    fn hull_corners(&self) -> PointCloud {
        box_corners(&self.base_hull.0, &self.base_hull.1)
    }

    fn child_box(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        self.maps[m].image_box(&self.base_hull.0, &self.base_hull.1)
    }

    fn certify_min_gap(&self) -> Result<f64> {
        let n = self.maps.len();
        let mut best = f64::INFINITY;
        for l in 0..n {
            for k in (l + 1)..n {
                let bl = self.child_box(l);
                let bk = self.child_box(k);
                let by_box = box_distance((&bl.0, &bl.1), (&bk.0, &bk.1), &self.norm);
                let gap = if by_box > 0.0 && self.axis_aligned() {
                    by_box
                } else {
                    by_box.max(self.sampled_gap(l, k)?)
                };
                best = best.min(gap);
            }
        }
        Ok(best)
    }

    /// Sample distance between two children minus twice the child mesh,
    /// refined until the mesh is below a tenth of the resulting half-gap.
    fn sampled_gap(&self, l: usize, k: usize) -> Result<f64> {
        let corners = self.hull_corners();
        let mut certified = 0.0;
        for depth in 1..40u32 {
            let per_child = corners.len() as f64 * (self.maps.len() as f64).powi(depth as i32 - 1);
            if per_child > 2e5 {
                break;
            }
            let base = self.images(&corners, depth - 1)?;
            let cl = base.map_points(|x, o| self.maps[l].apply(x, o));
            let ck = base.map_points(|x, o| self.maps[k].apply(x, o));
            let index = GridIndex::build(&cl);
            let raw = ck.iter().map(|y| index.nearest(y, &self.norm).1).fold(f64::INFINITY, f64::min);
            let mesh = self.mesh_at_depth(depth);
            certified = raw - 2.0 * mesh;
            if certified > 0.0 && mesh < certified / 20.0 {
                break;
            }
        }
        Ok(certified.max(0.0))
    }
}

/// `1 - r`, computed from the exact form when available so that it matches
/// literals such as `2.0 / 3.0`.
fn complement(r: &Contraction) -> f64 {
    match r.exact() {
        Some(q) => (q.denom() - q.numer()) as f64 / *q.denom() as f64,
        None => 1.0 - r.value(),
    }
}

/// Smallest box reached by iterating `B -> bbox(∪ ψ_m(B))` from a box that
/// contains the attractor; every iterate contains the attractor.
fn invariant_hull(maps: &[Similitude]) -> (Vec<f64>, Vec<f64>) {
    let p = maps[0].dim();
    let rmax = maps.iter().map(|m| m.ratio.value()).fold(0.0, f64::max);
    let zmax = maps
        .iter()
        .map(|m| m.shift.iter().map(|z| z * z).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let radius = zmax / (1.0 - rmax) + 1.0;
    let mut lo = vec![-radius; p];
    let mut hi = vec![radius; p];
    for _ in 0..5000 {
        let mut nlo = vec![f64::INFINITY; p];
        let mut nhi = vec![f64::NEG_INFINITY; p];
        for m in maps {
            let (a, b) = m.image_box(&lo, &hi);
            for k in 0..p {
                nlo[k] = nlo[k].min(a[k]);
                nhi[k] = nhi[k].max(b[k]);
            }
        }
        if nlo == lo && nhi == hi {
            break;
        }
        lo = nlo;
        hi = nhi;
    }
    (lo, hi)
}

/// All images of the base-hull corners under words of length `depth`,
/// exact duplicates merged.
pub fn ifs_points(ifs: &IfsModel, depth: u32) -> Result<SampledSet> {
    let pts = ifs.images(&ifs.hull_corners(), depth)?.sorted_dedup();
    SampledSet::new(pts, ifs.mesh_at_depth(depth), format!("ifs:{}", ifs.name), ifs.dim_d)
}

/// Result of the `d`-regularity audit `μ(B_r(x)) ≍ r^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityAudit {
    /// `min` and `max` of `μ(B_r(x)) / r^d` over tested centers and radii.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Fitted `c` with all ratios in `[1/c, c]`.
    pub c: f64,
    pub depth: u32,
}

/// Measures `μ(B_r(x)) / r^d` for the natural self-similar measure, with
/// `x` ranging over cylinder representatives and `r ∈ [3 δ, diam]`.
pub fn regularity_audit(ifs: &IfsModel, depth: u32, radii_per_decade: usize) -> Result<RegularityAudit> {
    let (points, weights) = ifs.weighted_cylinders(depth)?;
    let mesh = ifs.fixed_point_mesh_at_depth(depth);
    let diam = ifs.diameter();
    let r_min = 3.0 * mesh;
    if !(r_min < diam) {
        return domain("audit depth too shallow for the requested radius range");
    }
    let decades = (diam / r_min).log10();
    let steps = ((decades * radii_per_decade as f64).ceil() as usize).max(2);
    let radii: Vec<f64> = (0..=steps).map(|i| r_min * (diam / r_min).powf(i as f64 / steps as f64)).collect();
    let index = GridIndex::build(&points);
    let stride = (points.len() / 256).max(1);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in (0..points.len()).step_by(stride) {
        let x = points.get(i);
        for &r in &radii {
            let mut mass = 0.0;
            index.for_each_within(x, r, &ifs.norm, |j, _| mass += weights[j]);
            let ratio = mass / r.powf(ifs.dim_d);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    let c = hi.max(1.0 / lo).max(1.0);
    log::info!("regularity audit {}: ratios in [{lo}, {hi}], c = {c}", ifs.name);
    Ok(RegularityAudit { min_ratio: lo, max_ratio: hi, c, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dimension_examples() {
        assert_relative_eq!(hausdorff_dimension(&[0.5, 0.5], 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let d = hausdorff_dimension(&[1.0 / 3.0, 1.0 / 3.0], 1.0).unwrap();
        assert_relative_eq!(d, 2f64.ln() / 3f64.ln(), epsilon = 1e-12);
        assert!((d - 0.6309297536).abs() < 1e-10);
        // x = 2^-d solves x + 2x^2 = 1, so x = 1/2.
        assert_relative_eq!(hausdorff_dimension(&[0.5, 0.25, 0.25], 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let d = hausdorff_dimension(&[0.5, 1.0 / 3.0], 1.0).unwrap();
        assert!((0.5f64.powf(d) + (1.0f64 / 3.0).powf(d) - 1.0).abs() <= 1e-12);
        assert!((d - 0.78788).abs() < 1e-5);
    }

    #[test]
    fn dimension_degenerate_cases() {
        assert!(matches!(hausdorff_dimension(&[0.5], 1.0), Err(Error::Domain(_))));
        assert!(hausdorff_dimension(&[0.9, 0.9, 0.9], 1.0).is_err());
        assert!(hausdorff_dimension(&[1.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn cantor_points() {
        let c = IfsModel::cantor();
        assert_eq!(c.base_hull, (vec![0.0], vec![1.0]));
        assert_relative_eq!(c.separation_h, 1.0 / 6.0, epsilon = 1e-15);
        let s1 = ifs_points(&c, 1).unwrap();
        let xs: Vec<f64> = s1.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 4);
        for (a, b) in xs.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let s2 = ifs_points(&c, 2).unwrap();
        let xs: Vec<f64> = s2.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 8);
        assert_relative_eq!(xs[1], 1.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(xs[2], 2.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(s2.mesh, 1.0 / 18.0, epsilon = 1e-15);
        for k in 0..10 {
            assert_eq!(ifs_points(&c, k).unwrap().len(), 1 << (k + 1));
        }
    }

    #[test]
    fn unequal_ratio_points() {
        let half = Contraction::rational(1, 2).unwrap();
        let third = Contraction::rational(1, 3).unwrap();
        let ifs = IfsModel::new(
            vec![Similitude::affine_1d(half, 0.0), Similitude::affine_1d(third, 2.0 / 3.0)],
            NormSpec::euclidean(1),
            "half_third",
        )
        .unwrap();
        let xs: Vec<f64> = ifs_points(&ifs, 1).unwrap().points.iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 4);
        for (a, b) in xs.iter().zip([0.0, 0.5, 2.0 / 3.0, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        assert_relative_eq!(ifs.separation_h, 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn budget_refusal() {
        let c = IfsModel::cantor();
        assert!(matches!(ifs_points(&c, 40), Err(Error::Budget { .. })));
    }

    #[test]
    fn deeper_samples_refine_shallower_ones() {
        let c = IfsModel::cantor_dust(Contraction::rational(1, 4).unwrap(), NormSpec::euclidean(2)).unwrap();
        for k in 0..4 {
            let a = ifs_points(&c, k).unwrap();
            let b = ifs_points(&c, k + 1).unwrap();
            let bound = c.max_ratio().powi(k as i32) * c.diameter();
            let index = GridIndex::build(&b.points);
            for x in a.points.iter() {
                assert!(index.nearest(x, &c.norm).1 <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn rotated_maps_get_sampled_separation() {
        let third = Contraction::rational(1, 3).unwrap();
        let rot = Orthogonal::planar(2, std::f64::consts::FRAC_PI_2, false).unwrap();
        let maps = vec![
            Similitude::new(third, rot.clone(), vec![0.0, 0.0]).unwrap(),
            Similitude::new(third, Orthogonal::identity(2), vec![2.0 / 3.0, 2.0 / 3.0]).unwrap(),
        ];
        let ifs = IfsModel::new(maps, NormSpec::euclidean(2), "rotated").unwrap();
        assert!(ifs.separation_h > 0.0);
        assert!(rot.is_signed_permutation());
        let skew = Orthogonal::planar(2, 0.3, true).unwrap();
        assert!(!skew.is_signed_permutation());
        assert!(Orthogonal::from_rows(vec![vec![1.0, 0.1], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn cantor_is_d_regular() {
        let c = IfsModel::cantor();
        let audit = regularity_audit(&c, 10, 6).unwrap();
        assert!(audit.min_ratio > 0.0);
        assert!(audit.c < 8.0, "fitted c = {}", audit.c);
    }

    #[test]
    fn ratio_parsing() {
        let r: Contraction = "1/3".parse().unwrap();
        assert_eq!(r.exact(), Some(Ratio::new(1, 3)));
        let r: Contraction = "0.4".parse().unwrap();
        assert_eq!(r.exact(), None);
        assert!("3/2".parse::<Contraction>().is_err());
        assert_eq!(format!("{}", Contraction::rational(2, 6).unwrap()), "1/3");
    }
}

//! Best N-point coverings: exact on the line and on separated self-similar
//! sets, heuristic with certified upper bounds elsewhere.

mod exact1d;
mod fractal_dp;
mod heuristic;
mod lattice;
mod net;
mod refine;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use exact1d::exact_covering_1d;
pub use fractal_dp::{fractal_covering_dp, AllocationTree, CoveringEntry, CoveringTable, EntrySource};
pub(crate) use heuristic::{pad, start_index};
pub use net::{farthest_point_net, farthest_point_net_from};
pub use refine::{enclosing_center, minimax_refine, minimax_refine_with, RefineOptions};

use crate::asymptotics::SequenceRecord;
use crate::error::{domain, Error, Result};
use crate::geometry::{covering_radius_on_sample, Configuration, PointCloud, SampledSet};
use crate::sets::{SetKind, SetModel};

/// Sample size aimed for per center when the mesh is chosen automatically.
const SAMPLES_PER_CENTER: f64 = 100.0;
const MIN_AUTO_SAMPLE: f64 = 2e4;
const MAX_AUTO_SAMPLE: f64 = 1e6;
/// Reported radii use a sample this many times finer than the working one.
const EVAL_REFINEMENT: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Exact solver when one applies, heuristic otherwise.
    Auto,
    Exact1d,
    FractalDp,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringOptions {
    pub strategy: Strategy,
    /// Sample mesh for the heuristic; chosen from `N` when absent.
    pub mesh: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub refine: RefineOptions,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        CoveringOptions {
            strategy: Strategy::Auto,
            mesh: None,
            restarts: 8,
            seed: 0,
            refine: RefineOptions {
                lloyd_iters: 20,
                power_stages: vec![4.0, 8.0, 16.0, 32.0],
                stage_iters: 10,
                ..RefineOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringResult {
    /// Exact value, or `R(ω, Y)` on the working sample.
    pub radius: f64,
    pub configuration: Configuration,
    pub exact: bool,
    /// `radius + mesh_certificate` bounds `R(ω, A)`; zero when exact.
    pub mesh_certificate: f64,
    pub strategy: Strategy,
}

impl CoveringResult {
    /// Upper bound on the covering radius of the true set.
    pub fn certified_radius(&self) -> f64 {
        self.radius + self.mesh_certificate
    }
}

/// Sample of `model` whose size is about `target` points.
pub(crate) fn auto_sample(model: &SetModel, target: f64) -> Result<SampledSet> {
    let target = target.clamp(MIN_AUTO_SAMPLE, MAX_AUTO_SAMPLE);
    let d = model.dim_d().max(1e-3);
    let mut mesh = model.diameter_bound()? / 10.0;
    let probe = model.sample(mesh)?;
    mesh *= (probe.len() as f64 / target).powf(1.0 / d);
    loop {
        match model.sample(mesh) {
            Ok(s) if (s.len() as f64) <= 2.0 * MAX_AUTO_SAMPLE => return Ok(s),
            Ok(_) | Err(Error::Budget { .. }) => mesh *= 1.5,
            Err(e) => return Err(e),
        }
    }
}

/// Grid of sub-cube centers for a box: `k_1 x .. x k_dim` cells with
/// `prod k_i <= N`, chosen to minimize the half-diagonal. Returns the
/// configuration (padded to `n`) and its exact covering radius.
pub fn grid_construction(model: &SetModel, n: usize) -> Option<(Configuration, f64)> {
    let SetKind::Box { dim, side, origin } = &model.kind else {
        return None;
    };
    let norm = model.norm;
    let radius_of = |ks: &[usize]| {
        let mut v = vec![0.0; origin.len()];
        for (k, &c) in ks.iter().enumerate() {
            v[k] = side / (2.0 * c as f64);
        }
        norm.norm(&v)
    };
    let mut ks = vec![1usize; *dim];
    if *dim == 2 {
        let mut best = (f64::INFINITY, (1, 1));
        for a in 1..=n {
            let b = n / a;
            let r = radius_of(&[a, b]);
            if r < best.0 {
                best = (r, (a, b));
            }
        }
        ks = vec![best.1 .0, best.1 .1];
    } else {
        let mut k = (n as f64).powf(1.0 / *dim as f64).floor() as usize;
        while (k + 1).pow(*dim as u32) <= n {
            k += 1;
        }
        while k > 1 && k.pow(*dim as u32) > n {
            k -= 1;
        }
        ks.iter_mut().for_each(|c| *c = k.max(1));
    }
    let total: usize = ks.iter().product();
    let mut cloud = PointCloud::with_capacity(origin.len(), n);
    let mut buf = origin.clone();
    for idx in 0..total {
        let mut rem = idx;
        for (k, &c) in ks.iter().enumerate() {
            buf[k] = origin[k] + side * ((rem % c) as f64 + 0.5) / c as f64;
            rem /= c;
        }
        cloud.push(&buf);
    }
    Some((pad(Configuration::new(cloud), n), radius_of(&ks)))
}

fn resolve(model: &SetModel, strategy: Strategy) -> Result<Strategy> {
    let line = model.line_embedding().is_some();
    let ifs = matches!(model.kind, SetKind::Ifs(_));
    match strategy {
        Strategy::Auto if line => Ok(Strategy::Exact1d),
        Strategy::Auto if ifs => Ok(Strategy::FractalDp),
        Strategy::Auto => Ok(Strategy::Heuristic),
        Strategy::Exact1d if !line => Err(Error::Strategy(format!("{} is not a subset of a line", model.id()))),
        Strategy::FractalDp if !ifs => Err(Error::Strategy(format!("{} is not a self-similar set", model.id()))),
        s => Ok(s),
    }
}

/// Finer sample on which reported radii are measured, so that refinement
/// on the working sample cannot exploit its holes.
fn evaluation_sample(model: &SetModel, work: &SampledSet) -> Result<SampledSet> {
    let mut mesh = work.mesh / EVAL_REFINEMENT;
    loop {
        match model.sample(mesh) {
            Ok(s) => return Ok(s),
            Err(Error::Budget { .. }) if mesh < work.mesh => mesh = (mesh * 1.5).min(work.mesh),
            Err(e) => return Err(e),
        }
    }
}

fn heuristic_covering(model: &SetModel, n: usize, constrained: bool, opts: &CoveringOptions) -> Result<CoveringResult> {
    let sample = match opts.mesh {
        Some(mesh) => model.sample(mesh)?,
        None => auto_sample(model, SAMPLES_PER_CENTER * n as f64)?,
    };
    let eval = evaluation_sample(model, &sample)?;
    let refine = RefineOptions { constrained, ..opts.refine.clone() };
    let mut candidates = vec![heuristic::cover_sample(&sample, n, &model.norm, opts.restarts, opts.seed, &refine)?.0];
    if let Some((grid, _)) = grid_construction(model, n) {
        candidates.push(grid);
    }
    if let (SetKind::Box { dim: 2, side, origin }, false) = (&model.kind, constrained) {
        if origin.len() == 2 {
            let hi = [origin[0] + side, origin[1] + side];
            if let Some((lat, _)) = lattice::best_lattice(origin, &hi, n, &model.norm) {
                let polish = RefineOptions { lloyd_iters: 0, power_stages: Vec::new(), ..refine.clone() };
                candidates.push(pad(minimax_refine_with(&lat, &sample, &polish, &model.norm).0, n));
                candidates.push(pad(lat, n));
            }
        }
    }
    let mut best: Option<(Configuration, f64)> = None;
    for cand in candidates {
        let rc = covering_radius_on_sample(&cand, &eval, &model.norm)?;
        if best.as_ref().map_or(true, |b| rc < b.1) {
            best = Some((cand, rc));
        }
    }
    let (w, r) = best.expect("the multistart candidate exists");
    Ok(CoveringResult {
        radius: r,
        configuration: w,
        exact: false,
        mesh_certificate: eval.mesh,
        strategy: Strategy::Heuristic,
    })
}

/// Best covering of `model` by `n` centers (in the set when `constrained`).
pub fn best_covering(model: &SetModel, n: usize, constrained: bool, opts: &CoveringOptions) -> Result<CoveringResult> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    match resolve(model, opts.strategy)? {
        Strategy::Exact1d => {
            let line = model.line_embedding().expect("checked by resolve");
            let (r, w) = exact_covering_1d(&line.intervals, n, constrained)?;
            Ok(CoveringResult {
                radius: r,
                configuration: Configuration::new(line.embed(&w.scalars())),
                exact: true,
                mesh_certificate: 0.0,
                strategy: Strategy::Exact1d,
            })
        }
        Strategy::FractalDp => {
            let SetKind::Ifs(ifs) = &model.kind else { unreachable!("checked by resolve") };
            let table = fractal_covering_dp(ifs, n, constrained)?;
            let e = table.entry(n).expect("table reaches n");
            Ok(CoveringResult {
                radius: e.radius,
                configuration: table.configuration(n)?,
                exact: e.exact,
                mesh_certificate: e.mesh_certificate,
                strategy: Strategy::FractalDp,
            })
        }
        _ => heuristic_covering(model, n, constrained, opts),
    }
}

/// `(N, ρ̂, N^{1/d} ρ̂, exact, mesh certificate)` along an increasing schedule.
pub fn covering_sequence(
    model: &SetModel,
    schedule: &[usize],
    constrained: bool,
    opts: &CoveringOptions,
) -> Result<Vec<SequenceRecord>> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return domain("schedule must be nonempty, positive and strictly increasing");
    }
    let d = model.dim_d();
    match resolve(model, opts.strategy)? {
        Strategy::FractalDp => {
            let SetKind::Ifs(ifs) = &model.kind else { unreachable!("checked by resolve") };
            let table = fractal_covering_dp(ifs, *schedule.last().expect("nonempty"), constrained)?;
            Ok(schedule
                .iter()
                .map(|&n| {
                    let e = table.entry(n).expect("table covers the schedule");
                    SequenceRecord::covering(n, e.radius, d, e.exact, e.mesh_certificate)
                })
                .collect())
        }
        Strategy::Exact1d => schedule
            .par_iter()
            .map(|&n| {
                let r = best_covering(model, n, constrained, opts)?;
                Ok(SequenceRecord::covering(n, r.radius, d, true, 0.0))
            })
            .collect(),
        _ => schedule
            .iter()
            .map(|&n| {
                let r = heuristic_covering(model, n, constrained, opts)?;
                Ok(SequenceRecord::covering(n, r.radius, d, false, r.mesh_certificate))
            })
            .collect(),
    }
}

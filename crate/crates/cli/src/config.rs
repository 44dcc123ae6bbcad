//! Experiment configuration: JSON schema, model construction and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use covlab_core::sets::{LipschitzCurve, Orthogonal, Similitude};
use covlab_core::{Contraction, IfsModel, Interval, NormKind, NormSpec, SetModel};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Cover,
    Polarize,
    Fractal,
    Asymptotics,
    Bridge,
    Uniformity,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().expect("string"))
    }
}

/// Invalid configuration, with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A contraction ratio: `"num/den"` for exact values, a number otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatioSpec {
    Text(String),
    Number(f64),
}

impl RatioSpec {
    fn build(&self, path: &str) -> Result<Contraction, ConfigError> {
        match self {
            RatioSpec::Text(s) => s.parse().map_err(|e| ConfigError::new(path, e)),
            RatioSpec::Number(v) => Contraction::real(*v).map_err(|e| ConfigError::new(path, e)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub ratio: RatioSpec,
    pub shift: Vec<f64>,
    /// Row-major orthogonal matrix; identity when absent.
    #[serde(default)]
    pub rotation: Option<Vec<Vec<f64>>>,
}

/// Externally tagged, e.g. `{"box": {"dim": 2, "side": 1.0}}` or `"cantor"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    IntervalUnion {
        intervals: Vec<[f64; 2]>,
    },
    Box {
        dim: usize,
        side: f64,
        #[serde(default)]
        origin: Option<Vec<f64>>,
    },
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Cantor,
    TwoMap {
        r1: RatioSpec,
        r2: RatioSpec,
    },
    CantorDust {
        ratio: RatioSpec,
    },
    Ifs {
        maps: Vec<MapSpec>,
        #[serde(default)]
        name: Option<String>,
    },
    SeparatedUnion {
        parts: Vec<ModelSpec>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    Euclidean,
    L1,
    Linf,
    P,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub kind: NormName,
    /// Exponent of the `p`-norm.
    #[serde(default)]
    pub p: Option<f64>,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { kind: NormName::Euclidean, p: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    List(Vec<usize>),
    /// `from, from + step, ..` up to `to`, or `from, from * factor, ..`.
    Range {
        from: usize,
        to: usize,
        #[serde(default)]
        step: Option<usize>,
        #[serde(default)]
        factor: Option<usize>,
    },
}

impl Schedule {
    pub fn expand(&self) -> Result<Vec<usize>, ConfigError> {
        let out = match self {
            Schedule::List(v) => v.clone(),
            Schedule::Range { from, to, step, factor } => {
                if step.is_some() && factor.is_some() {
                    return Err(ConfigError::new("schedule", "give either step or factor"));
                }
                let mut v = Vec::new();
                let mut n = *from;
                while n <= *to {
                    v.push(n);
                    n = match (step, factor) {
                        (_, Some(f)) if *f >= 2 => n * f,
                        (_, Some(_)) => return Err(ConfigError::new("schedule.factor", "must be at least 2")),
                        (Some(0), _) => return Err(ConfigError::new("schedule.step", "must be positive")),
                        (Some(s), _) => n + s,
                        (None, None) => n + 1,
                    };
                }
                v
            }
        };
        if out.is_empty() {
            return Err(ConfigError::new("schedule", "must be nonempty"));
        }
        if out[0] == 0 {
            return Err(ConfigError::new("schedule[0]", "N must be at least 1"));
        }
        if let Some(i) = out.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ConfigError::new(format!("schedule[{}]", i + 1), "must be strictly increasing"));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must agree with the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub t_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub s_values: Option<Vec<f64>>,
    #[serde(default)]
    pub constrained: bool,
    #[serde(default)]
    pub mesh: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub restarts: Option<usize>,
    /// Equal-measure cells for uniformity.
    #[serde(default)]
    pub cells: Option<usize>,
    /// Largest acceptable uniformity deviation.
    #[serde(default)]
    pub max_deviation: Option<f64>,
    /// Minkowski radii for the sandwich check.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Reference constant and relative tolerance for θ̂ or σ̂.
    #[serde(default)]
    pub reference: Option<[f64; 2]>,
    /// Largest `N` of the polarization table for the fractal renewal residual.
    #[serde(default)]
    pub polar_n_max: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "<root>".to_string() } else { path }, e.into_inner())
    })
}

fn ambient_dim(spec: &ModelSpec) -> usize {
    match spec {
        ModelSpec::IntervalUnion { .. } | ModelSpec::Cantor | ModelSpec::TwoMap { .. } => 1,
        ModelSpec::Box { dim, .. } => *dim,
        ModelSpec::Segment { a, .. } => a.len(),
        ModelSpec::Circle { .. } | ModelSpec::CantorDust { .. } => 2,
        ModelSpec::Ifs { maps, .. } => maps.first().map_or(1, |m| m.shift.len()),
        ModelSpec::SeparatedUnion { parts } => parts.first().map_or(1, ambient_dim),
    }
}

impl NormConfig {
    pub fn build(&self, dim: usize) -> Result<NormSpec, ConfigError> {
        let kind = match (self.kind, self.p) {
            (NormName::P, Some(p)) => NormKind::Pnorm(p),
            (NormName::P, None) => return Err(ConfigError::new("norm.p", "required for the p-norm")),
            (_, Some(_)) => return Err(ConfigError::new("norm.p", "only valid with kind \"p\"")),
            (NormName::Euclidean, None) => NormKind::Euclidean,
            (NormName::L1, None) => NormKind::L1,
            (NormName::Linf, None) => NormKind::Linf,
        };
        NormSpec::new(kind, dim.max(1)).map_err(|e| ConfigError::new("norm", e))
    }
}

pub fn build_model(spec: &ModelSpec, norm: &NormConfig, path: &str) -> Result<SetModel, ConfigError> {
    let ns = norm.build(ambient_dim(spec))?;
    let err = |e: covlab_core::Error| ConfigError::new(path, e);
    match spec {
        ModelSpec::IntervalUnion { intervals } => {
            let ivs = intervals
                .iter()
                .enumerate()
                .map(|(i, [lo, hi])| Interval::new(*lo, *hi).map_err(|e| ConfigError::new(format!("{path}.interval_union.intervals[{i}]"), e)))
                .collect::<Result<Vec<_>, _>>()?;
            SetModel::interval_union(ivs).map_err(err)
        }
        ModelSpec::Box { dim, side, origin } => match origin {
            Some(o) => SetModel::cube_at(*dim, *side, o.clone(), ns).map_err(err),
            None => SetModel::cube(*dim, *side, ns).map_err(err),
        },
        ModelSpec::Segment { a, b } => {
            let c = LipschitzCurve::segment(a.clone(), b.clone(), &ns).map_err(err)?;
            SetModel::curve(c, ns).map_err(err)
        }
        ModelSpec::Circle { center, radius } => {
            let c = LipschitzCurve::circle(*center, *radius, &ns).map_err(err)?;
            SetModel::curve(c, ns).map_err(err)
        }
        ModelSpec::Cantor => Ok(SetModel::ifs(IfsModel::cantor())),
        ModelSpec::TwoMap { r1, r2 } => {
            let (a, b) = (r1.build(&format!("{path}.two_map.r1"))?, r2.build(&format!("{path}.two_map.r2"))?);
            IfsModel::two_map_interval(a, b).map(SetModel::ifs).map_err(err)
        }
        ModelSpec::CantorDust { ratio } => {
            let r = ratio.build(&format!("{path}.cantor_dust.ratio"))?;
            IfsModel::cantor_dust(r, ns).map(SetModel::ifs).map_err(err)
        }
        ModelSpec::Ifs { maps, name } => {
            let mut sims = Vec::with_capacity(maps.len());
            for (i, m) in maps.iter().enumerate() {
                let p = format!("{path}.ifs.maps[{i}]");
                let ratio = m.ratio.build(&format!("{p}.ratio"))?;
                let rot = match &m.rotation {
                    Some(rows) => Orthogonal::from_rows(rows.clone()).map_err(|e| ConfigError::new(format!("{p}.rotation"), e))?,
                    None => Orthogonal::identity(m.shift.len()),
                };
                sims.push(Similitude::new(ratio, rot, m.shift.clone()).map_err(|e| ConfigError::new(&p, e))?);
            }
            let label = name.clone().unwrap_or_else(|| "ifs".into());
            IfsModel::new(sims, ns, label).map(SetModel::ifs).map_err(err)
        }
        ModelSpec::SeparatedUnion { parts } => {
            let built = parts
                .iter()
                .enumerate()
                .map(|(i, p)| build_model(p, norm, &format!("{path}.separated_union.parts[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            SetModel::separated_union(built).map_err(err)
        }
    }
}

impl ExperimentConfig {
    /// Checks the fields the command needs; returns the model when one is
    /// required.
    pub fn validate(&self, command: Command) -> Result<Option<SetModel>, ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError::new("command", format!("config is for {c}, invoked as {command}")));
            }
        }
        if let Some(m) = self.mesh {
            if !(m > 0.0) {
                return Err(ConfigError::new("mesh", "must be positive"));
            }
        }
        if command == Command::Verify {
            return Ok(None);
        }
        let spec = self.model.as_ref().ok_or_else(|| ConfigError::new("model", "required"))?;
        let model = build_model(spec, &self.norm, "model")?;
        let d = model.dim_d();
        if let Some(sched) = &self.schedule {
            sched.expand()?;
        } else if command != Command::Fractal {
            return Err(ConfigError::new("schedule", "required"));
        }
        let needs_s = matches!(command, Command::Polarize | Command::Bridge);
        match (self.s, &self.s_values) {
            (None, None) if needs_s => return Err(ConfigError::new("s", "required")),
            _ => {}
        }
        if let Some(s) = self.s {
            if needs_s && !(s > d) {
                return Err(ConfigError::new("s", format!("must exceed d = {d}")));
            }
        }
        if let Some(sv) = &self.s_values {
            if sv.is_empty() {
                return Err(ConfigError::new("s_values", "must be nonempty"));
            }
            for (i, s) in sv.iter().enumerate() {
                if !(*s > model.ambient_dim() as f64) {
                    return Err(ConfigError::new(format!("s_values[{i}]"), "must exceed the ambient dimension"));
                }
            }
        }
        if command == Command::Fractal && !matches!(model.kind, covlab_core::SetKind::Ifs(_)) {
            return Err(ConfigError::new("model", "fractal runs need a self-similar model"));
        }
        if let Some(ts) = &self.t_schedule {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::new("t_schedule", "must be nonempty, positive and increasing"));
            }
        }
        if self.cells == Some(0) {
            return Err(ConfigError::new("cells", "must be positive"));
        }
        Ok(Some(model))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = load(&path).unwrap_or_else(|e| panic!("{}: {e:?}", path.display()));
            cfg.validate(cfg.command.expect("shipped configs name their command")).unwrap();
            seen += 1;
        }
        assert!(seen >= 5);
    }

    #[test]
    fn parse_errors_carry_paths() {
        let e = parse(r#"{"model": {"box": {"dim": "two", "side": 1.0}}}"#).unwrap_err();
        assert_eq!(e.path, "model.box.dim");
        let e = parse(r#"{"schedule": [1, 2], "sed": 3}"#).unwrap_err();
        assert!(e.message.contains("sed"), "{e}");
    }

    #[test]
    fn schedules_expand() {
        assert_eq!(Schedule::Range { from: 1, to: 5, step: None, factor: None }.expand().unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(Schedule::Range { from: 4, to: 64, step: None, factor: Some(4) }.expand().unwrap(), vec![4, 16, 64]);
        assert_eq!(Schedule::List(vec![3, 2]).expand().unwrap_err().path, "schedule[1]");
        assert!(Schedule::List(vec![]).expand().is_err());
    }

    #[test]
    fn ratios_stay_exact() {
        let cfg = parse(r#"{"model": {"two_map": {"r1": "1/2", "r2": 0.25}}, "schedule": [1]}"#).unwrap();
        let m = cfg.validate(Command::Cover).unwrap().unwrap();
        let covlab_core::SetKind::Ifs(ifs) = &m.kind else { panic!() };
        assert!(ifs.maps[0].ratio.exact().is_some());
        assert!(ifs.maps[1].ratio.exact().is_none());
    }

    #[test]
    fn validation_paths() {
        let cfg = parse(r#"{"model": {"interval_union": {"intervals": [[0, 1], [2, 1]]}}, "schedule": [1]}"#).unwrap();
        assert_eq!(cfg.validate(Command::Cover).unwrap_err().path, "model.interval_union.intervals[1]");
        let cfg = parse(r#"{"model": {"box": {"dim": 1, "side": 1}}, "schedule": [1], "s": 0.5}"#).unwrap();
        assert_eq!(cfg.validate(Command::Polarize).unwrap_err().path, "s");
        let cfg = parse(r#"{"model": {"box": {"dim": 1, "side": 1}}, "schedule": [1], "mesh": -1}"#).unwrap();
        assert_eq!(cfg.validate(Command::Cover).unwrap_err().path, "mesh");
        let cfg = parse(r#"{"model": {"box": {"dim": 1, "side": 1}}}"#).unwrap();
        assert_eq!(cfg.validate(Command::Fractal).unwrap_err().path, "model");
        let e = parse(r#"{"model": "cantor", "schedule": [1], "norm": {"kind": "q"}}"#).unwrap_err();
        assert_eq!(e.path, "norm.kind");
    }
}

//! Command execution.

use covlab_core::asymptotics::{
    bridge_check, bridge_runs, gap_decreases_in_s, generalest_check, limit_window, sigma_check, theta_check,
    uniformity_discrepancy, COVERING_TOL, POLARIZATION_TOL,
};
use covlab_core::covering::{best_covering, covering_sequence, fractal_covering_dp};
use covlab_core::polarization::{maximize_polarization, polarization_sequence, FrostmanBound};
use covlab_core::renewal::{
    classify_lattice, covering_count, oscillation_report, polarization_renewal_residual, renewal_covering_sequence,
    LatticeVerdict,
};
use covlab_core::sets::minkowski_estimate;
use covlab_core::verify::{verify_suite, VerifyOptions};
use covlab_core::{CoveringOptions, Error, PolarizationOptions, SequenceRecord, SetKind, SetModel};
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};

/// Bridge Ĉ(N) may vary by at most this fraction over the last octave.
const BRIDGE_VARIATION: f64 = 0.5;
const DEFAULT_FRACTAL_N: usize = 4096;
const RENEWAL_DEPTH: u32 = 10;

pub struct RunOutput {
    pub records: Vec<SequenceRecord>,
    /// Further record files, by file stem.
    pub extra: Vec<(String, Vec<SequenceRecord>)>,
    pub report: Value,
    pub passed: bool,
}

fn covering_opts(cfg: &ExperimentConfig) -> CoveringOptions {
    let mut o = CoveringOptions { seed: cfg.seed, mesh: cfg.mesh, ..Default::default() };
    if let Some(r) = cfg.restarts {
        o.restarts = r;
    }
    o
}

fn polar_opts(cfg: &ExperimentConfig) -> PolarizationOptions {
    let mut o = PolarizationOptions { seed: cfg.seed, mesh: cfg.mesh, ..Default::default() };
    if let Some(r) = cfg.restarts {
        o.restarts = r;
    }
    o
}

fn reference(cfg: &ExperimentConfig) -> Option<(f64, f64)> {
    cfg.reference.map(|[v, tol]| (v, tol))
}

/// The analysis, or the reason it is unavailable.
fn optional<T: serde::Serialize>(r: covlab_core::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("serializable"),
        Err(e) => json!({ "unavailable": e.to_string() }),
    }
}

fn verdict_ok(v: &Value) -> bool {
    v.get("verdict").and_then(Value::as_str) != Some("fail")
}

pub fn run(command: Command, cfg: &ExperimentConfig, model: Option<SetModel>) -> covlab_core::Result<RunOutput> {
    if command == Command::Verify {
        return Ok(verify(cfg));
    }
    let model = model.expect("validated");
    let schedule = cfg.schedule.as_ref().map(|s| s.expand().expect("validated"));
    match command {
        Command::Cover => cover(cfg, &model, &schedule.expect("validated")),
        Command::Polarize => polarize(cfg, &model, &schedule.expect("validated")),
        Command::Fractal => fractal(cfg, &model, schedule),
        Command::Asymptotics => asymptotics(cfg, &model, &schedule.expect("validated")),
        Command::Bridge => bridge(cfg, &model, &schedule.expect("validated")),
        Command::Uniformity => uniformity(cfg, &model, &schedule.expect("validated")),
        Command::Verify => unreachable!(),
    }
}

fn window_or_null(records: &[SequenceRecord], tol: f64) -> Value {
    if records.len() < 8 {
        return Value::Null;
    }
    optional(limit_window(records, 0.5, tol))
}

fn cover(cfg: &ExperimentConfig, model: &SetModel, schedule: &[usize]) -> covlab_core::Result<RunOutput> {
    let records = covering_sequence(model, schedule, cfg.constrained, &covering_opts(cfg))?;
    let theta = if records.len() >= 8 && model.known_measure().is_some() {
        optional(theta_check(model, &records, reference(cfg), COVERING_TOL))
    } else {
        Value::Null
    };
    let passed = verdict_ok(&theta);
    let report = json!({
        "command": "cover",
        "model": model.id(),
        "d": model.dim_d(),
        "constrained": cfg.constrained,
        "window": window_or_null(&records, COVERING_TOL),
        "theta": theta,
    });
    Ok(RunOutput { records, extra: Vec::new(), report, passed })
}

fn polarize(cfg: &ExperimentConfig, model: &SetModel, schedule: &[usize]) -> covlab_core::Result<RunOutput> {
    let s = cfg.s.expect("validated");
    let records = polarization_sequence(model, schedule, s, cfg.constrained, &polar_opts(cfg))?;
    let sigma = if records.len() >= 8 && model.known_measure().is_some() {
        optional(sigma_check(model, &records, s, reference(cfg), POLARIZATION_TOL))
    } else {
        Value::Null
    };
    let (frostman, below) = match FrostmanBound::for_model(model, s) {
        Ok(fb) => {
            let below = records.iter().all(|r| r.value <= fb.bound(r.n));
            (json!({ "c_fro": fb.c_fro, "regularity_c": fb.regularity_c, "mass": fb.mass, "all_below": below }), below)
        }
        Err(e) => (json!({ "unavailable": e.to_string() }), true),
    };
    let passed = verdict_ok(&sigma) && below;
    let report = json!({
        "command": "polarize",
        "model": model.id(),
        "d": model.dim_d(),
        "s": s,
        "constrained": cfg.constrained,
        "window": window_or_null(&records, POLARIZATION_TOL),
        "sigma": sigma,
        "frostman": frostman,
    });
    Ok(RunOutput { records, extra: Vec::new(), report, passed })
}

fn fractal(cfg: &ExperimentConfig, model: &SetModel, schedule: Option<Vec<usize>>) -> covlab_core::Result<RunOutput> {
    let SetKind::Ifs(ifs) = &model.kind else { unreachable!("validated") };
    let schedule = schedule.unwrap_or_else(|| (1..=DEFAULT_FRACTAL_N).collect());
    let n_max = *schedule.last().expect("nonempty");
    let table = fractal_covering_dp(ifs, n_max, cfg.constrained)?;
    let d = ifs.dim_d;
    let records: Vec<SequenceRecord> = schedule
        .iter()
        .map(|&n| {
            let e = table.entry(n).expect("table covers the schedule");
            SequenceRecord::covering(n, e.radius, d, e.exact, e.mesh_certificate)
        })
        .collect();
    let ratios: Vec<_> = ifs.maps.iter().map(|m| m.ratio).collect();
    let class = classify_lattice(&ratios);
    let base = match &class.verdict {
        LatticeVerdict::Lattice { base, .. } => Some(format!("{}/{}", base.numer(), base.denom())),
        _ => None,
    };
    let osc = if n_max >= 8 { Some(oscillation_report(ifs, n_max, cfg.constrained)?) } else { None };
    let mut passed = true;
    let renewal = if class.is_lattice() {
        let LatticeVerdict::Lattice { base: b, .. } = &class.verdict else { unreachable!() };
        let r = *b.numer() as f64 / *b.denom() as f64;
        // Deepest level the table still resolves.
        let mut depth = RENEWAL_DEPTH;
        let mut seq = renewal_covering_sequence(ifs, depth, &table);
        while matches!(seq, Err(Error::Table(_))) && depth > 0 {
            depth -= 1;
            seq = renewal_covering_sequence(ifs, depth, &table);
        }
        match seq {
            Ok(seq) => {
                let direct: Vec<Option<u64>> = (0..=depth).map(|n| covering_count(&table, r.powi(n as i32))).collect();
                let matches = seq.iter().zip(&direct).all(|(a, b)| b.map_or(true, |b| b == *a));
                passed &= matches;
                json!({ "depth": depth, "recursion": seq, "table": direct, "matches": matches })
            }
            Err(e) => json!({ "unavailable": e.to_string() }),
        }
    } else {
        Value::Null
    };
    let polar = match (cfg.s, &cfg.t_schedule) {
        (Some(s), Some(ts)) => {
            let k = cfg.polar_n_max.unwrap_or(8);
            let mut tab = Vec::with_capacity(k);
            for n in 1..=k {
                let r = maximize_polarization(model, n, s, cfg.constrained, &polar_opts(cfg))?;
                let prev = tab.last().map_or(0.0, |(_, v): &(usize, f64)| *v);
                tab.push((n, r.value.max(prev)));
            }
            optional(polarization_renewal_residual(ifs, s, ts, &tab))
        }
        _ => Value::Null,
    };
    let report = json!({
        "command": "fractal",
        "model": model.id(),
        "d": d,
        "lattice": class.is_lattice(),
        "base": base,
        "classification": class,
        "oscillation_ratio": osc.as_ref().map(|o| o.ratio),
        "oscillation": osc,
        "renewal": renewal,
        "polarization_renewal": polar,
    });
    Ok(RunOutput { records, extra: Vec::new(), report, passed })
}

fn asymptotics(cfg: &ExperimentConfig, model: &SetModel, schedule: &[usize]) -> covlab_core::Result<RunOutput> {
    let records = covering_sequence(model, schedule, cfg.constrained, &covering_opts(cfg))?;
    let d = model.dim_d();
    let theta = if model.known_measure().is_some() {
        optional(theta_check(model, &records, reference(cfg), COVERING_TOL))
    } else {
        Value::Null
    };
    let radii = match &cfg.radii {
        Some(r) => r.clone(),
        None => {
            let diam = model.diameter_bound()?;
            (0..6).map(|k| diam / 10.0 * 0.5f64.powi(k)).collect()
        }
    };
    let generalest = match minkowski_estimate(model, d, &radii) {
        Ok(m) => json!({ "minkowski": m, "check": optional(generalest_check(&records, d, &m)) }),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let mut extra = Vec::new();
    let mut sigma = Value::Null;
    if let Some(s) = cfg.s.filter(|s| *s > d) {
        let pol = polarization_sequence(model, schedule, s, cfg.constrained, &polar_opts(cfg))?;
        if model.known_measure().is_some() {
            sigma = optional(sigma_check(model, &pol, s, None, POLARIZATION_TOL));
        }
        extra.push((format!("polarization_s{s}"), pol));
    }
    let passed = verdict_ok(&theta) && verdict_ok(&sigma) && verdict_ok(generalest.get("check").unwrap_or(&Value::Null));
    let report = json!({
        "command": "asymptotics",
        "model": model.id(),
        "d": d,
        "window": optional(limit_window(&records, 0.5, COVERING_TOL)),
        "theta": theta,
        "sigma": sigma,
        "generalest": generalest,
    });
    Ok(RunOutput { records, extra, report, passed })
}

fn bridge(cfg: &ExperimentConfig, model: &SetModel, schedule: &[usize]) -> covlab_core::Result<RunOutput> {
    let s_values = cfg.s_values.clone().unwrap_or_else(|| vec![cfg.s.expect("validated")]);
    let (cov, pols) = bridge_runs(model, schedule, &s_values, &covering_opts(cfg), &polar_opts(cfg))?;
    let d = model.dim_d();
    let p = model.ambient_dim() as f64;
    let mut reports = Vec::new();
    let mut extra = Vec::new();
    for (s, pol) in pols {
        reports.push(bridge_check(&cov, &pol, s, d, p)?);
        extra.push((format!("polarization_s{s}"), pol));
    }
    let trivial = reports.iter().all(|r| r.trivial_direction);
    let bounded = reports.iter().all(|r| r.c_hat_variation <= BRIDGE_VARIATION);
    let monotone = gap_decreases_in_s(&reports);
    let report = json!({
        "command": "bridge",
        "model": model.id(),
        "d": d,
        "p": p,
        "reports": reports,
        "trivial_direction": trivial,
        "c_hat_bounded": bounded,
        "gap_decreases_in_s": monotone,
    });
    Ok(RunOutput { records: cov, extra, report, passed: trivial && bounded && monotone })
}

fn uniformity(cfg: &ExperimentConfig, model: &SetModel, schedule: &[usize]) -> covlab_core::Result<RunOutput> {
    let k = cfg.cells.unwrap_or(4);
    let d = model.dim_d();
    let opts = covering_opts(cfg);
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut passed = true;
    for &n in schedule {
        let c = best_covering(model, n, cfg.constrained, &opts)?;
        records.push(SequenceRecord::covering(n, c.radius, d, c.exact, c.mesh_certificate));
        let dev = uniformity_discrepancy(&c.configuration, model, k)?;
        let ok = cfg.max_deviation.map_or(true, |m| dev <= m);
        passed &= ok;
        rows.push(json!({ "N": n, "deviation": dev, "cells": k, "within_limit": ok }));
    }
    let report = json!({
        "command": "uniformity",
        "model": model.id(),
        "d": d,
        "max_deviation": cfg.max_deviation,
        "rows": rows,
    });
    Ok(RunOutput { records, extra: Vec::new(), report, passed })
}

fn verify(cfg: &ExperimentConfig) -> RunOutput {
    let summary = verify_suite(&VerifyOptions { seed: cfg.seed, ..Default::default() });
    let passed = summary.all_passed();
    let report = json!({
        "command": "verify",
        "passed": passed,
        "checks": summary.checks,
    });
    RunOutput { records: Vec::new(), extra: Vec::new(), report, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    fn run_json(cmd: Command, text: &str) -> RunOutput {
        let cfg = parse(text).unwrap();
        let model = cfg.validate(cmd).unwrap();
        run(cmd, &cfg, model).unwrap()
    }

    #[test]
    fn cover_unit_interval() {
        let out = run_json(Command::Cover, r#"{"model": {"box": {"dim": 1, "side": 1}}, "schedule": {"from": 1, "to": 100}}"#);
        assert_eq!(out.records.len(), 100);
        assert!(out.records.iter().all(|r| (r.normalized - 0.5).abs() < 1e-12 && r.exact));
        assert!(out.passed);
        assert_eq!(out.report["theta"]["verdict"], "pass");
    }

    #[test]
    fn fractal_cantor_verdict() {
        let out = run_json(Command::Fractal, r#"{"model": "cantor", "schedule": {"from": 1, "to": 4096}}"#);
        assert_eq!(out.report["lattice"], true);
        assert_eq!(out.report["base"], "1/3");
        assert!(out.report["oscillation_ratio"].as_f64().unwrap() >= 2.9);
        assert_eq!(out.report["renewal"]["matches"], true);
        assert!(out.passed);
    }

    #[test]
    fn uniformity_limit_is_enforced() {
        let text = r#"{"model": {"box": {"dim": 1, "side": 1}}, "schedule": [10, 40], "cells": 4, "max_deviation": 0.0}"#;
        let out = run_json(Command::Uniformity, text);
        assert!(!out.passed);
    }
}

use serde_json::{json, Value};

use mfcascade::cascade::{dyadic_measure, Cascade};
use mfcascade::estimate::{
    convergence_study, moment_scaling_estimate_with, partition_estimate_with, EstimateOptions, ScalingReport,
};
use mfcascade::renyi::{analytic_curve, b_threshold, check_conditions, legendre, q_range, t_analytic, RenyiCurve, Status};

use crate::config::{Grid, Methods, RunConfig};
use crate::output::{num, opt, OutDir, Table};
use crate::CliError;

/// Default analytic grid: 512 intervals on the admissible range plus `q = 1`,
/// stopping just short of an open upper end.
fn q_points(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    if let Some(g) = cfg.q_grid {
        return g.points();
    }
    let hi = q_range(&cfg.scenario)?.interval.hi;
    let stop = if t_analytic(&cfg.scenario, hi).is_ok() { hi } else { hi * (1.0 - 1e-6) };
    let mut q = Grid { start: 0.0, stop, count: 513 }.points()?;
    if stop > 1.0 && !q.contains(&1.0) {
        q.push(1.0);
        q.sort_by(f64::total_cmp);
    }
    Ok(q)
}

fn analytic_summary(cfg: &RunConfig) -> Result<Value, CliError> {
    let s = &cfg.scenario;
    let range = q_range(s)?;
    let conditions = check_conditions(s)?;
    Ok(json!({
        "c_x": s.c_x()?,
        "q_range": range,
        "b_threshold": b_threshold(s).ok(),
        "overall": conditions.overall(),
        "conditions": conditions.conditions,
    }))
}

pub fn analytic(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let summary = analytic_summary(cfg)?;
    let curve = analytic_curve(&cfg.scenario, &q_points(cfg)?)?;
    let mut t = Table::new(&["q", "T", "K"]);
    for (q, v) in curve.q.iter().zip(&curve.t) {
        t.row(&[num(*q), num(*v), num(v + 1.0)]);
    }
    out.table("curve.csv", t)?;
    out.json("analytic.json", &summary)?;
    Ok(json!({ "overall": summary["overall"], "b_threshold": summary["b_threshold"] }))
}

pub fn check(cfg: &RunConfig) -> Result<(Value, Status), CliError> {
    Ok((analytic_summary(cfg)?, check_conditions(&cfg.scenario)?.overall()))
}

pub fn simulate(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let cc = cfg.cascade_config();
    let cascade = Cascade::new(&cc)?;
    let rep = cfg.simulate.replica;
    let x = cascade.log_mother(0, rep)?;
    let lam = cascade.product_path(rep)?;
    let a = mfcascade::cascade::cumulative(&lam);
    let masses = dyadic_measure(&a, cfg.simulate.n_box)?;

    let mut t = Table::new(&["t", "x"]);
    for (s, v) in x.times().zip(&x.values) {
        t.row(&[num(s), num(*v)]);
    }
    out.table("mother.csv", t)?;
    let mut t = Table::new(&["t", "lambda"]);
    for (s, v) in lam.times().zip(&lam.values) {
        t.row(&[num(s), num(*v)]);
    }
    out.table("product.csv", t)?;
    let mut t = Table::new(&["t", "a"]);
    for (s, v) in a.times().zip(&a.values) {
        t.row(&[num(s), num(*v)]);
    }
    out.table("cumulative.csv", t)?;
    let mut t = Table::new(&["k", "mass"]);
    for (k, m) in masses.iter().enumerate() {
        t.row(&[k.to_string(), num(*m)]);
    }
    out.table("masses.csv", t)?;
    Ok(json!({
        "replica": rep,
        "mother_diagnostics": x.diagnostics,
        "warnings": cc.warnings(),
    }))
}

fn report_table(r: &ScalingReport) -> Table {
    let mut t = Table::new(&["q", "estimate", "stderr", "analytic", "discrepancy", "r2"]);
    for row in &r.rows {
        t.row(&[num(row.q), num(row.estimate), num(row.stderr), opt(row.analytic), opt(row.discrepancy), num(row.fit.r2)]);
    }
    t
}

fn max_discrepancy(r: &ScalingReport) -> Option<f64> {
    r.rows.iter().filter_map(|x| x.discrepancy.map(f64::abs)).reduce(f64::max)
}

pub fn estimate(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let cc = cfg.cascade_config();
    let e = &cfg.estimate;
    let opts = EstimateOptions { bootstrap: e.bootstrap };
    let range = (e.range[0], e.range[1]);
    let mut results = serde_json::Map::new();
    let mut reports = Vec::new();
    if matches!(e.method, Methods::Partition | Methods::Both) {
        reports.push(("partition", partition_estimate_with(&cc, &e.q, range, &opts)?));
    }
    if matches!(e.method, Methods::MomentScaling | Methods::Both) {
        reports.push(("moment_scaling", moment_scaling_estimate_with(&cc, &e.q, range, &opts)?));
    }
    for (name, r) in &reports {
        out.table(&format!("report_{name}.csv"), report_table(r))?;
        out.json(&format!("report_{name}.json"), r)?;
        results.insert(name.to_string(), json!({ "max_abs_discrepancy": max_discrepancy(r), "warnings": r.warnings }));
    }
    results.insert("conditions".into(), json!(check_conditions(&cfg.scenario)?.overall()));
    if let Some(c) = &e.convergence {
        let study = convergence_study(&cc, c.q, &c.layers)?;
        let mut t = Table::new(&["n_layers", "mean", "stderr"]);
        for r in &study.rows {
            t.row(&[r.n_layers.to_string(), num(r.mean), num(r.stderr)]);
        }
        out.table("convergence.csv", t)?;
        let status = if study.grows {
            "nonconvergent"
        } else if study.flattens {
            "convergent"
        } else {
            "inconclusive"
        };
        results.insert(
            "convergence".into(),
            json!({ "q": study.q, "flattens": study.flattens, "grows": study.grows, "status": status }),
        );
    }
    Ok(Value::Object(results))
}

fn read_curve(path: &str) -> Result<RenyiCurve, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| CliError::Config(format!("{path}: no {name} column")))
    };
    let (iq, it) = (col("q")?, col("T")?);
    let (mut q, mut t) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::Config(format!("{path}: bad number on data line {}", k + 1)))
        };
        q.push(get(iq)?);
        t.push(get(it)?);
    }
    Ok(RenyiCurve { q, t, stderr: None })
}

pub fn legendre_cmd(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let curve = match &cfg.legendre.curve {
        Some(p) => read_curve(p)?,
        None => analytic_curve(&cfg.scenario, &q_points(cfg)?)?,
    };
    if curve.q.len() < 2 {
        return Err(CliError::Config("the curve needs at least two points".into()));
    }
    let alpha = match cfg.legendre.alpha {
        Some(g) => g.points()?,
        None => {
            let n = curve.q.len();
            let s0 = (curve.t[1] - curve.t[0]) / (curve.q[1] - curve.q[0]);
            let s1 = (curve.t[n - 1] - curve.t[n - 2]) / (curve.q[n - 1] - curve.q[n - 2]);
            Grid { start: s0.min(s1), stop: s0.max(s1), count: 64 }.points()?
        }
    };
    let pts = legendre(&curve, &alpha)?;
    let mut t = Table::new(&["alpha", "value", "argmin_q", "at_grid_edge"]);
    for p in &pts {
        t.row(&[num(p.alpha), num(p.value), num(p.argmin_q), p.at_grid_edge.to_string()]);
    }
    out.table("legendre.csv", t)?;
    Ok(json!({ "points": pts.len(), "at_grid_edge": pts.iter().filter(|p| p.at_grid_edge).count() }))
}

//! File formats.
//!
//! Segment CSV: `theta,v1,...,vn,jump` with `jump` in {0, 1}; a file with
//! any jump flag set is read as a cadlag step segment, otherwise as
//! continuous piecewise linear. Trajectory CSV: `t,v1,...,vn,is_jump`.
//! Floats are written in Rust's shortest round-trip form, so identical
//! values always give identical bytes.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use sdde_core::conditions::{Status, Verdict, Witness};
use sdde_core::engine::Trajectory;
use sdde_core::paths::{Interp, Segment, SegmentView};
use sdde_core::rates::RateReport;

use crate::error::{LabError, LabResult};

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn value_header(first: &str, dim: usize, last: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    h.extend((1..=dim).map(|i| format!("v{i}")));
    h.push(last.to_string());
    h
}

pub fn write_segment_csv(path: &Path, seg: &Segment) -> LabResult<()> {
    let flags = seg.jump_flags();
    let rows: Vec<Vec<String>> = seg
        .grid()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = vec![num(*t)];
            r.extend(seg.value_at(k).iter().map(|v| num(*v)));
            r.push(if flags.get(k).copied().unwrap_or(false) { "1" } else { "0" }.into());
            r
        })
        .collect();
    write_rows(path, &value_header("theta", seg.dim(), "jump"), &rows)
}

pub fn read_segment_csv(path: &Path) -> LabResult<Segment> {
    let bad = |m: &str| LabError::Config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "theta" || &header[header.len() - 1] != "jump" {
        return Err(bad("expected header theta,v1..vn,jump"));
    }
    let dim = header.len() - 2;
    let (mut grid, mut values, mut jumps) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec[i].trim().parse::<f64>().map_err(|_| bad("non-numeric field"));
        grid.push(field(0)?);
        for i in 0..dim {
            values.push(field(i + 1)?);
        }
        jumps.push(match rec[dim + 1].trim() {
            "0" => false,
            "1" => true,
            _ => return Err(bad("jump column must be 0 or 1")),
        });
    }
    let kind = if jumps.iter().any(|j| *j) { Interp::CadlagStep } else { Interp::ContinuousLinear };
    let flags = (kind == Interp::CadlagStep).then_some(jumps);
    Ok(Segment::new(kind, grid, dim, values, flags)?)
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> LabResult<()> {
    let flags = traj.jump_flags();
    let rows: Vec<Vec<String>> = traj
        .times()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = vec![num(*t)];
            r.extend(traj.state(k).iter().map(|v| num(*v)));
            r.push(if flags.get(k).copied().unwrap_or(false) { "1" } else { "0" }.into());
            r
        })
        .collect();
    write_rows(path, &value_header("t", traj.dim(), "is_jump"), &rows)
}

const RATE_FIELDS: [&str; 12] = [
    "fitted_rate",
    "intercept",
    "r_squared",
    "slope_se",
    "window_start",
    "window_end",
    "analytic_rate",
    "n_points",
    "power",
    "pairs",
    "diverged",
    "trusted",
];

fn rate_values(r: &RateReport) -> Vec<String> {
    vec![
        num(r.fitted_rate),
        num(r.intercept),
        num(r.r_squared),
        num(r.slope_se),
        num(r.window.0),
        num(r.window.1),
        opt(r.analytic_rate),
        r.n_points.to_string(),
        r.power.to_string(),
        r.pairs.to_string(),
        r.diverged.to_string(),
        r.trusted.to_string(),
    ]
}

/// `key = value` lines, then one `warning = ...` line per warning.
pub fn rate_report_text(r: &RateReport) -> String {
    let mut out = String::new();
    for (k, v) in RATE_FIELDS.iter().zip(rate_values(r)) {
        out.push_str(&format!("{k} = {v}\n"));
    }
    for w in &r.warnings {
        out.push_str(&format!("warning = {w}\n"));
    }
    out
}

pub fn write_rate_report(dir: &Path, r: &RateReport, text: bool) -> LabResult<Vec<String>> {
    let header: Vec<String> = RATE_FIELDS.iter().map(|s| s.to_string()).collect();
    write_rows(&dir.join("rate.csv"), &header, &[rate_values(r)])?;
    let curve: Vec<Vec<String>> = r.curve.iter().map(|(t, d)| vec![num(*t), num(*d)]).collect();
    write_rows(&dir.join("curve.csv"), &["t".into(), "distance".into()], &curve)?;
    let mut files = vec!["rate.csv".to_string(), "curve.csv".to_string()];
    if text {
        fs::write(dir.join("rate.txt"), rate_report_text(r))?;
        files.push("rate.txt".into());
    }
    Ok(files)
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::PassWithConstants => "PassWithConstants",
        Status::FailWithWitness => "FailWithWitness",
        Status::Inconclusive => "Inconclusive",
    }
}

/// JSON numbers cannot be infinite or NaN; those become strings.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}

fn jopt(x: Option<f64>) -> Value {
    x.map(jnum).unwrap_or(Value::Null)
}

pub fn verdict_json(v: &Verdict, replayed: Option<f64>, witness_files: &[String]) -> Value {
    let witness = match &v.witness {
        None => Value::Null,
        Some(Witness::Triple { trial, t, .. }) => json!({
            "kind": "triple",
            "trial": trial,
            "t": jnum(*t),
            "files": witness_files,
        }),
        Some(Witness::Constants { kappa, alpha1, alpha2 }) => json!({
            "kind": "constants",
            "kappa": jnum(*kappa),
            "alpha1": jnum(*alpha1),
            "alpha2": jnum(*alpha2),
        }),
    };
    json!({
        "assumption": v.assumption.id(),
        "status": status_name(v.status),
        "constants": {
            "alpha1": jopt(v.constants.alpha1),
            "alpha2": jopt(v.constants.alpha2),
            "alpha3": jopt(v.constants.alpha3),
            "kappa": jopt(v.constants.kappa),
        },
        "trials": v.trials,
        "margin": jnum(v.margin),
        "local_only": v.local_only,
        "note": v.note,
        "witness": witness,
        "replayed_margin": jopt(replayed),
    })
}

pub fn verdict_line(v: &Verdict) -> String {
    let c = &v.constants;
    let mut parts = vec![format!("{:<5} {}", v.assumption.id(), status_name(v.status))];
    for (k, x) in [("alpha1", c.alpha1), ("alpha2", c.alpha2), ("alpha3", c.alpha3), ("kappa", c.kappa)] {
        if let Some(x) = x {
            parts.push(format!("{k}={x:.6}"));
        }
    }
    parts.push(format!("margin={:.3e}", v.margin));
    if v.local_only {
        parts.push("local-only".into());
    }
    if let Some(n) = &v.note {
        parts.push(format!("({n})"));
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = Segment::step(1.0, 0.25, &[(-0.5, 1.0), (-0.1, -2.0)]).unwrap();
        write_segment_csv(&p, &s).unwrap();
        assert_eq!(read_segment_csv(&p).unwrap(), s);
        let c = Segment::from_fn(Interp::ContinuousLinear, 2.0, 9, 2, |t, v| {
            v[0] = t.sin();
            v[1] = 1.0 / 3.0;
        })
        .unwrap();
        write_segment_csv(&p, &c).unwrap();
        assert_eq!(read_segment_csv(&p).unwrap(), c);
    }
}

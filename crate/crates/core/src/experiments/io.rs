use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::record::{Aggregate, ExperimentResult, Outcome, TrialRecord, SCHEMA};
use crate::distance::Distance;
use crate::error::{Error, Result};

const FLOAT_TOL: f64 = 1e-12;

fn tagged(value: impl serde::Serialize, tag: &str) -> Result<Value> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::Invariant(format!("record does not serialise: {e}")))?;
    if let Value::Object(map) = &mut v {
        map.insert("record".into(), Value::String(tag.into()));
    }
    Ok(v)
}

/// One line per trial, then a summary line.
pub fn write_result(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = |v: Value| -> Result<()> {
        writeln!(out, "{v}").map_err(|e| Error::io(path, e))
    };
    for r in result.records() {
        line(tagged(r, "trial")?)?;
    }
    line(tagged(result, "summary")?)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a result file and check every stored aggregate against the trials.
pub fn load_result(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut trials: Vec<TrialRecord> = Vec::new();
    let mut summary: Option<ExperimentResult> = None;
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::parse(path, format!("line {}: {m}", no + 1));
        let mut v: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let tag = v
            .as_object_mut()
            .and_then(|m| m.remove("record"))
            .ok_or_else(|| bad("missing \"record\" field".into()))?;
        match tag.as_str() {
            Some("trial") => {
                trials.push(serde_json::from_value(v).map_err(|e| bad(e.to_string()))?)
            }
            Some("summary") if summary.is_none() => {
                summary = Some(serde_json::from_value(v).map_err(|e| bad(e.to_string()))?)
            }
            Some("summary") => return Err(bad("second summary record".into())),
            _ => return Err(bad(format!("unknown record type {tag}"))),
        }
    }
    let mut result = summary.ok_or_else(|| Error::parse(path, "no summary record"))?;
    if result.schema != SCHEMA {
        return Err(Error::parse(
            path,
            format!("schema {:?}, expected {SCHEMA:?}", result.schema),
        ));
    }
    for r in trials {
        let point = result
            .points
            .iter_mut()
            .find(|p| p.point == r.point)
            .ok_or_else(|| Error::Invariant(format!("trial for unknown point {}", r.point)))?;
        point.records.push(r);
    }
    check(&result)?;
    Ok(result)
}

fn check(result: &ExperimentResult) -> Result<()> {
    for pt in &result.points {
        let fail = |m: String| Error::Invariant(format!("point {}: {m}", pt.point));
        if pt.records.len() != result.trials {
            return Err(fail(format!(
                "{} trial records, expected {}",
                pt.records.len(),
                result.trials
            )));
        }
        for (t, r) in pt.records.iter().enumerate() {
            if r.trial != t || r.outcome.kind() != result.kind {
                return Err(fail(format!("trial record {t} is out of order or of the wrong kind")));
            }
        }
        let fresh = Aggregate::from_records(result.kind, &pt.records);
        let stored = serde_json::to_value(&pt.aggregate).expect("aggregates serialise");
        let fresh = serde_json::to_value(&fresh).expect("aggregates serialise");
        if !approx_eq(&stored, &fresh) {
            return Err(fail(format!(
                "stored aggregate {stored} disagrees with the trials ({fresh})"
            )));
        }
        let accepted = pt
            .aggregate
            .success_fraction()
            .map(|f| f >= result.acceptance);
        if accepted != pt.meets_acceptance {
            return Err(fail("acceptance verdict disagrees with the aggregate".into()));
        }
        let fracs = match &pt.aggregate {
            Aggregate::Diameter { connected_fraction, interval_fraction, .. } => {
                vec![Some(*connected_fraction), *interval_fraction]
            }
            Aggregate::Tail { violation_fraction, .. } => vec![Some(*violation_fraction)],
            Aggregate::Expansion { success_fraction, .. } => vec![Some(*success_fraction)],
            Aggregate::Coupling { subgraph_fraction, ordered_fraction, .. } => {
                vec![Some(*subgraph_fraction), *ordered_fraction]
            }
        };
        if fracs.into_iter().flatten().any(|f| !(0.0..=1.0).contains(&f)) {
            return Err(fail("fraction outside [0, 1]".into()));
        }
    }
    Ok(())
}

fn approx_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => x == y || (x - y).abs() <= FLOAT_TOL * x.abs().max(y.abs()),
            _ => x == y,
        },
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| approx_eq(a, b))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| approx_eq(v, w)))
        }
        _ => a == b,
    }
}

/// Whitespace-separated `(x, y)` series next to `stem`: a diameter histogram
/// per point, the mean expansion per step against the bound, the tail
/// frequency against the bound, or the coupled diameters per trial.
pub fn write_plot_data(result: &ExperimentResult, stem: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let stem = stem.as_ref();
    let name = |suffix: String| {
        let mut s = stem.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, body: String| -> Result<()> {
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let mut tail = String::from("# p S violation_fraction bound\n");
    for pt in &result.points {
        match &pt.aggregate {
            Aggregate::Diameter { histogram, .. } => {
                let mut body = format!("# p = {}\n# diameter count\n", pt.p);
                for (d, c) in histogram {
                    match d {
                        Distance::Finite(x) => body.push_str(&format!("{x} {c}\n")),
                        Distance::Infinite => body.push_str(&format!("# disconnected {c}\n")),
                    }
                }
                emit(name(format!(".p{}.diameter.dat", pt.point)), body)?;
            }
            Aggregate::Expansion { mean_gamma, bound, min_gamma, .. } => {
                let mut body = format!("# p = {}\n# step mean_gamma min_gamma bound\n", pt.p);
                for (k, m) in mean_gamma.iter().enumerate() {
                    body.push_str(&format!(
                        "{k} {m} {} {}\n",
                        min_gamma.get(k).copied().unwrap_or(0),
                        bound.get(k).copied().unwrap_or(f64::NAN)
                    ));
                }
                emit(name(format!(".p{}.expansion.dat", pt.point)), body)?;
            }
            Aggregate::Tail { s_ij, violation_fraction, bound, .. } => {
                tail.push_str(&format!("{} {s_ij} {violation_fraction} {bound}\n", pt.p));
            }
            Aggregate::Coupling { .. } => {
                let mut body = format!("# p = {}\n# trial diameter_kernel diameter_er\n", pt.p);
                for r in &pt.records {
                    if let Outcome::Coupling { diameter_kernel, diameter_er, .. } = &r.outcome {
                        body.push_str(&format!("{} {diameter_kernel} {diameter_er}\n", r.trial));
                    }
                }
                emit(name(format!(".p{}.coupling.dat", pt.point)), body)?;
            }
        }
    }
    if result.kind == super::ExperimentKind::Tail {
        emit(name(".tail.dat".into()), tail)?;
    }
    Ok(written)
}

//! Aggregation of repeated runs.
//!
//! `report` reads the `results.json` of earlier runs and summarizes their
//! headline numbers. Runs are only comparable when they share parameters,
//! operation and resolved knobs, i.e. the same `config_hash`; anything else
//! is refused as an invalid manifest.

use std::path::Path;

use langevin_ldp::stats::mean_se;
use serde_json::{json, Value};

use crate::commands::{Outcome, ReportKnobs};
use crate::svg::{Figure, Series};
use crate::Failure;

struct Run {
    label: String,
    seed: u64,
    manifest_hash: String,
    config_hash: String,
    operation: String,
    headline_name: String,
    headline: f64,
}

fn load(dir: &Path, label: String) -> Result<Run, Failure> {
    let path = dir.join("results.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("malformed {}: {e}", path.display())))?;
    let field = |k: &str| {
        v.get(k)
            .ok_or_else(|| Failure::invalid(format!("{} has no `{k}`", path.display())))
    };
    let text_of = |k: &str| -> Result<String, Failure> {
        field(k)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| Failure::invalid(format!("`{k}` in {} is not a string", path.display())))
    };
    if text_of("status")? != "ok" {
        return Err(Failure::invalid(format!("run {label} did not finish successfully")));
    }
    let headline = field("headline")?;
    Ok(Run {
        seed: field("seed")?.as_u64().unwrap_or_default(),
        manifest_hash: text_of("manifest_hash")?,
        config_hash: text_of("config_hash")?,
        operation: text_of("operation")?,
        headline_name: headline["name"].as_str().unwrap_or_default().to_owned(),
        headline: headline["value"]
            .as_f64()
            .ok_or_else(|| Failure::invalid(format!("run {label} has no numeric headline")))?,
        label,
    })
}

pub fn report(k: &ReportKnobs, base: &Path) -> Result<Outcome, Failure> {
    if k.runs.len() < 2 {
        return Err(Failure::invalid("report needs at least two runs"));
    }
    let runs = k
        .runs
        .iter()
        .map(|d| load(&base.join(d), d.display().to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &runs[0];
    if first.operation == "report" {
        return Err(Failure::invalid("cannot aggregate reports"));
    }
    for r in &runs[1..] {
        if r.config_hash != first.config_hash {
            return Err(Failure::invalid(format!(
                "runs {} and {} have different parameter sets ({} vs {})",
                first.label, r.label, first.config_hash, r.config_hash
            )));
        }
    }
    let values: Vec<f64> = runs.iter().map(|r| r.headline).collect();
    let summary = mean_se(&values)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(["run", "seed", "manifest_hash", "headline"]).map_err(io)?;
    for r in &runs {
        w.write_record([
            r.label.clone(),
            r.seed.to_string(),
            r.manifest_hash.clone(),
            r.headline.to_string(),
        ])
        .map_err(io)?;
    }
    let csv = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    let points: Vec<(f64, f64)> = runs.iter().enumerate().map(|(i, r)| (i as f64, r.headline)).collect();
    let span = vec![(0.0, summary.mean), ((runs.len() - 1) as f64, summary.mean)];
    Ok(Outcome {
        csv,
        result: json!({
            "operation": first.operation,
            "config_hash": first.config_hash,
            "headline_name": first.headline_name,
            "runs": runs.len(),
            "mean": summary.mean,
            "se": summary.se,
            "min": values.iter().copied().fold(f64::INFINITY, f64::min),
            "max": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
        headline: ("mean".into(), summary.mean),
        figure: Some(Figure {
            title: format!("{} across runs", first.headline_name),
            x_label: "run".into(),
            y_label: first.headline_name.clone(),
            series: vec![Series::scatter("runs", points), Series::line("mean", span)],
            ..Default::default()
        }),
        converged: true,
    })
}

//! Report and plot files.
//!
//! Layout under the output directory:
//! `report.json`, `report.csv`, `timings.json`, `series/<slug>.csv` and
//! `plots/<slug>.svg`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::record::{slug, Series};
use crate::suite::{Report, SuiteRun};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
    All,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::All)
    }
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::All)
    }
    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::All)
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, bytes).map_err(io(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Emit(format!("{}: {e}", path.display()))
}

pub fn report_json(report: &Report) -> CliResult<String> {
    serde_json::to_string_pretty(report)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Emit(e.to_string()))
}

/// One row per record item; records without items get one row.
pub fn report_csv(report: &Report) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| CliError::Emit(e.to_string());
    w.write_record([
        "id", "check", "subject", "anchor", "seed", "inputs_digest", "status", "label", "mode", "relation", "value", "bound",
        "slack", "tolerance", "passed", "error",
    ])
    .map_err(e)?;
    for r in &report.records {
        let head = [
            r.id.clone(),
            r.check.clone(),
            r.subject.clone(),
            r.anchor.clone(),
            r.seed.to_string(),
            r.inputs_digest.clone(),
            name(&r.status),
        ];
        let err = r.error.clone().unwrap_or_default();
        if r.items.is_empty() {
            let mut row: Vec<String> = head.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.push(err.clone());
            w.write_record(&row).map_err(e)?;
        }
        for i in &r.items {
            let mut row: Vec<String> = head.to_vec();
            row.extend([
                i.label.clone(),
                name(&i.mode),
                name(&i.relation),
                i.value.to_string(),
                i.bound.to_string(),
                i.slack.to_string(),
                i.tolerance.to_string(),
                i.passed.to_string(),
                err.clone(),
            ]);
            w.write_record(&row).map_err(e)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Emit(e.to_string()))
}

/// Serde name of a unit enum variant.
fn name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Table behind a series.
pub fn series_csv(series: &Series) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let path = PathBuf::from(series.id());
    let e = csv_err(&path);
    match series {
        Series::Covariance { times, paths, mean, .. } => {
            let mut head = vec!["t".to_string()];
            head.extend((0..paths.len()).map(|k| format!("path{k}")));
            head.push("mean".into());
            w.write_record(&head).map_err(&e)?;
            for (j, t) in times.iter().enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(paths.iter().map(|p| p[j].to_string()));
                row.push(mean[j].to_string());
                w.write_record(&row).map_err(&e)?;
            }
        }
        Series::Gap { times, paths, .. } => {
            let mut head = vec!["t".to_string()];
            head.extend((0..paths.len()).map(|k| format!("path{k}")));
            w.write_record(&head).map_err(&e)?;
            for (j, t) in times.iter().enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(paths.iter().map(|p| p[j].to_string()));
                w.write_record(&row).map_err(&e)?;
            }
        }
        Series::Sweep { rows, .. } => {
            w.write_record(["direction", "offset", "value"]).map_err(&e)?;
            for r in rows {
                w.write_record([join(&r.direction), r.offset.to_string(), r.value.to_string()]).map_err(&e)?;
            }
        }
        Series::Path { path, .. } => {
            let n = path.theta.first().map_or(0, Vec::len);
            let mut head = vec!["t".to_string()];
            head.extend((0..n).map(|i| format!("theta{i}")));
            head.extend((0..n).map(|i| format!("a{i}")));
            for i in 0..n {
                head.extend((0..n).map(|j| format!("A{i}{j}")));
            }
            w.write_record(&head).map_err(&e)?;
            for (k, t) in path.times.iter().enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(path.theta[k].iter().map(f64::to_string));
                row.extend(path.a[k].iter().map(f64::to_string));
                row.extend(path.cov[k].iter().flatten().map(f64::to_string));
                w.write_record(&row).map_err(&e)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Emit(e.to_string()))
}

/// Writes the selected formats under `out`; returns the files written.
pub fn emit_report(run: &SuiteRun, out: &Path, format: Format) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |rel: String, bytes: &[u8]| -> CliResult<()> {
        let p = out.join(rel);
        write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    if format.json() {
        put("report.json".into(), report_json(&run.report)?.as_bytes())?;
    }
    if format.csv() {
        put("report.csv".into(), &report_csv(&run.report)?)?;
        for s in &run.series {
            put(format!("series/{}.csv", slug(s.id())), &series_csv(s)?)?;
        }
    }
    if format.svg() {
        for s in &run.series {
            if let Some(doc) = svg::render(s) {
                put(format!("plots/{}.svg", slug(s.id())), doc.as_bytes())?;
            }
        }
    }
    let timings = serde_json::to_string_pretty(&run.timings).map_err(|e| CliError::Emit(e.to_string()))?;
    put("timings.json".into(), timings.as_bytes())?;
    Ok(written)
}

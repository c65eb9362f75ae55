//! Suite orchestration: expand checks into cases, run them in parallel,
//! assemble records in id order.

use std::collections::BTreeMap;
use std::time::Instant;

use lcl_core::quadrature::derive_seed;
use lcl_core::slicing::ConvexBody;
use lcl_core::Density;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::{self, Case, Check, Ctx, Group, Source};
use crate::config::SuiteConfig;
use crate::error::{CliError, CliResult};
use crate::record::{CheckRecord, Series};

/// Records of one run. This is what `report.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.records.iter().any(CheckRecord::failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub id: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub report: Report,
    pub series: Vec<Series>,
    /// Wall-clock per record; kept out of the report so it stays bit-stable.
    pub timings: Vec<Timing>,
}

/// Seed of the case with record id `id`.
pub fn case_seed(master: u64, id: &str) -> u64 {
    let h = Sha256::digest(id.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&h[..8]);
    derive_seed(master, u64::from_le_bytes(b))
}

pub fn source(cfg: &SuiteConfig) -> CliResult<Source> {
    let spec_err = |spec: &str, e: lcl_core::Error| CliError::Spec {
        spec: spec.to_string(),
        reason: e.to_string(),
    };
    let densities = cfg
        .densities
        .as_ref()
        .map(|v| v.iter().map(|s| s.parse::<Density>().map_err(|e| spec_err(s, e))).collect::<CliResult<Vec<_>>>())
        .transpose()?;
    let bodies = cfg
        .bodies
        .as_ref()
        .map(|v| v.iter().map(|s| s.parse::<ConvexBody>().map_err(|e| spec_err(s, e))).collect::<CliResult<Vec<_>>>())
        .transpose()?;
    Ok(Source {
        densities,
        bodies,
        grid: cfg.parsed_grid(),
        mc: cfg.monte_carlo.clone(),
    })
}

/// Checks in the given groups, narrowed by the config's selection.
pub fn selected(cfg: &SuiteConfig, groups: &[Group]) -> Vec<&'static Check> {
    checks::registry()
        .iter()
        .filter(|c| groups.contains(&c.group))
        .filter(|c| cfg.checks.as_ref().map_or(true, |ids| ids.iter().any(|id| id == c.id)))
        .collect()
}

struct Job {
    check: &'static Check,
    id: String,
    subject: String,
    case: Case,
}

fn jobs(cfg: &SuiteConfig, groups: &[Group], src: &Source) -> Vec<Job> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for check in selected(cfg, groups) {
        for case in (check.cases)(src) {
            let base = format!("{}/{}", check.id, case.subject);
            let k = seen.entry(base.clone()).or_insert(0);
            *k += 1;
            let subject = if *k == 1 {
                case.subject.clone()
            } else {
                format!("{} #{}", case.subject, k)
            };
            out.push(Job {
                check,
                id: format!("{}/{}", check.id, subject),
                subject,
                case,
            });
        }
    }
    out
}

pub fn run_suite(cfg: &SuiteConfig, groups: &[Group]) -> CliResult<SuiteRun> {
    cfg.validate()?;
    let src = source(cfg)?;
    let jobs = jobs(cfg, groups, &src);
    let results: Vec<(CheckRecord, Vec<Series>, Timing)> = jobs
        .par_iter()
        .map(|job| {
            let seed = case_seed(cfg.seed, &job.id);
            let ctx = Ctx {
                seed,
                id: job.id.clone(),
            };
            let start = Instant::now();
            let outcome = job.case.run(&ctx);
            let seconds = start.elapsed().as_secs_f64();
            let (check, anchor) = (job.check.id, job.check.anchor);
            let (record, series) = match outcome {
                Ok(mut o) => {
                    if let Some(tol) = cfg.tolerances.get(check) {
                        o.report.items = o.report.items.into_iter().map(|i| i.with_tolerance(*tol)).collect();
                    }
                    let rec = CheckRecord::from_report(check, anchor, job.subject.clone(), seed, &job.case.inputs, o.report);
                    (rec, o.series)
                }
                Err(e) => (
                    CheckRecord::from_error(check, anchor, job.subject.clone(), seed, &job.case.inputs, e.to_string()),
                    Vec::new(),
                ),
            };
            let timing = Timing {
                id: job.id.clone(),
                seconds,
            };
            (record, series, timing)
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut series = Vec::new();
    let mut timings = Vec::new();
    for (r, s, t) in results {
        records.push(r);
        series.extend(s);
        timings.push(t);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    series.sort_by(|a, b| a.id().cmp(b.id()));
    timings.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(SuiteRun {
        report: Report {
            seed: cfg.seed,
            records,
        },
        series,
        timings,
    })
}

//! Report records and plot series.

use lcl_core::check::{CheckItem, CheckReport, Mode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every asserted item holds.
    Pass,
    /// Some asserted item fails, or the computation errored.
    Fail,
    /// Only recorded quantities, nothing asserted.
    Observe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// `check/subject`, unique within a run; records are sorted by it.
    pub id: String,
    pub check: String,
    /// Statement being tested.
    pub anchor: String,
    pub subject: String,
    pub seed: u64,
    /// SHA-256 of the canonical inputs (check, parameters, grid, seed).
    pub inputs_digest: String,
    pub status: Status,
    pub items: Vec<CheckItem>,
    /// Set when the computation itself failed.
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn from_report(check: &str, anchor: &str, subject: String, seed: u64, inputs: &serde_json::Value, report: CheckReport) -> Self {
        let items = report.items;
        let asserted = items.iter().any(|i| i.mode == Mode::Assert);
        let ok = items.iter().all(|i| i.mode == Mode::Observe || i.passed);
        Self {
            id: format!("{check}/{subject}"),
            check: check.into(),
            anchor: anchor.into(),
            subject,
            seed,
            inputs_digest: digest(check, seed, inputs),
            status: match (asserted, ok) {
                (_, false) => Status::Fail,
                (true, true) => Status::Pass,
                (false, true) => Status::Observe,
            },
            items,
            error: None,
        }
    }

    pub fn from_error(check: &str, anchor: &str, subject: String, seed: u64, inputs: &serde_json::Value, err: String) -> Self {
        Self {
            id: format!("{check}/{subject}"),
            check: check.into(),
            anchor: anchor.into(),
            subject,
            seed,
            inputs_digest: digest(check, seed, inputs),
            status: Status::Fail,
            items: Vec::new(),
            error: Some(err),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// Asserted items that fail.
    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| i.mode == Mode::Assert && !i.passed)
    }
}

pub fn digest(check: &str, seed: u64, inputs: &serde_json::Value) -> String {
    let canonical = serde_json::json!({ "check": check, "seed": seed, "inputs": inputs });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Data behind plots and sweep tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Series {
    /// `t ↦ ‖A_t‖_op` for several paths; plotted with the `1/t` envelope.
    Covariance {
        id: String,
        times: Vec<f64>,
        paths: Vec<Vec<f64>>,
        mean: Vec<f64>,
    },
    /// `t ↦ λ_t` along several paths.
    Gap {
        id: String,
        times: Vec<f64>,
        paths: Vec<Vec<f64>>,
    },
    /// A scalar over directions × offsets.
    Sweep {
        id: String,
        quantity: String,
        rows: Vec<SweepRow>,
    },
    /// Path dump: `t, θ, a, vec(A)` per time of one path.
    Path {
        id: String,
        path: lcl_core::localization::TiltPath,
    },
}

impl Series {
    pub fn id(&self) -> &str {
        match self {
            Series::Covariance { id, .. } | Series::Gap { id, .. } | Series::Sweep { id, .. } | Series::Path { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub value: f64,
}

/// File-name stem for an id: the check name and a short hash of the id.
pub fn slug(id: &str) -> String {
    let check = id.split('/').next().unwrap_or(id);
    let h = hex::encode(Sha256::digest(id.as_bytes()));
    format!("{check}-{}", &h[..12])
}

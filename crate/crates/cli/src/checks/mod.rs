//! Registry of suite checks. Each check expands into cases (one density,
//! body or parameter set each); each case yields one record.

mod density;
mod isoperimetry;
mod localize;
mod slice;
mod spectral;

use std::sync::Arc;

use clap::ValueEnum;
use lcl_core::check::CheckReport;
use lcl_core::slicing::ConvexBody;
use lcl_core::{Density, Grid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::MonteCarlo;
use crate::record::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Density,
    Spectral,
    Isoperimetry,
    Localize,
    Slice,
}

/// What a case produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: CheckReport,
    pub series: Vec<Series>,
}

impl From<CheckReport> for Outcome {
    fn from(report: CheckReport) -> Self {
        Self {
            report,
            series: Vec::new(),
        }
    }
}

type Runner = Arc<dyn Fn(&Ctx) -> lcl_core::Result<Outcome> + Send + Sync>;

#[derive(Clone)]
pub struct Case {
    pub subject: String,
    /// Everything the result depends on besides the seed.
    pub inputs: Value,
    run: Runner,
}

impl Case {
    pub fn new<F>(subject: impl Into<String>, inputs: Value, run: F) -> Self
    where
        F: Fn(&Ctx) -> lcl_core::Result<Outcome> + Send + Sync + 'static,
    {
        Self {
            subject: subject.into(),
            inputs,
            run: Arc::new(run),
        }
    }

    pub fn run(&self, ctx: &Ctx) -> lcl_core::Result<Outcome> {
        (self.run)(ctx)
    }
}

/// Per-case runtime context.
#[derive(Debug, Clone)]
pub struct Ctx {
    /// Seed derived from the master seed and the record id.
    pub seed: u64,
    /// Record id, used to name series.
    pub id: String,
}

/// Inputs a check expands into cases.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub densities: Option<Vec<Density>>,
    pub bodies: Option<Vec<ConvexBody>>,
    pub grid: Option<Grid>,
    pub mc: MonteCarlo,
}

impl Source {
    /// The override grid when its dimension matches, else `d`'s default.
    pub fn grid_for(&self, d: &Density) -> Grid {
        match &self.grid {
            Some(g) if g.dim() == d.dim() => g.clone(),
            _ => d.default_grid(),
        }
    }

    /// Densities from the config, or `defaults`.
    fn densities_or(&self, defaults: Vec<Density>) -> Vec<Density> {
        self.densities.clone().unwrap_or(defaults)
    }
}

pub struct Check {
    pub id: &'static str,
    pub group: Group,
    /// Statement under test.
    pub anchor: &'static str,
    pub cases: fn(&Source) -> Vec<Case>,
}

pub fn registry() -> &'static [Check] {
    static ALL: std::sync::OnceLock<Vec<Check>> = std::sync::OnceLock::new();
    ALL.get_or_init(|| {
        let mut v = Vec::new();
        v.extend(density::checks());
        v.extend(spectral::checks());
        v.extend(isoperimetry::checks());
        v.extend(localize::checks());
        v.extend(slice::checks());
        v
    })
}

pub fn find(id: &str) -> Option<&'static Check> {
    registry().iter().find(|c| c.id == id)
}

/// Grid description for digests.
fn grid_json(g: &Grid) -> Value {
    json!(g.to_string())
}

fn density_inputs(d: &Density, g: &Grid) -> Value {
    json!({ "density": d.to_string(), "grid": grid_json(g) })
}

/// One case per density running `f` on the source grid for it.
fn per_density<F>(src: &Source, defaults: Vec<Density>, f: F) -> Vec<Case>
where
    F: Fn(&Density, &Grid) -> lcl_core::Result<CheckReport> + Send + Sync + Clone + 'static,
{
    src.densities_or(defaults)
        .into_iter()
        .map(|d| {
            let g = src.grid_for(&d);
            let f = f.clone();
            Case::new(d.to_string(), density_inputs(&d, &g), move |_| f(&d, &g).map(Outcome::from))
        })
        .collect()
}

pub(crate) mod catalog {
    use lcl_core::Density;

    pub fn gauss() -> Density {
        Density::standard_gaussian(1, 1.0).expect("valid")
    }

    pub fn gauss_s(n: usize, s: f64) -> Density {
        Density::standard_gaussian(n, s).expect("valid")
    }

    pub fn uniform_sqrt3() -> Density {
        let r = 3f64.sqrt();
        Density::uniform_interval(-r, r).expect("valid")
    }

    pub fn uniform(lo: f64, hi: f64) -> Density {
        Density::uniform_interval(lo, hi).expect("valid")
    }

    pub fn exponential() -> Density {
        Density::centered_exponential()
    }

    /// Standard Gaussian restricted to `[-1, 1]`.
    pub fn truncated_gaussian() -> Density {
        uniform(-1.0, 1.0).tilt(1.0, &[0.0]).expect("valid")
    }

    pub fn shifted_gaussian_tilt() -> Density {
        gauss().tilt(0.5, &[1.0]).expect("valid")
    }

    pub fn regularized_uniform() -> Density {
        uniform(-1.0, 1.0).regularize(0.1).expect("valid")
    }

    /// The one-dimensional catalog.
    pub fn line() -> Vec<Density> {
        vec![
            gauss(),
            uniform_sqrt3(),
            uniform(0.0, 1.0),
            exponential(),
            truncated_gaussian(),
            shifted_gaussian_tilt(),
        ]
    }
}

//! Suite configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! checks = ["lichnerowicz", "cheeger_buser"]
//! densities = ["gaussian:s=1", "tilt:t=1,theta=0,base=(uniform:box=[-1,1])"]
//!
//! [monte_carlo]
//! paths = 10000
//!
//! [tolerances]
//! spectral_gap = 2e-3
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lcl_core::slicing::ConvexBody;
use lcl_core::{Density, Grid};
use serde::{Deserialize, Serialize};

use crate::checks;
use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    /// Paths for scalar Monte Carlo checks.
    pub paths: usize,
    /// Paths for checks that eigen-solve per path.
    pub eigen_paths: usize,
    /// Horizon of the martingale and cross-scheme checks.
    pub horizon: f64,
    /// Time steps on `[0, horizon]` for path dumps and the covariance bound.
    pub steps: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            paths: 10_000,
            eigen_paths: 1_000,
            horizon: 0.5,
            steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Output directory; the command line `--out` wins.
    pub out: Option<PathBuf>,
    /// Check ids to run. Absent means every check of the subcommand; an
    /// empty list runs nothing.
    pub checks: Option<Vec<String>>,
    /// Density specs replacing each density check's default cases.
    pub densities: Option<Vec<String>>,
    /// Body specs replacing the default bodies of the slicing checks.
    pub bodies: Option<Vec<String>>,
    /// Grid spec used instead of each density's default grid when the
    /// dimensions match.
    pub grid: Option<String>,
    pub monte_carlo: MonteCarlo,
    /// Per-check tolerance overrides, applied to every asserted item.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out: None,
            checks: None,
            densities: None,
            bodies: None,
            grid: None,
            monte_carlo: MonteCarlo::default(),
            tolerances: BTreeMap::new(),
        }
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Every spec parses, every check id and tolerance key is known.
    pub fn validate(&self) -> CliResult<()> {
        for id in self.checks.iter().flatten().chain(self.tolerances.keys()) {
            if checks::find(id).is_none() {
                return Err(CliError::Config(format!("unknown check `{id}`")));
            }
        }
        for spec in self.densities.iter().flatten() {
            spec.parse::<Density>().map_err(|e| CliError::Spec {
                spec: spec.clone(),
                reason: e.to_string(),
            })?;
        }
        for spec in self.bodies.iter().flatten() {
            spec.parse::<ConvexBody>().map_err(|e| CliError::Spec {
                spec: spec.clone(),
                reason: e.to_string(),
            })?;
        }
        if let Some(g) = &self.grid {
            g.parse::<Grid>().map_err(|e| CliError::Spec {
                spec: g.clone(),
                reason: e.to_string(),
            })?;
        }
        let mc = &self.monte_carlo;
        if mc.paths == 0 || mc.eigen_paths == 0 || mc.steps == 0 || !(mc.horizon > 0.0) {
            return Err(CliError::Config(
                "monte_carlo counts, steps and horizon must be positive".into(),
            ));
        }
        for (k, v) in &self.tolerances {
            if !(*v >= 0.0) {
                return Err(CliError::Config(format!("tolerance for `{k}` must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn parsed_grid(&self) -> Option<Grid> {
        self.grid.as_ref().and_then(|g| g.parse().ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(SuiteConfig::from_toml("sed = 1"), Err(CliError::Config(_))));
        assert!(matches!(
            SuiteConfig::from_toml("[monte_carlo]\npath = 3"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn bad_density_names_the_spec() {
        let err = SuiteConfig::from_toml("densities = [\"gaussian:s=1\", \"banana:k=2\"]").unwrap_err();
        assert!(err.to_string().contains("banana:k=2"), "{err}");
    }

    #[test]
    fn defaults_fill_in() {
        let c = SuiteConfig::from_toml("seed = 3\nchecks = []").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.checks, Some(vec![]));
        assert_eq!(c.monte_carlo.paths, 10_000);
    }
}

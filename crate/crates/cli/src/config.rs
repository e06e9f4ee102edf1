//! Tolerances and run parameters, resolved as
//! command line > run directive > spec defaults > built-in values.

use procstar_core::algebra::{DEFAULT_CLUSTER_TOL, DEFAULT_NORMAL_TOL};
use procstar_core::blockmap::UNITARY_TOL;
use procstar_core::bounded::{DEFAULT_TRACE_LENGTH, RANK_TOL, TRACE_SLACK};
use procstar_core::calculus::DEFAULT_DIVERGENCE_THRESHOLD;
use procstar_core::tower::DEFAULT_COHERENCE_TOL;
use procstar_core::unitary::{FACTORIZATION_TOL, PATH_SAMPLES, RETRY_BUDGET};
use serde::Serialize;

use crate::error::CliError;
use crate::spec::{Defaults, RunSpec};

pub const BUILTIN_HORIZON: usize = 20;
pub const BUILTIN_TOL: f64 = 1e-10;
pub const BUILTIN_PROBES: usize = 20;

/// Values given on the command line.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
}

/// The parameters one run executes with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub tol: f64,
    pub seed: Option<u64>,
    /// RNG stream: the position of the run in the report.
    pub stream: u64,
    pub threshold: f64,
    pub probes: usize,
}

impl RunConfig {
    pub fn resolve(cli: &Overrides, run: &RunSpec, defaults: &Defaults, stream: u64) -> Result<Self, CliError> {
        let cfg = Self {
            horizon: cli.horizon.or(run.horizon).or(defaults.horizon).unwrap_or(BUILTIN_HORIZON),
            tol: cli.tol.or(run.tol).or(defaults.tol).unwrap_or(BUILTIN_TOL),
            seed: cli.seed.or(run.seed).or(defaults.seed),
            stream,
            threshold: cli
                .threshold
                .or(run.threshold)
                .or(defaults.threshold)
                .unwrap_or(DEFAULT_DIVERGENCE_THRESHOLD),
            probes: cli.probes.or(run.probes).or(defaults.probes).unwrap_or(BUILTIN_PROBES),
        };
        if cfg.horizon == 0 {
            return Err(CliError::Invalid("horizon must be at least 1".into()));
        }
        if !(cfg.tol > 0.0) {
            return Err(CliError::Invalid(format!("tolerance must be positive, got {}", cfg.tol)));
        }
        Ok(cfg)
    }

    pub fn seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Invalid(format!("{command} draws random probes and needs a seed")))
    }
}

/// Every fixed tolerance of the library, echoed in each report header.
#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub coherence: f64,
    pub cluster: f64,
    pub normality: f64,
    pub conjugator_unitarity: f64,
    pub rank: f64,
    pub trace_slack: f64,
    pub trace_length: u32,
    pub factorization: f64,
    pub retry_budget: usize,
    pub path_samples: usize,
    pub builtin_horizon: usize,
    pub builtin_tol: f64,
    pub builtin_threshold: f64,
    pub builtin_probes: usize,
}

impl Tolerances {
    pub fn current() -> Self {
        Self {
            coherence: DEFAULT_COHERENCE_TOL,
            cluster: DEFAULT_CLUSTER_TOL,
            normality: DEFAULT_NORMAL_TOL,
            conjugator_unitarity: UNITARY_TOL,
            rank: RANK_TOL,
            trace_slack: TRACE_SLACK,
            trace_length: DEFAULT_TRACE_LENGTH,
            factorization: FACTORIZATION_TOL,
            retry_budget: RETRY_BUDGET,
            path_samples: PATH_SAMPLES,
            builtin_horizon: BUILTIN_HORIZON,
            builtin_tol: BUILTIN_TOL,
            builtin_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            builtin_probes: BUILTIN_PROBES,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::SpecFile;

    #[test]
    fn precedence() {
        let spec = SpecFile::parse(
            r#"{"defaults": {"horizon": 7, "seed": 1, "tol": 1e-8},
                "runs": [{"command": "norm", "element": "x", "horizon": 9}]}"#,
            "inline",
        )
        .unwrap();
        let run = &spec.runs[0];
        let cfg = RunConfig::resolve(&Overrides::default(), run, &spec.defaults, 0).unwrap();
        assert_eq!((cfg.horizon, cfg.seed, cfg.tol), (9, Some(1), 1e-8));
        assert_eq!(cfg.threshold, DEFAULT_DIVERGENCE_THRESHOLD);
        let cli = Overrides {
            horizon: Some(3),
            ..Overrides::default()
        };
        assert_eq!(RunConfig::resolve(&cli, run, &spec.defaults, 0).unwrap().horizon, 3);
    }
}

//! Command-line harness around `procstar-core`: reads tower description
//! files, runs checks, and emits deterministic JSONL reports.

pub mod build;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod selftest;
pub mod spec;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::build::{parse_function, World};
use crate::commands::{execute, matches};
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::report::{CheckRecord, Mismatch, Report};
use crate::spec::{Command, RunSpec, SpecFile};

/// The worked examples shipped with the binary.
pub const BUNDLED_SPEC: &str = include_str!("../data/paper_examples.json");
pub const BUNDLED_ORIGIN: &str = "<bundled paper examples>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Every run in the spec file.
    Run,
    Norm,
    Spectrum,
    Bounded,
    Funcalc,
    CheckExact,
    QuotientIso,
    GelfandRoundtrip,
    UnitaryLog,
    ExpFactor,
    /// Every run in the bundled spec (or `--spec`).
    PaperExamples,
    /// Quick seeded invariant checks.
    Selftest,
}

impl Mode {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Clone, Debug, Parser)]
#[command(name = "procstar", version, about = "Checks statements about pro-C*-algebras on finite towers")]
pub struct Cli {
    pub mode: Mode,
    /// Tower description file; the bundled examples when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Run the command on this element instead of the spec's runs.
    #[arg(long)]
    pub element: Option<String>,
    /// Function for `funcalc --element`: rational:N, exp_i:T,
    /// principal_arg:B or polynomial:c0,c1,...
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    /// Write the JSONL report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            horizon: self.horizon,
            tol: self.tol,
            seed: self.seed,
            threshold: self.threshold,
            probes: self.probes,
        }
    }
}

fn ad_hoc_run(cli: &Cli, element: &str) -> Result<RunSpec, CliError> {
    let element = element.to_string();
    let command = match cli.mode {
        Mode::Norm => Command::Norm { element },
        Mode::Spectrum => Command::Spectrum { element },
        Mode::Bounded => Command::Bounded { element },
        Mode::UnitaryLog => Command::UnitaryLog {
            element,
            branch: std::f64::consts::PI,
        },
        Mode::ExpFactor => Command::ExpFactor { element },
        Mode::Funcalc => {
            let f = cli
                .function
                .as_deref()
                .ok_or_else(|| CliError::Invalid("funcalc --element needs --function".into()))?;
            Command::Funcalc {
                element,
                function: parse_function(f)?,
            }
        }
        other => {
            return Err(CliError::Invalid(format!(
                "--element does not apply to {}",
                other.name()
            )))
        }
    };
    Ok(RunSpec {
        name: Some(cli.element.clone().unwrap_or_default()),
        claim: None,
        command,
        horizon: None,
        tol: None,
        seed: None,
        threshold: None,
        probes: None,
        expect: BTreeMap::new(),
    })
}

fn check_record(index: usize, run: &RunSpec, cfg: RunConfig, world: &World) -> Result<CheckRecord, CliError> {
    let outcome = execute(world, &run.command, &cfg)?;
    let mut mismatches = Vec::new();
    let mut expected_pass = true;
    for (field, expected) in &run.expect {
        if field == "passed" {
            expected_pass = expected.as_bool().ok_or_else(|| {
                CliError::Invalid(format!("expect.passed must be a boolean, got {expected}"))
            })?;
            continue;
        }
        let actual = outcome.result.get(field).cloned().unwrap_or(serde_json::Value::Null);
        if !matches(&actual, expected, cfg.tol) {
            mismatches.push(Mismatch {
                field: field.clone(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    if outcome.passed != expected_pass {
        mismatches.push(Mismatch {
            field: "passed".into(),
            expected: expected_pass.into(),
            actual: outcome.passed.into(),
        });
    }
    Ok(CheckRecord {
        record: "check",
        index,
        name: run.name.clone().unwrap_or_else(|| format!("run{index}")),
        command: run.command.name().to_string(),
        claim: run.claim.clone(),
        config: cfg,
        passed: mismatches.is_empty(),
        mismatches,
        result: outcome.result,
        summary: outcome.summary,
    })
}

/// Builds the report for an invocation without writing anything.
pub fn execute_cli(cli: &Cli) -> Result<Report, CliError> {
    let overrides = cli.overrides();
    let (spec, origin) = match &cli.spec {
        Some(path) => (SpecFile::load(path)?, path.display().to_string()),
        None => (SpecFile::parse(BUNDLED_SPEC, BUNDLED_ORIGIN)?, BUNDLED_ORIGIN.to_string()),
    };
    let mut report = Report::new(&cli.mode.name(), &origin, overrides.clone());

    if cli.mode == Mode::Selftest {
        let seed = overrides.seed.or(spec.defaults.seed).unwrap_or(0);
        for (i, (name, o)) in selftest::checks(seed).into_iter().enumerate() {
            report.checks.push(CheckRecord {
                record: "check",
                index: i,
                name,
                command: "selftest".into(),
                claim: None,
                config: RunConfig {
                    horizon: 1,
                    tol: o.result.get("bound").and_then(|b| b.as_f64()).unwrap_or(1e-10),
                    seed: Some(seed),
                    stream: i as u64,
                    threshold: procstar_core::calculus::DEFAULT_DIVERGENCE_THRESHOLD,
                    probes: selftest::INSTANCES,
                },
                passed: o.passed,
                mismatches: Vec::new(),
                result: o.result,
                summary: o.summary,
            });
        }
        return Ok(report);
    }

    let world = World::new(spec)?;
    let runs: Vec<RunSpec> = match (cli.mode, &cli.element) {
        (_, Some(e)) => vec![ad_hoc_run(cli, e)?],
        (Mode::Run | Mode::PaperExamples, None) => world.spec().runs.clone(),
        (mode, None) => {
            let name = mode.name();
            world
                .spec()
                .runs
                .iter()
                .filter(|r| r.command.name() == name)
                .cloned()
                .collect()
        }
    };
    for (i, run) in runs.iter().enumerate() {
        let cfg = RunConfig::resolve(&overrides, run, &world.spec().defaults, i as u64)?;
        report.checks.push(check_record(i, run, cfg, &world)?);
    }
    Ok(report)
}

/// Runs the command line and returns the process exit code: 0 when every
/// check passes, 1 when one fails, 2 on a configuration error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let report = match execute_cli(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(path) = &cli.out {
        if let Err(e) = report.write(path) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    print!("{}", report.table());
    report.exit_code()
}

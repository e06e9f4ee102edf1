//! Line-delimited JSON reports and the human-readable summary table.
//!
//! A report is a header record, one check record per run, and a summary
//! record. A report with no checks is header-only. Nothing in it depends on
//! the clock or the environment, so equal inputs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Overrides, RunConfig, Tolerances};
use crate::error::CliError;

pub const RNG_DESCRIPTION: &str =
    "ChaCha20Rng::seed_from_u64(seed) with set_stream(run index); complex Gaussian entries draw re then im";

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub record: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub spec: String,
    pub overrides: Overrides,
    pub tolerances: Tolerances,
    pub rng: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub field: String,
    pub expected: Value,
    pub actual: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub record: &'static str,
    pub index: usize,
    pub name: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    pub config: RunConfig,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<Mismatch>,
    pub result: Value,
    #[serde(skip)]
    pub summary: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub record: &'static str,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub header: Header,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(command: &str, spec: &str, overrides: Overrides) -> Self {
        Self {
            header: Header {
                record: "header",
                tool: "procstar",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                spec: spec.to_string(),
                overrides,
                tolerances: Tolerances::current(),
                rng: RNG_DESCRIPTION,
            },
            checks: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> Summary {
        let passed = self.checks.iter().filter(|c| c.passed).count();
        Summary {
            record: "summary",
            checks: self.checks.len(),
            passed,
            failed: self.checks.len() - passed,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: String| {
            out.push_str(&v);
            out.push('\n');
        };
        line(serde_json::to_string(&self.header).expect("header serializes"));
        if self.checks.is_empty() {
            return out;
        }
        for c in &self.checks {
            line(serde_json::to_string(c).expect("check serializes"));
        }
        line(serde_json::to_string(&self.summary()).expect("summary serializes"));
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let name_w = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(4).max(4);
        let cmd_w = self.checks.iter().map(|c| c.command.len()).max().unwrap_or(7).max(7);
        let _ = writeln!(out, "{:>3}  {:<name_w$}  {:<cmd_w$}  {:<4}  result", "#", "name", "command", "ok");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:>3}  {:<name_w$}  {:<cmd_w$}  {:<4}  {}",
                c.index,
                c.name,
                c.command,
                if c.passed { "PASS" } else { "FAIL" },
                c.summary
            );
        }
        let s = self.summary();
        let _ = writeln!(out, "{} check(s): {} passed, {} failed", s.checks, s.passed, s.failed);
        out
    }
}

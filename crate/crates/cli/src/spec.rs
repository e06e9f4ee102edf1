//! The tower description file: a JSON document naming towers, elements,
//! selectors, homomorphisms, covered spaces and the runs to execute.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays of them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

pub type Complex = [f64; 2];
pub type MatrixLiteral = Vec<Vec<Complex>>;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub towers: Vec<TowerSpec>,
    #[serde(default)]
    pub elements: Vec<ElementSpec>,
    #[serde(default)]
    pub selectors: Vec<SelectorSpec>,
    #[serde(default)]
    pub homomorphisms: Vec<HomomorphismSpec>,
    #[serde(default)]
    pub spaces: Vec<SpaceSpec>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
}

/// Values used when neither the command line nor the run sets them.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub probes: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct TowerSpec {
    pub name: String,
    #[serde(flatten)]
    pub shape: TowerShape,
    /// Keep only the first `truncate` levels.
    pub truncate: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TowerShape {
    /// Level `k` is `M_1 ⊕ … ⊕ M_k`.
    ProductMatrix,
    /// Level `k` is `ℂ^k`.
    ConstantCommutative,
    /// Level `k` is `M_{sizes[0]} ⊕ … ⊕ M_{sizes[k-1]}`; finite.
    CustomTable { sizes: Vec<usize> },
    /// Per-level block sizes. Without `maps`, each level must extend the one
    /// below and the connecting maps delete the trailing blocks.
    Explicit {
        levels: Vec<Vec<usize>>,
        maps: Option<Vec<Vec<Option<Assignment>>>>,
    },
}

/// Where a target block comes from: a source block, optionally conjugated.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub source: usize,
    pub conjugator: Option<MatrixLiteral>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    pub tower: String,
    pub generator: GeneratorSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    #[serde(rename = "L_superdiagonal")]
    LSuperdiagonal,
    Scalar { value: Complex },
    DiagSequence { table: Vec<Complex> },
    /// `e^{ita}` for a self-adjoint element `a` on the same tower.
    ExpOf {
        element: String,
        #[serde(default = "one")]
        t: f64,
    },
    /// `levels[p-1][j]` is block `j` of level `p`.
    Explicit { levels: Vec<Vec<MatrixLiteral>> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
pub struct SelectorSpec {
    pub name: String,
    #[serde(flatten)]
    pub rule: SelectorRule,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorRule {
    /// The first `count` blocks of every level.
    Leading { count: usize },
    /// `levels[p-1]` lists the selected blocks of level `p`.
    Explicit { levels: Vec<Vec<usize>> },
    /// The blocks deleted on the way down to `level`.
    KernelOfLevel { level: usize },
}

#[derive(Clone, Debug, Deserialize)]
pub struct HomomorphismSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: HomomorphismKind,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomomorphismKind {
    /// Level maps `1..=maps.len()`, the last one reused above.
    Explicit {
        source: String,
        target: String,
        maps: Vec<Vec<Option<Assignment>>>,
    },
    Identity { tower: String },
    IdealInclusion { tower: String, selector: String },
    QuotientMap { tower: String, selector: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub name: String,
    pub points: Option<Vec<String>>,
    pub chain: Option<Vec<Vec<usize>>>,
    /// Shorthand for `x1, …, xn` covered by its initial segments.
    pub initial_segments: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `f_n(x) = n²x / (n² + x²)`.
    Rational { n: u32 },
    ExpI { t: f64 },
    PrincipalArg { branch: f64 },
    /// `Σ coeffs[k] z^k`.
    Polynomial { coeffs: Vec<Complex> },
}

#[derive(Clone, Debug, Deserialize)]
pub struct RunSpec {
    pub name: Option<String>,
    /// The statement the run checks, echoed into its report record.
    pub claim: Option<String>,
    #[serde(flatten)]
    pub command: Command,
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub probes: Option<usize>,
    /// Expected values of result fields. `"passed": false` marks a check that
    /// is supposed to fail.
    #[serde(default)]
    pub expect: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Norm { element: String },
    Spectrum { element: String },
    Bounded { element: String },
    Funcalc { element: String, function: FunctionSpec },
    CheckExact { alpha: String, beta: String },
    QuotientIso {
        tower: String,
        selector: String,
        #[serde(default)]
        levels: Vec<usize>,
    },
    GelfandRoundtrip { space: Option<String>, tower: Option<String> },
    UnitaryLog {
        element: String,
        #[serde(default = "pi")]
        branch: f64,
    },
    ExpFactor { element: String },
}

fn pi() -> f64 {
    std::f64::consts::PI
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Norm { .. } => "norm",
            Self::Spectrum { .. } => "spectrum",
            Self::Bounded { .. } => "bounded",
            Self::Funcalc { .. } => "funcalc",
            Self::CheckExact { .. } => "check-exact",
            Self::QuotientIso { .. } => "quotient-iso",
            Self::GelfandRoundtrip { .. } => "gelfand-roundtrip",
            Self::UnitaryLog { .. } => "unitary-log",
            Self::ExpFactor { .. } => "exp-factor",
        }
    }
}

impl SpecFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }
}

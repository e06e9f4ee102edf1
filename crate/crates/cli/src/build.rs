//! Turns a parsed spec file into towers, elements and maps.
//!
//! Names are checked once in [`World::new`]; the objects themselves are built
//! per run, because lazy towers carry the run's horizon.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use procstar_core::elements;
use procstar_core::function::Term;
use procstar_core::tower::closed_ideal;
use procstar_core::unitary::exp_selfadjoint;
use procstar_core::{
    BlockAlgebra, BlockMap, BlockSelector, BlockSource, CMatrix, CoherentElement, ConnectingMap, CoveredSpace,
    FunctionDescriptor, Tower, TowerHomomorphism,
};

use crate::error::CliError;
use crate::spec::{
    Assignment, Command, Complex, FunctionSpec, GeneratorSpec, HomomorphismKind, MatrixLiteral, SelectorRule,
    SpecFile, TowerShape,
};

type Result<T> = std::result::Result<T, CliError>;

pub struct World {
    spec: SpecFile,
    towers: BTreeMap<String, usize>,
    elements: BTreeMap<String, usize>,
    selectors: BTreeMap<String, usize>,
    homomorphisms: BTreeMap<String, usize>,
    spaces: BTreeMap<String, usize>,
}

fn index<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a String>,
) -> Result<BTreeMap<String, usize>> {
    let mut out = BTreeMap::new();
    for (i, name) in names.enumerate() {
        if out.insert(name.clone(), i).is_some() {
            return Err(CliError::Duplicate {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(out)
}

fn resolve(map: &BTreeMap<String, usize>, kind: &'static str, name: &str) -> Result<usize> {
    map.get(name).copied().ok_or_else(|| CliError::Unresolved {
        kind,
        name: name.to_string(),
    })
}

pub fn complex(z: Complex) -> Complex64 {
    Complex64::new(z[0], z[1])
}

pub fn matrix(lit: &MatrixLiteral) -> Result<CMatrix> {
    let rows = lit.len();
    let cols = lit.first().map_or(0, Vec::len);
    if rows == 0 || lit.iter().any(|r| r.len() != cols) {
        return Err(CliError::Invalid(format!(
            "matrix literal must be a non-empty rectangular array, got rows of lengths {:?}",
            lit.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| complex(lit[i][j])))
}

pub fn function(f: &FunctionSpec) -> Result<FunctionDescriptor> {
    Ok(match f {
        FunctionSpec::Rational { n } => FunctionDescriptor::rational(*n)?,
        FunctionSpec::ExpI { t } => FunctionDescriptor::ExpI { t: *t },
        FunctionSpec::PrincipalArg { branch } => FunctionDescriptor::PrincipalArg { branch: *branch },
        FunctionSpec::Polynomial { coeffs } => FunctionDescriptor::Polynomial(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| Term {
                    coeff: complex(c),
                    z_power: k as u32,
                    conj_power: 0,
                })
                .collect(),
        ),
    })
}

/// Parses the command-line form of a function: `rational:N`, `exp_i:T`,
/// `principal_arg:B` or `polynomial:c0,c1,...` with real coefficients.
pub fn parse_function(text: &str) -> Result<FunctionSpec> {
    let bad = || CliError::Invalid(format!("cannot parse function {text:?}"));
    let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    Ok(match kind {
        "rational" => FunctionSpec::Rational {
            n: arg.trim().parse().map_err(|_| bad())?,
        },
        "exp_i" => FunctionSpec::ExpI { t: num(arg)? },
        "principal_arg" => FunctionSpec::PrincipalArg { branch: num(arg)? },
        "polynomial" => FunctionSpec::Polynomial {
            coeffs: arg.split(',').map(|c| Ok([num(c)?, 0.0])).collect::<Result<_>>()?,
        },
        _ => return Err(bad()),
    })
}

fn block_map(source: BlockAlgebra, target: BlockAlgebra, assignment: &[Option<Assignment>]) -> Result<BlockMap> {
    let assignment = assignment
        .iter()
        .map(|a| {
            a.as_ref()
                .map(|a| {
                    Ok(match &a.conjugator {
                        Some(u) => BlockSource::conjugated(a.source, matrix(u)?),
                        None => BlockSource::plain(a.source),
                    })
                })
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockMap::new(source, target, assignment)?)
}

fn explicit_tower(levels: &[Vec<usize>], maps: Option<&Vec<Vec<Option<Assignment>>>>) -> Result<Tower> {
    let algebras = levels
        .iter()
        .map(|sizes| BlockAlgebra::new(sizes.clone()))
        .collect::<procstar_core::Result<Vec<_>>>()?;
    let maps = match maps {
        Some(maps) => {
            if maps.len() + 1 != algebras.len() {
                return Err(CliError::Invalid(format!(
                    "{} levels need {} connecting maps, got {}",
                    algebras.len(),
                    algebras.len().saturating_sub(1),
                    maps.len()
                )));
            }
            maps.iter()
                .enumerate()
                .map(|(p, a)| Ok(ConnectingMap::new(block_map(algebras[p + 1].clone(), algebras[p].clone(), a)?)?))
                .collect::<Result<Vec<_>>>()?
        }
        None => (1..algebras.len())
            .map(|p| {
                let (lower, upper) = (&levels[p - 1], &levels[p]);
                if !upper.starts_with(lower) {
                    return Err(CliError::Invalid(format!(
                        "level {} blocks {upper:?} do not extend level {p} blocks {lower:?}; give explicit maps",
                        p + 1
                    )));
                }
                let keep: Vec<usize> = (0..lower.len()).collect();
                Ok(ConnectingMap::new(BlockMap::restriction(&algebras[p], &keep)?)?)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(Tower::finite(algebras, maps)?)
}

impl World {
    /// Indexes the names in `spec` and checks every reference.
    pub fn new(spec: SpecFile) -> Result<Self> {
        let world = Self {
            towers: index("tower", spec.towers.iter().map(|t| &t.name))?,
            elements: index("element", spec.elements.iter().map(|e| &e.name))?,
            selectors: index("selector", spec.selectors.iter().map(|s| &s.name))?,
            homomorphisms: index("homomorphism", spec.homomorphisms.iter().map(|h| &h.name))?,
            spaces: index("space", spec.spaces.iter().map(|s| &s.name))?,
            spec,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn spec(&self) -> &SpecFile {
        &self.spec
    }

    fn validate(&self) -> Result<()> {
        for t in &self.spec.towers {
            match &t.shape {
                TowerShape::CustomTable { sizes } if sizes.is_empty() || sizes.contains(&0) => {
                    return Err(CliError::Invalid(format!(
                        "tower {:?}: custom_table sizes must be non-empty and positive",
                        t.name
                    )))
                }
                TowerShape::Explicit { levels, .. } if levels.is_empty() => {
                    return Err(CliError::Invalid(format!("tower {:?} has no levels", t.name)))
                }
                _ => {}
            }
            if t.truncate == Some(0) {
                return Err(CliError::Invalid(format!("tower {:?}: truncate must be at least 1", t.name)));
            }
        }
        for e in &self.spec.elements {
            resolve(&self.towers, "tower", &e.tower)?;
            self.exp_chain(&e.name, &mut BTreeSet::new())?;
        }
        for h in &self.spec.homomorphisms {
            match &h.kind {
                HomomorphismKind::Explicit { source, target, maps } => {
                    resolve(&self.towers, "tower", source)?;
                    resolve(&self.towers, "tower", target)?;
                    if maps.is_empty() {
                        return Err(CliError::Invalid(format!("homomorphism {:?} has no level maps", h.name)));
                    }
                }
                HomomorphismKind::Identity { tower } => {
                    resolve(&self.towers, "tower", tower)?;
                }
                HomomorphismKind::IdealInclusion { tower, selector }
                | HomomorphismKind::QuotientMap { tower, selector } => {
                    resolve(&self.towers, "tower", tower)?;
                    resolve(&self.selectors, "selector", selector)?;
                }
            }
        }
        for s in &self.spec.spaces {
            self.space_by_index(self.spaces[&s.name])?;
        }
        for r in &self.spec.runs {
            self.check_command(&r.command)?;
        }
        Ok(())
    }

    /// Follows `exp_of` references, rejecting cycles and tower mismatches.
    fn exp_chain(&self, name: &str, seen: &mut BTreeSet<String>) -> Result<()> {
        let i = resolve(&self.elements, "element", name)?;
        if !seen.insert(name.to_string()) {
            return Err(CliError::Invalid(format!("element {name:?} is defined in terms of itself")));
        }
        let e = &self.spec.elements[i];
        if let GeneratorSpec::ExpOf { element, .. } = &e.generator {
            let j = resolve(&self.elements, "element", element)?;
            if self.spec.elements[j].tower != e.tower {
                return Err(CliError::Invalid(format!(
                    "element {name:?} exponentiates {element:?}, which lives on a different tower"
                )));
            }
            self.exp_chain(element, seen)?;
        }
        Ok(())
    }

    /// Checks the names a command refers to.
    pub fn check_command(&self, c: &Command) -> Result<()> {
        match c {
            Command::Norm { element }
            | Command::Spectrum { element }
            | Command::Bounded { element }
            | Command::Funcalc { element, .. }
            | Command::UnitaryLog { element, .. }
            | Command::ExpFactor { element } => {
                resolve(&self.elements, "element", element)?;
            }
            Command::CheckExact { alpha, beta } => {
                resolve(&self.homomorphisms, "homomorphism", alpha)?;
                resolve(&self.homomorphisms, "homomorphism", beta)?;
            }
            Command::QuotientIso { tower, selector, .. } => {
                resolve(&self.towers, "tower", tower)?;
                resolve(&self.selectors, "selector", selector)?;
            }
            Command::GelfandRoundtrip { space, tower } => match (space, tower) {
                (Some(s), None) => {
                    resolve(&self.spaces, "space", s)?;
                }
                (None, Some(t)) => {
                    resolve(&self.towers, "tower", t)?;
                }
                _ => {
                    return Err(CliError::Invalid(
                        "gelfand-roundtrip needs exactly one of \"space\" and \"tower\"".into(),
                    ))
                }
            },
        }
        Ok(())
    }

    pub fn tower(&self, name: &str, horizon: usize) -> Result<Tower> {
        let spec = &self.spec.towers[resolve(&self.towers, "tower", name)?];
        let tower = match &spec.shape {
            TowerShape::ProductMatrix => Tower::product(|k| k, horizon)?,
            TowerShape::ConstantCommutative => Tower::product(|_| 1, horizon)?,
            TowerShape::CustomTable { sizes } => {
                let n = sizes.len();
                let table = sizes.clone();
                Tower::product(move |k| table[(k - 1).min(n - 1)], n)?.truncated(n)?
            }
            TowerShape::Explicit { levels, maps } => explicit_tower(levels, maps.as_ref())?,
        };
        Ok(match spec.truncate {
            Some(n) => tower.truncated(n)?,
            None => tower,
        })
    }

    pub fn element(&self, name: &str, horizon: usize, tol: f64) -> Result<CoherentElement> {
        let spec = &self.spec.elements[resolve(&self.elements, "element", name)?];
        let tower = self.tower(&spec.tower, horizon)?;
        Ok(match &spec.generator {
            GeneratorSpec::LSuperdiagonal => elements::superdiagonal(&tower),
            GeneratorSpec::Scalar { value } => CoherentElement::scalar(&tower, complex(*value)),
            GeneratorSpec::DiagSequence { table } => {
                elements::diag_table(&tower, table.iter().copied().map(complex).collect())
            }
            GeneratorSpec::ExpOf { element, t } => {
                let a = self.element(element, horizon, tol)?;
                exp_selfadjoint(&a, *t, tol)?
            }
            GeneratorSpec::Explicit { levels } => {
                let levels = levels
                    .iter()
                    .enumerate()
                    .map(|(p, blocks)| {
                        let blocks = blocks.iter().map(matrix).collect::<Result<Vec<_>>>()?;
                        Ok(tower.algebra(p + 1)?.element(blocks)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CoherentElement::explicit(&tower, levels)?
            }
        })
    }

    pub fn selector(&self, name: &str, tower: &Tower) -> Result<BlockSelector> {
        let spec = &self.spec.selectors[resolve(&self.selectors, "selector", name)?];
        Ok(match &spec.rule {
            SelectorRule::Leading { count } => {
                let count = *count;
                BlockSelector::rule(move |_, a| (0..a.num_blocks().min(count)).collect())
            }
            SelectorRule::Explicit { levels } => BlockSelector::Explicit(levels.clone()),
            SelectorRule::KernelOfLevel { level } => BlockSelector::kernel_of_level(tower, *level),
        })
    }

    pub fn homomorphism(&self, name: &str, horizon: usize) -> Result<TowerHomomorphism> {
        let spec = &self.spec.homomorphisms[resolve(&self.homomorphisms, "homomorphism", name)?];
        Ok(match &spec.kind {
            HomomorphismKind::Explicit { source, target, maps } => {
                let (s, t) = (self.tower(source, horizon)?, self.tower(target, horizon)?);
                let maps = maps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| block_map(s.algebra(i + 1)?, t.algebra(i + 1)?, a))
                    .collect::<Result<Vec<_>>>()?;
                TowerHomomorphism::explicit(&s, &t, maps)?
            }
            HomomorphismKind::Identity { tower } => TowerHomomorphism::identity(&self.tower(tower, horizon)?),
            HomomorphismKind::IdealInclusion { tower, selector } => {
                let t = self.tower(tower, horizon)?;
                closed_ideal(&t, self.selector(selector, &t)?)?.inclusion
            }
            HomomorphismKind::QuotientMap { tower, selector } => {
                let t = self.tower(tower, horizon)?;
                closed_ideal(&t, self.selector(selector, &t)?)?.quotient_map
            }
        })
    }

    pub fn space(&self, name: &str) -> Result<CoveredSpace> {
        self.space_by_index(resolve(&self.spaces, "space", name)?)
    }

    fn space_by_index(&self, i: usize) -> Result<CoveredSpace> {
        let s = &self.spec.spaces[i];
        Ok(match (&s.initial_segments, &s.points, &s.chain) {
            (Some(n), None, None) => CoveredSpace::initial_segments(*n)?,
            (None, Some(points), Some(chain)) => CoveredSpace::new(points.clone(), chain.clone())?,
            _ => {
                return Err(CliError::Invalid(format!(
                    "space {:?} needs either \"initial_segments\" or both \"points\" and \"chain\"",
                    s.name
                )))
            }
        })
    }
}

//! Towers: chain-indexed inverse systems `A_1 ← A_2 ← …` of block algebras
//! with surjective connecting maps, and their coherent elements.
//!
//! Levels are 1-based. A tower is either lazy (a pure rule for every level) or
//! finite; a finite tower with top level `m` is treated as constant beyond
//! `m`, so a single C*-algebra is the tower with `m = 1`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{AlgebraElement, BlockAlgebra};
use crate::blockmap::{BlockMap, BlockSource};
use crate::calculus::Certificate;
use crate::error::{Error, Result};
use crate::homomorphism::TowerHomomorphism;
use crate::linalg::CMatrix;
use crate::random;

pub const DEFAULT_COHERENCE_TOL: f64 = 1e-10;

/// A surjective *-homomorphism `A_{p+1} → A_p`: block deletion followed by
/// per-block unitary conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectingMap(BlockMap);

impl ConnectingMap {
    pub fn new(map: BlockMap) -> Result<Self> {
        if !map.is_surjective() {
            return Err(Error::Structural(format!(
                "connecting map {:?} → {:?} must assign every target block from a distinct source block",
                map.source(),
                map.target()
            )));
        }
        Ok(Self(map))
    }

    pub fn map(&self) -> &BlockMap {
        &self.0
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.0.apply(x)
    }
}

/// Supplies the levels of a lazy tower. Implementations must be pure
/// functions of the level.
pub trait TowerSource: Send + Sync {
    fn algebra(&self, level: usize) -> BlockAlgebra;
    /// The map `A_{level+1} → A_level`.
    fn connecting_map(&self, level: usize) -> ConnectingMap;
    fn describe(&self) -> String;
}

struct ProductRule {
    rule: Arc<dyn Fn(usize) -> usize + Send + Sync>,
}

impl TowerSource for ProductRule {
    fn algebra(&self, level: usize) -> BlockAlgebra {
        BlockAlgebra::new((1..=level).map(|k| (self.rule)(k)).collect())
            .expect("product rule yields positive block sizes")
    }

    fn connecting_map(&self, level: usize) -> ConnectingMap {
        let source = self.algebra(level + 1);
        let keep: Vec<usize> = (0..level).collect();
        ConnectingMap(BlockMap::restriction(&source, &keep).expect("prefix restriction"))
    }

    fn describe(&self) -> String {
        let sizes: Vec<String> = (1..=4).map(|k| (self.rule)(k).to_string()).collect();
        format!("product tower with block sizes {}, …", sizes.join(", "))
    }
}

struct Explicit {
    algebras: Vec<BlockAlgebra>,
    maps: Vec<ConnectingMap>,
}

impl TowerSource for Explicit {
    fn algebra(&self, level: usize) -> BlockAlgebra {
        self.algebras[level - 1].clone()
    }

    fn connecting_map(&self, level: usize) -> ConnectingMap {
        self.maps[level - 1].clone()
    }

    fn describe(&self) -> String {
        format!("finite tower {:?}", self.algebras)
    }
}

#[derive(Clone)]
pub struct Tower {
    source: Arc<dyn TowerSource>,
    horizon: usize,
    max_level: Option<usize>,
    unital: bool,
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tower")
            .field("source", &self.source.describe())
            .field("horizon", &self.horizon)
            .field("max_level", &self.max_level)
            .field("unital", &self.unital)
            .finish()
    }
}

impl Tower {
    /// Level `k` is `M_{rule(1)} ⊕ … ⊕ M_{rule(k)}`; each connecting map
    /// deletes the last block.
    pub fn product<F>(rule: F, horizon: usize) -> Result<Self>
    where
        F: Fn(usize) -> usize + Send + Sync + 'static,
    {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        for k in 1..=horizon {
            if rule(k) == 0 {
                return Err(Error::InvalidArgument(format!(
                    "block size rule gives 0 at level {k}"
                )));
            }
        }
        Ok(Self {
            source: Arc::new(ProductRule {
                rule: Arc::new(rule),
            }),
            horizon,
            max_level: None,
            unital: true,
        })
    }

    /// A finite tower from explicit levels; `maps[p-1]` is `A_{p+1} → A_p`.
    pub fn finite(algebras: Vec<BlockAlgebra>, maps: Vec<ConnectingMap>) -> Result<Self> {
        if algebras.is_empty() {
            return Err(Error::InvalidArgument("a tower needs at least one level".into()));
        }
        if maps.len() + 1 != algebras.len() {
            return Err(Error::Structural(format!(
                "{} levels need {} connecting maps, got {}",
                algebras.len(),
                algebras.len() - 1,
                maps.len()
            )));
        }
        for (p, m) in maps.iter().enumerate() {
            if m.map().source() != &algebras[p + 1] || m.map().target() != &algebras[p] {
                return Err(Error::Structural(format!(
                    "connecting map {} → {} has shape {:?} → {:?}",
                    p + 2,
                    p + 1,
                    m.map().source(),
                    m.map().target()
                )));
            }
        }
        let n = algebras.len();
        Ok(Self {
            source: Arc::new(Explicit { algebras, maps }),
            horizon: n,
            max_level: Some(n),
            unital: true,
        })
    }

    /// A single C*-algebra as a one-level tower.
    pub fn single(algebra: BlockAlgebra) -> Self {
        Self::finite(vec![algebra], Vec::new()).expect("one level, no maps")
    }

    pub fn from_source(source: Arc<dyn TowerSource>, horizon: usize, max_level: Option<usize>) -> Self {
        Self {
            source,
            horizon: horizon.max(1),
            max_level,
            unital: true,
        }
    }

    /// The first `levels` levels as a finite tower.
    pub fn truncated(&self, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidArgument("truncation needs at least one level".into()));
        }
        let top = self.max_level.map_or(levels, |m| m.min(levels));
        let algebras = (1..=top).map(|p| self.algebra(p)).collect::<Result<Vec<_>>>()?;
        let maps = (1..top)
            .map(|p| self.connecting_map(p))
            .collect::<Result<Vec<_>>>()?;
        let mut t = Self::finite(algebras, maps)?;
        t.unital = self.unital;
        Ok(t)
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            horizon: horizon.max(1),
            ..self.clone()
        }
    }

    pub(crate) fn non_unital(mut self) -> Self {
        self.unital = false;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Top level of a finite tower; `None` for a lazy one.
    pub fn max_level(&self) -> Option<usize> {
        self.max_level
    }

    pub fn is_finite(&self) -> bool {
        self.max_level.is_some()
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn describe(&self) -> String {
        self.source.describe()
    }

    fn clamp(&self, level: usize) -> Result<usize> {
        if level == 0 {
            return Err(Error::InvalidArgument("levels start at 1".into()));
        }
        Ok(self.max_level.map_or(level, |m| level.min(m)))
    }

    pub fn algebra(&self, level: usize) -> Result<BlockAlgebra> {
        let p = self.clamp(level)?;
        Ok(self.source.algebra(p))
    }

    /// `π_{p,p+1}: A_{p+1} → A_p`. Identity beyond the top of a finite tower.
    pub fn connecting_map(&self, level: usize) -> Result<ConnectingMap> {
        if level == 0 {
            return Err(Error::InvalidArgument("levels start at 1".into()));
        }
        match self.max_level {
            Some(m) if level >= m => Ok(ConnectingMap(BlockMap::identity(&self.source.algebra(m)))),
            _ => Ok(self.source.connecting_map(level)),
        }
    }

    /// `π_{p,q}: A_q → A_p` for `p ≤ q`.
    pub fn composite_map(&self, p: usize, q: usize) -> Result<BlockMap> {
        if p > q {
            return Err(Error::InvalidArgument(format!("composite map needs p ≤ q, got {p} > {q}")));
        }
        let q = self.clamp(q)?;
        let p = self.clamp(p)?;
        let mut acc = BlockMap::identity(&self.algebra(q)?);
        for k in (p..q).rev() {
            acc = self.connecting_map(k)?.map().compose(&acc)?;
        }
        Ok(acc)
    }

    /// Blocks of `A_level` not seen by the connecting map to `A_{level-1}`; for
    /// level 1 every block.
    pub fn new_blocks(&self, level: usize) -> Result<Vec<usize>> {
        if let Some(m) = self.max_level {
            if level > m {
                return Ok(Vec::new());
            }
        }
        if level == 1 {
            return Ok((0..self.algebra(1)?.num_blocks()).collect());
        }
        Ok(self.connecting_map(level - 1)?.map().deleted_blocks())
    }

    pub fn is_commutative_up_to(&self, horizon: usize) -> Result<bool> {
        for p in 1..=self.clamp(horizon)? {
            if !self.algebra(p)?.is_commutative() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks `π_{p,q} ∘ π_{q,r} = π_{p,r}` on random probes for all
    /// `p ≤ q ≤ r ≤ horizon`; returns the worst residual.
    pub fn composite_residual<R: Rng>(&self, horizon: usize, probes: usize, rng: &mut R) -> Result<f64> {
        let h = self.clamp(horizon)?;
        let mut worst = 0.0f64;
        for r in 1..=h {
            let top = self.algebra(r)?;
            for _ in 0..probes {
                let x = random::element(&top, rng);
                for q in 1..=r {
                    let qr = self.composite_map(q, r)?;
                    let xq = qr.apply(&x)?;
                    for p in 1..=q {
                        let lhs = self.composite_map(p, q)?.apply(&xq)?;
                        let rhs = self.composite_map(p, r)?.apply(&x)?;
                        worst = worst.max(lhs.distance(&rhs)?);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Produces block `index` of the level-`level` component.
pub type BlockFn = dyn Fn(usize, usize) -> Result<CMatrix> + Send + Sync;

#[derive(Clone)]
enum ElementSource {
    Explicit(Arc<Vec<AlgebraElement>>),
    Generator(Arc<BlockFn>),
}

/// An element `a = (a_p)` of the limit, given either explicitly up to some
/// level or by a generator.
#[derive(Clone)]
pub struct CoherentElement {
    tower: Tower,
    source: ElementSource,
    coherence_tol: f64,
    certificates: Vec<Certificate>,
}

impl fmt::Debug for CoherentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match &self.source {
            ElementSource::Explicit(v) => format!("explicit({} levels)", v.len()),
            ElementSource::Generator(_) => "generator".to_string(),
        };
        f.debug_struct("CoherentElement")
            .field("tower", &self.tower)
            .field("source", &src)
            .field("certificates", &self.certificates)
            .finish()
    }
}

impl CoherentElement {
    /// Explicit levels `1..=levels.len()`. Shapes are checked; coherence is
    /// not (see [`check_coherence`](Self::check_coherence)).
    pub fn explicit(tower: &Tower, levels: Vec<AlgebraElement>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("an explicit element needs at least one level".into()));
        }
        for (i, x) in levels.iter().enumerate() {
            let expected = tower.algebra(i + 1)?;
            if x.parent() != &expected {
                return Err(Error::Structural(format!(
                    "level {} element lives in {:?}, tower has {:?}",
                    i + 1,
                    x.parent(),
                    expected
                )));
            }
        }
        Ok(Self {
            tower: tower.clone(),
            source: ElementSource::Explicit(Arc::new(levels)),
            coherence_tol: DEFAULT_COHERENCE_TOL,
            certificates: Vec::new(),
        })
    }

    /// A lazy element; `f(level, block)` must be a pure function.
    pub fn from_fn<F>(tower: &Tower, f: F) -> Self
    where
        F: Fn(usize, usize) -> Result<CMatrix> + Send + Sync + 'static,
    {
        Self {
            tower: tower.clone(),
            source: ElementSource::Generator(Arc::new(f)),
            coherence_tol: DEFAULT_COHERENCE_TOL,
            certificates: Vec::new(),
        }
    }

    /// The coherent family determined by its component at `level` (all lower
    /// levels are images under the connecting maps).
    pub fn from_top(tower: &Tower, level: usize, top: AlgebraElement) -> Result<Self> {
        let mut levels = vec![top];
        for p in (1..level).rev() {
            let next = tower.connecting_map(p)?.apply(levels.last().expect("nonempty"))?;
            levels.push(next);
        }
        levels.reverse();
        Self::explicit(tower, levels)
    }

    pub fn scalar(tower: &Tower, lambda: Complex64) -> Self {
        let t = tower.clone();
        Self::from_fn(tower, move |level, block| {
            let n = t.algebra(level)?.block_sizes()[block];
            Ok(CMatrix::identity(n, n) * lambda)
        })
        .with_certificate(Certificate::Scalar(lambda))
    }

    pub fn identity(tower: &Tower) -> Self {
        Self::scalar(tower, Complex64::new(1.0, 0.0))
    }

    pub fn zero(tower: &Tower) -> Self {
        Self::scalar(tower, Complex64::new(0.0, 0.0))
    }

    pub fn with_certificate(mut self, c: Certificate) -> Self {
        self.certificates.push(c);
        self
    }

    pub fn with_coherence_tol(mut self, tol: f64) -> Self {
        self.coherence_tol = tol;
        self
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certificates
    }

    /// Drops all certificates, forcing checks to look at the levels.
    pub fn without_certificates(mut self) -> Self {
        self.certificates.clear();
        self
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn coherence_tol(&self) -> f64 {
        self.coherence_tol
    }

    /// Levels available without a generator.
    pub fn explicit_horizon(&self) -> Option<usize> {
        match &self.source {
            ElementSource::Explicit(v) => Some(v.len()),
            ElementSource::Generator(_) => None,
        }
    }

    pub fn has_generator(&self) -> bool {
        matches!(self.source, ElementSource::Generator(_))
    }

    /// Largest level this element can be evaluated at within `horizon`.
    pub fn reachable(&self, horizon: usize) -> usize {
        let mut h = horizon;
        if let Some(m) = self.tower.max_level() {
            h = h.min(m);
        }
        if let Some(e) = self.explicit_horizon() {
            if self.tower.max_level().map_or(true, |m| e < m) {
                h = h.min(e);
            }
        }
        h.max(1)
    }

    fn resolve_level(&self, level: usize) -> Result<usize> {
        let p = self.tower.clamp(level)?;
        if let ElementSource::Explicit(v) = &self.source {
            if p > v.len() {
                return Err(Error::Truncation {
                    level: p,
                    horizon: v.len(),
                });
            }
        }
        Ok(p)
    }

    pub fn block(&self, level: usize, index: usize) -> Result<CMatrix> {
        let p = self.resolve_level(level)?;
        match &self.source {
            ElementSource::Explicit(v) => Ok(v[p - 1].block(index).clone()),
            ElementSource::Generator(f) => {
                let alg = self.tower.algebra(p)?;
                let n = *alg.block_sizes().get(index).ok_or_else(|| {
                    Error::Structural(format!("level {p} has no block {index}"))
                })?;
                let b = f(p, index)?;
                if b.nrows() != n || b.ncols() != n {
                    return Err(Error::Structural(format!(
                        "generator produced a {}x{} block for level {p} block {index}, expected {n}x{n}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                Ok(b)
            }
        }
    }

    /// `a_p`, the image of the element in `A_p`.
    pub fn project(&self, level: usize) -> Result<AlgebraElement> {
        let p = self.resolve_level(level)?;
        match &self.source {
            ElementSource::Explicit(v) => Ok(v[p - 1].clone()),
            ElementSource::Generator(_) => {
                let alg = self.tower.algebra(p)?;
                let blocks = (0..alg.num_blocks())
                    .map(|i| self.block(p, i))
                    .collect::<Result<Vec<_>>>()?;
                alg.element(blocks)
            }
        }
    }

    /// Per-level residuals `|π(a_{p+1}) − a_p|` for `p = 1..up_to−1`.
    pub fn check_coherence(&self, up_to: usize) -> Result<CoherenceReport> {
        if up_to < 2 {
            return Err(Error::InvalidArgument("coherence check needs up_to ≥ 2".into()));
        }
        let mut residuals = Vec::new();
        let mut passed = true;
        let mut first_failure = None;
        let top = self.reachable(up_to);
        let mut upper = self.project(1)?;
        for p in 1..top {
            let lower = upper;
            upper = self.project(p + 1)?;
            let image = self.tower.connecting_map(p)?.apply(&upper)?;
            let r = image.distance(&lower)?;
            let bound = self.coherence_tol * upper.norm()?.max(1.0);
            if r > bound {
                passed = false;
                first_failure.get_or_insert(p);
            }
            residuals.push(LevelResidual { level: p, residual: r, bound });
        }
        Ok(CoherenceReport {
            residuals,
            passed,
            first_failure,
        })
    }

    pub fn adjoint(&self) -> Self {
        let e = self.clone();
        let mut out = Self::from_fn(&self.tower, move |p, i| Ok(e.block(p, i)?.adjoint()));
        out.coherence_tol = self.coherence_tol;
        out.certificates = self
            .certificates
            .iter()
            .filter_map(Certificate::under_adjoint)
            .collect();
        out
    }

    /// Blockwise combination of two elements of the same tower.
    pub fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(&CMatrix, &CMatrix) -> CMatrix + Send + Sync + 'static,
    {
        if !Arc::ptr_eq(&self.tower.source, &other.tower.source) {
            return Err(Error::Structural("elements live in different towers".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::from_fn(&self.tower, move |p, i| Ok(f(&a.block(p, i)?, &b.block(p, i)?))))
    }

    pub fn map_blocks<F>(&self, f: F) -> Self
    where
        F: Fn(&CMatrix) -> CMatrix + Send + Sync + 'static,
    {
        let a = self.clone();
        Self::from_fn(&self.tower, move |p, i| Ok(f(&a.block(p, i)?)))
    }

    pub fn scale(&self, lambda: Complex64) -> Self {
        self.map_blocks(move |b| b * lambda)
    }

    /// Explicit copy of levels `1..=horizon`; drops the generator.
    pub fn materialize(&self, horizon: usize) -> Result<Self> {
        let top = self.reachable(horizon);
        let levels = (1..=top).map(|p| self.project(p)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::explicit(&self.tower, levels)?;
        out.coherence_tol = self.coherence_tol;
        out.certificates = self.certificates.clone();
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResidual {
    pub level: usize,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport {
    pub residuals: Vec<LevelResidual>,
    pub passed: bool,
    pub first_failure: Option<usize>,
}

/// Per-level set of selected block indices.
#[derive(Clone)]
pub enum BlockSelector {
    Explicit(Vec<Vec<usize>>),
    Rule(Arc<dyn Fn(usize, &BlockAlgebra) -> Vec<usize> + Send + Sync>),
}

impl fmt::Debug for BlockSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Explicit(v) => f.debug_tuple("Explicit").field(v).finish(),
            Self::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

impl BlockSelector {
    pub fn rule<F>(f: F) -> Self
    where
        F: Fn(usize, &BlockAlgebra) -> Vec<usize> + Send + Sync + 'static,
    {
        Self::Rule(Arc::new(f))
    }

    pub fn empty() -> Self {
        Self::rule(|_, _| Vec::new())
    }

    pub fn full() -> Self {
        Self::rule(|_, a| (0..a.num_blocks()).collect())
    }

    /// The blocks that vanish under `π_{p,q}` at each level `q`: the ideal
    /// `ker π_p`.
    pub fn kernel_of_level(tower: &Tower, p: usize) -> Self {
        let t = tower.clone();
        Self::rule(move |q, alg| {
            if q <= p {
                return Vec::new();
            }
            match t.composite_map(p, q) {
                Ok(m) => m.deleted_blocks(),
                Err(_) => (0..alg.num_blocks()).collect(),
            }
        })
    }

    pub fn selected(&self, level: usize, algebra: &BlockAlgebra) -> Result<Vec<usize>> {
        let mut sel: Vec<usize> = match self {
            Self::Explicit(v) => v
                .get(level - 1)
                .cloned()
                .ok_or_else(|| Error::Structural(format!("selector has no entry for level {level}")))?,
            Self::Rule(f) => f(level, algebra),
        };
        sel.sort_unstable();
        sel.dedup();
        if let Some(&bad) = sel.iter().find(|&&i| i >= algebra.num_blocks()) {
            return Err(Error::Structural(format!(
                "selector picks block {bad} at level {level}, which has {} blocks",
                algebra.num_blocks()
            )));
        }
        Ok(sel)
    }

    fn complement(&self, level: usize, algebra: &BlockAlgebra) -> Result<Vec<usize>> {
        let sel: BTreeSet<usize> = self.selected(level, algebra)?.into_iter().collect();
        Ok((0..algebra.num_blocks()).filter(|i| !sel.contains(i)).collect())
    }
}

struct SubTower {
    parent: Tower,
    selector: BlockSelector,
    take_selected: bool,
}

impl SubTower {
    fn blocks(&self, level: usize) -> Vec<usize> {
        let alg = self.parent.algebra(level).expect("level ≥ 1");
        let r = if self.take_selected {
            self.selector.selected(level, &alg)
        } else {
            self.selector.complement(level, &alg)
        };
        r.expect("selector validated at construction")
    }
}

impl TowerSource for SubTower {
    fn algebra(&self, level: usize) -> BlockAlgebra {
        let alg = self.parent.algebra(level).expect("level ≥ 1");
        let sizes: Vec<usize> = self.blocks(level).iter().map(|&i| alg.block_sizes()[i]).collect();
        if sizes.is_empty() {
            BlockAlgebra::zero()
        } else {
            BlockAlgebra::new(sizes).expect("positive sizes")
        }
    }

    fn connecting_map(&self, level: usize) -> ConnectingMap {
        let parent_map = self.parent.connecting_map(level).expect("level ≥ 1");
        let upper = self.blocks(level + 1);
        let lower = self.blocks(level);
        let assignment = lower
            .iter()
            .map(|&j| {
                let a = parent_map.map().assignment()[j].as_ref().expect("surjective");
                let k = upper
                    .iter()
                    .position(|&i| i == a.block)
                    .expect("selector coherence");
                Some(BlockSource {
                    block: k,
                    conjugator: a.conjugator.clone(),
                })
            })
            .collect();
        ConnectingMap(
            BlockMap::new(self.algebra(level + 1), self.algebra(level), assignment)
                .expect("restricted connecting map"),
        )
    }

    fn describe(&self) -> String {
        let kind = if self.take_selected { "ideal" } else { "quotient" };
        format!("{kind} of {}", self.parent.describe())
    }
}

/// A closed ideal given by a block selector, with its quotient and the maps
/// of the short exact sequence `0 → I → A → A/I → 0`.
#[derive(Clone, Debug)]
pub struct IdealDecomposition {
    pub ideal: Tower,
    pub quotient: Tower,
    pub inclusion: TowerHomomorphism,
    pub quotient_map: TowerHomomorphism,
    pub selector: BlockSelector,
}

/// Checks that `selector` is carried to itself by every connecting map up to
/// `horizon`; reports the first bad level.
pub fn check_selector(tower: &Tower, selector: &BlockSelector, horizon: usize) -> Result<()> {
    let h = tower.max_level.map_or(horizon, |m| m.min(horizon));
    for p in 1..=h {
        selector.selected(p, &tower.algebra(p)?)?;
    }
    for p in 1..h {
        let map = tower.connecting_map(p)?;
        let lower: BTreeSet<usize> = selector.selected(p, &tower.algebra(p)?)?.into_iter().collect();
        let upper: BTreeSet<usize> = selector.selected(p + 1, &tower.algebra(p + 1)?)?.into_iter().collect();
        for (j, a) in map.map().assignment().iter().enumerate() {
            let s = a.as_ref().expect("connecting maps are surjective").block;
            if lower.contains(&j) != upper.contains(&s) {
                return Err(Error::Structural(format!(
                    "selector is not coherent at level {}: block {j} of level {p} comes from block {s} of level {}, but only one of them is selected",
                    p + 1,
                    p + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn closed_ideal(tower: &Tower, selector: BlockSelector) -> Result<IdealDecomposition> {
    check_selector(tower, &selector, tower.horizon())?;
    let ideal_src = Arc::new(SubTower {
        parent: tower.clone(),
        selector: selector.clone(),
        take_selected: true,
    });
    let quot_src = Arc::new(SubTower {
        parent: tower.clone(),
        selector: selector.clone(),
        take_selected: false,
    });
    let ideal =
        Tower::from_source(ideal_src.clone(), tower.horizon(), tower.max_level()).non_unital();
    let mut quotient = Tower::from_source(quot_src.clone(), tower.horizon(), tower.max_level());
    quotient.unital = tower.unital;

    let parent = tower.clone();
    let (isrc, ideal_t) = (ideal_src.clone(), ideal.clone());
    let inclusion = TowerHomomorphism::from_rule(&ideal, tower, move |p| {
        let sel = isrc.blocks(p);
        let target = parent.algebra(p)?;
        let assignment = (0..target.num_blocks())
            .map(|j| sel.iter().position(|&i| i == j).map(BlockSource::plain))
            .collect();
        BlockMap::new(ideal_t.algebra(p)?, target, assignment)
    });
    let parent = tower.clone();
    let qsrc = quot_src.clone();
    let quotient_map = TowerHomomorphism::from_rule(tower, &quotient, move |p| {
        BlockMap::restriction(&parent.algebra(p)?, &qsrc.blocks(p))
    });
    Ok(IdealDecomposition {
        ideal,
        quotient,
        inclusion,
        quotient_map,
        selector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::superdiagonal_block;
    use crate::elements;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn product_tower_levels() {
        let t = Tower::product(|k| k, 3).unwrap();
        assert_eq!(t.algebra(1).unwrap().block_sizes(), &[1]);
        assert_eq!(t.algebra(2).unwrap().block_sizes(), &[1, 2]);
        assert_eq!(t.algebra(3).unwrap().block_sizes(), &[1, 2, 3]);
        assert_eq!(t.new_blocks(3).unwrap(), vec![2]);

        let c = Tower::product(|_| 1, 2).unwrap();
        assert!(c.is_commutative_up_to(2).unwrap());
        assert_eq!(c.algebra(2).unwrap().block_sizes(), &[1, 1]);

        let single = Tower::product(|k| k, 1).unwrap().truncated(1).unwrap();
        assert_eq!(single.max_level(), Some(1));
        assert_eq!(single.algebra(7).unwrap().block_sizes(), &[1]);
        assert!(Tower::product(|k| k, 0).is_err());
    }

    #[test]
    fn composites_are_consistent() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let t = elements::twisted_product_tower(4, 11).unwrap();
        assert!(t.composite_residual(4, 3, &mut rng).unwrap() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let t = Tower::product(|k| k, 6).unwrap();
        let s = CoherentElement::scalar(&t, Complex64::new(2.5, -1.0));
        let x = s.project(4).unwrap();
        assert_eq!(
            x,
            t.algebra(4).unwrap().scalar(Complex64::new(2.5, -1.0))
        );
        let l = elements::superdiagonal(&t);
        let l4 = l.project(4).unwrap();
        for k in 0..4 {
            assert_eq!(l4.block(k), &superdiagonal_block(k + 1));
        }
        // π_{p,q}(a_q) = a_p
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let tw = elements::twisted_product_tower(5, 2).unwrap();
        let e = random_coherent(&tw, 5, &mut rng);
        for q in 1..=5 {
            for p in 1..=q {
                let down = tw.composite_map(p, q).unwrap().apply(&e.project(q).unwrap()).unwrap();
                assert!(down.distance(&e.project(p).unwrap()).unwrap() < 1e-12);
            }
        }
    }

    fn random_coherent(t: &Tower, top: usize, rng: &mut ChaCha20Rng) -> CoherentElement {
        let x = random::element(&t.algebra(top).unwrap(), rng);
        CoherentElement::from_top(t, top, x).unwrap()
    }

    #[test]
    fn truncation_error_without_generator() {
        let t = Tower::product(|k| k, 4).unwrap();
        let e = CoherentElement::explicit(&t, vec![t.algebra(1).unwrap().identity()]).unwrap();
        assert!(matches!(e.project(2), Err(Error::Truncation { level: 2, horizon: 1 })));
    }

    #[test]
    fn coherence_examples() {
        let t = Tower::product(|k| k, 5).unwrap();
        let s = CoherentElement::scalar(&t, Complex64::new(3.0, 0.0));
        let rep = s.check_coherence(5).unwrap();
        assert!(rep.passed);
        assert!(rep.residuals.iter().all(|r| r.residual == 0.0));

        let l = elements::superdiagonal(&t);
        let rep = l.check_coherence(5).unwrap();
        assert!(rep.passed);
        assert!(rep.residuals.iter().all(|r| r.residual <= 1e-14));

        let mut levels: Vec<AlgebraElement> = (1..=5).map(|p| l.project(p).unwrap()).collect();
        let mut bumped = levels[1].blocks().to_vec();
        bumped[1][(0, 0)] += Complex64::new(1e-3, 0.0);
        levels[1] = t.algebra(2).unwrap().element(bumped).unwrap();
        let corrupted = CoherentElement::explicit(&t, levels).unwrap();
        let rep = corrupted.check_coherence(5).unwrap();
        assert!(!rep.passed);
        // the bumped block is deleted on the way down to level 1, so only
        // π(a_3) − a_2 sees it
        assert_eq!(rep.first_failure, Some(2));
        assert_eq!(rep.residuals[0].residual, 0.0);
        assert!((rep.residuals[1].residual - 1e-3).abs() < 1e-12);
        assert!(s.check_coherence(1).is_err());
    }

    #[test]
    fn ideal_examples() {
        let t = Tower::product(|k| k, 4).unwrap();
        let empty = closed_ideal(&t, BlockSelector::empty()).unwrap();
        assert!(empty.ideal.algebra(3).unwrap().is_zero());
        assert_eq!(empty.quotient.algebra(3).unwrap(), t.algebra(3).unwrap());

        let full = closed_ideal(&t, BlockSelector::full()).unwrap();
        assert_eq!(full.ideal.algebra(3).unwrap(), t.algebra(3).unwrap());
        assert!(full.quotient.algebra(3).unwrap().is_zero());

        let first = closed_ideal(&t, BlockSelector::rule(|_, _| vec![0])).unwrap();
        for p in 1..=4 {
            assert_eq!(first.ideal.algebra(p).unwrap().block_sizes(), &[1]);
            let q: Vec<usize> = (2..=p).collect();
            assert_eq!(first.quotient.algebra(p).unwrap().block_sizes(), q.as_slice());
        }

        let bad = BlockSelector::Explicit(vec![vec![0], vec![1], vec![1], vec![1]]);
        match closed_ideal(&t, bad) {
            Err(Error::Structural(msg)) => assert!(msg.contains("level 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Levelwise *-homomorphisms between towers.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::blockmap::BlockMap;
use crate::error::{Error, Result};
use crate::random;
use crate::tower::{CoherentElement, Tower};

type LevelRule = dyn Fn(usize) -> Result<BlockMap> + Send + Sync;

/// `φ = (φ_p)` with `φ_p: A_p → B_p` a block map. Kernels are allowed;
/// surjectivity is not required.
#[derive(Clone)]
pub struct TowerHomomorphism {
    source: Tower,
    target: Tower,
    rule: Arc<LevelRule>,
}

impl fmt::Debug for TowerHomomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TowerHomomorphism")
            .field("source", &self.source)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl TowerHomomorphism {
    pub fn from_rule<F>(source: &Tower, target: &Tower, rule: F) -> Self
    where
        F: Fn(usize) -> Result<BlockMap> + Send + Sync + 'static,
    {
        Self {
            source: source.clone(),
            target: target.clone(),
            rule: Arc::new(rule),
        }
    }

    /// Level maps for `1..=maps.len()`; the last one is reused above that.
    pub fn explicit(source: &Tower, target: &Tower, maps: Vec<BlockMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidArgument("a homomorphism needs at least one level map".into()));
        }
        let maps = Arc::new(maps);
        let hom = Self::from_rule(source, target, move |p| Ok(maps[(p - 1).min(maps.len() - 1)].clone()));
        Ok(hom)
    }

    pub fn identity(tower: &Tower) -> Self {
        let t = tower.clone();
        Self::from_rule(tower, tower, move |p| Ok(BlockMap::identity(&t.algebra(p)?)))
    }

    /// The zero homomorphism.
    pub fn zero(source: &Tower, target: &Tower) -> Self {
        let (s, t) = (source.clone(), target.clone());
        Self::from_rule(source, target, move |p| Ok(BlockMap::zero(&s.algebra(p)?, &t.algebra(p)?)))
    }

    pub fn source(&self) -> &Tower {
        &self.source
    }

    pub fn target(&self) -> &Tower {
        &self.target
    }

    pub fn level_map(&self, level: usize) -> Result<BlockMap> {
        let m = (self.rule)(level)?;
        let (s, t) = (self.source.algebra(level)?, self.target.algebra(level)?);
        if m.source() != &s || m.target() != &t {
            return Err(Error::Structural(format!(
                "level {level} map has shape {:?} → {:?}, towers need {:?} → {:?}",
                m.source(),
                m.target(),
                s,
                t
            )));
        }
        Ok(m)
    }

    pub fn apply_level(&self, level: usize, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.level_map(level)?.apply(x)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &TowerHomomorphism) -> Result<TowerHomomorphism> {
        for p in 1..=self.source.horizon().max(inner.target.horizon()) {
            if self.source.algebra(p)? != inner.target.algebra(p)? {
                return Err(Error::Structural(format!(
                    "cannot compose: level {p} algebras differ"
                )));
            }
        }
        let (outer, inner_c) = (self.clone(), inner.clone());
        Ok(Self::from_rule(&inner.source, &self.target, move |p| {
            outer.level_map(p)?.compose(&inner_c.level_map(p)?)
        }))
    }

    /// Image of a coherent element, evaluated lazily.
    pub fn apply(&self, e: &CoherentElement) -> Result<CoherentElement> {
        let h = e.reachable(self.source.horizon());
        for p in 1..=h {
            if e.tower().algebra(p)? != self.source.algebra(p)? {
                return Err(Error::Structural(format!(
                    "element lives in {:?} at level {p}, homomorphism starts at {:?}",
                    e.tower().algebra(p)?,
                    self.source.algebra(p)?
                )));
            }
        }
        let (hom, src) = (self.clone(), e.clone());
        let image = CoherentElement::from_fn(&self.target, move |p, j| {
            let map = hom.level_map(p)?;
            match map.assignment()[j].as_ref() {
                Some(a) => Ok(map.apply_block(j, &src.block(p, a.block)?)),
                None => {
                    let n = map.target().block_sizes()[j];
                    Ok(crate::linalg::CMatrix::zeros(n, n))
                }
            }
        });
        // an explicit element covering a finite source is known at every
        // level; otherwise the image is only known as far as the element
        let truncated = match (e.explicit_horizon(), self.source.max_level()) {
            (Some(n), Some(m)) => n < m,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if truncated {
            image.materialize(h)
        } else {
            Ok(image)
        }
    }

    pub fn is_levelwise_surjective(&self, horizon: usize) -> Result<bool> {
        for p in 1..=horizon {
            if !self.level_map(p)?.is_surjective() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Worst `|π^B(φ_{p+1}(x)) − φ_p(π^A(x))|` over random probes.
    pub fn naturality_residual<R: Rng>(&self, horizon: usize, probes: usize, rng: &mut R) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in 1..horizon {
            let upper = self.source.algebra(p + 1)?;
            let (phi_up, phi_low) = (self.level_map(p + 1)?, self.level_map(p)?);
            let (pa, pb) = (self.source.connecting_map(p)?, self.target.connecting_map(p)?);
            for _ in 0..probes {
                let x = random::element(&upper, rng);
                let lhs = pb.apply(&phi_up.apply(&x)?)?;
                let rhs = phi_low.apply(&pa.apply(&x)?)?;
                worst = worst.max(lhs.distance(&rhs)?);
            }
        }
        Ok(worst)
    }

    /// Worst defect of `+`, `·` and `*` preservation over random probes.
    pub fn homomorphism_residual<R: Rng>(&self, horizon: usize, probes: usize, rng: &mut R) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in 1..=horizon {
            let alg = self.source.algebra(p)?;
            let phi = self.level_map(p)?;
            for _ in 0..probes {
                let x = random::element(&alg, rng);
                let y = random::element(&alg, rng);
                let (fx, fy) = (phi.apply(&x)?, phi.apply(&y)?);
                worst = worst
                    .max(phi.apply(&(&x + &y))?.distance(&(&fx + &fy))?)
                    .max(phi.apply(&(&x * &y))?.distance(&(&fx * &fy))?)
                    .max(phi.apply(&x.adjoint())?.distance(&fx.adjoint())?);
            }
        }
        Ok(worst)
    }
}

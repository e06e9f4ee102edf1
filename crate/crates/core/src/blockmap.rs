//! *-homomorphisms between block algebras.
//!
//! Every *-homomorphism `⊕ M_{m_i} → ⊕ M_{n_j}` used here sends target block
//! `j` either to zero or to `U_j x_{s(j)} U_j*` for a source block `s(j)` of
//! the same size and a unitary `U_j`.

use num_complex::Complex64;

use crate::algebra::{AlgebraElement, BlockAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSource {
    pub block: usize,
    /// `None` is the identity conjugator.
    pub conjugator: Option<CMatrix>,
}

impl BlockSource {
    pub fn plain(block: usize) -> Self {
        Self {
            block,
            conjugator: None,
        }
    }

    pub fn conjugated(block: usize, u: CMatrix) -> Self {
        Self {
            block,
            conjugator: Some(u),
        }
    }

    fn carry(&self, x: &CMatrix) -> CMatrix {
        match &self.conjugator {
            None => x.clone(),
            Some(u) => u * x * u.adjoint(),
        }
    }

    fn pull(&self, y: &CMatrix) -> CMatrix {
        match &self.conjugator {
            None => y.clone(),
            Some(u) => u.adjoint() * y * u,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMap {
    source: BlockAlgebra,
    target: BlockAlgebra,
    assignment: Vec<Option<BlockSource>>,
}

impl BlockMap {
    pub fn new(
        source: BlockAlgebra,
        target: BlockAlgebra,
        assignment: Vec<Option<BlockSource>>,
    ) -> Result<Self> {
        if assignment.len() != target.num_blocks() {
            return Err(Error::Structural(format!(
                "{} block assignments for target {:?}",
                assignment.len(),
                target
            )));
        }
        for (j, a) in assignment.iter().enumerate() {
            let Some(a) = a else { continue };
            let n = target.block_sizes()[j];
            let Some(&m) = source.block_sizes().get(a.block) else {
                return Err(Error::Structural(format!(
                    "target block {j} assigned to missing source block {} of {:?}",
                    a.block, source
                )));
            };
            if m != n {
                return Err(Error::Structural(format!(
                    "target block {j} has size {n} but source block {} has size {m}",
                    a.block
                )));
            }
            if let Some(u) = &a.conjugator {
                if u.nrows() != n || u.ncols() != n {
                    return Err(Error::Structural(format!(
                        "conjugator for target block {j} is {}x{}, expected {n}x{n}",
                        u.nrows(),
                        u.ncols()
                    )));
                }
                let defect = linalg::unitary_defect(u)?;
                if defect > UNITARY_TOL {
                    return Err(Error::Structural(format!(
                        "conjugator for target block {j} is not unitary (defect {defect:e})"
                    )));
                }
            }
        }
        Ok(Self {
            source,
            target,
            assignment,
        })
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        Self {
            source: algebra.clone(),
            target: algebra.clone(),
            assignment: (0..algebra.num_blocks())
                .map(|j| Some(BlockSource::plain(j)))
                .collect(),
        }
    }

    pub fn zero(source: &BlockAlgebra, target: &BlockAlgebra) -> Self {
        Self {
            source: source.clone(),
            target: target.clone(),
            assignment: vec![None; target.num_blocks()],
        }
    }

    /// Keeps the listed source blocks, in order, with identity conjugators.
    pub fn restriction(source: &BlockAlgebra, keep: &[usize]) -> Result<Self> {
        let sizes: Vec<usize> = keep.iter().map(|&i| source.block_sizes()[i]).collect();
        let target = if sizes.is_empty() {
            BlockAlgebra::zero()
        } else {
            BlockAlgebra::new(sizes)?
        };
        Self::new(
            source.clone(),
            target,
            keep.iter().map(|&i| Some(BlockSource::plain(i))).collect(),
        )
    }

    pub fn source(&self) -> &BlockAlgebra {
        &self.source
    }

    pub fn target(&self) -> &BlockAlgebra {
        &self.target
    }

    pub fn assignment(&self) -> &[Option<BlockSource>] {
        &self.assignment
    }

    /// Source block feeding target block `j`, if any.
    pub fn source_of(&self, j: usize) -> Option<usize> {
        self.assignment[j].as_ref().map(|a| a.block)
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.source.num_blocks()];
        for a in &self.assignment {
            match a {
                None => return false,
                Some(a) if seen[a.block] => return false,
                Some(a) => seen[a.block] = true,
            }
        }
        true
    }

    /// Source blocks that no target block reads from, i.e. the blocks
    /// spanning the kernel.
    pub fn deleted_blocks(&self) -> Vec<usize> {
        let mut used = vec![false; self.source.num_blocks()];
        for a in self.assignment.iter().flatten() {
            used[a.block] = true;
        }
        (0..used.len()).filter(|&i| !used[i]).collect()
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if x.parent() != &self.source {
            return Err(Error::Structural(format!(
                "map expects an element of {:?}, got {:?}",
                self.source,
                x.parent()
            )));
        }
        let blocks = self
            .assignment
            .iter()
            .zip(self.target.block_sizes())
            .map(|(a, &n)| match a {
                Some(a) => a.carry(x.block(a.block)),
                None => CMatrix::zeros(n, n),
            })
            .collect();
        self.target.element(blocks)
    }

    /// Image of a single source block `i` inside target block `j`.
    pub fn apply_block(&self, j: usize, x: &CMatrix) -> CMatrix {
        match &self.assignment[j] {
            Some(a) => a.carry(x),
            None => {
                let n = self.target.block_sizes()[j];
                CMatrix::zeros(n, n)
            }
        }
    }

    /// A preimage of `y`: each source block is pulled back from the first
    /// target block that reads it, unread blocks are zero. Exact whenever `y`
    /// is in the image.
    pub fn preimage(&self, y: &AlgebraElement) -> Result<AlgebraElement> {
        if y.parent() != &self.target {
            return Err(Error::Structural(format!(
                "preimage expects an element of {:?}, got {:?}",
                self.target,
                y.parent()
            )));
        }
        let mut blocks: Vec<Option<CMatrix>> = vec![None; self.source.num_blocks()];
        for (j, a) in self.assignment.iter().enumerate() {
            if let Some(a) = a {
                if blocks[a.block].is_none() {
                    blocks[a.block] = Some(a.pull(y.block(j)));
                }
            }
        }
        let blocks = blocks
            .into_iter()
            .zip(self.source.block_sizes())
            .map(|(b, &n)| b.unwrap_or_else(|| CMatrix::zeros(n, n)))
            .collect();
        self.source.element(blocks)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &BlockMap) -> Result<BlockMap> {
        if inner.target != self.source {
            return Err(Error::Structural(format!(
                "cannot compose: inner map lands in {:?}, outer map starts at {:?}",
                inner.target, self.source
            )));
        }
        let assignment = self
            .assignment
            .iter()
            .map(|outer| {
                let outer = outer.as_ref()?;
                let inner = inner.assignment[outer.block].as_ref()?;
                let conjugator = match (&outer.conjugator, &inner.conjugator) {
                    (None, None) => None,
                    (Some(u), None) => Some(u.clone()),
                    (None, Some(v)) => Some(v.clone()),
                    (Some(u), Some(v)) => Some(u * v),
                };
                Some(BlockSource {
                    block: inner.block,
                    conjugator,
                })
            })
            .collect();
        Ok(BlockMap {
            source: inner.source.clone(),
            target: self.target.clone(),
            assignment,
        })
    }

    /// Matrix of the map on `vec(A) → vec(B)`, with blocks stacked in order
    /// and each block vectorized column-major.
    pub fn linear_matrix(&self) -> CMatrix {
        let src_dim = self.source.dimension();
        let tgt_dim = self.target.dimension();
        let mut m = CMatrix::zeros(tgt_dim, src_dim);
        let src_offsets = offsets(self.source.block_sizes());
        let tgt_offsets = offsets(self.target.block_sizes());
        for (j, a) in self.assignment.iter().enumerate() {
            let Some(a) = a else { continue };
            let n = self.target.block_sizes()[j];
            for c in 0..n {
                for r in 0..n {
                    let mut unit = CMatrix::zeros(n, n);
                    unit[(r, c)] = Complex64::new(1.0, 0.0);
                    let img = a.carry(&unit);
                    let col = src_offsets[a.block] + c * n + r;
                    for (k, v) in img.iter().enumerate() {
                        if *v != ZERO {
                            m[(tgt_offsets[j] + k, col)] = *v;
                        }
                    }
                }
            }
        }
        m
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for n in sizes {
        out.push(acc);
        acc += n * n;
    }
    out
}

/// Vectorizes an element the same way [`BlockMap::linear_matrix`] does.
pub fn vectorize(x: &AlgebraElement) -> nalgebra::DVector<Complex64> {
    let data: Vec<Complex64> = x.blocks().iter().flat_map(|b| b.iter().copied()).collect();
    nalgebra::DVector::from_vec(data)
}

pub fn devectorize(algebra: &BlockAlgebra, v: &nalgebra::DVector<Complex64>) -> Result<AlgebraElement> {
    if v.len() != algebra.dimension() {
        return Err(Error::Structural(format!(
            "vector of length {} for algebra of dimension {}",
            v.len(),
            algebra.dimension()
        )));
    }
    let mut pos = 0;
    let blocks = algebra
        .block_sizes()
        .iter()
        .map(|&n| {
            let b = CMatrix::from_column_slice(n, n, &v.as_slice()[pos..pos + n * n]);
            pos += n * n;
            b
        })
        .collect();
    algebra.element(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    fn alg(sizes: &[usize]) -> BlockAlgebra {
        BlockAlgebra::new(sizes.to_vec()).unwrap()
    }

    fn swap2() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, Complex64::new(1.0, 0.0), I, ZERO])
    }

    #[test]
    fn validation() {
        let src = alg(&[1, 2]);
        let tgt = alg(&[2]);
        assert!(BlockMap::new(src.clone(), tgt.clone(), vec![Some(BlockSource::plain(0))]).is_err());
        assert!(BlockMap::new(src.clone(), tgt.clone(), vec![Some(BlockSource::plain(5))]).is_err());
        let not_unitary = CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0);
        assert!(BlockMap::new(
            src.clone(),
            tgt.clone(),
            vec![Some(BlockSource::conjugated(1, not_unitary))]
        )
        .is_err());
        let ok = BlockMap::new(src, tgt, vec![Some(BlockSource::conjugated(1, swap2()))]).unwrap();
        assert!(ok.is_surjective());
        assert_eq!(ok.deleted_blocks(), vec![0]);
    }

    #[test]
    fn preimage_round_trip_and_linear_matrix() {
        let src = alg(&[1, 2, 2]);
        let tgt = alg(&[2, 1]);
        let map = BlockMap::new(
            src.clone(),
            tgt.clone(),
            vec![Some(BlockSource::conjugated(2, swap2())), Some(BlockSource::plain(0))],
        )
        .unwrap();
        let y = tgt
            .element(vec![
                CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 2.0), I, ZERO, Complex64::new(-3.0, 0.0)]),
                CMatrix::from_element(1, 1, Complex64::new(0.5, 0.0)),
            ])
            .unwrap();
        let x = map.preimage(&y).unwrap();
        assert!(map.apply(&x).unwrap().distance(&y).unwrap() < 1e-15);
        let m = map.linear_matrix();
        let via_matrix = devectorize(&tgt, &(m * vectorize(&x))).unwrap();
        assert!(via_matrix.distance(&y).unwrap() < 1e-15);
    }

    #[test]
    fn composition_matches_sequential_application() {
        let a = alg(&[2, 2, 1]);
        let b = alg(&[2, 1]);
        let c = alg(&[1, 2]);
        let f = BlockMap::new(
            a.clone(),
            b.clone(),
            vec![Some(BlockSource::conjugated(1, swap2())), Some(BlockSource::plain(2))],
        )
        .unwrap();
        let g = BlockMap::new(
            b,
            c,
            vec![Some(BlockSource::plain(1)), Some(BlockSource::conjugated(0, swap2().adjoint()))],
        )
        .unwrap();
        let x = a
            .element(vec![
                CMatrix::from_row_slice(2, 2, &[I, ZERO, ZERO, ZERO]),
                CMatrix::from_row_slice(2, 2, &[ZERO, Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), I]),
                CMatrix::from_element(1, 1, Complex64::new(7.0, 0.0)),
            ])
            .unwrap();
        let seq = g.apply(&f.apply(&x).unwrap()).unwrap();
        let direct = g.compose(&f).unwrap().apply(&x).unwrap();
        assert!(seq.distance(&direct).unwrap() < 1e-15);
    }
}

//! Built-in towers and elements.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{superdiagonal_block, BlockAlgebra};
use crate::blockmap::{BlockMap, BlockSource};
use crate::calculus::{Certificate, SpectralCertificate};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::random;
use crate::tower::{CoherentElement, ConnectingMap, Tower, TowerSource};

/// `L = (L_n)`: every `n×n` block carries the superdiagonal `1, …, n−1`.
/// Coherent on product towers, where blocks never move.
pub fn superdiagonal(tower: &Tower) -> CoherentElement {
    let t = tower.clone();
    CoherentElement::from_fn(tower, move |p, j| {
        let n = t.algebra(p)?.block_sizes()[j];
        Ok(superdiagonal_block(n))
    })
    .with_certificate(Certificate::Spectral(SpectralCertificate::Nilpotent))
}

/// Block `j` (0-based, in product-tower order) is `values(j)·1`.
pub fn diag_sequence<F>(tower: &Tower, values: F) -> CoherentElement
where
    F: Fn(usize) -> Complex64 + Send + Sync + 'static,
{
    let t = tower.clone();
    CoherentElement::from_fn(tower, move |p, j| {
        let n = t.algebra(p)?.block_sizes()[j];
        Ok(CMatrix::identity(n, n) * values(j))
    })
}

/// Same as [`diag_sequence`] with a finite table; blocks past the end are an
/// error.
pub fn diag_table(tower: &Tower, table: Vec<Complex64>) -> CoherentElement {
    let t = tower.clone();
    let table = Arc::new(table);
    CoherentElement::from_fn(tower, move |p, j| {
        let n = t.algebra(p)?.block_sizes()[j];
        let v = table.get(j).copied().ok_or_else(|| Error::Truncation {
            level: p,
            horizon: table.len(),
        })?;
        Ok(CMatrix::identity(n, n) * v)
    })
}

struct TwistedProduct {
    seed: u64,
}

impl TowerSource for TwistedProduct {
    fn algebra(&self, level: usize) -> BlockAlgebra {
        // blocks are stored newest-first so connecting maps also permute
        BlockAlgebra::new((1..=level).rev().collect()).expect("positive sizes")
    }

    fn connecting_map(&self, level: usize) -> ConnectingMap {
        let source = self.algebra(level + 1);
        let target = self.algebra(level);
        let assignment = (0..level)
            .map(|j| {
                let n = target.block_sizes()[j];
                let mut r = random::rng(self.seed, ((level as u64) << 32) | j as u64);
                Some(BlockSource::conjugated(j + 1, random::unitary(n, &mut r)))
            })
            .collect();
        ConnectingMap::new(BlockMap::new(source, target, assignment).expect("valid shapes"))
            .expect("surjective")
    }

    fn describe(&self) -> String {
        format!("twisted product of matrix algebras (seed {})", self.seed)
    }
}

/// A lazy copy of `∏ M_n` whose connecting maps reorder blocks and conjugate
/// each one by a seeded random unitary. Exercises every part of the
/// connecting-map machinery.
pub fn twisted_product_tower(horizon: usize, seed: u64) -> Result<Tower> {
    Ok(Tower::from_source(Arc::new(TwistedProduct { seed }), horizon, None))
}

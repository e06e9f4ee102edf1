//! Finite-dimensional C*-algebras presented as direct sums of full matrix blocks.
//!
//! A [`BlockAlgebra`] is `M_{n_1} ⊕ … ⊕ M_{n_k}`; its elements are
//! [`AlgebraElement`]s holding one dense complex matrix per block. The
//! operator norm, spectrum and continuous functional calculus all act
//! blockwise.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::linalg::{self, CMatrix, ONE, ZERO};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
pub const DEFAULT_NORMAL_TOL: f64 = 1e-10;

/// Relative skew part below which a block is diagonalized as hermitian.
const HERMITIAN_ROUTE_TOL: f64 = 1e-13;

/// Off-diagonal Schur residue tolerated when diagonalizing a normal block,
/// relative to `max(1, |x|)`.
const DIAGONALIZATION_RESIDUE: f64 = 1e-6;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockAlgebra {
    block_sizes: Vec<usize>,
}

impl BlockAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "a block algebra needs at least one block; use BlockAlgebra::zero for {0}".into(),
            ));
        }
        if let Some(pos) = block_sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidArgument(format!("block {pos} has size 0")));
        }
        Ok(Self { block_sizes })
    }

    /// The zero algebra `{0}`: no blocks at all. Appears as ideals and
    /// quotients of towers.
    pub fn zero() -> Self {
        Self {
            block_sizes: Vec::new(),
        }
    }

    /// `ℂ^k`, i.e. `k` blocks of size one.
    pub fn commutative(k: usize) -> Result<Self> {
        Self::new(vec![1; k])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.block_sizes.is_empty()
    }

    pub fn is_commutative(&self) -> bool {
        self.block_sizes.iter().all(|&n| n == 1)
    }

    /// Complex dimension `Σ n_i²`.
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// `A⁺ = A ⊕ ℂ`: one extra 1×1 block carries the adjoined scalar.
    pub fn unitization(&self) -> Self {
        let mut sizes = self.block_sizes.clone();
        sizes.push(1);
        Self { block_sizes: sizes }
    }

    pub fn identity(&self) -> AlgebraElement {
        self.scalar(ONE)
    }

    pub fn zero_element(&self) -> AlgebraElement {
        self.scalar(ZERO)
    }

    pub fn scalar(&self, lambda: Complex64) -> AlgebraElement {
        AlgebraElement {
            parent: self.clone(),
            blocks: self
                .block_sizes
                .iter()
                .map(|&n| CMatrix::identity(n, n) * lambda)
                .collect(),
        }
    }

    pub fn element(&self, blocks: Vec<CMatrix>) -> Result<AlgebraElement> {
        AlgebraElement::new(self.clone(), blocks)
    }
}

impl fmt::Debug for BlockAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "{{0}}");
        }
        let parts: Vec<String> = self.block_sizes.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    parent: BlockAlgebra,
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn new(parent: BlockAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != parent.num_blocks() {
            return Err(Error::Structural(format!(
                "{} blocks supplied for algebra {:?}",
                blocks.len(),
                parent
            )));
        }
        for (i, (b, &n)) in blocks.iter().zip(parent.block_sizes()).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::Structural(format!(
                    "block {i} is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { parent, blocks })
    }

    pub fn parent(&self) -> &BlockAlgebra {
        &self.parent
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn scale(&self, lambda: Complex64) -> Self {
        self.map_blocks(|b| b * lambda)
    }

    pub fn map_blocks(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            parent: self.parent.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip_blocks(&self, other: &Self, op: &str, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        assert_eq!(
            self.parent, other.parent,
            "cannot {op} elements of {:?} and {:?}",
            self.parent, other.parent
        );
        Self {
            parent: self.parent.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// The C*-norm: largest singular value over all blocks.
    pub fn norm(&self) -> Result<f64> {
        let mut m = 0.0f64;
        for b in &self.blocks {
            m = m.max(linalg::op_norm(b)?);
        }
        Ok(m)
    }

    /// Operator norm of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        (self - other).norm()
    }

    /// Eigenvalues of all blocks merged, with points closer than `cluster_tol`
    /// collapsed to their centroid.
    pub fn spectrum(&self, cluster_tol: f64) -> Result<Vec<Complex64>> {
        if !(cluster_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cluster tolerance must be positive, got {cluster_tol}"
            )));
        }
        Ok(linalg::cluster_points(&self.raw_eigenvalues()?, cluster_tol))
    }

    /// Eigenvalues with multiplicity, unclustered, in block order.
    pub fn raw_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            out.extend(linalg::eigenvalues(b, i)?);
        }
        Ok(out)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self
            .raw_eigenvalues()?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    pub fn is_normal(&self, tol: f64) -> Result<bool> {
        let scale = self.norm()?.powi(2).max(1.0);
        for b in &self.blocks {
            let comm = b.adjoint() * b - b * b.adjoint();
            if linalg::op_norm(&comm)? > tol * scale {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> Result<bool> {
        let scale = self.norm()?.max(1.0);
        Ok((self - &self.adjoint()).norm()? <= tol * scale)
    }

    /// `((x + x*)/2, (x − x*)/2i)`, so that `x = a₁ + i a₂`.
    pub fn selfadjoint_parts(&self) -> (Self, Self) {
        let adj = self.adjoint();
        let re = (self + &adj).scale(Complex64::new(0.5, 0.0));
        let im = (self - &adj).scale(Complex64::new(0.0, -0.5));
        // exact hermitian symmetrization of the diagonal rounding
        (re.hermitian_part_exact(), im.hermitian_part_exact())
    }

    fn hermitian_part_exact(self) -> Self {
        self.map_blocks(|b| {
            let n = b.nrows();
            let mut h = b.clone();
            for j in 0..n {
                h[(j, j)].im = 0.0;
                for i in (j + 1)..n {
                    h[(j, i)] = h[(i, j)].conj();
                }
            }
            h
        })
    }

    /// `(x, λ) ∈ A⁺`, realized as `(x + λ·1) ⊕ λ` in the unitization.
    pub fn adjoin_unit(&self, lambda: Complex64) -> Self {
        let mut blocks: Vec<CMatrix> = self
            .blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                b + CMatrix::identity(n, n) * lambda
            })
            .collect();
        blocks.push(CMatrix::from_element(1, 1, lambda));
        Self {
            parent: self.parent.unitization(),
            blocks,
        }
    }

    /// Continuous functional calculus, blockwise.
    ///
    /// Normal blocks are unitarily triangularized and `f` is applied to the
    /// eigenvalues. Non-normal blocks only accept functions that are
    /// polynomials in `z` or the rational family `f_n`; those are evaluated as
    /// matrix expressions.
    pub fn apply_function(&self, f: &FunctionDescriptor, tol: f64) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| apply_function_block(b, f, tol, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            parent: self.parent.clone(),
            blocks,
        })
    }
}

/// Functional calculus on a single block; `index` labels diagnostics.
pub fn apply_function_block(b: &CMatrix, f: &FunctionDescriptor, tol: f64, index: usize) -> Result<CMatrix> {
    if block_is_normal(b, tol)? {
        apply_normal(b, f, tol, index)
    } else if f.is_rational_in_z() {
        f.apply_matrix(b, tol, index)
    } else {
        Err(Error::Precondition(format!(
            "block {index} is not normal (tol {tol:e}) and {f} is not a polynomial in z or f_n"
        )))
    }
}

pub(crate) fn block_is_normal(b: &CMatrix, tol: f64) -> Result<bool> {
    let scale = linalg::op_norm(b)?.powi(2).max(1.0);
    let comm = b.adjoint() * b - b * b.adjoint();
    Ok(linalg::op_norm(&comm)? <= tol * scale)
}

fn apply_normal(b: &CMatrix, f: &FunctionDescriptor, tol: f64, block: usize) -> Result<CMatrix> {
    let n = b.nrows();
    // the hermitian eigensolver discards the skew part, so only take that
    // route when there is essentially none
    let hermitian = linalg::op_norm(&(b - b.adjoint()))? <= HERMITIAN_ROUTE_TOL * linalg::op_norm(b)?.max(1.0);
    let (q, eigs): (CMatrix, Vec<Complex64>) = if hermitian {
        let (vals, vecs) = linalg::hermitian_eigen(b, block)?;
        (vecs, vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    } else {
        let (q, t) = linalg::schur(b, block)?;
        let residue = linalg::off_diagonal_residue(&t);
        let scale = linalg::op_norm(b)?.max(1.0);
        if residue > DIAGONALIZATION_RESIDUE * scale {
            return Err(Error::Precondition(format!(
                "block {block}: triangular form of a normal block has off-diagonal residue {residue:e}"
            )));
        }
        (q, t.diagonal().iter().copied().collect())
    };
    let mut bad = Vec::new();
    let mut values = Vec::with_capacity(n);
    for &z in &eigs {
        match f.eval_checked(z, tol) {
            Some(w) => values.push(w),
            None => bad.push(z),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Domain {
            function: f.to_string(),
            points: bad,
        });
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values));
    Ok(&q * d * q.adjoint())
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        self.zip_blocks(rhs, "add", |a, b| a + b)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        self.zip_blocks(rhs, "subtract", |a, b| a - b)
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: Self) -> AlgebraElement {
        self.zip_blocks(rhs, "multiply", |a, b| a * b)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.map_blocks(|b| -b)
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        &self + &rhs
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        &self - &rhs
    }
}

impl Mul for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: Self) -> AlgebraElement {
        &self * &rhs
    }
}

/// `L_n`: the `n×n` matrix with superdiagonal `1, 2, …, n−1`.
pub fn superdiagonal_block(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i, i + 1)] = Complex64::new((i + 1) as f64, 0.0);
    }
    m
}

pub fn diagonal_block(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.to_vec()))
}

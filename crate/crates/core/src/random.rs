//! Seeded random probes.
//!
//! All randomness comes from ChaCha20 keyed by a 64-bit seed
//! (`ChaCha20Rng::seed_from_u64`) with the 64-bit stream number selecting an
//! independent sequence per check. Complex Gaussian entries use the standard
//! normal distribution for the real and imaginary parts, drawn in that order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraElement, BlockAlgebra};
use crate::linalg::{self, CMatrix};

/// The generator behind every randomized check.
pub type ProbeRng = ChaCha20Rng;

pub fn rng(seed: u64, stream: u64) -> ProbeRng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Ginibre matrix scaled by `1/√n`, so the norm stays O(1).
pub fn matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |_, _| gaussian(rng) * s)
}

pub fn hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = matrix(n, rng);
    let mut h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    for i in 0..n {
        h[(i, i)].im = 0.0;
    }
    h
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = matrix(n, rng);
    let qr = m.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(λ) U*` with Gaussian eigenvalues.
pub fn normal<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let u = unitary(n, rng);
    let d: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    &u * crate::algebra::diagonal_block(&d) * u.adjoint()
}

pub fn element<R: Rng>(alg: &BlockAlgebra, rng: &mut R) -> AlgebraElement {
    from_blocks(alg, |n| matrix(n, rng))
}

pub fn self_adjoint<R: Rng>(alg: &BlockAlgebra, rng: &mut R) -> AlgebraElement {
    from_blocks(alg, |n| hermitian(n, rng))
}

pub fn normal_element<R: Rng>(alg: &BlockAlgebra, rng: &mut R) -> AlgebraElement {
    from_blocks(alg, |n| normal(n, rng))
}

pub fn unitary_element<R: Rng>(alg: &BlockAlgebra, rng: &mut R) -> AlgebraElement {
    from_blocks(alg, |n| unitary(n, rng))
}

/// Self-adjoint element rescaled so its norm is exactly `norm` (unless zero).
pub fn self_adjoint_with_norm<R: Rng>(alg: &BlockAlgebra, norm: f64, rng: &mut R) -> AlgebraElement {
    let h = self_adjoint(alg, rng);
    let current = h.norm().unwrap_or(0.0);
    if current == 0.0 {
        return h;
    }
    h.scale(Complex64::new(norm / current, 0.0))
}

fn from_blocks(alg: &BlockAlgebra, mut f: impl FnMut(usize) -> CMatrix) -> AlgebraElement {
    let blocks = alg.block_sizes().iter().map(|&n| f(n)).collect();
    alg.element(blocks).expect("blocks match the algebra")
}

/// Worst unitary defect of a generated unitary; used by self-checks.
pub fn unitary_defect<R: Rng>(n: usize, rng: &mut R) -> f64 {
    linalg::unitary_defect(&unitary(n, rng)).unwrap_or(f64::INFINITY)
}

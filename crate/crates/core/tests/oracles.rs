//! Library results against independent computations done here: power
//! iteration for norms, Taylor series for exponentials, closed forms for
//! 2x2 spectra.

use num_complex::Complex64;

use procstar_core::algebra::superdiagonal_block;
use procstar_core::linalg::{op_norm, CMatrix};
use procstar_core::{random, BlockAlgebra, FunctionDescriptor};

fn power_iteration_norm(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let n = g.nrows();
    let mut v = CMatrix::from_fn(n, 1, |i, _| Complex64::new(1.0 + i as f64 * 0.37, 0.1 * i as f64));
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.norm();
        v = w / Complex64::new(norm, 0.0);
    }
    lambda.sqrt()
}

fn taylor_exp(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..60 {
        term = &term * m / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    sum
}

#[test]
fn operator_norm_matches_power_iteration() {
    let mut r = random::rng(100, 0);
    for n in 1..=6 {
        for _ in 0..10 {
            let m = random::matrix(n, &mut r);
            let oracle = power_iteration_norm(&m);
            assert!((op_norm(&m).unwrap() - oracle).abs() < 1e-8 * oracle.max(1.0));
        }
    }
    // the superdiagonal 1..n−1 has norm n−1
    for n in 2..=8 {
        let l = superdiagonal_block(n);
        assert!((op_norm(&l).unwrap() - power_iteration_norm(&l)).abs() < 1e-8);
        assert!((op_norm(&l).unwrap() - (n - 1) as f64).abs() < 1e-12);
    }
}

#[test]
fn exponential_of_hermitian_matches_taylor_series() {
    let mut r = random::rng(101, 0);
    let f = FunctionDescriptor::ExpI { t: 1.0 };
    for n in 1..=5 {
        let alg = BlockAlgebra::new(vec![n]).unwrap();
        let h = random::self_adjoint(&alg, &mut r);
        let via_calculus = h.apply_function(&f, 1e-10).unwrap();
        let oracle = taylor_exp(&(h.block(0) * Complex64::new(0.0, 1.0)));
        assert!(op_norm(&(via_calculus.block(0) - oracle)).unwrap() < 1e-12);
    }
}

#[test]
fn two_by_two_spectrum_from_the_characteristic_polynomial() {
    let mut r = random::rng(102, 0);
    let alg = BlockAlgebra::new(vec![2]).unwrap();
    for _ in 0..20 {
        let x = random::normal_element(&alg, &mut r);
        let b = x.block(0);
        let tr = b[(0, 0)] + b[(1, 1)];
        let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
        let disc = (tr * tr - det * 4.0).sqrt();
        let mut oracle = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        let mut got = x.raw_eigenvalues().unwrap();
        let key = |z: &Complex64| (z.re, z.im);
        oracle.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (o, g) in oracle.iter().zip(&got) {
            assert!((o - g).norm() < 1e-10);
        }
    }
}

#[test]
fn rational_calculus_matches_scalar_formula_on_diagonals() {
    // f_n(x) = n²x/(n²+x²) evaluated entrywise on a real diagonal
    let alg = BlockAlgebra::new(vec![4]).unwrap();
    let xs = [-3.0, -0.5, 0.0, 2.0];
    let d = procstar_core::algebra::diagonal_block(&xs.map(|x| Complex64::new(x, 0.0)));
    let x = alg.element(vec![d]).unwrap();
    for n in 1..=5u32 {
        let fx = x.apply_function(&FunctionDescriptor::Rational { n }, 1e-10).unwrap();
        let n2 = (n * n) as f64;
        for (i, &v) in xs.iter().enumerate() {
            let oracle = n2 * v / (n2 + v * v);
            assert!((fx.block(0)[(i, i)].re - oracle).abs() < 1e-14);
        }
    }
}

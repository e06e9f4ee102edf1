//! The unitary group of a tower: exponentials, logarithms and products of
//! exponentials.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::{apply_function_block, AlgebraElement};
use crate::calculus::{is_self_adjoint_through, lift_function, Certificate};
use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::homomorphism::TowerHomomorphism;
use crate::linalg::{self, CMatrix};
use crate::tower::CoherentElement;

/// Reassembly tolerance for a factorization to count as valid.
pub const FACTORIZATION_TOL: f64 = 1e-9;

/// Number of samples of `t ∈ [0, 1]` in the path check.
pub const PATH_SAMPLES: usize = 64;

/// Branch selections tried by [`identity_component_check`]: the principal
/// branch, then the branch through the widest gap in the spectrum. The
/// spectrum of the top level contains those of all lower levels, so choosing
/// branches level by level cannot do better than the second attempt.
pub const RETRY_BUDGET: usize = 2;

fn blocks_to_check(e: &CoherentElement, p: usize) -> Result<Vec<usize>> {
    // a generator is coherent by construction, so blocks carried down from
    // lower levels need no second look
    if e.has_generator() {
        e.tower().new_blocks(p)
    } else {
        Ok((0..e.tower().algebra(p)?.num_blocks()).collect())
    }
}

fn unitary_defect_block(b: &CMatrix) -> Result<f64> {
    let n = b.nrows();
    let id = CMatrix::identity(n, n);
    Ok(linalg::op_norm(&(b.adjoint() * b - &id))?.max(linalg::op_norm(&(b * b.adjoint() - &id))?))
}

/// `u*u = uu* = 1` within `tol` at every level through `horizon`.
pub fn is_unitary(e: &CoherentElement, horizon: usize, tol: f64) -> Result<bool> {
    if e.certificates().contains(&Certificate::Unitary) {
        return Ok(true);
    }
    for p in 1..=e.reachable(horizon) {
        for j in blocks_to_check(e, p)? {
            if unitary_defect_block(&e.block(p, j)?)? > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `e` with a unitary certificate attached, or `None` if it is not unitary.
pub fn certify_unitary(e: &CoherentElement, horizon: usize, tol: f64) -> Result<Option<CoherentElement>> {
    if !is_unitary(e, horizon, tol)? {
        return Ok(None);
    }
    if e.certificates().contains(&Certificate::Unitary) {
        return Ok(Some(e.clone()));
    }
    Ok(Some(e.clone().with_certificate(Certificate::Unitary)))
}

/// `u(t) = e^{ita}` for self-adjoint `a`.
pub fn exp_selfadjoint(a: &CoherentElement, t: f64, tol: f64) -> Result<CoherentElement> {
    let h = a.reachable(a.tower().horizon());
    if !is_self_adjoint_through(a, h, tol)? {
        return Err(Error::Precondition(format!(
            "exponential needs a self-adjoint element (checked through level {h})"
        )));
    }
    lift_function(a, &FunctionDescriptor::ExpI { t }, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathReport {
    pub samples: usize,
    pub horizon: usize,
    /// `|u(0) − 1|` over all levels.
    pub start_defect: f64,
    /// Worst `|u(t) − u(s)|_p − |t − s|·p(a)` over sample pairs and levels.
    pub lipschitz_excess: f64,
}

/// Samples `t ↦ e^{ita}` at [`PATH_SAMPLES`] points of `[0, 1]` and checks
/// `|u(t) − u(s)|_p ≤ |t − s|·p(a)` at every level through `horizon`.
pub fn path_check(a: &CoherentElement, horizon: usize, tol: f64) -> Result<PathReport> {
    let top = a.reachable(horizon);
    let ts: Vec<f64> = (0..PATH_SAMPLES).map(|k| k as f64 / (PATH_SAMPLES - 1) as f64).collect();
    let mut start_defect = 0.0f64;
    let mut lipschitz_excess = f64::NEG_INFINITY;
    for p in 1..=top {
        let ap = a.project(p)?;
        let pa = ap.norm()?;
        let us = ts
            .iter()
            .map(|&t| ap.apply_function(&FunctionDescriptor::ExpI { t }, tol))
            .collect::<Result<Vec<_>>>()?;
        start_defect = start_defect.max(us[0].distance(&ap.parent().identity())?);
        for i in 0..ts.len() {
            for k in i + 1..ts.len() {
                let gap = us[i].distance(&us[k])? - (ts[k] - ts[i]) * pa;
                lipschitz_excess = lipschitz_excess.max(gap);
            }
        }
    }
    Ok(PathReport {
        samples: PATH_SAMPLES,
        horizon: top,
        start_defect,
        lipschitz_excess,
    })
}

/// Distance from `z/|z|` to the point `e^{iθ}` of the branch ray.
fn ray_margin(z: Complex64, angle: f64) -> f64 {
    if z.norm() == 0.0 {
        return 0.0;
    }
    (z / z.norm() - Complex64::from_polar(1.0, angle)).norm()
}

#[derive(Clone, Debug)]
pub struct UnitaryLog {
    /// Self-adjoint `a` with `e^{ia} = u`.
    pub log: CoherentElement,
    pub branch: f64,
    pub horizon: usize,
    /// `max_p |e^{ia_p} − u_p|`.
    pub residual: f64,
    /// `|1 − u|_∞` through the horizon, reported for the principal branch.
    pub distance_from_one: Option<f64>,
}

/// `a = arg(u)` with values in `(branch − 2π, branch]`, so that `e^{ia} = u`.
pub fn unitary_log(u: &CoherentElement, branch: f64, tol: f64) -> Result<UnitaryLog> {
    unitary_log_through(u, branch, tol, u.tower().horizon())
}

/// `u` cut off at `horizon` when its tower reaches further, so that lifted
/// functions are only validated where they are asked for.
fn limited(u: &CoherentElement, horizon: usize) -> Result<CoherentElement> {
    let h = u.reachable(horizon);
    if h < u.reachable(u.tower().horizon()) {
        u.materialize(h)
    } else {
        Ok(u.clone())
    }
}

fn unitary_log_through(u: &CoherentElement, branch: f64, tol: f64, horizon: usize) -> Result<UnitaryLog> {
    let u = limited(u, horizon)?;
    let h = u.reachable(horizon);
    let u = match certify_unitary(&u, h, tol.max(1e-10))? {
        Some(u) => u,
        None => return Err(Error::Precondition("logarithm needs a unitary element".into())),
    };
    let mut distance_from_one = 0.0f64;
    for p in 1..=h {
        for j in blocks_to_check(&u, p)? {
            let b = u.block(p, j)?;
            for z in linalg::eigenvalues(&b, j)? {
                let margin = ray_margin(z, branch);
                if margin <= tol {
                    return Err(Error::Branch {
                        level: p,
                        eigenvalue: z,
                        angle: branch,
                        margin,
                    });
                }
            }
            let n = b.nrows();
            distance_from_one = distance_from_one.max(linalg::op_norm(&(CMatrix::identity(n, n) - &b))?);
        }
    }
    let log = lift_function(&u, &FunctionDescriptor::PrincipalArg { branch }, tol)?;
    let residual = reassembly_residual(&u, std::slice::from_ref(&log), h, tol)?;
    Ok(UnitaryLog {
        log,
        branch,
        horizon: h,
        residual,
        distance_from_one: (branch == PI).then_some(distance_from_one),
    })
}

fn exp_i(x: &AlgebraElement, tol: f64) -> Result<AlgebraElement> {
    x.apply_function(&FunctionDescriptor::ExpI { t: 1.0 }, tol)
}

fn level_product(factors: &[AlgebraElement], identity: AlgebraElement, tol: f64) -> Result<AlgebraElement> {
    factors.iter().try_fold(identity, |acc, a| Ok(&acc * &exp_i(a, tol)?))
}

/// `max_p |e^{ia_1,p} ⋯ e^{ia_n,p} − u_p|`.
fn reassembly_residual(u: &CoherentElement, factors: &[CoherentElement], horizon: usize, tol: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in 1..=u.reachable(horizon) {
        let up = u.project(p)?;
        let fs = factors.iter().map(|f| f.project(p)).collect::<Result<Vec<_>>>()?;
        let prod = level_product(&fs, up.parent().identity(), tol)?;
        worst = worst.max(prod.distance(&up)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct ExpFactorization {
    /// The unitary being factored.
    pub target: CoherentElement,
    /// `(a_1, …, a_n)` with `u = e^{ia_1} ⋯ e^{ia_n}`.
    pub factors: Vec<CoherentElement>,
    pub horizon: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub valid: bool,
    /// Branch selections used.
    pub attempts: usize,
}

/// Midpoint of the largest gap between angles on the circle, and half the
/// gap's chord length (the distance from the midpoint to the nearest angle).
fn largest_gap(mut args: Vec<f64>) -> (f64, f64) {
    if args.is_empty() {
        return (PI, 2.0);
    }
    args.sort_by(|a, b| a.total_cmp(b));
    let mut best = (args[0] + 2.0 * PI - args[args.len() - 1], args[args.len() - 1]);
    for w in args.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    let (gap, start) = best;
    let mid = start + gap / 2.0;
    (mid, 2.0 * (gap / 4.0).sin())
}

fn level_arguments(x: &AlgebraElement) -> Result<Vec<f64>> {
    Ok(x.raw_eigenvalues()?.iter().map(|z| z.arg()).collect())
}

/// Writes a coherent unitary as a product of exponentials of self-adjoint
/// elements: one principal logarithm if possible, otherwise a rotated
/// logarithm times a scalar phase.
pub fn identity_component_check(u: &CoherentElement, horizon: usize, tol: f64) -> Result<ExpFactorization> {
    let h = u.reachable(horizon);
    let u = certify_unitary(u, h, tol.max(1e-10))?
        .ok_or_else(|| Error::Precondition("identity component check needs a unitary element".into()))?;
    let finish = |factors: Vec<CoherentElement>, attempts: usize| -> Result<ExpFactorization> {
        let residual = reassembly_residual(&u, &factors, h, tol)?;
        Ok(ExpFactorization {
            target: u.clone(),
            factors,
            horizon: h,
            residual,
            tolerance: FACTORIZATION_TOL,
            valid: residual <= FACTORIZATION_TOL,
            attempts,
        })
    };

    let mut at_identity = true;
    for p in 1..=h {
        let up = u.project(p)?;
        if up.distance(&up.parent().identity())? > tol {
            at_identity = false;
            break;
        }
    }
    if at_identity {
        return finish(Vec::new(), 0);
    }

    match unitary_log_through(&u, PI, tol, h) {
        Ok(log) => return finish(vec![log.log], 1),
        Err(Error::Branch { .. }) => {}
        Err(e) => return Err(e),
    }

    let mut args = Vec::new();
    for p in 1..=h {
        for j in blocks_to_check(&u, p)? {
            args.extend(linalg::eigenvalues(&u.block(p, j)?, j)?.iter().map(|z| z.arg()));
        }
    }
    let (mid, margin) = largest_gap(args.clone());
    if margin <= tol {
        args.sort_by(|x, y| x.total_cmp(y));
        return Err(Error::Factorization {
            attempts: RETRY_BUDGET,
            level: h,
            arguments: args,
        });
    }
    // u = (u e^{−iφ}) e^{iφ}, with φ turning the widest gap towards −1
    let phi = mid - PI;
    let rotated = u.scale(Complex64::from_polar(1.0, -phi)).with_certificate(Certificate::Unitary);
    let log = unitary_log_through(&rotated, PI, tol, h)?;
    let phase = CoherentElement::scalar(u.tower(), Complex64::new(phi, 0.0));
    finish(vec![log.log, phase], RETRY_BUDGET)
}

/// Exponential factorization of a single unitary in a block algebra:
/// empty at the identity, one principal logarithm when `−1` is not in the
/// spectrum, otherwise a rotated logarithm times a scalar phase.
pub fn level_factorization(x: &AlgebraElement, tol: f64) -> Result<Vec<AlgebraElement>> {
    let alg = x.parent().clone();
    if x.distance(&alg.identity())? <= tol {
        return Ok(Vec::new());
    }
    let args = level_arguments(x)?;
    let principal = FunctionDescriptor::PrincipalArg { branch: PI };
    if args.iter().all(|&a| ray_margin(Complex64::from_polar(1.0, a), PI) > tol) {
        return Ok(vec![x.apply_function(&principal, tol)?]);
    }
    let (mid, margin) = largest_gap(args.clone());
    if margin <= tol {
        return Err(Error::Factorization {
            attempts: 2,
            level: 0,
            arguments: args,
        });
    }
    let phi = mid - PI;
    let rotated = x.scale(Complex64::from_polar(1.0, -phi));
    Ok(vec![
        rotated.apply_function(&principal, tol)?,
        alg.scalar(Complex64::new(phi, 0.0)),
    ])
}

/// `φ(u) = e^{iφ(a_1)} ⋯ e^{iφ(a_n)}` for a levelwise surjective `φ`.
pub fn pushforward_exp(phi: &TowerHomomorphism, fact: &ExpFactorization, tol: f64) -> Result<ExpFactorization> {
    let h = fact.horizon;
    for p in 1..=h {
        if phi.source().algebra(p)? != fact.target.tower().algebra(p)? {
            return Err(Error::Structural(format!(
                "factorization lives in {:?} at level {p}, homomorphism starts at {:?}",
                fact.target.tower().algebra(p)?,
                phi.source().algebra(p)?
            )));
        }
    }
    if !phi.is_levelwise_surjective(h)? {
        return Err(Error::Precondition("push-forward needs a levelwise surjective homomorphism".into()));
    }
    let target = phi.apply(&fact.target)?.with_certificate(Certificate::Unitary);
    let factors = fact
        .factors
        .iter()
        .map(|a| phi.apply(a))
        .collect::<Result<Vec<_>>>()?;
    let residual = reassembly_residual(&target, &factors, h, tol)?;
    Ok(ExpFactorization {
        target,
        factors,
        horizon: h,
        residual,
        tolerance: fact.tolerance,
        valid: residual <= fact.tolerance,
        attempts: fact.attempts,
    })
}

/// `max_p |φ_p(g(a_p)) − g(φ_p(a_p))|` through `horizon`.
pub fn homomorphism_calculus_residual(
    phi: &TowerHomomorphism,
    a: &CoherentElement,
    g: &FunctionDescriptor,
    horizon: usize,
    tol: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in 1..=a.reachable(horizon) {
        let ap = a.project(p)?;
        let lhs = phi.apply_level(p, &ap.apply_function(g, tol)?)?;
        let image = phi.apply_level(p, &ap)?;
        let blocks = image
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, b)| apply_function_block(b, g, tol, j))
            .collect::<Result<Vec<_>>>()?;
        let rhs = image.parent().element(blocks)?;
        worst = worst.max(lhs.distance(&rhs)?);
    }
    Ok(worst)
}

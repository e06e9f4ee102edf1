//! Bounded parts, the functor they define, and exactness checks.

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::blockmap::{devectorize, vectorize, BlockMap};
use crate::calculus::{uniform_norm, BoundednessVerdict, Certificate};
use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::homomorphism::TowerHomomorphism;
use crate::linalg::{self, CMatrix};
use crate::random;
use crate::tower::{closed_ideal, BlockSelector, CoherentElement, Tower};

/// Rank tolerance for kernel/image comparisons.
pub const RANK_TOL: f64 = 1e-10;

/// Slack added to the `2/n²` decay bound of the `f_n` approximation trace.
pub const TRACE_SLACK: f64 = 1e-9;

/// Largest `n` used in the `f_n` approximation trace.
pub const DEFAULT_TRACE_LENGTH: u32 = 64;

/// An element known to lie in `A_b`, with its uniform norm.
#[derive(Clone, Debug)]
pub struct BoundedElement {
    pub element: CoherentElement,
    /// Largest seminorm observed.
    pub norm: f64,
    /// Certified bound on `|a|_∞`; equals `norm` when the supremum is known.
    pub upper_bound: f64,
    pub certificate: String,
}

/// `a ∈ A_b`: returns the element tagged with `|a|_∞` when the verdict is
/// `Bounded`, and `None` otherwise.
pub fn bounded_part(e: &CoherentElement, horizon: usize, threshold: f64) -> Result<Option<BoundedElement>> {
    match uniform_norm(e, horizon, threshold)? {
        BoundednessVerdict::Bounded {
            value,
            upper_bound,
            certificate,
        } => {
            let element = if e.certificates().iter().any(|c| matches!(c, Certificate::NormBound { .. }))
                || value != upper_bound
            {
                e.clone()
            } else {
                e.clone().with_certificate(Certificate::NormBound {
                    bound: upper_bound,
                    normal: e.certificates().iter().any(Certificate::implies_normal),
                    reason: certificate.clone(),
                })
            };
            Ok(Some(BoundedElement {
                element,
                norm: value,
                upper_bound,
                certificate,
            }))
        }
        _ => Ok(None),
    }
}

/// `φ_b(a)`. The image carries the bound `|φ(a)|_∞ ≤ |a|_∞`, since
/// *-homomorphisms between C*-algebras are contractive at every level.
pub fn apply_functor(phi: &TowerHomomorphism, e: &BoundedElement, horizon: usize) -> Result<BoundedElement> {
    // scalar and unitary certificates survive only unital maps, so only the
    // norm bound is carried over
    let image = phi.apply(&e.element)?.with_certificate(Certificate::NormBound {
        bound: e.upper_bound,
        normal: e.element.certificates().iter().any(Certificate::implies_normal),
        reason: format!("image under a *-homomorphism of an element of norm ≤ {}", e.upper_bound),
    });
    bounded_part(&image, horizon, f64::INFINITY)?
        .ok_or_else(|| Error::Precondition("image of a bounded element lost its certificate".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelExactness {
    pub level: usize,
    /// `|β_p α_p|`.
    pub composite_residual: f64,
    pub image_rank: usize,
    pub kernel_dim: usize,
    /// Largest distance from a unit kernel vector to the image.
    pub kernel_gap: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationTrace {
    /// `|b|_∞` of the probe.
    pub b_norm: f64,
    /// `|α(a) − b|_∞` for the least-squares preimage `a`.
    pub preimage_residual: f64,
    /// `|α(f_n(a)) − b|_∞` for `n = 1, 2, …`.
    pub values: Vec<f64>,
    /// `|α(f_n(a)) − f_n(α(a))|_∞`, worst over `n`.
    pub calculus_defect: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactnessReport {
    pub horizon: usize,
    pub levels: Vec<LevelExactness>,
    /// `ker β = α(A)` at every level.
    pub verdict_original: bool,
    /// Every sampled self-adjoint `b ∈ ker β_b` is a limit of `α(f_n(a))`.
    pub verdict_bounded: bool,
    pub approximation_trace: Vec<ApproximationTrace>,
}

fn level_exactness(level: usize, alpha: &BlockMap, beta: &BlockMap) -> Result<LevelExactness> {
    let ma = alpha.linear_matrix();
    let mb = beta.linear_matrix();
    let composite_residual = if ma.ncols() == 0 || mb.nrows() == 0 {
        0.0
    } else {
        linalg::op_norm(&(&mb * &ma))?
    };
    let image_rank = if ma.nrows() == 0 || ma.ncols() == 0 {
        0
    } else {
        linalg::rank(&ma, RANK_TOL)?
    };
    let kernel = linalg::null_space(&mb, RANK_TOL)?;
    let kernel_dim = kernel.ncols();
    // distance of the kernel from the image: |(1 − P_im) K|
    let kernel_gap = if kernel_dim == 0 {
        0.0
    } else if image_rank == 0 {
        1.0
    } else {
        let coeffs = linalg::least_squares(&ma, &kernel, RANK_TOL)?;
        linalg::op_norm(&(&ma * coeffs - &kernel))?
    };
    Ok(LevelExactness {
        level,
        composite_residual,
        image_rank,
        kernel_dim,
        kernel_gap,
        exact: image_rank == kernel_dim && kernel_gap <= RANK_TOL.sqrt(),
    })
}

/// Checks exactness of `A --α--> B --β--> C` at `B`, levelwise and through
/// the `f_n` approximation of bounded self-adjoint kernel elements.
pub fn check_exactness<R: Rng>(
    alpha: &TowerHomomorphism,
    beta: &TowerHomomorphism,
    probes: usize,
    horizon: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ExactnessReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let b_tower = alpha.target();
    let top = b_tower.max_level().map_or(horizon, |m| m.min(horizon));
    let mut levels = Vec::with_capacity(top);
    for p in 1..=top {
        if alpha.target().algebra(p)? != beta.source().algebra(p)? {
            return Err(Error::Structural(format!(
                "α lands in {:?} at level {p} but β starts at {:?}",
                alpha.target().algebra(p)?,
                beta.source().algebra(p)?
            )));
        }
        let lvl = level_exactness(p, &alpha.level_map(p)?, &beta.level_map(p)?)?;
        if lvl.composite_residual > tol {
            return Err(Error::Precondition(format!(
                "β∘α is not zero at level {p}: residual {:e} > {tol:e}",
                lvl.composite_residual
            )));
        }
        levels.push(lvl);
    }
    let verdict_original = levels.iter().all(|l| l.exact);

    let alpha_top = alpha.level_map(top)?;
    let beta_top = beta.level_map(top)?;
    let kernel = linalg::null_space(&beta_top.linear_matrix(), RANK_TOL)?;
    let mut traces = Vec::with_capacity(probes);
    for _ in 0..probes {
        traces.push(approximation_trace(alpha, &alpha_top, &kernel, top, tol, rng)?);
    }
    let verdict_bounded = traces.iter().all(|t| t.converged);
    Ok(ExactnessReport {
        horizon: top,
        levels,
        verdict_original,
        verdict_bounded,
        approximation_trace: traces,
    })
}

fn hermitian_part(x: &AlgebraElement) -> AlgebraElement {
    x.map_blocks(|b| (b + b.adjoint()) * Complex64::new(0.5, 0.0))
}

fn project_down(tower: &Tower, top: usize, x: &AlgebraElement) -> Result<Vec<AlgebraElement>> {
    let mut levels = vec![x.clone()];
    for p in (1..top).rev() {
        let next = tower.connecting_map(p)?.apply(levels.last().expect("nonempty"))?;
        levels.push(next);
    }
    levels.reverse();
    Ok(levels)
}

fn approximation_trace<R: Rng>(
    alpha: &TowerHomomorphism,
    alpha_top: &BlockMap,
    kernel: &CMatrix,
    top: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ApproximationTrace> {
    let b_alg = alpha_top.target().clone();
    // random self-adjoint b in ker β (the kernel of a *-map is *-closed)
    let coeffs = nalgebra::DVector::from_fn(kernel.ncols(), |_, _| random::gaussian(rng));
    let raw = devectorize(&b_alg, &(kernel * coeffs))?;
    let mut b_top = hermitian_part(&raw);
    let b_raw_norm = b_top.norm()?;
    if b_raw_norm > 0.0 {
        let target_norm: f64 = rng.random_range(0.25..=1.0);
        b_top = b_top.scale(Complex64::new(target_norm / b_raw_norm, 0.0));
    }
    let b_levels = project_down(alpha.target(), top, &b_top)?;

    let ma = alpha_top.linear_matrix();
    let a_vec = if ma.ncols() == 0 {
        nalgebra::DVector::zeros(0)
    } else {
        let rhs = CMatrix::from_column_slice(b_alg.dimension(), 1, vectorize(&b_top).as_slice());
        let sol = linalg::least_squares(&ma, &rhs, RANK_TOL)?;
        nalgebra::DVector::from_column_slice(sol.as_slice())
    };
    let a_top = hermitian_part(&devectorize(alpha_top.source(), &a_vec)?);
    let a_levels = project_down(alpha.source(), top, &a_top)?;

    let mut b_norm = 0.0f64;
    let mut preimage_residual = 0.0f64;
    for p in 1..=top {
        b_norm = b_norm.max(b_levels[p - 1].norm()?);
        let img = alpha.apply_level(p, &a_levels[p - 1])?;
        preimage_residual = preimage_residual.max(img.distance(&b_levels[p - 1])?);
    }

    let mut values = Vec::with_capacity(DEFAULT_TRACE_LENGTH as usize);
    let mut calculus_defect = 0.0f64;
    let mut converged = true;
    for n in 1..=DEFAULT_TRACE_LENGTH {
        let f = FunctionDescriptor::Rational { n };
        let mut worst = 0.0f64;
        for p in 1..=top {
            let a = &a_levels[p - 1];
            // f_n(a) as the rational expression n²a(n² + a²)⁻¹
            let fa = rational_image(a, &f, tol)?;
            let lhs = alpha.apply_level(p, &fa)?;
            worst = worst.max(lhs.distance(&b_levels[p - 1])?);
            let rhs = rational_image(&alpha.apply_level(p, a)?, &f, tol)?;
            calculus_defect = calculus_defect.max(lhs.distance(&rhs)?);
        }
        let n2 = (n as f64).powi(2);
        if worst > 2.0 / n2 + TRACE_SLACK {
            converged = false;
        }
        values.push(worst);
    }
    Ok(ApproximationTrace {
        b_norm,
        preimage_residual,
        values,
        calculus_defect,
        converged,
    })
}

fn rational_image(x: &AlgebraElement, f: &FunctionDescriptor, tol: f64) -> Result<AlgebraElement> {
    let blocks = x
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| f.apply_matrix(b, tol, i))
        .collect::<Result<Vec<_>>>()?;
    x.parent().element(blocks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientIsoReport {
    pub horizon: usize,
    /// `|q(i)|` for random `i ∈ I_b`: `I_b` is in the kernel.
    pub kernel_residual: f64,
    /// Failure of `aI + Ia + I* ⊆ I`.
    pub ideal_residual: f64,
    /// Failure of `q` to preserve `+`, `·`, `*`.
    pub homomorphism_residual: f64,
    /// `| |q(a)|_∞ − |a + I_b| |` with the quotient norm computed in `A_b`.
    pub isometry_residual: f64,
    /// Worst `|q(a)|_∞ − |a + i|_∞` over random `i ∈ I_b` (≤ 0 when the
    /// quotient norm is the infimum).
    pub infimum_excess: f64,
    /// `|q(s(y)) − y|` for a section `s` on random `y ∈ (A/I)_b`.
    pub surjectivity_residual: f64,
    pub passed: bool,
}

/// Checks that `q: A_b → (A/I)_b` is surjective with kernel `I_b` and that
/// the induced `A_b/I_b → (A/I)_b` is an isometric *-isomorphism.
pub fn quotient_iso_check<R: Rng>(
    tower: &Tower,
    selector: BlockSelector,
    horizon: usize,
    probes: usize,
    tol: f64,
    rng: &mut R,
) -> Result<QuotientIsoReport> {
    let top = tower.max_level().map_or(horizon, |m| m.min(horizon));
    let finite = tower.truncated(top)?.with_horizon(top);
    let dec = closed_ideal(&finite, selector)?;
    let a_top = finite.algebra(top)?;
    let i_top = dec.ideal.algebra(top)?;
    let q_top = dec.quotient.algebra(top)?;
    let q = &dec.quotient_map;
    let inc = &dec.inclusion;

    let mut kernel_residual = 0.0f64;
    let mut ideal_residual = 0.0f64;
    let mut isometry_residual = 0.0f64;
    let mut infimum_excess = f64::NEG_INFINITY;
    let mut surjectivity_residual = 0.0f64;
    let homomorphism_residual = q.homomorphism_residual(top, probes.min(10).max(1), rng)?;

    let norm = |e: &CoherentElement| -> Result<f64> {
        match uniform_norm(e, top, f64::INFINITY)? {
            BoundednessVerdict::Bounded { value, .. } => Ok(value),
            other => Err(Error::Precondition(format!("finite tower gave verdict {other}"))),
        }
    };

    for _ in 0..probes {
        let a = CoherentElement::from_top(&finite, top, random::element(&a_top, rng))?;
        let i = CoherentElement::from_top(&dec.ideal, top, random::element(&i_top, rng))?;
        let i_in_a = inc.apply(&i)?;

        kernel_residual = kernel_residual.max(norm(&q.apply(&i_in_a)?)?);
        let ai = a.zip_with(&i_in_a, |x, y| x * y)?;
        let ia = i_in_a.zip_with(&a, |x, y| x * y)?;
        for x in [ai, ia, i_in_a.adjoint()] {
            ideal_residual = ideal_residual.max(norm(&q.apply(&x)?)?);
        }

        let qa = norm(&q.apply(&a)?)?;
        // distance to I_b: subtract the selected blocks, which is optimal
        let a_mod_i = q.apply(&a)?;
        let reinserted = section(q, &a_mod_i, top)?;
        let quotient_norm = norm(&reinserted)?;
        isometry_residual = isometry_residual.max((qa - quotient_norm).abs());
        let shifted = a.zip_with(&i_in_a, |x, y| x + y)?;
        infimum_excess = infimum_excess.max(qa - norm(&shifted)?);

        let y = CoherentElement::from_top(&dec.quotient, top, random::element(&q_top, rng))?;
        let lifted = section(q, &y, top)?;
        let back = q.apply(&lifted)?;
        for p in 1..=top {
            surjectivity_residual =
                surjectivity_residual.max(back.project(p)?.distance(&y.project(p)?)?);
        }
    }
    if probes == 0 {
        infimum_excess = 0.0;
    }
    let passed = kernel_residual <= tol
        && ideal_residual <= tol
        && homomorphism_residual <= tol
        && isometry_residual <= tol
        && infimum_excess <= tol
        && surjectivity_residual <= tol;
    Ok(QuotientIsoReport {
        horizon: top,
        kernel_residual,
        ideal_residual,
        homomorphism_residual,
        isometry_residual,
        infimum_excess,
        surjectivity_residual,
        passed,
    })
}

/// Lifts `y ∈ A/I` to `A` by filling the ideal blocks with zero.
fn section(q: &TowerHomomorphism, y: &CoherentElement, top: usize) -> Result<CoherentElement> {
    let levels = (1..=top)
        .map(|p| q.level_map(p)?.preimage(&y.project(p)?))
        .collect::<Result<Vec<_>>>()?;
    CoherentElement::explicit(q.source(), levels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelQuotientReport {
    pub level: usize,
    pub iso: QuotientIsoReport,
    /// The quotient by `ker p` has the same block structure as `A_p`.
    pub same_shape: bool,
    /// `| |q(a)|_∞ − p(a) |` over random probes.
    pub seminorm_residual: f64,
    pub passed: bool,
}

/// `A_p ≅ A_b/(ker p)_b`: the quotient by the kernel of the level-`p`
/// seminorm is `A_p` with the norm `p`.
pub fn level_quotient_check<R: Rng>(
    tower: &Tower,
    level: usize,
    horizon: usize,
    probes: usize,
    tol: f64,
    rng: &mut R,
) -> Result<LevelQuotientReport> {
    let top = tower.max_level().map_or(horizon, |m| m.min(horizon));
    if level == 0 || level > top {
        return Err(Error::InvalidArgument(format!(
            "level {level} is outside 1..={top}"
        )));
    }
    let finite = tower.truncated(top)?.with_horizon(top);
    let selector = BlockSelector::kernel_of_level(&finite, level);
    let iso = quotient_iso_check(&finite, selector.clone(), top, probes, tol, rng)?;
    let dec = closed_ideal(&finite, selector)?;
    let mut quotient_sizes = dec.quotient.algebra(top)?.block_sizes().to_vec();
    let mut level_sizes = finite.algebra(level)?.block_sizes().to_vec();
    quotient_sizes.sort_unstable();
    level_sizes.sort_unstable();
    let same_shape = quotient_sizes == level_sizes;

    let a_top = finite.algebra(top)?;
    let mut seminorm_residual = 0.0f64;
    for _ in 0..probes {
        let a = CoherentElement::from_top(&finite, top, random::element(&a_top, rng))?;
        let qa = dec.quotient_map.apply(&a)?;
        let q_norm = match uniform_norm(&qa, top, f64::INFINITY)? {
            BoundednessVerdict::Bounded { value, .. } => value,
            other => return Err(Error::Precondition(format!("finite tower gave verdict {other}"))),
        };
        let p_norm = a.project(level)?.norm()?;
        seminorm_residual = seminorm_residual.max((q_norm - p_norm).abs());
    }
    let passed = iso.passed && same_shape && seminorm_residual <= tol;
    Ok(LevelQuotientReport {
        level,
        iso,
        same_shape,
        seminorm_residual,
        passed,
    })
}

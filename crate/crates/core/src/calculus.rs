//! Analysis of coherent elements across levels: seminorms, the uniform norm,
//! spectra as unions over levels, and the lifted functional calculus.
//!
//! A supremum over infinitely many levels cannot be observed, so boundedness
//! is reported as a three-valued [`BoundednessVerdict`]. `Bounded` is only
//! returned with a certificate: a scalar or unitary element, an exhausted
//! finite tower, or an analytic bound attached by whoever built the element.
//!
//! Level sweeps only look at the blocks that are new at each level. The other
//! blocks of `A_q` are unitary conjugates of blocks of `A_{q-1}` (for a
//! coherent element), so they contribute nothing new to a norm or spectrum.

use std::fmt;

use num_complex::Complex64;

use crate::algebra::{apply_function_block, DEFAULT_NORMAL_TOL};
use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::linalg::{self, CMatrix};
use crate::tower::CoherentElement;

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Evidence about an element that cannot be read off finitely many levels.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// `λ·1`: norm and spectral radius `|λ|`.
    Scalar(Complex64),
    /// `u*u = uu* = 1` at every level: norm 1.
    Unitary,
    /// `|a|_∞ ≤ bound`, with the reason it holds at every level.
    NormBound {
        bound: f64,
        normal: bool,
        reason: String,
    },
    Spectral(SpectralCertificate),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralCertificate {
    /// Every level is nilpotent: spectral radius 0.
    Nilpotent,
    RadiusBound { bound: f64, reason: String },
}

impl Certificate {
    pub(crate) fn under_adjoint(&self) -> Option<Self> {
        Some(match self {
            Self::Scalar(l) => Self::Scalar(l.conj()),
            other => other.clone(),
        })
    }

    /// Exact norm when the certificate pins it down.
    fn exact_norm(&self) -> Option<f64> {
        match self {
            Self::Scalar(l) => Some(l.norm()),
            Self::Unitary => Some(1.0),
            _ => None,
        }
    }

    fn norm_bound(&self) -> Option<f64> {
        match self {
            Self::NormBound { bound, .. } => Some(*bound),
            other => other.exact_norm(),
        }
    }

    fn exact_radius(&self) -> Option<f64> {
        match self {
            Self::Scalar(l) => Some(l.norm()),
            Self::Unitary => Some(1.0),
            Self::Spectral(SpectralCertificate::Nilpotent) => Some(0.0),
            _ => None,
        }
    }

    fn radius_bound(&self) -> Option<f64> {
        match self {
            // r(a) ≤ |a| for every element
            Self::NormBound { bound, .. } => Some(*bound),
            Self::Spectral(SpectralCertificate::RadiusBound { bound, .. }) => Some(*bound),
            other => other.exact_radius(),
        }
    }

    pub fn implies_normal(&self) -> bool {
        matches!(
            self,
            Self::Scalar(_) | Self::Unitary | Self::NormBound { normal: true, .. }
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(l) => write!(f, "scalar {}{:+}i", l.re, l.im),
            Self::Unitary => write!(f, "unitary"),
            Self::NormBound { bound, reason, .. } => write!(f, "norm ≤ {bound} ({reason})"),
            Self::Spectral(SpectralCertificate::Nilpotent) => write!(f, "nilpotent at every level"),
            Self::Spectral(SpectralCertificate::RadiusBound { bound, reason }) => {
                write!(f, "spectral radius ≤ {bound} ({reason})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundednessVerdict {
    /// `value` is the supremum when `value == upper_bound`; otherwise the
    /// largest level value seen, with the certified `upper_bound`.
    Bounded {
        value: f64,
        upper_bound: f64,
        certificate: String,
    },
    Unbounded {
        witness_level: usize,
        witness_value: f64,
    },
    UnknownAtTruncation {
        lower_bound: f64,
        horizon: usize,
    },
}

impl BoundednessVerdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::Bounded { .. })
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Self::Unbounded { .. })
    }

    pub fn bounded_value(&self) -> Option<f64> {
        match self {
            Self::Bounded { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl fmt::Display for BoundednessVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bounded {
                value,
                upper_bound,
                certificate,
            } if value == upper_bound => write!(f, "Bounded({value}) [{certificate}]"),
            Self::Bounded {
                value,
                upper_bound,
                certificate,
            } => write!(f, "Bounded({value} ≤ {upper_bound}) [{certificate}]"),
            Self::Unbounded {
                witness_level,
                witness_value,
            } => write!(f, "Unbounded(level {witness_level}, value {witness_value})"),
            Self::UnknownAtTruncation {
                lower_bound,
                horizon,
            } => write!(f, "UnknownAtTruncation(≥ {lower_bound} through level {horizon})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub points: Vec<Complex64>,
    pub horizon: usize,
    pub radius: f64,
}

/// `p(a) = |a_p|`.
pub fn seminorm(e: &CoherentElement, level: usize) -> Result<f64> {
    e.project(level)?.norm()
}

/// Running maximum of a per-block quantity over the new blocks of each level.
/// Calls `visit(level, running_max)` after each level; stops early when it
/// returns `false`.
fn sweep_new_blocks(
    e: &CoherentElement,
    horizon: usize,
    measure: impl Fn(&CMatrix, usize) -> Result<f64>,
    mut visit: impl FnMut(usize, f64) -> bool,
) -> Result<usize> {
    let top = e.reachable(horizon);
    let mut running = 0.0f64;
    for p in 1..=top {
        for j in e.tower().new_blocks(p)? {
            running = running.max(measure(&e.block(p, j)?, j)?);
        }
        if !visit(p, running) {
            return Ok(p);
        }
    }
    Ok(top)
}

fn exhausted(e: &CoherentElement, reached: usize) -> bool {
    matches!(e.tower().max_level(), Some(m) if reached >= m)
}

/// The uniform norm `|a|_∞ = sup_p p(a)`, observed through level `horizon`.
pub fn uniform_norm(e: &CoherentElement, horizon: usize, threshold: f64) -> Result<BoundednessVerdict> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if let Some((c, v)) = e.certificates().iter().find_map(|c| c.exact_norm().map(|v| (c, v))) {
        return Ok(BoundednessVerdict::Bounded {
            value: v,
            upper_bound: v,
            certificate: c.to_string(),
        });
    }
    let mut witness = None;
    let mut seen = 0.0;
    let reached = sweep_new_blocks(
        e,
        horizon,
        |b, _| linalg::op_norm(b),
        |p, m| {
            seen = m;
            if m > threshold {
                witness = Some((p, m));
                false
            } else {
                true
            }
        },
    )?;
    if let Some((witness_level, witness_value)) = witness {
        return Ok(BoundednessVerdict::Unbounded {
            witness_level,
            witness_value,
        });
    }
    if let Some((c, bound)) = e.certificates().iter().find_map(|c| c.norm_bound().map(|b| (c, b))) {
        return Ok(BoundednessVerdict::Bounded {
            value: seen,
            upper_bound: bound,
            certificate: c.to_string(),
        });
    }
    if exhausted(e, reached) {
        return Ok(BoundednessVerdict::Bounded {
            value: seen,
            upper_bound: seen,
            certificate: format!("finite tower exhausted at level {reached}"),
        });
    }
    Ok(BoundednessVerdict::UnknownAtTruncation {
        lower_bound: seen,
        horizon: reached,
    })
}

/// `sp(a) = ⋃_p sp(a_p)` through level `horizon`.
pub fn pro_spectrum(e: &CoherentElement, horizon: usize, cluster_tol: f64) -> Result<SpectrumReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidArgument("cluster tolerance must be positive".into()));
    }
    let top = e.reachable(horizon);
    let mut points: Vec<Complex64> = Vec::new();
    let mut radius = 0.0f64;
    for p in 1..=top {
        let mut fresh = Vec::new();
        for j in e.tower().new_blocks(p)? {
            let ev = linalg::eigenvalues(&e.block(p, j)?, j)?;
            radius = ev.iter().map(|z| z.norm()).fold(radius, f64::max);
            fresh.extend(linalg::cluster_points(&ev, cluster_tol));
        }
        if !fresh.is_empty() {
            points.extend(fresh);
            points = linalg::cluster_points(&points, cluster_tol);
        }
    }
    Ok(SpectrumReport {
        points,
        horizon: top,
        radius,
    })
}

/// Spectral radius `r(a) = sup_p r(a_p)`, with the same three-valued logic as
/// [`uniform_norm`].
pub fn is_spectrally_bounded(e: &CoherentElement, horizon: usize, threshold: f64) -> Result<BoundednessVerdict> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if let Some((c, v)) = e.certificates().iter().find_map(|c| c.exact_radius().map(|v| (c, v))) {
        return Ok(BoundednessVerdict::Bounded {
            value: v,
            upper_bound: v,
            certificate: c.to_string(),
        });
    }
    let mut witness = None;
    let mut seen = 0.0;
    let reached = sweep_new_blocks(
        e,
        horizon,
        |b, j| Ok(linalg::eigenvalues(b, j)?.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        |p, m| {
            seen = m;
            if m > threshold {
                witness = Some((p, m));
                false
            } else {
                true
            }
        },
    )?;
    if let Some((witness_level, witness_value)) = witness {
        return Ok(BoundednessVerdict::Unbounded {
            witness_level,
            witness_value,
        });
    }
    if let Some((c, bound)) = e.certificates().iter().find_map(|c| c.radius_bound().map(|b| (c, b))) {
        return Ok(BoundednessVerdict::Bounded {
            value: seen,
            upper_bound: bound,
            certificate: c.to_string(),
        });
    }
    if exhausted(e, reached) {
        return Ok(BoundednessVerdict::Bounded {
            value: seen,
            upper_bound: seen,
            certificate: format!("finite tower exhausted at level {reached}"),
        });
    }
    Ok(BoundednessVerdict::UnknownAtTruncation {
        lower_bound: seen,
        horizon: reached,
    })
}

/// True when every block of every level through `horizon` is self-adjoint
/// within `tol` (relative).
pub fn is_self_adjoint_through(e: &CoherentElement, horizon: usize, tol: f64) -> Result<bool> {
    let top = e.reachable(horizon);
    for p in 1..=top {
        for j in e.tower().new_blocks(p)? {
            let b = e.block(p, j)?;
            let scale = linalg::op_norm(&b)?.max(1.0);
            if linalg::op_norm(&(&b - b.adjoint()))? > tol * scale {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_normal_through(e: &CoherentElement, horizon: usize, tol: f64) -> Result<bool> {
    let top = e.reachable(horizon);
    for p in 1..=top {
        for j in e.tower().new_blocks(p)? {
            if !crate::algebra::block_is_normal(&e.block(p, j)?, tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `f(a) = (f(a_p))`, evaluated lazily blockwise.
///
/// Every level the element reaches within its tower's horizon is evaluated
/// up front so domain and normality errors surface here. On a non-unital
/// tower `f(0) = 0` is required.
pub fn lift_function(e: &CoherentElement, f: &FunctionDescriptor, tol: f64) -> Result<CoherentElement> {
    if !e.tower().is_unital() {
        match f.eval(Complex64::new(0.0, 0.0)) {
            Some(z) if z.norm() <= tol => {}
            other => {
                return Err(Error::Precondition(format!(
                    "{f} on a non-unital tower needs f(0) = 0, got {other:?}"
                )))
            }
        }
    }
    let horizon = e.reachable(e.tower().horizon());
    for p in 1..=horizon {
        for j in e.tower().new_blocks(p)? {
            apply_function_block(&e.block(p, j)?, f, tol, j)?;
        }
    }
    let (src, func) = (e.clone(), f.clone());
    let mut out = CoherentElement::from_fn(e.tower(), move |p, j| {
        apply_function_block(&src.block(p, j)?, &func, tol, j)
    })
    .with_coherence_tol(e.coherence_tol());
    if let Some(c) = lifted_certificate(e, f, horizon, tol)? {
        out = out.with_certificate(c);
    }
    Ok(out)
}

/// Bound on `|f(a)|_∞` from `sup |f|` over a set containing every spectrum.
fn lifted_certificate(
    e: &CoherentElement,
    f: &FunctionDescriptor,
    horizon: usize,
    tol: f64,
) -> Result<Option<Certificate>> {
    let declared_normal = e.certificates().iter().any(Certificate::implies_normal);
    let self_adjoint = is_self_adjoint_through(e, horizon, tol.max(DEFAULT_NORMAL_TOL))?;
    let reason = |what: &str| {
        if declared_normal {
            format!("{what}; argument certified normal")
        } else {
            format!("{what}; argument self-adjoint through level {horizon}")
        }
    };
    let cert = match f {
        FunctionDescriptor::Rational { n } if self_adjoint => Some(Certificate::NormBound {
            bound: *n as f64 / 2.0,
            normal: true,
            reason: reason(&format!("sup of f_{n} on the real line is {}", *n as f64 / 2.0)),
        }),
        FunctionDescriptor::ExpI { .. } if self_adjoint => Some(Certificate::Unitary),
        FunctionDescriptor::PrincipalArg { branch } if self_adjoint || declared_normal => {
            Some(Certificate::NormBound {
                bound: branch.abs().max((branch - 2.0 * std::f64::consts::PI).abs()),
                normal: true,
                reason: reason("arg takes values in a window of length 2π"),
            })
        }
        FunctionDescriptor::Custom(tab) if self_adjoint || declared_normal => Some(Certificate::NormBound {
            bound: tab.sup_abs(),
            normal: true,
            reason: reason("maximum modulus of the interpolation table"),
        }),
        FunctionDescriptor::Polynomial(terms) if self_adjoint || declared_normal => {
            let m = e.certificates().iter().find_map(Certificate::norm_bound);
            m.map(|m| Certificate::NormBound {
                bound: terms
                    .iter()
                    .map(|t| t.coeff.norm() * m.powi((t.z_power + t.conj_power) as i32))
                    .sum(),
                normal: true,
                reason: reason(&format!("polynomial bounded on the disk of radius {m}")),
            })
        }
        _ => None,
    };
    Ok(cert)
}

/// `(a₁, a₂)` with `a = a₁ + i a₂`, both self-adjoint. Norm certificates
/// carry over since `|a₁|, |a₂| ≤ |a|`.
pub fn selfadjoint_parts(e: &CoherentElement) -> Result<(CoherentElement, CoherentElement)> {
    let adj = e.adjoint();
    let re = e.zip_with(&adj, |a, b| (a + b) * Complex64::new(0.5, 0.0))?;
    let im = e.zip_with(&adj, |a, b| (a - b) * Complex64::new(0.0, -0.5))?;
    let bound = e.certificates().iter().find_map(Certificate::norm_bound);
    let cert = |part: &str| {
        bound.map(|b| Certificate::NormBound {
            bound: b,
            normal: true,
            reason: format!("{part} part of an element of norm ≤ {b}"),
        })
    };
    let mut re = re.with_coherence_tol(e.coherence_tol());
    let mut im = im.with_coherence_tol(e.coherence_tol());
    if let Some(c) = cert("real") {
        re = re.with_certificate(c);
    }
    if let Some(c) = cert("imaginary") {
        im = im.with_certificate(c);
    }
    Ok((re, im))
}

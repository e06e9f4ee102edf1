//! Scalar functions that can be fed to the functional calculus.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

/// A monomial `coeff · z^p · z̄^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub z_power: u32,
    pub conj_power: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionDescriptor {
    /// Polynomial in `z` and `z̄`.
    Polynomial(Vec<Term>),
    /// `f_n(x) = n²x / (n² + x²)`.
    Rational { n: u32 },
    /// `arg z` with values in `(branch − 2π, branch]`; discontinuous along the
    /// ray at angle `branch`.
    PrincipalArg { branch: f64 },
    /// `x ↦ e^{itx}`.
    ExpI { t: f64 },
    /// Piecewise-linear interpolation of a table on a real interval.
    Custom(Tabulated),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<Complex64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<Complex64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidArgument(
                "a tabulated function needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self { xs, ys })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Largest modulus of the interpolant (attained at a node).
    pub fn sup_abs(&self) -> f64 {
        self.ys.iter().map(|y| y.norm()).fold(0.0, f64::max)
    }

    fn eval(&self, x: f64) -> Complex64 {
        let k = self.xs.partition_point(|&a| a <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.ys[k - 1] * (1.0 - s) + self.ys[k] * s
    }
}

impl FunctionDescriptor {
    pub fn rational(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("f_n requires n >= 1".into()));
        }
        Ok(Self::Rational { n })
    }

    /// `Σ coeffs[k] z^k`.
    pub fn polynomial_z(coeffs: &[Complex64]) -> Self {
        Self::Polynomial(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| Term {
                    coeff: c,
                    z_power: k as u32,
                    conj_power: 0,
                })
                .collect(),
        )
    }

    pub fn identity() -> Self {
        Self::polynomial_z(&[ZERO, Complex64::new(1.0, 0.0)])
    }

    /// True when the function is a rational expression in `z` alone, so it can
    /// be evaluated on non-normal matrices.
    pub fn is_rational_in_z(&self) -> bool {
        match self {
            Self::Polynomial(terms) => terms.iter().all(|t| t.conj_power == 0),
            Self::Rational { .. } => true,
            _ => false,
        }
    }

    /// Scalar evaluation, `None` where the function is undefined.
    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        self.eval_checked(z, 0.0)
    }

    /// Like [`eval`](Self::eval), but also rejects points within `tol` of a
    /// singularity or discontinuity.
    pub fn eval_checked(&self, z: Complex64, tol: f64) -> Option<Complex64> {
        match self {
            Self::Polynomial(terms) => Some(
                terms
                    .iter()
                    .map(|t| t.coeff * z.powu(t.z_power) * z.conj().powu(t.conj_power))
                    .sum(),
            ),
            Self::Rational { n } => {
                let n2 = (*n as f64).powi(2);
                let den = z * z + n2;
                if den.norm() <= tol.max(f64::MIN_POSITIVE) * n2 {
                    None
                } else {
                    Some(z * n2 / den)
                }
            }
            Self::PrincipalArg { branch } => {
                if z.norm() <= tol.max(f64::MIN_POSITIVE) {
                    return None;
                }
                let ray = Complex64::from_polar(1.0, *branch);
                if (z / z.norm() - ray).norm() <= tol {
                    return None;
                }
                Some(Complex64::new(arg_on_branch(z, *branch), 0.0))
            }
            Self::ExpI { t } => {
                let w = Complex64::new(0.0, *t) * z;
                Some(w.exp())
            }
            Self::Custom(tab) => {
                let (lo, hi) = tab.interval();
                let slack = tol * z.norm().max(1.0);
                if z.im.abs() > slack || z.re < lo - slack || z.re > hi + slack {
                    None
                } else {
                    Some(tab.eval(z.re))
                }
            }
        }
    }

    /// Maximum of `|f|` over a finite point set; `None` if undefined somewhere.
    pub fn sup_abs_on(&self, points: &[Complex64]) -> Option<f64> {
        points
            .iter()
            .map(|&z| self.eval(z).map(|w| w.norm()))
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
    }

    /// Evaluates the function as a matrix expression. Only valid for
    /// [`is_rational_in_z`](Self::is_rational_in_z) functions.
    pub(crate) fn apply_matrix(&self, x: &CMatrix, tol: f64, block: usize) -> Result<CMatrix> {
        let n = x.nrows();
        match self {
            Self::Polynomial(terms) if self.is_rational_in_z() => {
                let degree = terms.iter().map(|t| t.z_power).max().unwrap_or(0);
                let mut coeffs = vec![ZERO; degree as usize + 1];
                for t in terms {
                    coeffs[t.z_power as usize] += t.coeff;
                }
                // Horner
                let mut acc = CMatrix::zeros(n, n);
                for &c in coeffs.iter().rev() {
                    acc = &acc * x + CMatrix::identity(n, n) * c;
                }
                Ok(acc)
            }
            Self::Rational { n: k } => {
                let k2 = (*k as f64).powi(2);
                let scale = k2.max(linalg::op_norm(x)?.powi(2));
                let poles = [Complex64::new(0.0, *k as f64), Complex64::new(0.0, -(*k as f64))];
                let bad: Vec<Complex64> = linalg::eigenvalues(x, block)?
                    .into_iter()
                    .filter(|z| poles.iter().any(|p| (z - p).norm() * (z + p).norm() <= tol * scale))
                    .collect();
                if !bad.is_empty() {
                    return Err(Error::Domain {
                        function: self.to_string(),
                        points: bad,
                    });
                }
                let den = x * x + CMatrix::identity(n, n) * Complex64::new(k2, 0.0);
                let num = x * Complex64::new(k2, 0.0);
                linalg::solve(&den, &num).map_err(|_| Error::Domain {
                    function: self.to_string(),
                    points: poles.to_vec(),
                })
            }
            _ => Err(Error::Precondition(format!(
                "{self} cannot be evaluated on a non-normal matrix"
            ))),
        }
    }
}

/// Argument of `z` taken in `(branch − 2π, branch]`.
pub fn arg_on_branch(z: Complex64, branch: f64) -> f64 {
    let lo = branch - 2.0 * PI;
    let mut a = z.arg();
    // z.arg() is in (−π, π]; shift into the window
    a = lo + (a - lo).rem_euclid(2.0 * PI);
    if a <= lo {
        a += 2.0 * PI;
    }
    a
}

impl fmt::Display for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial(terms) => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|t| {
                        format!(
                            "({}{:+}i)z^{}zbar^{}",
                            t.coeff.re, t.coeff.im, t.z_power, t.conj_power
                        )
                    })
                    .collect();
                write!(f, "polynomial[{}]", parts.join(" + "))
            }
            Self::Rational { n } => write!(f, "f_{n}"),
            Self::PrincipalArg { branch } => write!(f, "arg(branch={branch})"),
            Self::ExpI { t } => write!(f, "exp(i·{t}·x)"),
            Self::Custom(tab) => {
                let (lo, hi) = tab.interval();
                write!(f, "tabulated[{lo}, {hi}]")
            }
        }
    }
}

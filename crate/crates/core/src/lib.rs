//! Pro-C*-algebras modelled as towers of finite-dimensional C*-algebras.
//!
//! A pro-C*-algebra `A = lim A_p` is represented by a [`Tower`]: a chain of
//! block algebras `A_p = M_{n_1} ⊕ … ⊕ M_{n_k}` with surjective connecting
//! *-homomorphisms. Elements are [`CoherentElement`]s, compatible families
//! `(a_p)` given explicitly or by a lazy per-level generator.

pub mod algebra;
pub mod blockmap;
pub mod bounded;
pub mod calculus;
pub mod elements;
pub mod error;
pub mod function;
pub mod gelfand;
pub mod homomorphism;
pub mod linalg;
pub mod random;
pub mod tower;
pub mod unitary;

pub use algebra::{AlgebraElement, BlockAlgebra};
pub use blockmap::{BlockMap, BlockSource};
pub use bounded::{BoundedElement, ExactnessReport, QuotientIsoReport};
pub use calculus::{BoundednessVerdict, Certificate, SpectralCertificate, SpectrumReport};
pub use error::{Error, Result};
pub use function::FunctionDescriptor;
pub use gelfand::{CharacterSpace, CoveredSpace};
pub use homomorphism::TowerHomomorphism;
pub use linalg::CMatrix;
pub use tower::{BlockSelector, CoherentElement, ConnectingMap, Tower};
pub use unitary::ExpFactorization;

//! Numerical laboratory for the multivariate trace-Wishart distribution.
//!
//! The crate evaluates the joint law of the traces of the diagonal blocks of a
//! `Wishart_p(2α, Σ/2)` matrix and checks a family of product inequalities for
//! it. Checks are exact where a closed route exists (Laplace-transform sums,
//! Isserlis–Wick enumeration, Gauss–Jacobi quadrature) and Monte Carlo
//! otherwise.
//!
//! Module map:
//!
//! - [`linalg`]: symmetric-matrix kernel (SPSD factorization, `ln det(I + DΣ)`,
//!   Kronecker product and sum, symmetric exponential, Fischer gap).
//! - [`trace_wishart`]: parameters, Laplace transform, marginals, samplers.
//! - [`cm_bernstein`]: completely monotone and Bernstein function catalogs.
//! - [`estimators`]: exact Wick moments, negative moments by quadrature,
//!   Monte Carlo expectations.
//! - [`harness`]: one checker per inequality and a counterexample hunter.
//! - [`sigma_gen`]: random covariance families.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cm_bernstein;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod sigma_gen;
pub mod trace_wishart;

pub use error::{Error, Result};
pub use linalg::{BlockPartition, SpsdFactor, SymMatrix};
pub use trace_wishart::{SampleMatrix, SamplerKind, TraceWishartParams};

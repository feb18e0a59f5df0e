//! Expectation engines.
//!
//! - [`wick`]: exact integer moments by Isserlis pairing enumeration
//!   (integer `2α`, total degree at most 6).
//! - [`quadrature`]: negative moments `E ∏ X_i^{−q_i}` from the Laplace
//!   transform by tensor Gauss–Jacobi quadrature (`d <= 3`, nonsingular Σ).
//! - [`mc`]: Monte Carlo means of products `∏ f_i(X_i)` with standard errors.

use serde::{Deserialize, Serialize};

use crate::cm_bernstein::{BernsteinFn, CmFunction};

pub mod mc;
pub mod quadrature;
pub mod wick;

pub use mc::{expectation_product_mc, gap_mc, GapEstimate, MIN_MC_DRAWS};
pub use quadrature::{gauss_jacobi, moment_neg_quadrature, neg_moment_with_nodes};
pub use wick::{moment_wick, WickMoments, MAX_WICK_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactWick,
    /// Finite sums of Laplace-transform values.
    ExactLaplace,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn is_exact(self) -> bool {
        self != Method::MonteCarlo
    }
}

/// One expectation with its uncertainty. `stderr` is zero for every
/// deterministic method; quadrature carries its refinement difference in
/// `error_bound` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<usize>,
}

impl Estimate {
    pub fn exact(value: f64, method: Method) -> Self {
        debug_assert!(method.is_exact());
        Estimate {
            value,
            stderr: 0.0,
            method,
            n_samples: None,
            quadrature_nodes: None,
            error_bound: None,
            seed: None,
            rejected: None,
        }
    }

    /// Product of independent estimates, first-order error propagation.
    pub fn product(parts: &[&Estimate]) -> Estimate {
        let value: f64 = parts.iter().map(|e| e.value).product();
        let var: f64 = (0..parts.len())
            .map(|k| {
                let others: f64 = parts.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, e)| e.value).product();
                (others * parts[k].stderr).powi(2)
            })
            .sum();
        let method = parts
            .iter()
            .map(|e| e.method)
            .find(|m| *m == Method::MonteCarlo)
            .unwrap_or_else(|| parts.first().map(|e| e.method).unwrap_or(Method::ExactLaplace));
        let error_bound = parts
            .iter()
            .filter_map(|e| e.error_bound.map(|b| (b, e.value)))
            .map(|(b, v)| if v != 0.0 { (b / v).abs() } else { b.abs() })
            .reduce(|a, b| a + b)
            .map(|rel| rel * value.abs());
        Estimate {
            value,
            stderr: var.sqrt(),
            method,
            n_samples: parts.iter().filter_map(|e| e.n_samples).min(),
            quadrature_nodes: parts.iter().filter_map(|e| e.quadrature_nodes).max(),
            error_bound,
            seed: parts.iter().find_map(|e| e.seed),
            rejected: parts.iter().filter_map(|e| e.rejected).reduce(|a, b| a + b),
        }
    }
}

/// A function that can be evaluated on the support `(0, ∞)` of each `X_i`.
pub trait PointFn: Sync {
    /// Value at `x > 0`.
    fn at(&self, x: f64) -> f64;
    /// Finite limit at `0+`, if any.
    fn at_zero(&self) -> Option<f64>;
}

impl PointFn for CmFunction {
    fn at(&self, x: f64) -> f64 {
        self.value(x)
    }

    fn at_zero(&self) -> Option<f64> {
        self.limit_at_zero()
    }
}

impl PointFn for BernsteinFn {
    fn at(&self, x: f64) -> f64 {
        self.value(x)
    }

    fn at_zero(&self) -> Option<f64> {
        Some(self.value(0.0))
    }
}

/// `x ↦ x^a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Power(pub f64);

impl PointFn for Power {
    fn at(&self, x: f64) -> f64 {
        if self.0 == 0.0 {
            1.0
        } else if self.0.fract() == 0.0 && self.0.abs() <= 64.0 {
            x.powi(self.0 as i32)
        } else {
            x.powf(self.0)
        }
    }

    fn at_zero(&self) -> Option<f64> {
        match self.0 {
            0.0 => Some(1.0),
            a if a > 0.0 => Some(0.0),
            _ => None,
        }
    }
}

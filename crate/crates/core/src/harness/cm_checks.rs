//! Products of completely monotone functions across a split.

use nalgebra::{DMatrix, SymmetricEigen};

use super::laplace_sums::{combination_count, mixture_expectation, MAX_COMBINATIONS};
use super::{AuxCheck, CheckMethod, GapReport, InequalityId};
use crate::cm_bernstein::CmFunction;
use crate::error::{Error, Result};
use crate::estimators::{gap_mc, moment_neg_quadrature, Estimate, GapEstimate, Method, PointFn};
use crate::linalg::{factor_spsd, kron, SymMatrix, PSD_TOL};
use crate::trace_wishart::TraceWishartParams;

/// Tolerance of the trace/Kronecker identities, relative to `max(1, |value|)`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Kronecker identities are evaluated as explicit matrices up to this size.
const MAX_KRON_DIM: usize = 256;

fn catalog_id(phis: &[CmFunction]) -> InequalityId {
    if phis.iter().all(|f| matches!(f, CmFunction::NegPower(_))) {
        InequalityId::Cor1a
    } else if phis.iter().all(|f| matches!(f, CmFunction::StretchedExp(_))) {
        InequalityId::Cor1b
    } else {
        InequalityId::Thm1
    }
}

fn laplace_gap(params: &TraceWishartParams, phis: &[CmFunction], d1: usize) -> Result<Option<GapEstimate>> {
    let Some(mixtures) = phis.iter().map(|f| f.exp_mixture()).collect::<Option<Vec<_>>>() else {
        return Ok(None);
    };
    if combination_count(&mixtures).is_none_or(|n| n > MAX_COMBINATIONS) {
        return Ok(None);
    }
    let (left, right) = params.split(d1)?;
    let lhs = mixture_expectation(params, &mixtures)?;
    let m1 = mixture_expectation(&left, &mixtures[..d1])?;
    let m2 = mixture_expectation(&right, &mixtures[d1..])?;
    Ok(Some(GapEstimate::new(
        Estimate::exact(lhs, Method::ExactLaplace),
        Estimate::exact(m1 * m2, Method::ExactLaplace),
    )))
}

fn neg_orders(phis: &[CmFunction]) -> Option<Vec<f64>> {
    phis.iter()
        .map(|f| match f {
            CmFunction::NegPower(q) => Some(-q),
            _ => None,
        })
        .collect()
}

fn quadrature_feasible(params: &TraceWishartParams, phis: &[CmFunction]) -> bool {
    match neg_orders(phis) {
        Some(q) => !params.is_singular() && q.iter().filter(|&&x| x > 0.0).count() <= 3,
        None => false,
    }
}

fn quadrature_gap(params: &TraceWishartParams, phis: &[CmFunction], d1: usize) -> Result<GapEstimate> {
    let q = neg_orders(phis)
        .ok_or_else(|| Error::Infeasible("quadrature needs every function to be a negative power".into()))?;
    let (left, right) = params.split(d1)?;
    let lhs = moment_neg_quadrature(params, &q)?;
    let m1 = moment_neg_quadrature(&left, &q[..d1])?;
    let m2 = moment_neg_quadrature(&right, &q[d1..])?;
    Ok(GapEstimate::new(lhs, Estimate::product(&[&m1, &m2])))
}

fn validate(params: &TraceWishartParams, phis: &[CmFunction], d1: usize) -> Result<()> {
    if phis.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} functions, got {}", params.d(), phis.len())));
    }
    params.partition().split_point(d1)?;
    let alpha = params.alpha();
    for f in phis {
        if let CmFunction::NegPower(q) = f {
            if !(*q > -alpha) {
                return Err(Error::InvalidArgument(format!(
                    "power exponent {q} outside (−α, 0] with α = {alpha}; the expectation may not exist"
                )));
            }
        }
    }
    Ok(())
}

/// `E ∏_i φ_i(X_i)` against `E ∏_{i ≤ d1} φ_i(X_i) · E ∏_{i > d1} φ_i(X_i)`
/// for completely monotone `φ_i`. `d1` counts blocks on the left.
pub fn check_thm1(
    params: &TraceWishartParams,
    phis: &[CmFunction],
    d1: usize,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    validate(params, phis, d1)?;
    let est = match method {
        CheckMethod::Auto => match laplace_gap(params, phis, d1)? {
            Some(est) => est,
            None if quadrature_feasible(params, phis) => quadrature_gap(params, phis, d1)?,
            None => mc_gap(params, phis, d1, n, seed)?,
        },
        CheckMethod::Laplace => laplace_gap(params, phis, d1)?
            .ok_or_else(|| Error::Infeasible("exact Laplace sums need finite exponential mixtures".into()))?,
        CheckMethod::Quadrature => {
            if params.is_singular() {
                return Err(Error::Infeasible("quadrature needs nonsingular Σ".into()));
            }
            quadrature_gap(params, phis, d1)?
        }
        CheckMethod::Mc => mc_gap(params, phis, d1, n, seed)?,
        CheckMethod::Wick => {
            return Err(Error::Infeasible("Wick enumeration covers integer moments only".into()));
        }
    };
    Ok(GapReport::new(catalog_id(phis), params, est, Some(d1), Some(seed)))
}

fn mc_gap(params: &TraceWishartParams, phis: &[CmFunction], d1: usize, n: usize, seed: u64) -> Result<GapEstimate> {
    let fs: Vec<&dyn PointFn> = phis.iter().map(|f| f as &dyn PointFn).collect();
    gap_mc(params, &fs, d1, n, seed)
}

/// Spectral data of one `A_i`.
struct Spectral {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

/// `E exp(−⊕_i X_i A_i) = (⊗V_i) diag(L(λ_{1k_1}, ..., λ_{dk_d})) (⊗V_i)ᵀ`.
fn expected_kron_exp(params: &TraceWishartParams, spec: &[Spectral]) -> Result<DMatrix<f64>> {
    let mut v = DMatrix::from_element(1, 1, 1.0);
    for s in spec {
        v = kron(&v, &s.vectors);
    }
    let dim = v.nrows();
    let mut diag = Vec::with_capacity(dim);
    let mut idx = vec![0usize; spec.len()];
    let mut t = vec![0.0; spec.len()];
    for _ in 0..dim {
        for (i, s) in spec.iter().enumerate() {
            t[i] = s.values[idx[i]];
        }
        diag.push(params.laplace(&t)?);
        for k in (0..spec.len()).rev() {
            idx[k] += 1;
            if idx[k] < spec[k].values.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let scaled = DMatrix::from_fn(dim, dim, |i, j| v[(i, j)] * diag[j]);
    Ok(&scaled * v.transpose())
}

fn close(a: f64, b: f64) -> (f64, bool) {
    let diff = (a - b).abs();
    (diff, diff <= IDENTITY_TOL * a.abs().max(b.abs()).max(1.0))
}

/// Trace form of the matrix-valued comparison: `φ_i(x) = tr exp(−x A_i)`.
/// The report carries the identities linking the scalar and Kronecker
/// forms of both sides as auxiliary checks.
pub fn check_cor1c(
    params: &TraceWishartParams,
    mats: &[SymMatrix],
    d1: usize,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    if mats.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} matrices, got {}", params.d(), mats.len())));
    }
    let size = mats.first().map(|a| a.dim()).unwrap_or(0);
    if let Some(bad) = mats.iter().find(|a| a.dim() != size) {
        return Err(Error::DimensionMismatch(format!("matrices must share one size, got {size} and {}", bad.dim())));
    }
    for a in mats {
        factor_spsd(a, PSD_TOL)?;
    }
    let phis = mats.iter().map(|a| CmFunction::trace_exp(a.clone())).collect::<Result<Vec<_>>>()?;
    let mut report = check_thm1(params, &phis, d1, method, n, seed)?;
    report.inequality_id = InequalityId::Cor1c;

    let kron_dim = size.checked_pow(params.d() as u32).unwrap_or(usize::MAX);
    if kron_dim <= MAX_KRON_DIM {
        let spec: Vec<Spectral> = mats
            .iter()
            .map(|a| {
                let e = SymmetricEigen::new(a.as_matrix().clone());
                Spectral { vectors: e.eigenvectors, values: e.eigenvalues.iter().map(|l| l.max(0.0)).collect() }
            })
            .collect();
        let (left, right) = params.split(d1)?;
        let full = expected_kron_exp(params, &spec)?;
        let e_left = expected_kron_exp(&left, &spec[..d1])?;
        let e_right = expected_kron_exp(&right, &spec[d1..])?;
        let mixtures: Vec<Vec<(f64, f64)>> = phis.iter().map(|f| f.exp_mixture().expect("trace-exp mixture")).collect();

        let lhs_scalar = mixture_expectation(params, &mixtures)?;
        let (diff, ok) = close(full.trace(), lhs_scalar);
        report.aux.push(AuxCheck::new("lhs_trace_identity", diff, ok));

        let kron_rhs = kron(&e_left, &e_right).trace();
        let trace_product = e_left.trace() * e_right.trace();
        let (diff, ok) = close(kron_rhs, trace_product);
        report.aux.push(AuxCheck::new("rhs_kronecker_identity", diff, ok));

        let scalar_rhs =
            mixture_expectation(&left, &mixtures[..d1])? * mixture_expectation(&right, &mixtures[d1..])?;
        let (diff, ok) = close(trace_product, scalar_rhs);
        report.aux.push(AuxCheck::new("rhs_trace_product_identity", diff, ok));
    }
    Ok(report)
}

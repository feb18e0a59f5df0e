//! Monte Carlo means of `∏ f_i(X_i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Estimate, Method, PointFn};
use crate::error::{Error, Result};
use crate::trace_wishart::{SampleMatrix, TraceWishartParams};

pub const MIN_MC_DRAWS: usize = 10_000;

/// Both sides of a split inequality and their difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub gap: f64,
    pub gap_stderr: f64,
}

impl GapEstimate {
    pub fn new(lhs: Estimate, rhs: Estimate) -> Self {
        let gap = lhs.value - rhs.value;
        let gap_stderr = lhs.stderr.hypot(rhs.stderr);
        GapEstimate { lhs, rhs, gap, gap_stderr }
    }
}

fn check_draws(n: usize) -> Result<()> {
    if n < MIN_MC_DRAWS {
        return Err(Error::InvalidArgument(format!("Monte Carlo needs at least {MIN_MC_DRAWS} draws, got {n}")));
    }
    Ok(())
}

/// Per-draw product, or `None` when a zero coordinate meets a function
/// without a finite limit at `0+`.
fn draw_value(row: &[f64], fs: &[&dyn PointFn]) -> Result<Option<f64>> {
    let mut prod = 1.0;
    for (x, f) in row.iter().zip(fs) {
        let v = if *x > 0.0 {
            f.at(*x)
        } else {
            match f.at_zero() {
                Some(v) => v,
                None => return Ok(None),
            }
        };
        prod *= v;
    }
    if !prod.is_finite() {
        return Err(Error::NonFinite(format!("integrand value {prod} at draw {row:?}")));
    }
    Ok(Some(prod))
}

/// Mean of `∏ f_i` over the rows of `sample`. The per-draw values are
/// computed in parallel and summed in draw order.
pub fn mean_over_sample(sample: &SampleMatrix, fs: &[&dyn PointFn]) -> Result<Estimate> {
    if fs.len() != sample.d() {
        return Err(Error::DimensionMismatch(format!("expected {} functions, got {}", sample.d(), fs.len())));
    }
    let values: Vec<Option<f64>> =
        (0..sample.n()).into_par_iter().map(|i| draw_value(sample.row(i), fs)).collect::<Result<_>>()?;
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    let rejected = values.len() - kept.len();
    if kept.len() < 2 {
        return Err(Error::NonFinite(format!("{rejected} of {} draws rejected", values.len())));
    }
    let m = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / m;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Estimate {
        value: mean,
        stderr: (var / m).sqrt(),
        method: Method::MonteCarlo,
        n_samples: Some(sample.n()),
        quadrature_nodes: None,
        error_bound: None,
        seed: Some(sample.seed()),
        rejected: (rejected > 0).then_some(rejected),
    })
}

/// `E ∏ f_i(X_i)` from `n` draws of `params` with the given seed.
pub fn expectation_product_mc(
    params: &TraceWishartParams,
    fs: &[&dyn PointFn],
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    check_draws(n)?;
    if fs.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} functions, got {}", params.d(), fs.len())));
    }
    mean_over_sample(&params.sample(n, seed)?, fs)
}

/// Split comparison `E ∏_{all} f_i` against `E ∏_{i ≤ d1} f_i · E ∏_{i > d1} f_i`.
/// The left side uses `seed`; the two marginal factors use independent
/// batches at `seed + 1` and `seed + 2`.
pub fn gap_mc(params: &TraceWishartParams, fs: &[&dyn PointFn], d1: usize, n: usize, seed: u64) -> Result<GapEstimate> {
    check_draws(n)?;
    if fs.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} functions, got {}", params.d(), fs.len())));
    }
    let (left, right) = params.split(d1)?;
    let lhs = expectation_product_mc(params, fs, n, seed)?;
    let m1 = expectation_product_mc(&left, &fs[..d1], n, seed.wrapping_add(1))?;
    let m2 = expectation_product_mc(&right, &fs[d1..], n, seed.wrapping_add(2))?;
    let mut rhs = Estimate::product(&[&m1, &m2]);
    rhs.seed = Some(seed.wrapping_add(1));
    Ok(GapEstimate::new(lhs, rhs))
}

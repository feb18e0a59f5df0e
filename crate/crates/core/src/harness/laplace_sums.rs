//! Expectations of products of finite exponential mixtures.

use crate::error::{Error, Result};
use crate::trace_wishart::TraceWishartParams;

/// Largest number of Laplace evaluations one expectation may cost.
pub(crate) const MAX_COMBINATIONS: usize = 1 << 20;

pub(crate) fn combination_count(mixtures: &[Vec<(f64, f64)>]) -> Option<usize> {
    mixtures.iter().try_fold(1usize, |acc, m| acc.checked_mul(m.len()))
}

/// `E ∏_i Σ_k w_{ik} e^{−λ_{ik} X_i} = Σ_{k_1..k_d} ∏ w · L(λ_{1k_1}, ..., λ_{dk_d})`,
/// summed in lexicographic order of the indices.
pub fn mixture_expectation(params: &TraceWishartParams, mixtures: &[Vec<(f64, f64)>]) -> Result<f64> {
    if mixtures.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} mixtures, got {}", params.d(), mixtures.len())));
    }
    match combination_count(mixtures) {
        Some(0) => return Ok(0.0),
        Some(n) if n <= MAX_COMBINATIONS => {}
        _ => return Err(Error::Infeasible("too many exponential terms for an exact Laplace sum".into())),
    }
    let d = mixtures.len();
    let mut idx = vec![0usize; d];
    let mut t = vec![0.0; d];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let (wi, li) = mixtures[i][idx[i]];
            w *= wi;
            t[i] = li;
        }
        if w != 0.0 {
            sum += w * params.laplace(&t)?;
        }
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(sum);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < mixtures[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

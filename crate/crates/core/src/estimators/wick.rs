//! Exact moments `E ∏ X_i^{n_i}` for integer `2α = ν`.
//!
//! `X_i = Σ_{k=1}^{ν} Σ_{j ∈ block i} Y_{k,j}²` with `Y_1..Y_ν` i.i.d.
//! `N(0, Σ/2)`. Expanding the product of the `N = Σ n_i` factors, each factor
//! picks a replica `k` and a coordinate `j`. Replicas are exchangeable, so the
//! replica choices collapse to set partitions of the factors weighted by the
//! falling factorial `ν (ν − 1) ... (ν − |π| + 1)`. Within one replica the
//! expectation of a product of squared coordinates is a sum over perfect
//! matchings (Isserlis).

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{Estimate, Method};
use crate::error::{Error, Result};
use crate::trace_wishart::TraceWishartParams;

/// Largest total degree `N`; the pairing count grows as `(2N − 1)!!`.
pub const MAX_WICK_DEGREE: u32 = 6;

/// Memoizing moment evaluator for one parameter set.
pub struct WickMoments {
    nu: usize,
    cov: DMatrix<f64>,
    ranges: Vec<std::ops::Range<usize>>,
    moments: HashMap<Vec<u32>, f64>,
    replica: HashMap<Vec<usize>, f64>,
    hafnians: HashMap<Vec<usize>, f64>,
}

impl WickMoments {
    pub fn new(params: &TraceWishartParams) -> Result<Self> {
        let nu = params
            .integer_degrees()
            .ok_or_else(|| Error::Infeasible(format!("Wick moments need integer 2α, got {}", params.two_alpha())))?;
        Ok(WickMoments {
            nu,
            cov: params.sigma().as_matrix() * 0.5,
            ranges: (0..params.d()).map(|b| params.partition().range(b)).collect(),
            moments: HashMap::new(),
            replica: HashMap::new(),
            hafnians: HashMap::new(),
        })
    }

    pub fn moment(&mut self, exps: &[u32]) -> Result<f64> {
        if exps.len() != self.ranges.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} exponents, got {}",
                self.ranges.len(),
                exps.len()
            )));
        }
        let total: u32 = exps.iter().sum();
        if total > MAX_WICK_DEGREE {
            return Err(Error::Infeasible(format!(
                "total degree {total} exceeds the enumeration cap {MAX_WICK_DEGREE}"
            )));
        }
        if let Some(&v) = self.moments.get(exps) {
            return Ok(v);
        }
        let factors: Vec<usize> = exps
            .iter()
            .enumerate()
            .flat_map(|(b, &n)| std::iter::repeat_n(b, n as usize))
            .collect();
        if factors.is_empty() {
            return Ok(1.0);
        }
        let max_blocks = self.nu.min(factors.len());
        let mut sum = 0.0;
        let mut labels = vec![0usize; factors.len()];
        loop {
            let k = labels.iter().max().unwrap() + 1;
            if k <= max_blocks {
                let mut term = falling_factorial(self.nu, k);
                for part in 0..k {
                    let mut ms: Vec<usize> =
                        factors.iter().zip(&labels).filter(|(_, l)| **l == part).map(|(b, _)| *b).collect();
                    ms.sort_unstable();
                    term *= self.single_replica(ms);
                }
                sum += term;
            }
            if !next_restricted_growth(&mut labels) {
                break;
            }
        }
        self.moments.insert(exps.to_vec(), sum);
        Ok(sum)
    }

    /// `E ∏_f Q_{b_f}(Y)` for one replica, `Q_b(y) = Σ_{j ∈ b} y_j²`.
    fn single_replica(&mut self, blocks: Vec<usize>) -> f64 {
        if let Some(&v) = self.replica.get(&blocks) {
            return v;
        }
        let mut choice: Vec<usize> = blocks.iter().map(|&b| self.ranges[b].start).collect();
        let mut total = 0.0;
        loop {
            let mut coords: Vec<usize> = choice.iter().flat_map(|&c| [c, c]).collect();
            coords.sort_unstable();
            total += self.hafnian(coords);
            // Odometer over the coordinate choice of each factor.
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    self.replica.insert(blocks, total);
                    return total;
                }
                choice[pos] += 1;
                if choice[pos] < self.ranges[blocks[pos]].end {
                    break;
                }
                choice[pos] = self.ranges[blocks[pos]].start;
                pos += 1;
            }
        }
    }

    /// `E ∏_a Y_{coords[a]}` for sorted `coords`: sum over perfect matchings.
    /// Partners of the first index are grouped by coordinate value, so
    /// repeated coordinates cost one recursive call each.
    fn hafnian(&mut self, coords: Vec<usize>) -> f64 {
        if coords.is_empty() {
            return 1.0;
        }
        if let Some(&v) = self.hafnians.get(&coords) {
            return v;
        }
        let first = coords[0];
        let rest = &coords[1..];
        let mut sum = 0.0;
        let mut k = 0;
        while k < rest.len() {
            let j = rest[k];
            let mut mult = 1;
            while k + mult < rest.len() && rest[k + mult] == j {
                mult += 1;
            }
            let c = self.cov[(first, j)];
            if c != 0.0 {
                let sub: Vec<usize> = rest[..k].iter().chain(&rest[k + 1..]).copied().collect();
                sum += mult as f64 * c * self.hafnian(sub);
            }
            k += mult;
        }
        self.hafnians.insert(coords, sum);
        sum
    }
}

fn falling_factorial(nu: usize, k: usize) -> f64 {
    (0..k).map(|i| (nu - i) as f64).product()
}

/// Advances a restricted growth string (set partition labels). Returns
/// `false` after the last partition.
fn next_restricted_growth(labels: &mut [usize]) -> bool {
    let n = labels.len();
    for i in (1..n).rev() {
        let prefix_max = labels[..i].iter().copied().max().unwrap_or(0);
        if labels[i] <= prefix_max {
            labels[i] += 1;
            for l in labels[i + 1..].iter_mut() {
                *l = 0;
            }
            return true;
        }
    }
    false
}

/// Exact `E ∏ X_i^{n_i}`.
pub fn moment_wick(params: &TraceWishartParams, exps: &[u32]) -> Result<Estimate> {
    let value = WickMoments::new(params)?.moment(exps)?;
    Ok(Estimate::exact(value, Method::ExactWick))
}

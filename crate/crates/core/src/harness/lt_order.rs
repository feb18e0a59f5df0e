//! Laplace-transform order screened on a finite grid.

use super::{AuxCheck, GapReport, InequalityId, Verdict};
use crate::estimators::{Estimate, GapEstimate, Method};
use crate::error::{Error, Result};
use crate::trace_wishart::TraceWishartParams;

const GRID_EDGE: f64 = 10.0;
const QUASI_RANDOM_POINTS: usize = 100;
/// Relative slack of the grid screen.
pub const LT_REL_TOL: f64 = 1e-12;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    x
}

/// 100 Halton points in `(0, 10]^d` followed by near-axis points
/// `s e_i + 10^{-3} (1 − e_i)` for `s ∈ {0.1, 1, 10}`.
pub fn default_lt_grid(d: usize) -> Vec<Vec<f64>> {
    let mut grid: Vec<Vec<f64>> = (1..=QUASI_RANDOM_POINTS as u64)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let base = PRIMES[k % PRIMES.len()] + 2 * (k / PRIMES.len()) as u32 * 59;
                    GRID_EDGE * radical_inverse(i, base)
                })
                .collect()
        })
        .collect();
    for axis in 0..d {
        for s in [0.1, 1.0, GRID_EDGE] {
            grid.push((0..d).map(|k| if k == axis { s } else { 1e-3 }).collect());
        }
    }
    grid
}

/// `min_t L_a(t) − L_b(t)` over the grid. A nonnegative minimum is the
/// grid-restricted statement `a ⪯_Lt b`.
pub fn check_lt_order(pa: &TraceWishartParams, pb: &TraceWishartParams, grid: &[Vec<f64>]) -> Result<GapReport> {
    if pa.d() != pb.d() {
        return Err(Error::DimensionMismatch(format!("block counts differ: {} vs {}", pa.d(), pb.d())));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty Laplace grid".into()));
    }
    let mut best: Option<(f64, f64, f64, usize)> = None;
    let mut min_rel = f64::INFINITY;
    for (k, t) in grid.iter().enumerate() {
        if t.len() != pa.d() {
            return Err(Error::DimensionMismatch(format!("grid point {k} has {} coordinates", t.len())));
        }
        if let Some(bad) = t.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!("grid points must be strictly positive, found {bad}")));
        }
        let la = pa.laplace(t)?;
        let lb = pb.laplace(t)?;
        let gap = la - lb;
        if best.is_none_or(|(g, ..)| gap < g) {
            best = Some((gap, la, lb, k));
        }
        min_rel = min_rel.min(gap / lb.abs().max(f64::MIN_POSITIVE));
    }
    let (gap, la, lb, k) = best.expect("grid is nonempty");
    let est = GapEstimate {
        lhs: Estimate::exact(la, Method::ExactLaplace),
        rhs: Estimate::exact(lb, Method::ExactLaplace),
        gap,
        gap_stderr: 0.0,
    };
    let mut report = GapReport::new(InequalityId::LtOrder, pa, est, None, None);
    // The grid screen is judged relative to the transform values.
    report.verdict = if min_rel >= -LT_REL_TOL { Verdict::Holds } else { Verdict::Violated };
    report.argmin = Some(grid[k].clone());
    report.aux.push(AuxCheck::new("min_relative_gap", min_rel, min_rel >= -LT_REL_TOL));
    report.aux.push(AuxCheck::new("grid_points", grid.len() as f64, true));
    Ok(report)
}

/// `params ⪯_Lt block_diagonalize(params, d1)` on the default grid.
pub fn check_split_lt_order(params: &TraceWishartParams, d1: usize) -> Result<GapReport> {
    let star = params.block_diagonalize(d1)?;
    let mut report = check_lt_order(params, &star, &default_lt_grid(params.d()))?;
    report.d1 = Some(d1);
    Ok(report)
}

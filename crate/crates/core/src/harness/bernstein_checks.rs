//! Bivariate comparisons for Bernstein functions against the
//! block-diagonalized pair.

use super::laplace_sums::mixture_expectation;
use super::lt_order::{check_lt_order, default_lt_grid, LT_REL_TOL};
use super::{AuxCheck, CheckMethod, GapReport, InequalityId};
use crate::cm_bernstein::BernsteinFn;
use crate::error::{Error, Result};
use crate::estimators::mc::mean_over_sample;
use crate::estimators::{
    expectation_product_mc, gap_mc, Estimate, GapEstimate, Method, PointFn, Power, WickMoments, MIN_MC_DRAWS,
};
use crate::trace_wishart::TraceWishartParams;

/// `(s, t)` points where `E(1 − e^{−sX_1})(1 − e^{−tX_2})` is compared
/// with its value under the block-diagonalized pair.
pub const BUILDING_BLOCK_POINTS: [(f64, f64); 5] = [(0.5, 0.5), (1.0, 1.0), (2.0, 0.5), (0.5, 2.0), (5.0, 5.0)];

fn require_pair(pair: &TraceWishartParams) -> Result<()> {
    if pair.d() != 2 {
        return Err(Error::InvalidParams(format!("pair comparisons need d = 2, got d = {}", pair.d())));
    }
    Ok(())
}

/// `f` as `Σ_k w_k e^{−λ_k x}` when it is a finite triplet without drift.
fn bernstein_mixture(f: &BernsteinFn) -> Option<Vec<(f64, f64)>> {
    match f {
        BernsteinFn::Triplet { a, b, atoms } if *b == 0.0 => {
            let mass: f64 = atoms.iter().map(|at| at.w).sum();
            let mut mix = vec![(a + mass, 0.0)];
            mix.extend(atoms.iter().map(|at| (-at.w, at.t)));
            Some(mix)
        }
        BernsteinFn::ClosedPower(q) if *q == 0.0 => Some(vec![(1.0, 0.0)]),
        _ => None,
    }
}

/// `min_{(s,t)} L(s, t) − L(s, 0) L(0, t)`: the difference between the pair
/// and its block-diagonalized version for the products `(1 − e^{−sX_1})(1 − e^{−tX_2})`.
fn building_block_gap(pair: &TraceWishartParams) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (s, t) in BUILDING_BLOCK_POINTS {
        let g = pair.laplace(&[s, t])? - pair.laplace(&[s, 0.0])? * pair.laplace(&[0.0, t])?;
        min = min.min(g);
    }
    Ok(min)
}

/// Means of `f(X_1)` and `g(X_2)` from one batch of the independent pair.
fn star_rhs(star: &TraceWishartParams, f: &dyn PointFn, g: &dyn PointFn, n: usize, seed: u64) -> Result<Estimate> {
    if n < MIN_MC_DRAWS {
        return Err(Error::InvalidArgument(format!("Monte Carlo needs at least {MIN_MC_DRAWS} draws, got {n}")));
    }
    let sample = star.sample(n, seed)?;
    let one = Power(0.0);
    let m1 = mean_over_sample(&sample, &[f, &one])?;
    let m2 = mean_over_sample(&sample, &[&one, g])?;
    Ok(Estimate::product(&[&m1, &m2]))
}

/// `E f(X_1) g(X_2)` against `E f(X_1*) E g(X_2*)` where `X*` is the
/// block-diagonalized pair. Both functions must have zero drift.
pub fn check_thm2(
    pair: &TraceWishartParams,
    f: &BernsteinFn,
    g: &BernsteinFn,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    require_pair(pair)?;
    for h in [f, g] {
        if h.drift() != 0.0 {
            return Err(Error::InvalidArgument(format!("Bernstein functions must have zero drift, got b = {}", h.drift())));
        }
    }
    let star = pair.block_diagonalize(1)?;
    let mixtures = bernstein_mixture(f).zip(bernstein_mixture(g));
    let est = match (method, mixtures) {
        (CheckMethod::Auto | CheckMethod::Laplace, Some((mf, mg))) => {
            let mix = [mf, mg];
            GapEstimate::new(
                Estimate::exact(mixture_expectation(pair, &mix)?, Method::ExactLaplace),
                Estimate::exact(mixture_expectation(&star, &mix)?, Method::ExactLaplace),
            )
        }
        (CheckMethod::Auto | CheckMethod::Mc, _) => {
            let lhs = expectation_product_mc(pair, &[f, g], n, seed)?;
            let rhs = star_rhs(&star, f, g, n, seed.wrapping_add(1))?;
            GapEstimate::new(lhs, rhs)
        }
        (m, _) => return Err(Error::Infeasible(format!("method {m:?} does not apply to these Bernstein functions"))),
    };
    let mut report = GapReport::new(InequalityId::Thm2, pair, est, Some(1), Some(seed));
    let lt = check_lt_order(pair, &star, &default_lt_grid(2))?;
    let rel = lt.aux("min_relative_gap").map(|a| a.value).unwrap_or(lt.gap);
    report.aux.push(AuxCheck::new("lt_order_precondition", rel, rel >= -LT_REL_TOL));
    let bb = building_block_gap(pair)?;
    report.aux.push(AuxCheck::new("building_block_min_gap", bb, bb >= -1e-12));
    Ok(report)
}

fn is_zero_or_one(q: f64) -> bool {
    q == 0.0 || q == 1.0
}

/// `E X_1^{q_1} X_2^{q_2}` against `E X_1^{q_1} E X_2^{q_2}` for
/// `q_1, q_2 ∈ [0, 1]`. The right side uses the pair's own margins; the
/// report records its agreement with the block-diagonalized pair.
pub fn check_cor2(
    pair: &TraceWishartParams,
    q1: f64,
    q2: f64,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    require_pair(pair)?;
    for q in [q1, q2] {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("power exponents must lie in [0, 1], got {q}")));
        }
    }
    let star = pair.block_diagonalize(1)?;
    let wick_ok = is_zero_or_one(q1) && is_zero_or_one(q2) && pair.integer_degrees().is_some();
    let use_wick = match method {
        CheckMethod::Auto => wick_ok,
        CheckMethod::Wick if wick_ok => true,
        CheckMethod::Mc => false,
        m => return Err(Error::Infeasible(format!("method {m:?} does not apply to exponents ({q1}, {q2})"))),
    };
    if use_wick {
        let (n1, n2) = (q1 as u32, q2 as u32);
        let mut w = WickMoments::new(pair)?;
        let lhs = w.moment(&[n1, n2])?;
        let rhs = w.moment(&[n1, 0])? * w.moment(&[0, n2])?;
        let star_rhs = WickMoments::new(&star)?.moment(&[n1, n2])?;
        let est = GapEstimate::new(Estimate::exact(lhs, Method::ExactWick), Estimate::exact(rhs, Method::ExactWick));
        let mut report = GapReport::new(InequalityId::Cor2, pair, est, Some(1), Some(seed));
        let diff = (star_rhs - rhs).abs();
        report.aux.push(AuxCheck::new("star_rhs_difference", diff, diff <= 1e-12 * rhs.abs().max(1.0)));
        return Ok(report);
    }
    let (p1, p2) = (Power(q1), Power(q2));
    let est = gap_mc(pair, &[&p1, &p2], 1, n, seed)?;
    let star_est = star_rhs(&star, &p1, &p2, n, seed.wrapping_add(3))?;
    let diff = star_est.value - est.rhs.value;
    let band = 5.0 * star_est.stderr.hypot(est.rhs.stderr);
    let mut report = GapReport::new(InequalityId::Cor2, pair, est, Some(1), Some(seed));
    report.aux.push(AuxCheck::new("star_rhs_difference", diff, diff.abs() <= band.max(1e-12)));
    Ok(report)
}

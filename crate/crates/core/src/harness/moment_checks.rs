//! Product inequalities for powers `E ∏ X_i^{n_i}`.

use serde::{Deserialize, Serialize};

use super::{CheckMethod, GapReport, InequalityId};
use crate::error::{Error, Result};
use crate::estimators::{
    expectation_product_mc, gap_mc, Estimate, GapEstimate, Method, PointFn, Power, WickMoments, MAX_WICK_DEGREE,
};
use crate::trace_wishart::TraceWishartParams;

/// Right-hand side of the weak product inequality: the same exponents on
/// every coordinate (`eq14`) or arbitrary ones (`eq13`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakGpiVariant {
    Eq13,
    Eq14,
}

fn validate_exps(params: &TraceWishartParams, exps: &[f64]) -> Result<()> {
    if exps.len() != params.d() {
        return Err(Error::DimensionMismatch(format!("expected {} exponents, got {}", params.d(), exps.len())));
    }
    if let Some(bad) = exps.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!("exponents must be finite and >= 0, got {bad}")));
    }
    Ok(())
}

/// Integer exponents when the Wick route applies.
pub(crate) fn wick_exponents(params: &TraceWishartParams, exps: &[f64]) -> Option<Vec<u32>> {
    params.integer_degrees()?;
    if exps.iter().any(|e| e.fract() != 0.0 || *e > MAX_WICK_DEGREE as f64) {
        return None;
    }
    let ints: Vec<u32> = exps.iter().map(|&e| e as u32).collect();
    (ints.iter().sum::<u32>() <= MAX_WICK_DEGREE).then_some(ints)
}

fn use_wick(params: &TraceWishartParams, exps: &[f64], method: CheckMethod) -> Result<Option<Vec<u32>>> {
    let ints = wick_exponents(params, exps);
    match method {
        CheckMethod::Auto => Ok(ints),
        CheckMethod::Mc => Ok(None),
        CheckMethod::Wick => ints.map(Some).ok_or_else(|| {
            Error::Infeasible(format!(
                "Wick enumeration needs integer 2α and integer exponents of total degree <= {MAX_WICK_DEGREE}"
            ))
        }),
        m => Err(Error::Infeasible(format!("method {m:?} does not apply to power moments"))),
    }
}

pub(crate) fn split_gap_wick(w: &mut WickMoments, exps: &[u32], d1: usize) -> Result<GapEstimate> {
    let mut left = exps.to_vec();
    left[d1..].iter_mut().for_each(|e| *e = 0);
    let mut right = exps.to_vec();
    right[..d1].iter_mut().for_each(|e| *e = 0);
    let lhs = w.moment(exps)?;
    let rhs = w.moment(&left)? * w.moment(&right)?;
    Ok(GapEstimate::new(Estimate::exact(lhs, Method::ExactWick), Estimate::exact(rhs, Method::ExactWick)))
}

pub(crate) fn full_gap_wick(w: &mut WickMoments, exps: &[u32]) -> Result<GapEstimate> {
    let lhs = w.moment(exps)?;
    let mut rhs = 1.0;
    for i in 0..exps.len() {
        let mut unit = vec![0; exps.len()];
        unit[i] = exps[i];
        rhs *= w.moment(&unit)?;
    }
    Ok(GapEstimate::new(Estimate::exact(lhs, Method::ExactWick), Estimate::exact(rhs, Method::ExactWick)))
}

/// `E ∏_i X_i^{n_i}` against `E ∏_{i ≤ d1} X_i^{n_i} · E ∏_{i > d1} X_i^{n_i}`.
/// The inequality is not known to hold in general; a `violated` verdict is
/// a legitimate outcome.
pub fn check_conjecture1(
    params: &TraceWishartParams,
    exps: &[f64],
    d1: usize,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    validate_exps(params, exps)?;
    params.partition().split_point(d1)?;
    let est = match use_wick(params, exps, method)? {
        Some(ints) => split_gap_wick(&mut WickMoments::new(params)?, &ints, d1)?,
        None => {
            let powers: Vec<Power> = exps.iter().map(|&e| Power(e)).collect();
            let fs: Vec<&dyn PointFn> = powers.iter().map(|p| p as &dyn PointFn).collect();
            gap_mc(params, &fs, d1, n, seed)?
        }
    };
    Ok(GapReport::new(InequalityId::Conjecture1, params, est, Some(d1), Some(seed)))
}

/// `E ∏_i X_i^{n_i}` against the full product `∏_i E X_i^{n_i}`.
pub fn check_weak_gpi(
    params: &TraceWishartParams,
    exps: &[f64],
    variant: WeakGpiVariant,
    method: CheckMethod,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    validate_exps(params, exps)?;
    let id = match variant {
        WeakGpiVariant::Eq13 => InequalityId::WeakGpi13,
        WeakGpiVariant::Eq14 => {
            let m = exps.first().copied().unwrap_or(0.0);
            if m.fract() != 0.0 || exps.iter().any(|&e| e != m) {
                return Err(Error::InvalidArgument(format!(
                    "the equal-exponent form needs one integer exponent on every coordinate, got {exps:?}"
                )));
            }
            InequalityId::WeakGpi14
        }
    };
    let est = match use_wick(params, exps, method)? {
        Some(ints) => full_gap_wick(&mut WickMoments::new(params)?, &ints)?,
        None => {
            let powers: Vec<Power> = exps.iter().map(|&e| Power(e)).collect();
            let fs: Vec<&dyn PointFn> = powers.iter().map(|p| p as &dyn PointFn).collect();
            let lhs = expectation_product_mc(params, &fs, n, seed)?;
            let margins = (0..params.d())
                .map(|i| {
                    let seed_i = seed.wrapping_add(1 + i as u64);
                    expectation_product_mc(&params.marginal(&[i])?, &[&powers[i]], n, seed_i)
                })
                .collect::<Result<Vec<_>>>()?;
            let rhs = Estimate::product(&margins.iter().collect::<Vec<_>>());
            GapEstimate::new(lhs, rhs)
        }
    };
    Ok(GapReport::new(id, params, est, None, Some(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Verdict;
    use crate::linalg::{BlockPartition, SymMatrix};
    use crate::sigma_gen::equicorrelated;

    #[test]
    fn equicorrelated_weak_form() {
        let p = TraceWishartParams::squared_gaussian(&equicorrelated(3, 0.5).unwrap()).unwrap();
        let r = check_weak_gpi(&p, &[1.0; 3], WeakGpiVariant::Eq14, CheckMethod::Auto, 0, 0).unwrap();
        assert_eq!(r.inequality_id, InequalityId::WeakGpi14);
        assert!((r.lhs.value - 3.5).abs() < 1e-14);
        assert!((r.rhs.value - 1.0).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Holds);
        let zero = check_weak_gpi(&p, &[0.0; 3], WeakGpiVariant::Eq14, CheckMethod::Auto, 0, 0).unwrap();
        assert_eq!(zero.gap, 0.0);
        assert!(check_weak_gpi(&p, &[1.0, 2.0, 1.0], WeakGpiVariant::Eq14, CheckMethod::Auto, 0, 0).is_err());
    }

    #[test]
    fn weak_form_mc_agrees_with_wick() {
        let p = TraceWishartParams::squared_gaussian(&equicorrelated(3, 0.5).unwrap()).unwrap();
        let r = check_weak_gpi(&p, &[1.0; 3], WeakGpiVariant::Eq13, CheckMethod::Mc, 200_000, 8).unwrap();
        assert_eq!(r.inequality_id, InequalityId::WeakGpi13);
        assert!((r.gap - 2.5).abs() < 5.0 * r.gap_stderr, "{r:?}");
    }

    #[test]
    fn independence_is_exactly_zero() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.3, 0.0], vec![0.3, 1.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        let p = TraceWishartParams::new(2.0, BlockPartition::singletons(3).unwrap(), s).unwrap();
        let r = check_conjecture1(&p, &[1.0, 2.0, 3.0], 2, CheckMethod::Auto, 0, 0).unwrap();
        assert_eq!(r.lhs.method, Method::ExactWick);
        assert!(r.gap.abs() <= 1e-12 * r.lhs.value);
        assert_eq!(r.seed, None);
    }

    #[test]
    fn method_routing() {
        let p = TraceWishartParams::squared_gaussian(&equicorrelated(2, 0.4).unwrap()).unwrap();
        assert!(check_conjecture1(&p, &[0.5, 1.0], 1, CheckMethod::Wick, 10_000, 0).is_err());
        assert!(check_conjecture1(&p, &[0.5, 1.0], 1, CheckMethod::Quadrature, 10_000, 0).is_err());
        assert!(check_conjecture1(&p, &[4.0, 3.0], 1, CheckMethod::Wick, 10_000, 0).is_err());
        let r = check_conjecture1(&p, &[0.5, 1.0], 1, CheckMethod::Auto, 50_000, 0).unwrap();
        assert_eq!(r.lhs.method, Method::MonteCarlo);
        assert_eq!(r.seed, Some(0));
        assert!(check_conjecture1(&p, &[-1.0, 1.0], 1, CheckMethod::Auto, 50_000, 0).is_err());
    }
}

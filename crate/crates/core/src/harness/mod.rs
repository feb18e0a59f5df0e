//! Inequality checkers. Every checker returns a [`GapReport`] with
//! `gap = lhs − rhs`; a nonnegative gap means the inequality holds on the
//! instance.

use serde::{Deserialize, Serialize};

use crate::estimators::{Estimate, GapEstimate};
use crate::trace_wishart::TraceWishartParams;

mod cm_checks;
mod bernstein_checks;
mod hunt;
mod laplace_sums;
mod lt_order;
mod moment_checks;

pub use bernstein_checks::{check_cor2, check_thm2, BUILDING_BLOCK_POINTS};
pub use cm_checks::{check_cor1c, check_thm1};
pub use hunt::{hunt_counterexample, HuntResult, HuntSpace, HuntTarget};
pub use laplace_sums::mixture_expectation;
pub use lt_order::{check_lt_order, check_split_lt_order, default_lt_grid};
pub use moment_checks::{check_conjecture1, check_weak_gpi, WeakGpiVariant};

/// Absolute slack for deterministic methods.
pub const TOL_EXACT: f64 = 1e-9;
pub const HOLDS_SIGMAS: f64 = 3.0;
pub const VIOLATED_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    LtOrder,
    Thm1,
    Cor1a,
    Cor1b,
    Cor1c,
    Thm2,
    Cor2,
    Conjecture1,
    WeakGpi13,
    WeakGpi14,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn from_gap(gap: f64, gap_stderr: f64) -> Verdict {
        if gap >= -(HOLDS_SIGMAS * gap_stderr).max(TOL_EXACT) {
            Verdict::Holds
        } else if gap < -(VIOLATED_SIGMAS * gap_stderr).max(TOL_EXACT) {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

/// How a checker evaluates its expectations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    /// Cheapest exact route if one applies, else Monte Carlo.
    #[default]
    Auto,
    Mc,
    Quadrature,
    Wick,
    /// Finite sums of Laplace-transform values.
    Laplace,
}

/// A side computation attached to a report (identities, preconditions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxCheck {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

impl AuxCheck {
    pub fn new(name: impl Into<String>, value: f64, pass: bool) -> Self {
        AuxCheck { name: name.into(), value, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub inequality_id: InequalityId,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub gap: f64,
    pub gap_stderr: f64,
    pub verdict: Verdict,
    pub params_fingerprint: String,
    pub d1: Option<usize>,
    pub seed: Option<u64>,
    /// Grid point attaining the minimum, for grid screens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aux: Vec<AuxCheck>,
}

impl GapReport {
    pub fn new(
        id: InequalityId,
        params: &TraceWishartParams,
        est: GapEstimate,
        d1: Option<usize>,
        seed: Option<u64>,
    ) -> Self {
        let seed = if est.lhs.method.is_exact() && est.rhs.method.is_exact() { None } else { seed };
        GapReport {
            inequality_id: id,
            verdict: Verdict::from_gap(est.gap, est.gap_stderr),
            lhs: est.lhs,
            rhs: est.rhs,
            gap: est.gap,
            gap_stderr: est.gap_stderr,
            params_fingerprint: params.fingerprint(),
            d1,
            seed,
            argmin: None,
            aux: Vec::new(),
        }
    }

    pub fn aux_pass(&self) -> bool {
        self.aux.iter().all(|a| a.pass)
    }

    pub fn aux(&self, name: &str) -> Option<&AuxCheck> {
        self.aux.iter().find(|a| a.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_gap(0.0, 0.0), Verdict::Holds);
        assert_eq!(Verdict::from_gap(-5e-10, 0.0), Verdict::Holds);
        assert_eq!(Verdict::from_gap(-2e-9, 0.0), Verdict::Violated);
        assert_eq!(Verdict::from_gap(-0.29, 0.1), Verdict::Holds);
        assert_eq!(Verdict::from_gap(-0.4, 0.1), Verdict::Inconclusive);
        assert_eq!(Verdict::from_gap(-0.51, 0.1), Verdict::Violated);
    }

    #[test]
    fn ids_serialize_snake() {
        assert_eq!(serde_json::to_string(&InequalityId::WeakGpi14).unwrap(), "\"weak_gpi14\"");
        assert_eq!(serde_json::to_string(&InequalityId::LtOrder).unwrap(), "\"lt_order\"");
        assert_eq!(serde_json::to_string(&CheckMethod::Mc).unwrap(), "\"mc\"");
    }
}

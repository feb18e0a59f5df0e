//! Search over covariance matrices for the most negative gap.
//!
//! Random phase: independent candidates from a generator family, evaluated in
//! parallel and reduced by `(gap, candidate index)`. Local phase: from the
//! best generator `G`, every entry is moved by `±step` in parallel, the best
//! neighbour is taken if it lowers the gap, otherwise the step halves; at most
//! 20 rounds. Every candidate is scored exactly (Wick enumeration) as the
//! minimum gap over the exponent set and splits.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moment_checks::{full_gap_wick, split_gap_wick};
use super::{GapReport, InequalityId};
use crate::error::{Error, Result};
use crate::estimators::{WickMoments, MAX_WICK_DEGREE};
use crate::linalg::{BlockPartition, SymMatrix};
use crate::sigma_gen::{generate_sigma_detailed, sigma_from_generator, SigmaKind};
use crate::trace_wishart::TraceWishartParams;

const DESCENT_ROUNDS: usize = 20;
const INITIAL_STEP: f64 = 0.5;
const RIDGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HuntTarget {
    /// Split comparison, every split `d1 = 1..d−1` unless restricted.
    Conjecture1,
    /// Full product of the margins.
    WeakGpi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuntSpace {
    pub blocks: Vec<usize>,
    pub two_alpha: f64,
    pub family: SigmaKind,
    pub target: HuntTarget,
    pub exponent_set: Vec<Vec<u32>>,
    /// Splits to score; all of `1..d` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntResult {
    pub best: GapReport,
    pub sigma: SymMatrix,
    pub generator: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signature: Vec<f64>,
    pub exponents: Vec<u32>,
    pub evaluations: usize,
    /// Position of the best candidate in evaluation order.
    pub best_evaluation: usize,
    pub seed: u64,
}

struct Prepared {
    partition: BlockPartition,
    splits: Vec<usize>,
    ridge: f64,
    nonneg: bool,
}

fn prepare(space: &HuntSpace) -> Result<Prepared> {
    let partition = BlockPartition::new(space.blocks.clone())?;
    let d = partition.len();
    if space.exponent_set.is_empty() {
        return Err(Error::InvalidArgument("empty exponent set".into()));
    }
    if !crate::trace_wishart::is_positive_integer(space.two_alpha) {
        return Err(Error::Infeasible("the hunter scores candidates exactly and needs integer 2α".into()));
    }
    for e in &space.exponent_set {
        if e.len() != d {
            return Err(Error::DimensionMismatch(format!("exponent vector {e:?} for {d} blocks")));
        }
        if e.iter().sum::<u32>() > MAX_WICK_DEGREE {
            return Err(Error::Infeasible(format!("exponent vector {e:?} exceeds total degree {MAX_WICK_DEGREE}")));
        }
    }
    let splits = match (&space.target, &space.splits) {
        (HuntTarget::WeakGpi, _) => vec![0],
        (HuntTarget::Conjecture1, Some(s)) => s.clone(),
        (HuntTarget::Conjecture1, None) => (1..d).collect(),
    };
    if splits.is_empty() {
        return Err(Error::InvalidArgument("no split to score; need at least two blocks".into()));
    }
    if space.target == HuntTarget::Conjecture1 {
        for &d1 in &splits {
            partition.split_point(d1)?;
        }
    }
    Ok(Prepared {
        partition,
        splits,
        ridge: if space.family == SigmaKind::Singular { 0.0 } else { RIDGE },
        nonneg: matches!(space.family, SigmaKind::SpdNonneg | SigmaKind::SignatureNonneg),
    })
}

struct Scored {
    gap: f64,
    report: GapReport,
    exponents: Vec<u32>,
    sigma: SymMatrix,
}

fn score(space: &HuntSpace, prep: &Prepared, g: &DMatrix<f64>, signature: &[f64]) -> Result<Scored> {
    let sigma = sigma_from_generator(g, prep.ridge, signature)?;
    let params = TraceWishartParams::new(space.two_alpha, prep.partition.clone(), sigma.clone())?;
    let mut wick = WickMoments::new(&params)?;
    let mut best: Option<(f64, Vec<u32>, usize, crate::estimators::GapEstimate)> = None;
    for exps in &space.exponent_set {
        for &d1 in &prep.splits {
            let est = match space.target {
                HuntTarget::Conjecture1 => split_gap_wick(&mut wick, exps, d1)?,
                HuntTarget::WeakGpi => full_gap_wick(&mut wick, exps)?,
            };
            if best.as_ref().is_none_or(|(g, ..)| est.gap < *g) {
                best = Some((est.gap, exps.clone(), d1, est));
            }
        }
    }
    let (gap, exponents, d1, est) = best.expect("nonempty exponent set and splits");
    let (id, d1) = match space.target {
        HuntTarget::Conjecture1 => (InequalityId::Conjecture1, Some(d1)),
        HuntTarget::WeakGpi => (InequalityId::WeakGpi13, None),
    };
    Ok(Scored { gap, report: GapReport::new(id, &params, est, d1, None), exponents, sigma })
}

fn candidate_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Index of the smallest gap, ties to the lowest index.
fn argmin(gaps: &[f64]) -> usize {
    let mut best = 0;
    for (k, g) in gaps.iter().enumerate() {
        if g < &gaps[best] {
            best = k;
        }
    }
    best
}

pub fn hunt_counterexample(space: &HuntSpace, budget: usize, seed: u64) -> Result<HuntResult> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least one evaluation".into()));
    }
    let prep = prepare(space)?;
    let p = prep.partition.total();
    let cols = if space.family == SigmaKind::Singular { p.div_ceil(2) } else { p };
    let neighbours = 2 * p * cols;
    let local_budget = (budget / 2).min(DESCENT_ROUNDS * neighbours);
    let random = budget - local_budget;

    let candidates = (0..random)
        .into_par_iter()
        .map(|k| {
            let gen = generate_sigma_detailed(space.family, p, candidate_seed(seed, k))?;
            let g = rows_to_matrix(&gen.generator);
            let s = score(space, &prep, &g, &gen.signature)?;
            Ok((s, gen.generator, gen.signature))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = argmin(&candidates.iter().map(|c| c.0.gap).collect::<Vec<_>>());
    let (mut best, generator, signature) = candidates.into_iter().nth(k).expect("at least one candidate");
    let mut best_g = rows_to_matrix(&generator);
    let mut best_evaluation = k;
    let mut evaluations = random;

    let mut step = INITIAL_STEP;
    for _ in 0..DESCENT_ROUNDS {
        if evaluations + neighbours > budget {
            break;
        }
        let moves: Vec<Result<(Scored, DMatrix<f64>)>> = (0..neighbours)
            .into_par_iter()
            .map(|m| {
                let entry = m / 2;
                let delta = if m % 2 == 0 { step } else { -step };
                let mut g = best_g.clone();
                let (i, j) = (entry / cols, entry % cols);
                g[(i, j)] += delta;
                if prep.nonneg {
                    g[(i, j)] = g[(i, j)].abs();
                }
                Ok((score(space, &prep, &g, &signature)?, g))
            })
            .collect();
        let moves = moves.into_iter().collect::<Result<Vec<_>>>()?;
        let m = argmin(&moves.iter().map(|mv| mv.0.gap).collect::<Vec<_>>());
        let round_start = evaluations;
        evaluations += neighbours;
        if moves[m].0.gap < best.gap {
            let (s, g) = moves.into_iter().nth(m).expect("move exists");
            best = s;
            best_g = g;
            best_evaluation = round_start + m;
        } else {
            step *= 0.5;
        }
    }

    Ok(HuntResult {
        best: best.report,
        sigma: best.sigma,
        generator: matrix_to_rows(&best_g),
        signature,
        exponents: best.exponents,
        evaluations,
        best_evaluation,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(family: SigmaKind) -> HuntSpace {
        HuntSpace {
            blocks: vec![1, 1, 1],
            two_alpha: 1.0,
            family,
            target: HuntTarget::Conjecture1,
            exponent_set: vec![vec![1, 1, 1], vec![2, 1, 1], vec![1, 2, 3]],
            splits: None,
        }
    }

    #[test]
    fn single_evaluation_budget() {
        let r = hunt_counterexample(&space(SigmaKind::SpdNonneg), 1, 4).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.best_evaluation, 0);
        let direct = generate_sigma_detailed(SigmaKind::SpdNonneg, 3, candidate_seed(4, 0)).unwrap();
        assert_eq!(r.sigma, direct.sigma);
    }

    #[test]
    fn nonnegative_family_stays_nonnegative() {
        let r = hunt_counterexample(&space(SigmaKind::SpdNonneg), 200, 1).unwrap();
        assert!(r.best.gap >= 0.0);
        assert!(r.sigma.as_matrix().iter().all(|&x| x >= 0.0));
        assert!(r.evaluations <= 200);
    }

    #[test]
    fn deterministic() {
        let a = hunt_counterexample(&space(SigmaKind::Spd), 150, 9).unwrap();
        let b = hunt_counterexample(&space(SigmaKind::Spd), 150, 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_bad_spaces() {
        let mut s = space(SigmaKind::Spd);
        s.exponent_set.clear();
        assert!(hunt_counterexample(&s, 10, 0).is_err());
        let mut s = space(SigmaKind::Spd);
        s.two_alpha = 1.5;
        assert!(hunt_counterexample(&s, 10, 0).is_err());
        let mut s = space(SigmaKind::Spd);
        s.exponent_set = vec![vec![3, 3, 3]];
        assert!(hunt_counterexample(&s, 10, 0).is_err());
        assert!(hunt_counterexample(&space(SigmaKind::Spd), 0, 0).is_err());
    }
}

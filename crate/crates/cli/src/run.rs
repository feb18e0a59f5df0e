//! Dispatch from a validated config to the checkers.

use std::io::Write;

use gpi_core::harness::{
    check_conjecture1, check_cor1c, check_cor2, check_lt_order, check_thm1, check_thm2, check_weak_gpi,
    default_lt_grid, hunt_counterexample, GapReport, HuntResult, Verdict,
};
use gpi_core::{Error, Result, TraceWishartParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CheckSpec, ExperimentConfig, SigmaSource};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub const SWEEP_AXES: [&str; 8] = ["rho", "two_alpha", "q1", "q2", "m", "d1", "n_draws", "seed"];

/// Report body for `check` and `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_values: Option<Vec<f64>>,
    pub reports: Vec<GapReport>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.reports.iter().map(|r| r.verdict))
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        write_json(self, out)
    }

    /// Columns `axis_value,lhs,rhs,gap,gap_stderr,verdict`; `axis_value` is
    /// empty outside sweeps.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["axis_value", "lhs", "rhs", "gap", "gap_stderr", "verdict"]).map_err(io)?;
        for (k, r) in self.reports.iter().enumerate() {
            let axis = self.axis_values.as_ref().map(|v| v[k].to_string()).unwrap_or_default();
            w.write_record([
                axis,
                r.lhs.value.to_string(),
                r.rhs.value.to_string(),
                r.gap.to_string(),
                r.gap_stderr.to_string(),
                verdict_str(r.verdict).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

/// Report body for `hunt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntReport {
    pub command: String,
    pub config_fingerprint: String,
    pub budget: usize,
    pub result: HuntResult,
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn exit_code(verdicts: impl IntoIterator<Item = Verdict>) -> i32 {
    let mut code = EXIT_HOLDS;
    for v in verdicts {
        match v {
            Verdict::Violated => return EXIT_VIOLATED,
            Verdict::Inconclusive => code = EXIT_INCONCLUSIVE,
            Verdict::Holds => {}
        }
    }
    code
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write: {e}"));
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
    out.write_all(b"\n").map_err(io)?;
    out.flush().map_err(io)
}

fn weak_exps(params: &TraceWishartParams, exps: &Option<Vec<f64>>, m: Option<u32>) -> Vec<f64> {
    match (exps, m) {
        (Some(e), _) => e.clone(),
        (None, Some(m)) => vec![m as f64; params.d()],
        (None, None) => Vec::new(),
    }
}

/// Runs the single check described by `config`.
pub fn run_check(config: &ExperimentConfig) -> Result<GapReport> {
    let params = config.validate_check()?;
    let d1 = config.split(params.d())?;
    let (method, n, seed) = (config.method, config.n_draws, config.seed);
    match config.check_spec()? {
        CheckSpec::LtOrder { grid } => {
            let star = params.block_diagonalize(d1)?;
            let grid = grid.clone().unwrap_or_else(|| default_lt_grid(params.d()));
            let mut report = check_lt_order(&params, &star, &grid)?;
            report.d1 = Some(d1);
            Ok(report)
        }
        CheckSpec::Thm1 { phis } => check_thm1(&params, phis, d1, method, n, seed),
        CheckSpec::Cor1c { matrices } => check_cor1c(&params, matrices, d1, method, n, seed),
        CheckSpec::Thm2 { f, g } => check_thm2(&params, f, g, method, n, seed),
        CheckSpec::Cor2 { q1, q2 } => check_cor2(&params, *q1, *q2, method, n, seed),
        CheckSpec::Conjecture1 { exps } => check_conjecture1(&params, exps, d1, method, n, seed),
        CheckSpec::WeakGpi { variant, exps, m } => {
            check_weak_gpi(&params, &weak_exps(&params, exps, *m), *variant, method, n, seed)
        }
    }
}

pub fn check(config: &ExperimentConfig) -> Result<RunReport> {
    let report = run_check(config)?;
    Ok(RunReport {
        command: "check".into(),
        config_fingerprint: config.fingerprint(),
        axis: None,
        axis_values: None,
        reports: vec![report],
    })
}

fn as_count(axis: &str, v: f64) -> Result<u64> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(Error::InvalidArgument(format!("sweep axis `{axis}` needs nonnegative integers, got {v}")))
    }
}

/// `config` with one numeric field replaced.
pub fn with_axis(config: &ExperimentConfig, axis: &str, v: f64) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    let wrong_check = || Error::InvalidArgument(format!("sweep axis `{axis}` does not apply to this check"));
    match axis {
        "rho" => {
            let dist = c.distribution.as_mut().ok_or_else(|| Error::InvalidArgument("config has no `distribution`".into()))?;
            match &mut dist.sigma {
                SigmaSource::Equicorrelated { rho, .. } => *rho = v,
                SigmaSource::Explicit(m) => {
                    let p = m.dim();
                    let rows: Vec<Vec<f64>> =
                        (0..p).map(|i| (0..p).map(|j| if i == j { m.get(i, i) } else { v }).collect()).collect();
                    *m = gpi_core::SymMatrix::from_rows(&rows)?;
                }
                SigmaSource::Generator { .. } => {
                    return Err(Error::InvalidArgument("sweep axis `rho` needs an explicit or equicorrelated Σ".into()))
                }
            }
        }
        "two_alpha" => {
            c.distribution.as_mut().ok_or_else(|| Error::InvalidArgument("config has no `distribution`".into()))?.two_alpha = v
        }
        "q1" | "q2" => match c.check.as_mut() {
            Some(CheckSpec::Cor2 { q1, q2 }) => *(if axis == "q1" { q1 } else { q2 }) = v,
            _ => return Err(wrong_check()),
        },
        "m" => match c.check.as_mut() {
            Some(CheckSpec::WeakGpi { exps, m, .. }) => {
                *exps = None;
                *m = Some(u32::try_from(as_count(axis, v)?).map_err(|_| wrong_check())?);
            }
            _ => return Err(wrong_check()),
        },
        "d1" => c.d1 = Some(as_count(axis, v)? as usize),
        "n_draws" => c.n_draws = as_count(axis, v)? as usize,
        "seed" => c.seed = as_count(axis, v)?,
        other => {
            return Err(Error::InvalidArgument(format!("unknown sweep axis `{other}`; expected one of {SWEEP_AXES:?}")))
        }
    }
    Ok(c)
}

/// One report per axis value, in the order given. Instances other than a
/// `seed` sweep get seeds `seed + k·2^32`.
pub fn sweep(config: &ExperimentConfig) -> Result<RunReport> {
    let spec = config.sweep.as_ref().ok_or_else(|| Error::InvalidArgument("config has no `sweep`".into()))?;
    if spec.values.is_empty() {
        return Err(Error::InvalidArgument("sweep over an empty value list".into()));
    }
    let instances = spec
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut c = with_axis(config, &spec.axis, v)?;
            if spec.axis != "seed" {
                c.seed = config.seed.wrapping_add((k as u64) << 32);
            }
            c.validate_check()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = instances.par_iter().map(run_check).collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        command: "sweep".into(),
        config_fingerprint: config.fingerprint(),
        axis: Some(spec.axis.clone()),
        axis_values: Some(spec.values.clone()),
        reports,
    })
}

pub fn hunt(config: &ExperimentConfig) -> Result<HuntReport> {
    let spec = config.hunt.as_ref().ok_or_else(|| Error::InvalidArgument("config has no `hunt`".into()))?;
    let result = hunt_counterexample(&spec.space, spec.budget, config.seed)?;
    Ok(HuntReport {
        command: "hunt".into(),
        config_fingerprint: config.fingerprint(),
        budget: spec.budget,
        result,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub t: Vec<f64>,
    pub value: f64,
}

pub fn laplace_points(config: &ExperimentConfig, extra: &[Vec<f64>]) -> Result<Vec<LaplacePoint>> {
    let params = config.distribution()?.build()?;
    let points: Vec<&Vec<f64>> = config.laplace_points.iter().chain(extra).collect();
    if points.is_empty() {
        return Err(Error::InvalidArgument("no Laplace points given".into()));
    }
    points.into_iter().map(|t| Ok(LaplacePoint { t: t.clone(), value: params.laplace(t)? })).collect()
}

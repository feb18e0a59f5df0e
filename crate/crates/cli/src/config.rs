//! Experiment configuration (one JSON object per run).

use gpi_core::cm_bernstein::{BernsteinFn, CmFunction};
use gpi_core::harness::{CheckMethod, HuntSpace, WeakGpiVariant};
use gpi_core::sigma_gen::{equicorrelated, generate_sigma, SigmaKind};
use gpi_core::{BlockPartition, Error, Result, SymMatrix, TraceWishartParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_DRAWS: usize = 200_000;

/// How the matrix in `sigma` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaConvention {
    /// `X_i` are block traces of `Wishart_p(2α, Σ/2)`.
    #[default]
    TraceWishart,
    /// `Σ` is the covariance of the underlying Gaussian rows, i.e. the
    /// trace-Wishart parameter is `2Σ`.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSource {
    Explicit(SymMatrix),
    Generator { kind: SigmaKind, p: usize, seed: u64 },
    Equicorrelated { p: usize, rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub two_alpha: f64,
    pub blocks: Vec<usize>,
    pub sigma: SigmaSource,
    #[serde(default)]
    pub sigma_convention: SigmaConvention,
}

impl DistributionSpec {
    pub fn sigma_matrix(&self) -> Result<SymMatrix> {
        match &self.sigma {
            SigmaSource::Explicit(m) => Ok(m.clone()),
            SigmaSource::Generator { kind, p, seed } => generate_sigma(*kind, *p, *seed),
            SigmaSource::Equicorrelated { p, rho } => equicorrelated(*p, *rho),
        }
    }

    pub fn build(&self) -> Result<TraceWishartParams> {
        let sigma = self.sigma_matrix()?;
        let partition = BlockPartition::new(self.blocks.clone())?;
        match self.sigma_convention {
            SigmaConvention::TraceWishart => TraceWishartParams::new(self.two_alpha, partition, sigma),
            SigmaConvention::Gaussian => TraceWishartParams::from_gaussian_covariance(self.two_alpha, partition, &sigma),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// The distribution against its block-diagonalized version at `d1`.
    LtOrder {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Vec<Vec<f64>>>,
    },
    Thm1 { phis: Vec<CmFunction> },
    Cor1c { matrices: Vec<SymMatrix> },
    Thm2 { f: BernsteinFn, g: BernsteinFn },
    Cor2 { q1: f64, q2: f64 },
    Conjecture1 { exps: Vec<f64> },
    WeakGpi {
        variant: WeakGpiVariant,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exps: Option<Vec<f64>>,
        /// Common exponent on every coordinate.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u32>,
    },
}

impl CheckSpec {
    fn needs_split(&self) -> bool {
        matches!(
            self,
            CheckSpec::LtOrder { .. } | CheckSpec::Thm1 { .. } | CheckSpec::Cor1c { .. } | CheckSpec::Conjecture1 { .. }
        )
    }

    fn is_pair_check(&self) -> bool {
        matches!(self, CheckSpec::Thm2 { .. } | CheckSpec::Cor2 { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuntSpec {
    pub budget: usize,
    pub space: HuntSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default)]
    pub method: CheckMethod,
    #[serde(default = "default_draws")]
    pub n_draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hunt: Option<HuntSpec>,
    /// Points for the `laplace` subcommand.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub laplace_points: Vec<Vec<f64>>,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let body = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&body))
    }

    pub fn distribution(&self) -> Result<&DistributionSpec> {
        self.distribution.as_ref().ok_or_else(|| Error::InvalidArgument("config has no `distribution`".into()))
    }

    pub fn check_spec(&self) -> Result<&CheckSpec> {
        self.check.as_ref().ok_or_else(|| Error::InvalidArgument("config has no `check`".into()))
    }

    /// Split used by the check; pair checks default to 1.
    pub fn split(&self, d: usize) -> Result<usize> {
        let check = self.check_spec()?;
        if check.is_pair_check() {
            return match self.d1 {
                None | Some(1) => Ok(1),
                Some(d1) => Err(Error::InvalidArgument(format!("pair checks split at d1 = 1, got {d1}"))),
            };
        }
        if !check.needs_split() {
            return Ok(0);
        }
        let d1 = self.d1.ok_or_else(|| Error::InvalidArgument("this check needs `d1`".into()))?;
        if !(1..d).contains(&d1) {
            return Err(Error::InvalidArgument(format!("d1 must lie in 1..={}, got {d1}", d.saturating_sub(1))));
        }
        Ok(d1)
    }

    /// Cheap precondition checks before any computation. Returns the
    /// parameter set.
    pub fn validate_check(&self) -> Result<TraceWishartParams> {
        let params = self.distribution()?.build()?;
        let d = params.d();
        self.split(d)?;
        let arity = |what: &str, n: usize| -> Result<()> {
            if n != d {
                return Err(Error::InvalidArgument(format!("{what}: expected {d} entries, got {n}")));
            }
            Ok(())
        };
        match self.check_spec()? {
            CheckSpec::LtOrder { grid } => {
                if let Some(g) = grid {
                    if g.is_empty() {
                        return Err(Error::InvalidArgument("empty Laplace grid".into()));
                    }
                    for t in g {
                        arity("grid point", t.len())?;
                    }
                }
            }
            CheckSpec::Thm1 { phis } => arity("phis", phis.len())?,
            CheckSpec::Cor1c { matrices } => arity("matrices", matrices.len())?,
            CheckSpec::Thm2 { .. } | CheckSpec::Cor2 { .. } => {
                if d != 2 {
                    return Err(Error::InvalidArgument(format!("pair checks need exactly 2 blocks, got {d}")));
                }
            }
            CheckSpec::Conjecture1 { exps } => arity("exps", exps.len())?,
            CheckSpec::WeakGpi { exps, m, .. } => match (exps, m) {
                (Some(e), None) => arity("exps", e.len())?,
                (None, Some(_)) => {}
                _ => return Err(Error::InvalidArgument("weak_gpi needs exactly one of `exps` or `m`".into())),
            },
        }
        Ok(params)
    }
}

//! Random covariance families.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::standard_normal;

const RIDGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaKind {
    /// `G Gᵀ + 0.1 I`.
    Spd,
    /// `|G| |G|ᵀ + 0.1 I`, all entries nonnegative.
    SpdNonneg,
    /// `S (|G| |G|ᵀ + 0.1 I) S` for a random signature matrix `S`.
    SignatureNonneg,
    /// Gram matrix of rank `⌈p/2⌉`.
    Singular,
}

impl SigmaKind {
    pub const ALL: [SigmaKind; 4] = [SigmaKind::Spd, SigmaKind::SpdNonneg, SigmaKind::SignatureNonneg, SigmaKind::Singular];
}

/// A generated matrix with what produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSigma {
    pub sigma: SymMatrix,
    /// The Gaussian generator `G` (after `|·|` for the nonnegative kinds).
    pub generator: Vec<Vec<f64>>,
    /// Diagonal of `S` for `signature-nonneg`, else empty.
    pub signature: Vec<f64>,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order does not depend on storage layout.
    let mut g = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            g[(i, j)] = standard_normal(rng);
        }
    }
    g
}

/// Symmetric matrix from a generator `G` and optional signature:
/// `S (G Gᵀ + ridge I) S`.
pub fn sigma_from_generator(g: &DMatrix<f64>, ridge: f64, signature: &[f64]) -> Result<SymMatrix> {
    let p = g.nrows();
    let mut m = g * g.transpose();
    for i in 0..p {
        m[(i, i)] += ridge;
    }
    if !signature.is_empty() {
        if signature.len() != p {
            return Err(Error::DimensionMismatch(format!("signature of length {} for p = {p}", signature.len())));
        }
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] *= signature[i] * signature[j];
            }
        }
    }
    SymMatrix::new(m)
}

pub fn generate_sigma_detailed(kind: SigmaKind, p: usize, seed: u64) -> Result<GeneratedSigma> {
    if p == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = match kind {
        SigmaKind::Singular => p.div_ceil(2),
        _ => p,
    };
    let mut g = normal_matrix(&mut rng, p, cols);
    if matches!(kind, SigmaKind::SpdNonneg | SigmaKind::SignatureNonneg) {
        g.iter_mut().for_each(|x| *x = x.abs());
    }
    let signature: Vec<f64> = if kind == SigmaKind::SignatureNonneg {
        (0..p).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    } else {
        Vec::new()
    };
    let ridge = if kind == SigmaKind::Singular { 0.0 } else { RIDGE };
    let sigma = sigma_from_generator(&g, ridge, &signature)?;
    let generator = (0..p).map(|i| g.row(i).iter().copied().collect()).collect();
    Ok(GeneratedSigma { sigma, generator, signature })
}

pub fn generate_sigma(kind: SigmaKind, p: usize, seed: u64) -> Result<SymMatrix> {
    Ok(generate_sigma_detailed(kind, p, seed)?.sigma)
}

/// Unit-diagonal rescaling `D^{−1/2} Σ D^{−1/2}`.
pub fn to_correlation(sigma: &SymMatrix) -> Result<SymMatrix> {
    let m = sigma.as_matrix();
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
    if let Some(bad) = d.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InvalidArgument(format!("correlation needs a positive diagonal, found {bad}")));
    }
    SymMatrix::new(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            m[(i, j)] / (d[i] * d[j]).sqrt()
        }
    }))
}

/// `(1 − ρ) I + ρ 11ᵀ`; SPSD for `ρ ∈ [−1/(p−1), 1]`.
pub fn equicorrelated(p: usize, rho: f64) -> Result<SymMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    let lo = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
    if !(rho >= lo && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("equicorrelation {rho} outside [{lo}, 1]")));
    }
    SymMatrix::new(DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho }))
}

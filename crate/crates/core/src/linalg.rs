//! Dense symmetric-matrix kernel.
//!
//! Everything here operates on small dense matrices (dimension in the tens at
//! most) and is backed by `nalgebra` eigen and Cholesky decompositions.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative eigenvalue tolerance for PSD clamping.
pub const PSD_TOL: f64 = 1e-10;

/// Symmetric real matrix. Construction symmetrizes the input, so
/// `m[(i, j)] == m[(j, i)]` holds bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Ordered partition of `0..p` into `d` contiguous blocks of sizes `p_1..p_d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument("partition needs at least one block".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(BlockPartition { sizes, offsets })
    }

    /// `d` blocks of size one (the multivariate gamma case).
    pub fn singletons(d: usize) -> Result<Self> {
        Self::new(vec![1; d])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks `d`.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Total dimension `p`.
    pub fn total(&self) -> usize {
        self.offsets[self.sizes.len()]
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Block index owning each coordinate.
    pub fn owners(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (b, &s) in self.sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(b, s));
        }
        out
    }

    /// `q_1 = p_1 + ... + p_{d1}`, validating `1 <= d1 <= d - 1`.
    pub fn split_point(&self, d1: usize) -> Result<usize> {
        if d1 == 0 || d1 >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "split index d1 = {d1} outside 1..={}",
                self.len().saturating_sub(1)
            )));
        }
        Ok(self.offsets[d1])
    }

    fn check_matches(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch(format!(
                "partition covers {} coordinates but matrix has dimension {dim}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for BlockPartition {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        BlockPartition::new(sizes)
    }
}

impl From<BlockPartition> for Vec<usize> {
    fn from(p: BlockPartition) -> Self {
        p.sizes
    }
}

/// Eigenvalue-clamped factorization `M ≈ L Lᵀ` of a symmetric PSD matrix.
#[derive(Clone, Debug)]
pub struct SpsdFactor {
    dim: usize,
    rank: usize,
    factor: DMatrix<f64>,
    logdet: Option<f64>,
    min_eigenvalue: f64,
}

impl SpsdFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `dim × rank` factor.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `None` when the matrix is singular at the clamping tolerance.
    pub fn logdet(&self) -> Option<f64> {
        self.logdet
    }

    pub fn is_singular(&self) -> bool {
        self.logdet.is_none()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }
}

pub fn factor_spsd(m: &SymMatrix, tol: f64) -> Result<SpsdFactor> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.dim();
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let thresh = tol * max_abs;
    if min_eig < -thresh {
        return Err(Error::NotPositiveSemidefinite(min_eig));
    }
    // Descending eigenvalue order keeps the factor layout stable.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| max_abs > 0.0 && eig.eigenvalues[k] > thresh)
        .collect();
    let rank = kept.len();
    let mut factor = DMatrix::zeros(n, rank);
    for (c, &k) in kept.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            factor[(i, c)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    let logdet = (rank == n).then(|| kept.iter().map(|&k| eig.eigenvalues[k].ln()).sum());
    Ok(SpsdFactor { dim: n, rank, factor, logdet, min_eigenvalue: min_eig })
}

/// `ln det(diag(shift) + diag(scale) Σ diag(scale))` by Cholesky.
///
/// The argument must be positive definite; callers guarantee `shift > 0` or a
/// nonsingular Σ on the scaled coordinates.
pub(crate) fn logdet_shifted_congruence(sigma: &DMatrix<f64>, shift: &[f64], scale: &[f64]) -> f64 {
    let n = sigma.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let v = scale[i] * sigma[(i, j)] * scale[j];
        if i == j {
            v + shift[i]
        } else {
            v
        }
    });
    match Cholesky::new(m.clone()) {
        Some(ch) => 2.0 * ch.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
        None => SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.max(0.0).ln()).sum(),
    }
}

/// `ln det(I + D Σ)` with `D = diag(t_1 I_{p_1}, ..., t_d I_{p_d})`, evaluated
/// through the congruent form `I + √D Σ √D`.
pub fn logdet_i_plus_ds(t_blocks: &[f64], partition: &BlockPartition, sigma: &SymMatrix) -> Result<f64> {
    partition.check_matches(sigma.dim())?;
    if t_blocks.len() != partition.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} block weights, got {}",
            partition.len(),
            t_blocks.len()
        )));
    }
    if let Some(&bad) = t_blocks.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("block weights must be finite and >= 0, got {bad}")));
    }
    if t_blocks.iter().all(|&t| t == 0.0) {
        return Ok(0.0);
    }
    let p = partition.total();
    let mut scale = vec![0.0; p];
    for (b, &t) in t_blocks.iter().enumerate() {
        let s = t.sqrt();
        for i in partition.range(b) {
            scale[i] = s;
        }
    }
    let shift = vec![1.0; p];
    Ok(logdet_shifted_congruence(sigma.as_matrix(), &shift, &scale).max(0.0))
}

/// Kronecker product of rectangular matrices.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker sum `A ⊗ I + I ⊗ B`.
pub fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch("Kronecker sum needs square inputs".into()));
    }
    let ia = DMatrix::identity(a.nrows(), a.nrows());
    let ib = DMatrix::identity(b.nrows(), b.nrows());
    Ok(kron(a, &ib) + kron(&ia, b))
}

/// Left-to-right Kronecker sum of a non-empty list.
pub fn kron_sum_all(mats: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("Kronecker sum of an empty list".into()))?;
    if !first.is_square() {
        return Err(Error::DimensionMismatch("Kronecker sum needs square inputs".into()));
    }
    rest.iter().try_fold(first.clone(), |acc, m| kron_sum(&acc, m))
}

/// `exp(A) = V diag(e^λ) Vᵀ` for symmetric `A`.
pub fn matexp_sym(a: &SymMatrix) -> SymMatrix {
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let v = &eig.eigenvectors;
    let e = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
    SymMatrix::new(v * e * v.transpose()).expect("exponential of a symmetric matrix is symmetric")
}

/// Principal submatrix keeping the blocks listed in `keep` (0-based, strictly
/// increasing).
pub fn principal_submatrix(
    sigma: &SymMatrix,
    partition: &BlockPartition,
    keep: &[usize],
) -> Result<(SymMatrix, BlockPartition)> {
    partition.check_matches(sigma.dim())?;
    if keep.is_empty() {
        return Err(Error::InvalidArgument("block subset must be non-empty".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("block subset must be strictly increasing".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&j| j >= partition.len()) {
        return Err(Error::InvalidArgument(format!(
            "block index {bad} out of range for {} blocks",
            partition.len()
        )));
    }
    let idx: Vec<usize> = keep.iter().flat_map(|&b| partition.range(b)).collect();
    let m = sigma.as_matrix();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
    let sizes = keep.iter().map(|&b| partition.sizes()[b]).collect();
    Ok((SymMatrix::new(sub)?, BlockPartition::new(sizes)?))
}

/// Fischer-inequality gap across the split after block `d1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FischerGap {
    /// `ln det Σ11 + ln det Σ22 − ln det Σ` (nonsingular Σ).
    LogDet(f64),
    /// `det Σ11 · det Σ22 − det Σ` (singular Σ).
    Det(f64),
}

impl FischerGap {
    pub fn value(&self) -> f64 {
        match *self {
            FischerGap::LogDet(v) | FischerGap::Det(v) => v,
        }
    }
}

pub fn fischer_gap(sigma: &SymMatrix, partition: &BlockPartition, d1: usize) -> Result<FischerGap> {
    partition.check_matches(sigma.dim())?;
    let q1 = partition.split_point(d1)?;
    let p = partition.total();
    let m = sigma.as_matrix();
    let s11 = SymMatrix::new(m.view((0, 0), (q1, q1)).into_owned())?;
    let s22 = SymMatrix::new(m.view((q1, q1), (p - q1, p - q1)).into_owned())?;
    let full = factor_spsd(sigma, PSD_TOL)?;
    let f11 = factor_spsd(&s11, PSD_TOL)?;
    let f22 = factor_spsd(&s22, PSD_TOL)?;
    match full.logdet() {
        Some(l) => {
            let l11 = f11.logdet().expect("principal block of an SPD matrix is SPD");
            let l22 = f22.logdet().expect("principal block of an SPD matrix is SPD");
            Ok(FischerGap::LogDet(l11 + l22 - l))
        }
        None => {
            let det = |s: &SymMatrix| s.eigenvalues().iter().map(|l| l.max(0.0)).product::<f64>();
            Ok(FischerGap::Det(det(&s11) * det(&s22) - det(sigma)))
        }
    }
}

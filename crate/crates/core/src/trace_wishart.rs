//! The multivariate trace-Wishart distribution `TW_{p_1..p_d}(α, Σ)`.
//!
//! `X = (tr W_11, ..., tr W_dd)` for `W ~ Wishart_p(2α, Σ/2)` partitioned into
//! diagonal blocks of sizes `p_1..p_d`. Its Laplace transform is
//! `E exp(−tᵀX) = det(I + diag(t_1 I_{p_1}, ..., t_d I_{p_d}) Σ)^{−α}`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, BlockPartition, SpsdFactor, SymMatrix, PSD_TOL};
use crate::rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawParams {
    two_alpha: f64,
    blocks: BlockPartition,
    sigma: SymMatrix,
}

/// Validated `(2α, p_1..p_d, Σ)`.
///
/// `2α` must be a positive integer or exceed `p − 1`; Σ must be SPSD (singular
/// Σ is accepted).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct TraceWishartParams {
    two_alpha: f64,
    partition: BlockPartition,
    sigma: SymMatrix,
    factor: SpsdFactor,
}

impl TryFrom<RawParams> for TraceWishartParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        TraceWishartParams::new(raw.two_alpha, raw.blocks, raw.sigma)
    }
}

impl From<TraceWishartParams> for RawParams {
    fn from(p: TraceWishartParams) -> Self {
        RawParams { two_alpha: p.two_alpha, blocks: p.partition, sigma: p.sigma }
    }
}

pub(crate) fn is_positive_integer(x: f64) -> bool {
    x >= 1.0 && x.fract() == 0.0 && x < 9.0e15
}

impl TraceWishartParams {
    pub fn new(two_alpha: f64, partition: BlockPartition, sigma: SymMatrix) -> Result<Self> {
        if !two_alpha.is_finite() || two_alpha <= 0.0 {
            return Err(Error::InvalidParams(format!("2α must be positive and finite, got {two_alpha}")));
        }
        let p = partition.total();
        if sigma.dim() != p {
            return Err(Error::DimensionMismatch(format!(
                "Σ is {}x{} but blocks sum to {p}",
                sigma.dim(),
                sigma.dim()
            )));
        }
        if !is_positive_integer(two_alpha) && two_alpha <= (p as f64 - 1.0) {
            return Err(Error::InvalidParams(format!(
                "2α = {two_alpha} must be a positive integer or exceed p − 1 = {}",
                p - 1
            )));
        }
        let factor = linalg::factor_spsd(&sigma, PSD_TOL)?;
        Ok(TraceWishartParams { two_alpha, partition, sigma, factor })
    }

    /// Squared components of a centered Gaussian vector with covariance `cov`:
    /// `X_i = Z_i²` is `TW_{1,..,1}(1/2, 2·cov)`.
    pub fn squared_gaussian(cov: &SymMatrix) -> Result<Self> {
        Self::from_gaussian_covariance(1.0, BlockPartition::singletons(cov.dim())?, cov)
    }

    /// Block traces of `W ~ Wishart_p(2α, cov)`, i.e. `Σ = 2·cov`.
    pub fn from_gaussian_covariance(two_alpha: f64, partition: BlockPartition, cov: &SymMatrix) -> Result<Self> {
        Self::new(two_alpha, partition, cov.scaled(2.0))
    }

    pub fn two_alpha(&self) -> f64 {
        self.two_alpha
    }

    pub fn alpha(&self) -> f64 {
        0.5 * self.two_alpha
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    /// Number of components `d`.
    pub fn d(&self) -> usize {
        self.partition.len()
    }

    /// Matrix dimension `p`.
    pub fn p(&self) -> usize {
        self.partition.total()
    }

    pub fn is_singular(&self) -> bool {
        self.factor.is_singular()
    }

    pub fn integer_degrees(&self) -> Option<usize> {
        is_positive_integer(self.two_alpha).then_some(self.two_alpha as usize)
    }

    pub(crate) fn sigma_factor(&self) -> &SpsdFactor {
        &self.factor
    }

    /// Short stable hash of `(2α, blocks, Σ)`.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let body = serde_json::to_vec(self).expect("parameters serialize");
        hex::encode(&Sha256::digest(&body)[..8])
    }

    /// `E exp(−tᵀX)`.
    pub fn laplace(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.d() {
            return Err(Error::DimensionMismatch(format!("expected {} coordinates, got {}", self.d(), t.len())));
        }
        if let Some(&bad) = t.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("Laplace argument must be >= 0, got {bad}")));
        }
        let ld = linalg::logdet_i_plus_ds(t, &self.partition, &self.sigma)?;
        Ok((-self.alpha() * ld).exp())
    }

    /// Law of `(X_j)_{j ∈ keep}` (0-based, strictly increasing block indices).
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        let (sigma, partition) = linalg::principal_submatrix(&self.sigma, &self.partition, keep)?;
        Self::new(self.two_alpha, partition, sigma)
    }

    /// Marginals of blocks `0..d1` and `d1..d`.
    pub fn split(&self, d1: usize) -> Result<(Self, Self)> {
        self.partition.split_point(d1)?;
        let left: Vec<usize> = (0..d1).collect();
        let right: Vec<usize> = (d1..self.d()).collect();
        Ok((self.marginal(&left)?, self.marginal(&right)?))
    }

    /// Same `2α` and blocks with the cross-covariance between blocks `0..d1`
    /// and `d1..d` set to zero.
    pub fn block_diagonalize(&self, d1: usize) -> Result<Self> {
        let q1 = self.partition.split_point(d1)?;
        let p = self.p();
        let m = self.sigma.as_matrix();
        let star = DMatrix::from_fn(p, p, |i, j| if (i < q1) == (j < q1) { m[(i, j)] } else { 0.0 });
        Self::new(self.two_alpha, self.partition.clone(), SymMatrix::new(star)?)
    }

    /// Sampler picked automatically: Bartlett when `2α > p − 1`, the
    /// Gaussian-sum representation otherwise.
    pub fn default_sampler(&self) -> SamplerKind {
        if self.two_alpha > self.p() as f64 - 1.0 {
            SamplerKind::Bartlett
        } else {
            SamplerKind::GaussianSum
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        self.sample_with(n, seed, self.default_sampler())
    }

    pub fn sample_with(&self, n: usize, seed: u64, kind: SamplerKind) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InvalidArgument("draw count must be at least 1".into()));
        }
        let draw = DrawKernel::new(self, kind)?;
        let d = self.d();
        let mut values = vec![0.0; n * d];
        values.par_chunks_mut(d).enumerate().for_each_init(
            || draw.scratch(),
            |scratch, (i, row)| {
                let mut r = rng::draw_rng(seed, i as u64);
                draw.draw(&mut r, scratch, row);
            },
        );
        Ok(SampleMatrix { n, d, values, seed, sampler: kind })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Bartlett decomposition of `Wishart_p(2α, Σ/2)`; needs `2α > p − 1`.
    Bartlett,
    /// `W = Σ_{k=1}^{2α} Y_k Y_kᵀ` with `Y_k ~ N(0, Σ/2)`; needs integer `2α`.
    GaussianSum,
}

struct DrawKernel {
    kind: SamplerKind,
    /// Factor of Σ/2, `p × r`.
    factor: DMatrix<f64>,
    owners: Vec<usize>,
    two_alpha: f64,
    d: usize,
}

struct Scratch {
    a: Vec<f64>,
    z: Vec<f64>,
}

impl DrawKernel {
    fn new(params: &TraceWishartParams, kind: SamplerKind) -> Result<Self> {
        match kind {
            SamplerKind::Bartlett if params.two_alpha <= params.p() as f64 - 1.0 => {
                return Err(Error::Infeasible(format!(
                    "Bartlett sampler needs 2α > p − 1 (2α = {}, p = {})",
                    params.two_alpha,
                    params.p()
                )))
            }
            SamplerKind::GaussianSum if params.integer_degrees().is_none() => {
                return Err(Error::Infeasible(format!(
                    "Gaussian-sum sampler needs integer 2α, got {}",
                    params.two_alpha
                )))
            }
            _ => {}
        }
        Ok(DrawKernel {
            kind,
            factor: params.sigma_factor().factor() * std::f64::consts::FRAC_1_SQRT_2,
            owners: params.partition.owners(),
            two_alpha: params.two_alpha,
            d: params.d(),
        })
    }

    fn scratch(&self) -> Scratch {
        let r = self.factor.ncols();
        Scratch { a: vec![0.0; r * r], z: vec![0.0; r] }
    }

    fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng, s: &mut Scratch, out: &mut [f64]) {
        out.fill(0.0);
        let l = &self.factor;
        let (p, r) = l.shape();
        match self.kind {
            SamplerKind::Bartlett => {
                // Lower-triangular A, row by row: normals below the diagonal,
                // then sqrt(chi²_{ν − i}) on the diagonal.
                for i in 0..r {
                    for j in 0..i {
                        s.a[i * r + j] = rng::standard_normal(rng);
                    }
                    s.a[i * r + i] = rng::chi_square(rng, self.two_alpha - i as f64).sqrt();
                }
                // X_b = Σ_{row ∈ b} ||(L A)_row||²
                for row in 0..p {
                    let mut acc = 0.0;
                    for c in 0..r {
                        let mut v = 0.0;
                        for k in c..r {
                            v += l[(row, k)] * s.a[k * r + c];
                        }
                        acc += v * v;
                    }
                    out[self.owners[row]] += acc;
                }
            }
            SamplerKind::GaussianSum => {
                let nu = self.two_alpha as usize;
                for _ in 0..nu {
                    for z in s.z.iter_mut() {
                        *z = rng::standard_normal(rng);
                    }
                    for row in 0..p {
                        let mut y = 0.0;
                        for c in 0..r {
                            y += l[(row, c)] * s.z[c];
                        }
                        out[self.owners[row]] += y * y;
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), self.d);
    }
}

/// `n` draws of `X`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    seed: u64,
    sampler: SamplerKind,
}

impl SampleMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            for (a, x) in m.iter_mut().zip(row) {
                *a += x;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n as f64);
        m
    }

    /// CSV with header `x1,...,xd` and one row per draw.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        w.write_record((1..=self.d).map(|i| format!("x{i}"))).map_err(io)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn pair(two_alpha: f64, rho: f64) -> TraceWishartParams {
        TraceWishartParams::new(two_alpha, BlockPartition::singletons(2).unwrap(), m(&[&[1.0, rho], &[rho, 1.0]]))
            .unwrap()
    }

    fn three_block() -> TraceWishartParams {
        let s = m(&[
            &[2.0, 0.4, 0.3, 0.1],
            &[0.4, 1.5, -0.2, 0.5],
            &[0.3, -0.2, 1.0, 0.2],
            &[0.1, 0.5, 0.2, 1.2],
        ]);
        TraceWishartParams::new(4.0, BlockPartition::new(vec![2, 1, 1]).unwrap(), s).unwrap()
    }

    #[test]
    fn parameter_range() {
        let part = BlockPartition::new(vec![2, 2]).unwrap();
        let s = SymMatrix::identity(4);
        assert!(TraceWishartParams::new(1.0, part.clone(), s.clone()).is_ok());
        assert!(TraceWishartParams::new(2.0, part.clone(), s.clone()).is_ok());
        assert!(TraceWishartParams::new(3.2, part.clone(), s.clone()).is_ok());
        assert!(matches!(TraceWishartParams::new(2.5, part.clone(), s.clone()), Err(Error::InvalidParams(_))));
        assert!(TraceWishartParams::new(0.0, part.clone(), s.clone()).is_err());
        assert!(TraceWishartParams::new(1.0, part.clone(), SymMatrix::identity(3)).is_err());
        let bad = m(&[&[1.0, 2.0, 0.0, 0.0], &[2.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]);
        assert!(matches!(TraceWishartParams::new(5.0, part, bad), Err(Error::NotPositiveSemidefinite(_))));
    }

    #[test]
    fn singular_sigma_accepted() {
        let p = TraceWishartParams::new(1.0, BlockPartition::singletons(2).unwrap(), m(&[&[1.0, 1.0], &[1.0, 1.0]]))
            .unwrap();
        assert!(p.is_singular());
        assert!(p.laplace(&[1.0, 2.0]).unwrap() > 0.0);
        let s = p.sample(1000, 3).unwrap();
        assert!(s.rows().all(|r| (r[0] - r[1]).abs() < 1e-12 * (1.0 + r[0])));
    }

    #[test]
    fn laplace_examples() {
        let p = pair(1.0, 0.5);
        assert_eq!(p.laplace(&[0.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(p.laplace(&[1.0, 1.0]).unwrap(), 3.75f64.powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(p.laplace(&[1.0, 1.0]).unwrap(), 0.516398, epsilon = 1e-6);

        let uni = TraceWishartParams::new(2.0, BlockPartition::singletons(1).unwrap(), SymMatrix::identity(1)).unwrap();
        assert_abs_diff_eq!(uni.laplace(&[1.0]).unwrap(), 0.5, epsilon = 1e-15);

        assert!(p.laplace(&[-0.1, 1.0]).is_err());
        assert!(p.laplace(&[1.0]).is_err());
    }

    #[test]
    fn laplace_monotone_and_bounded() {
        let p = three_block();
        let grid = [0.0, 0.1, 0.5, 1.0, 3.0, 9.0];
        for &a in &grid {
            for &b in &grid {
                let mut prev = f64::INFINITY;
                for &c in &grid {
                    let v = p.laplace(&[a, b, c]).unwrap();
                    assert!(v > 0.0 && v <= 1.0);
                    assert!(v <= prev);
                    if a + b + c > 0.0 {
                        assert!(v < 1.0);
                    }
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn marginal_examples() {
        let p = pair(1.0, 0.5);
        let full = p.marginal(&[0, 1]).unwrap();
        assert_eq!(full.sigma(), p.sigma());
        assert_eq!(full.two_alpha(), p.two_alpha());
        let one = p.marginal(&[0]).unwrap();
        assert_abs_diff_eq!(one.laplace(&[1.0]).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(p.marginal(&[]).is_err());
    }

    #[test]
    fn marginal_consistency() {
        let p = three_block();
        let t = [0.7, 1.3, 2.1];
        for keep in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]] {
            let mut padded = [0.0; 3];
            let sub: Vec<f64> = keep.iter().map(|&j| t[j]).collect();
            for &j in &keep {
                padded[j] = t[j];
            }
            let a = p.marginal(&keep).unwrap().laplace(&sub).unwrap();
            let b = p.laplace(&padded).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn block_diagonalize_examples() {
        let p = pair(1.0, 0.5);
        let star = p.block_diagonalize(1).unwrap();
        assert_eq!(star.sigma(), &SymMatrix::identity(2));
        assert_eq!(star.block_diagonalize(1).unwrap().sigma(), star.sigma());

        let p = three_block();
        let star = p.block_diagonalize(2).unwrap();
        // Blocks {0,1} cover coordinates 0..3, block 2 covers coordinate 3.
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i < 3) == (j < 3) { p.sigma().get(i, j) } else { 0.0 };
                assert_eq!(star.sigma().get(i, j), expected);
            }
        }
        assert!(p.block_diagonalize(0).is_err());
        assert!(p.block_diagonalize(3).is_err());
    }

    #[test]
    fn independent_split_factorizes() {
        let star = three_block().block_diagonalize(1).unwrap();
        let (l, r) = star.split(1).unwrap();
        for t in [[0.2, 0.4, 0.9], [1.0, 3.0, 0.1], [5.0, 0.5, 2.0]] {
            let joint = star.laplace(&t).unwrap();
            let prod = l.laplace(&t[..1]).unwrap() * r.laplace(&t[1..]).unwrap();
            assert_abs_diff_eq!(joint, prod, epsilon = 1e-13);
        }
    }

    #[test]
    fn lt_order_against_star() {
        let p = three_block();
        for d1 in 1..3 {
            let star = p.block_diagonalize(d1).unwrap();
            for &a in &[0.1, 1.0, 4.0] {
                for &b in &[0.3, 2.0] {
                    let t = [a, b, 1.5];
                    assert!(p.laplace(&t).unwrap() >= star.laplace(&t).unwrap() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = three_block();
        let a = p.sample(500, 9).unwrap();
        let b = p.sample(500, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), p.sample(500, 10).unwrap().values());
        assert!(a.values().iter().all(|&x| x >= 0.0));
        assert!(p.sample(0, 1).is_err());
    }

    #[test]
    fn sampler_selection() {
        assert_eq!(pair(1.0, 0.3).default_sampler(), SamplerKind::GaussianSum);
        assert_eq!(pair(2.0, 0.3).default_sampler(), SamplerKind::Bartlett);
        let p = three_block();
        assert_eq!(p.default_sampler(), SamplerKind::Bartlett);
        let wide = TraceWishartParams::new(2.0, BlockPartition::new(vec![2, 2]).unwrap(), SymMatrix::identity(4))
            .unwrap();
        assert_eq!(wide.default_sampler(), SamplerKind::GaussianSum);
        assert!(wide.sample_with(10, 1, SamplerKind::Bartlett).is_err());
        let frac = TraceWishartParams::new(4.5, BlockPartition::new(vec![2, 2]).unwrap(), SymMatrix::identity(4))
            .unwrap();
        assert!(frac.sample_with(10, 1, SamplerKind::GaussianSum).is_err());
    }

    #[test]
    fn univariate_mean() {
        // Laplace (1 + t)^{-1}: derivative at zero gives mean 1.
        let uni = TraceWishartParams::new(2.0, BlockPartition::singletons(1).unwrap(), SymMatrix::identity(1)).unwrap();
        let h = 1e-6;
        let fd_mean = (uni.laplace(&[0.0]).unwrap() - uni.laplace(&[h]).unwrap()) / h;
        assert_abs_diff_eq!(fd_mean, 1.0, epsilon = 1e-5);
        let s = uni.sample(1_000_000, 2024).unwrap();
        assert!((s.column_means()[0] - 1.0).abs() < 4e-3);
    }

    #[test]
    fn block_means_match_laplace_slope() {
        let p = three_block();
        for kind in [SamplerKind::Bartlett, SamplerKind::GaussianSum] {
            let s = p.sample_with(200_000, 77, kind).unwrap();
            let means = s.column_means();
            for i in 0..3 {
                let mut e = [0.0; 3];
                let h = 1e-6;
                e[i] = h;
                let fd = (1.0 - p.laplace(&e).unwrap()) / h;
                let exact: f64 = p.partition().range(i).map(|k| p.sigma().get(k, k)).sum::<f64>() * p.alpha();
                assert!((fd - exact).abs() < 1e-4 * exact);
                let var: f64 = s.rows().map(|r| (r[i] - means[i]).powi(2)).sum::<f64>() / (s.n() - 1) as f64;
                let se = (var / s.n() as f64).sqrt();
                assert!((means[i] - exact).abs() < 5.0 * se, "{kind:?} block {i}: {} vs {exact}", means[i]);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let p = pair(1.0, 0.2);
        let s = p.sample(3, 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2");
        assert_eq!(lines.len(), 4);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, s.row(0));
    }

    #[test]
    fn serde_round_trip_validates() {
        let p = three_block();
        let json = serde_json::to_string(&p).unwrap();
        let back: TraceWishartParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back.sigma(), p.sigma());
        assert_eq!(back.fingerprint(), p.fingerprint());
        let bad = r#"{"two_alpha":2.5,"blocks":[2,2],"sigma":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;
        assert!(serde_json::from_str::<TraceWishartParams>(bad).is_err());
    }

    #[test]
    fn squared_gaussian_scaling() {
        let cov = m(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let p = TraceWishartParams::squared_gaussian(&cov).unwrap();
        // E exp(−t Z²) = (1 + 2t)^{-1/2} for a standard normal Z.
        assert_abs_diff_eq!(p.marginal(&[0]).unwrap().laplace(&[1.5]).unwrap(), 4f64.powf(-0.5), epsilon = 1e-15);
    }
}

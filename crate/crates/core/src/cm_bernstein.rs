//! Completely monotone and Bernstein function catalogs, with divided-difference
//! screens for the sign patterns that define both classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix, PSD_TOL};

/// Highest derivative order the divided-difference screens accept.
pub const MAX_SCREEN_ORDER: usize = 8;

/// Relative tolerance of the screens.
pub const SCREEN_TOL: f64 = 1e-7;

/// 64 geometrically spaced points on `[1e-2, 1e2]`.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(1e-2, 1e2, 64)
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo * (r * k as f64).exp() }).collect()
}

/// `t ↦ tr exp(−tA)` for SPSD `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceExp {
    a: SymMatrix,
    spectrum: Vec<f64>,
}

impl TraceExp {
    pub fn new(a: SymMatrix) -> Result<Self> {
        linalg::factor_spsd(&a, PSD_TOL)?;
        // Eigenvalues within the clamping tolerance of zero are zero.
        let spectrum = a.eigenvalues().into_iter().map(|l| l.max(0.0)).collect();
        Ok(TraceExp { a, spectrum })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.a
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `tr exp(−tA) = Σ_k e^{−t λ_k}`, the trace of `matexp_sym(−tA)`.
    fn value(&self, t: f64) -> f64 {
        self.spectrum.iter().map(|l| (-t * l).exp()).sum()
    }
}

/// Catalog of completely monotone functions on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CmSpec", into = "CmSpec")]
pub enum CmFunction {
    /// `t ↦ t^q`, `q <= 0`.
    NegPower(f64),
    /// `t ↦ exp(−t^r)`, `r ∈ [0, 1]`.
    StretchedExp(f64),
    /// `t ↦ tr exp(−tA)`, `A` SPSD.
    TraceExp(TraceExp),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum CmSpec {
    NegPower { q: f64 },
    StretchedExp { r: f64 },
    TraceExp { a: SymMatrix },
}

impl TryFrom<CmSpec> for CmFunction {
    type Error = Error;

    fn try_from(spec: CmSpec) -> Result<Self> {
        match spec {
            CmSpec::NegPower { q } => CmFunction::neg_power(q),
            CmSpec::StretchedExp { r } => CmFunction::stretched_exp(r),
            CmSpec::TraceExp { a } => CmFunction::trace_exp(a),
        }
    }
}

impl From<CmFunction> for CmSpec {
    fn from(f: CmFunction) -> Self {
        match f {
            CmFunction::NegPower(q) => CmSpec::NegPower { q },
            CmFunction::StretchedExp(r) => CmSpec::StretchedExp { r },
            CmFunction::TraceExp(te) => CmSpec::TraceExp { a: te.a },
        }
    }
}

impl CmFunction {
    pub fn neg_power(q: f64) -> Result<Self> {
        if !(q <= 0.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!("power exponent must be finite and <= 0, got {q}")));
        }
        Ok(CmFunction::NegPower(q))
    }

    pub fn stretched_exp(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("stretched-exponential index must lie in [0, 1], got {r}")));
        }
        Ok(CmFunction::StretchedExp(r))
    }

    pub fn trace_exp(a: SymMatrix) -> Result<Self> {
        Ok(CmFunction::TraceExp(TraceExp::new(a)?))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("completely monotone functions live on (0, ∞), got {t}")));
        }
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        match self {
            CmFunction::NegPower(q) => t.powf(*q),
            CmFunction::StretchedExp(r) => (-t.powf(*r)).exp(),
            CmFunction::TraceExp(te) => te.value(t),
        }
    }

    /// Finite limit at `0+`, if any.
    pub fn limit_at_zero(&self) -> Option<f64> {
        match self {
            CmFunction::NegPower(q) if *q == 0.0 => Some(1.0),
            CmFunction::NegPower(_) => None,
            CmFunction::StretchedExp(r) if *r == 0.0 => Some((-1.0f64).exp()),
            CmFunction::StretchedExp(_) => Some(1.0),
            CmFunction::TraceExp(te) => Some(te.spectrum.len() as f64),
        }
    }

    /// Finite representation `Σ_k w_k e^{−λ_k t}` when one exists.
    pub fn exp_mixture(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            CmFunction::NegPower(q) if *q == 0.0 => Some(vec![(1.0, 0.0)]),
            CmFunction::StretchedExp(r) if *r == 1.0 => Some(vec![(1.0, 1.0)]),
            CmFunction::StretchedExp(r) if *r == 0.0 => Some(vec![((-1.0f64).exp(), 0.0)]),
            CmFunction::TraceExp(te) => Some(te.spectrum.iter().map(|&l| (1.0, l)).collect()),
            _ => None,
        }
    }
}

/// First failing `(order, grid start)` of a screen.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreenViolation {
    pub order: usize,
    pub start: usize,
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreenReport {
    pub pass: bool,
    pub first_violation: Option<ScreenViolation>,
}

fn validate_grid(grid: &[f64], needed: usize, max_order: usize) -> Result<()> {
    if max_order > MAX_SCREEN_ORDER {
        return Err(Error::InvalidArgument(format!("screen order {max_order} exceeds {MAX_SCREEN_ORDER}")));
    }
    if grid.len() < needed {
        return Err(Error::InvalidArgument(format!("grid has {} points, need at least {needed}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Walks the divided-difference table of `f` on `grid`. For each order `n` in
/// `orders`, requires `sign(n) · f[x_s, ..., x_{s+n}] >= −tol` at every start,
/// with `tol = SCREEN_TOL · (1 + |f|[x_s, ..., x_{s+n}])` where `|f|[...]`
/// sums the absolute weighted terms of the difference (its rounding scale).
fn divided_difference_screen(
    values: &[f64],
    grid: &[f64],
    orders: std::ops::RangeInclusive<usize>,
    sign: impl Fn(usize) -> f64,
) -> ScreenReport {
    let mut dd = values.to_vec();
    let mut mag: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let top = *orders.end();
    for n in 0..=top {
        if n > 0 {
            for s in 0..grid.len() - n {
                let h = grid[s + n] - grid[s];
                dd[s] = (dd[s + 1] - dd[s]) / h;
                mag[s] = (mag[s + 1] + mag[s]) / h;
            }
        }
        if !orders.contains(&n) {
            continue;
        }
        for s in 0..grid.len() - n {
            let v = sign(n) * dd[s];
            let tol = SCREEN_TOL * (1.0 + mag[s]);
            if !v.is_finite() || v < -tol {
                return ScreenReport {
                    pass: false,
                    first_violation: Some(ScreenViolation { order: n, start: s, value: v, tol }),
                };
            }
        }
    }
    ScreenReport { pass: true, first_violation: None }
}

/// Necessary-condition screen `(−1)^n f^{(n)} >= 0`, `n = 0..=max_order`, for
/// an arbitrary function.
pub fn screen_complete_monotone(f: impl Fn(f64) -> f64, grid: &[f64], max_order: usize) -> Result<ScreenReport> {
    validate_grid(grid, max_order + 1, max_order)?;
    if grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("grid must lie in (0, ∞)".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    Ok(divided_difference_screen(&values, grid, 0..=max_order, |n| if n % 2 == 0 { 1.0 } else { -1.0 }))
}

pub fn check_complete_monotone(f: &CmFunction, grid: &[f64], max_order: usize) -> Result<ScreenReport> {
    screen_complete_monotone(|t| f.value(t), grid, max_order)
}

/// Atom `w · δ_t` of a Lévy measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub w: f64,
}

/// Bernstein function `λ ↦ a + bλ + Σ_j w_j (1 − e^{−λ t_j})`, or the closed
/// form `λ ↦ λ^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BernsteinSpec", into = "BernsteinSpec")]
pub enum BernsteinFn {
    Triplet { a: f64, b: f64, atoms: Vec<Atom> },
    ClosedPower(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum BernsteinSpec {
    Triplet {
        a: f64,
        b: f64,
        #[serde(default)]
        atoms: Vec<Atom>,
    },
    ClosedPower {
        q: f64,
    },
}

impl TryFrom<BernsteinSpec> for BernsteinFn {
    type Error = Error;

    fn try_from(spec: BernsteinSpec) -> Result<Self> {
        match spec {
            BernsteinSpec::Triplet { a, b, atoms } => BernsteinFn::triplet(a, b, atoms),
            BernsteinSpec::ClosedPower { q } => BernsteinFn::closed_power(q),
        }
    }
}

impl From<BernsteinFn> for BernsteinSpec {
    fn from(f: BernsteinFn) -> Self {
        match f {
            BernsteinFn::Triplet { a, b, atoms } => BernsteinSpec::Triplet { a, b, atoms },
            BernsteinFn::ClosedPower(q) => BernsteinSpec::ClosedPower { q },
        }
    }
}

impl BernsteinFn {
    pub fn triplet(a: f64, b: f64, atoms: Vec<Atom>) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("triplet needs finite a, b >= 0, got a = {a}, b = {b}")));
        }
        if let Some(bad) = atoms.iter().find(|at| !(at.t > 0.0 && at.t.is_finite() && at.w > 0.0 && at.w.is_finite())) {
            return Err(Error::InvalidArgument(format!("measure atoms need t > 0 and w > 0, got {bad:?}")));
        }
        Ok(BernsteinFn::Triplet { a, b, atoms })
    }

    pub fn closed_power(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("Bernstein power must lie in [0, 1], got {q}")));
        }
        Ok(BernsteinFn::ClosedPower(q))
    }

    /// Linear coefficient `b` of the triplet (`λ^1` has `b = 1`).
    pub fn drift(&self) -> f64 {
        match self {
            BernsteinFn::Triplet { b, .. } => *b,
            BernsteinFn::ClosedPower(q) if *q == 1.0 => 1.0,
            BernsteinFn::ClosedPower(_) => 0.0,
        }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("Bernstein functions live on [0, ∞), got {lambda}")));
        }
        Ok(self.value(lambda))
    }

    pub(crate) fn value(&self, lambda: f64) -> f64 {
        match self {
            BernsteinFn::Triplet { a, b, atoms } => {
                a + b * lambda + atoms.iter().map(|at| at.w * -(-lambda * at.t).exp_m1()).sum::<f64>()
            }
            // 0^0 = 1 keeps q = 0 the constant function.
            BernsteinFn::ClosedPower(q) => lambda.powf(*q),
        }
    }
}

/// Nonnegativity of `f` plus the alternating screen applied to `f'`:
/// `(−1)^{n−1} f^{(n)} >= 0` for `n = 1..=max_order + 1`.
pub fn check_bernstein(f: &BernsteinFn, grid: &[f64], max_order: usize) -> Result<ScreenReport> {
    screen_bernstein(|l| f.value(l), grid, max_order)
}

pub fn screen_bernstein(f: impl Fn(f64) -> f64, grid: &[f64], max_order: usize) -> Result<ScreenReport> {
    validate_grid(grid, max_order + 2, max_order)?;
    if grid[0] < 0.0 {
        return Err(Error::InvalidArgument("grid must lie in [0, ∞)".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    Ok(divided_difference_screen(&values, grid, 0..=max_order + 1, |n| {
        if n == 0 || n % 2 == 1 {
            1.0
        } else {
            -1.0
        }
    }))
}

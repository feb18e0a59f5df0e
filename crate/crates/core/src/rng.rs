//! Reproducible random streams and the pinned variate generators.
//!
//! Draw `i` of a batch with seed `s` always consumes the ChaCha8 stream
//! `(s, i)`, so sample values do not depend on how draws are scheduled across
//! worker threads. Within a draw, coordinates are consumed in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator for draw `draw` of the batch keyed by `seed`.
pub fn draw_rng(seed: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on `(0, 1]`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Gamma(shape, 1) by Marsaglia–Tsang squeeze/rejection. Shapes below one use
/// the boost `G(a) = G(a + 1) · U^{1/a}`.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let g = gamma(rng, shape + 1.0);
        let u = open_uniform(rng);
        return g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Chi-square with `df` degrees of freedom as Gamma(df/2, scale 2).
pub fn chi_square<R: Rng + ?Sized>(rng: &mut R, df: f64) -> f64 {
    2.0 * gamma(rng, 0.5 * df)
}

//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p gpi-lab --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Result};
use gpi_core::cm_bernstein::{check_complete_monotone, default_grid, CmFunction};
use gpi_core::estimators::{expectation_product_mc, moment_wick, PointFn, Power};
use gpi_core::harness::{
    check_conjecture1, check_cor1c, check_cor2, check_split_lt_order, check_thm1, check_weak_gpi,
    hunt_counterexample, CheckMethod, HuntSpace, HuntTarget, Verdict, WeakGpiVariant,
};
use gpi_core::linalg::{fischer_gap, kron, kron_sum, matexp_sym};
use gpi_core::sigma_gen::{equicorrelated, generate_sigma, to_correlation, SigmaKind};
use gpi_core::{BlockPartition, SymMatrix, TraceWishartParams};

/// Block sizes for `d` blocks summing to `p`, varied by `k`.
fn blocks(d: usize, p: usize, k: usize) -> Vec<usize> {
    let mut sizes = vec![1; d];
    for extra in 0..p - d {
        sizes[(k + extra) % d] += 1;
    }
    sizes
}

/// The 500 random instances shared by the first two criteria.
fn random_instances() -> Result<Vec<TraceWishartParams>> {
    (0..500usize)
        .map(|k| {
            let d = 2 + k % 3;
            let p = d + (k / 3) % (9 - d);
            let kind = SigmaKind::ALL[(k / 7) % 4];
            let sigma = generate_sigma(kind, p, 1000 + k as u64)?;
            let two_alpha = (1 + k % 5 % 3) as f64;
            Ok(TraceWishartParams::new(two_alpha, BlockPartition::new(blocks(d, p, k))?, sigma)?)
        })
        .collect()
}

fn lt_order_random() -> Result<String> {
    let start = Instant::now();
    let mut checks = 0;
    for (k, params) in random_instances()?.iter().enumerate() {
        for d1 in 1..params.d() {
            let r = check_split_lt_order(params, d1)?;
            ensure!(r.verdict == Verdict::Holds, "instance {k} split {d1}: {r:?}");
            checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{checks} splits hold"))
}

fn fischer_random() -> Result<String> {
    let mut worst = f64::INFINITY;
    for (k, params) in random_instances()?.iter().enumerate() {
        for d1 in 1..params.d() {
            let g = fischer_gap(params.sigma(), params.partition(), d1)?.value();
            ensure!(g >= -1e-10, "instance {k} split {d1}: gap {g}");
            worst = worst.min(g);
        }
    }
    Ok(format!("min gap {worst:.3e}"))
}

fn squared_gaussian_pair(rho: f64) -> Result<TraceWishartParams> {
    Ok(TraceWishartParams::squared_gaussian(&equicorrelated(2, rho)?)?)
}

fn cor2_closed_form() -> Result<String> {
    for i in -9..=9 {
        let rho = i as f64 / 10.0;
        let r = check_cor2(&squared_gaussian_pair(rho)?, 1.0, 1.0, CheckMethod::Wick, 0, 0)?;
        ensure!((r.gap - 2.0 * rho * rho).abs() <= 1e-10, "rho {rho}: gap {}", r.gap);
    }
    let mut worst: f64 = 0.0;
    for (k, rho) in [-0.6, 0.3, 0.8].into_iter().enumerate() {
        let r = check_cor2(&squared_gaussian_pair(rho)?, 1.0, 1.0, CheckMethod::Mc, 1_000_000, 30 + k as u64)?;
        let z = (r.gap - 2.0 * rho * rho).abs() / r.gap_stderr;
        ensure!(z <= 5.0, "rho {rho}: Monte Carlo gap {} ± {}", r.gap, r.gap_stderr);
        worst = worst.max(z);
    }
    Ok(format!("19 exact values, Monte Carlo max |z| {worst:.2}"))
}

fn quadrature_negative_powers() -> Result<String> {
    let mut worst_rel: f64 = 0.0;
    let mut cases = 0;
    for two_alpha in [2.0, 3.0] {
        let alpha = two_alpha / 2.0;
        for seed in 0..20u64 {
            let p = 2 + seed as usize % 2;
            let sigma = generate_sigma(SigmaKind::Spd, p, 200 + seed)?;
            let params = TraceWishartParams::new(two_alpha, BlockPartition::new(blocks(2, p, seed as usize))?, sigma)?;
            let control = params.block_diagonalize(1)?;
            for q in [[0.25, 0.5], [0.9 * alpha, 0.9 * alpha]] {
                let phis = [CmFunction::neg_power(-q[0])?, CmFunction::neg_power(-q[1])?];
                let r = check_thm1(&params, &phis, 1, CheckMethod::Quadrature, 0, 0)?;
                ensure!(r.gap >= -1e-9, "2α {two_alpha} seed {seed} q {q:?}: gap {}", r.gap);
                for est in [&r.lhs, &r.rhs] {
                    let rel = est.error_bound.unwrap_or(f64::INFINITY) / est.value;
                    ensure!(rel < 1e-6, "2α {two_alpha} seed {seed} q {q:?}: relative error bound {rel}");
                    worst_rel = worst_rel.max(rel);
                }
                let c = check_thm1(&control, &phis, 1, CheckMethod::Quadrature, 0, 0)?;
                ensure!(c.gap.abs() <= 1e-8, "control 2α {two_alpha} seed {seed} q {q:?}: gap {}", c.gap);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, max relative error bound {worst_rel:.1e}"))
}

fn stretched_exponential_mc() -> Result<String> {
    let phis = vec![CmFunction::stretched_exp(0.75)?; 3];
    let mut min_z = f64::INFINITY;
    for (k, rho) in [0.3, 0.6, 0.9].into_iter().enumerate() {
        let params = TraceWishartParams::new(1.0, BlockPartition::singletons(3)?, equicorrelated(3, rho)?)?;
        for d1 in 1..=2 {
            let seed = 50 + 2 * k as u64 + d1 as u64;
            let r = check_thm1(&params, &phis, d1, CheckMethod::Mc, 1_000_000, seed)?;
            ensure!(r.verdict == Verdict::Holds, "rho {rho} d1 {d1}: {r:?}");
            min_z = min_z.min(r.gap / r.gap_stderr);
        }
    }
    Ok(format!("6 checks hold, min gap/stderr {min_z:.1}"))
}

fn matrix_exponential_checks() -> Result<String> {
    for k in 0..20u64 {
        let p = 2 + k as usize % 4;
        let sigma = generate_sigma(SigmaKind::ALL[k as usize % 3], p, 300 + k)?;
        let params = TraceWishartParams::new((1 + k % 3) as f64, BlockPartition::new(blocks(2, p, k as usize))?, sigma)?;
        let n = 1 + k as usize % 2;
        let mats = [
            generate_sigma(SigmaKind::Spd, n, 400 + k)?.scaled(0.5),
            generate_sigma(SigmaKind::Spd, n, 500 + k)?.scaled(0.5),
        ];
        let r = check_cor1c(&params, &mats, 1, CheckMethod::Auto, 0, 0)?;
        ensure!(r.verdict == Verdict::Holds, "pair {k}: {r:?}");
        ensure!(r.aux_pass(), "pair {k}: {:?}", r.aux);
        if n == 1 {
            let t = [mats[0].get(0, 0), mats[1].get(0, 0)];
            let lhs = params.laplace(&t)?;
            let rhs = params.block_diagonalize(1)?.laplace(&t)?;
            ensure!((r.lhs.value - lhs).abs() <= 1e-12, "pair {k}: {} vs Laplace {lhs}", r.lhs.value);
            ensure!((r.rhs.value - rhs).abs() <= 1e-12, "pair {k}: {} vs Laplace {rhs}", r.rhs.value);
        }
    }
    Ok("20 pairs hold with identities".into())
}

fn kronecker_identities() -> Result<String> {
    let mut worst: f64 = 0.0;
    for k in 0..100u64 {
        let (n, m) = (1 + k as usize % 4, 1 + (k as usize / 4) % 4);
        let a = generate_sigma(SigmaKind::Spd, n, 600 + k)?.scaled(0.3);
        let b = generate_sigma(SigmaKind::Spd, m, 700 + k)?.scaled(0.3);
        let (am, bm) = (a.as_matrix(), b.as_matrix());
        let tr_err = (kron(am, bm).trace() - a.trace() * b.trace()).abs() / (1.0 + (a.trace() * b.trace()).abs());
        let lhs = matexp_sym(&SymMatrix::new(kron_sum(am, bm)?)?);
        let rhs = kron(matexp_sym(&a).as_matrix(), matexp_sym(&b).as_matrix());
        let exp_err = (lhs.as_matrix() - &rhs).abs().max() / (1.0 + rhs.abs().max());
        ensure!(tr_err <= 1e-12 && exp_err <= 1e-12, "pair {k}: trace {tr_err:e}, exponential {exp_err:e}");
        worst = worst.max(tr_err).max(exp_err);
    }
    Ok(format!("100 pairs, max relative error {worst:.1e}"))
}

fn wick_against_closed_forms() -> Result<String> {
    // A block of size k with Σ = s·I has trace law Gamma(kα, scale s).
    for two_alpha in 1..=6 {
        let alpha = two_alpha as f64 / 2.0;
        for k in 1..=2usize {
            let s = 0.7;
            let params = TraceWishartParams::new(two_alpha as f64, BlockPartition::new(vec![k])?, SymMatrix::identity(k).scaled(s))?;
            for n in 0..=5u32 {
                let shape = k as f64 * alpha;
                let exact: f64 = (0..n).map(|j| s * (shape + j as f64)).product();
                let w = moment_wick(&params, &[n])?.value;
                ensure!((w - exact).abs() <= 1e-12 * exact.max(1.0), "2α {two_alpha} k {k} n {n}: {w} vs {exact}");
            }
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let d = 2 + k as usize % 2;
        let p = d + k as usize % 2;
        let sigma = generate_sigma(SigmaKind::ALL[k as usize % 4], p, 800 + k)?.scaled(1.0 / p as f64);
        let params = TraceWishartParams::new((1 + k % 3) as f64, BlockPartition::new(blocks(d, p, k as usize))?, sigma)?;
        let exps: Vec<u32> = (0..d).map(|i| 1 + ((k as usize + i) % 2) as u32).collect();
        let exact = moment_wick(&params, &exps)?.value;
        let powers: Vec<Power> = exps.iter().map(|&e| Power(e as f64)).collect();
        let fs: Vec<&dyn PointFn> = powers.iter().map(|p| p as &dyn PointFn).collect();
        let mc = expectation_product_mc(&params, &fs, 200_000, 900 + k)?;
        let z = (mc.value - exact).abs() / mc.stderr;
        ensure!(z <= 5.0, "instance {k} exps {exps:?}: Monte Carlo {} ± {} vs {exact}", mc.value, mc.stderr);
        worst = worst.max(z);
    }
    Ok(format!("72 closed forms exact, 20 Monte Carlo max |z| {worst:.2}"))
}

fn trace_exp_screen() -> Result<String> {
    let grid = default_grid();
    for k in 0..50u64 {
        let n = 1 + k as usize % 4;
        let a = generate_sigma(SigmaKind::ALL[k as usize % 4], n, 1100 + k)?;
        let report = check_complete_monotone(&CmFunction::trace_exp(a)?, &grid, 6)?;
        ensure!(report.pass, "matrix {k}: {:?}", report.first_violation);
    }
    Ok("50 matrices pass to order 6".into())
}

fn split_moments_nonnegative() -> Result<String> {
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for two_alpha in [1.0, 2.0] {
        for seed in 0..20u64 {
            let d = 2 + seed as usize % 3;
            let p = d + seed as usize % 2;
            let sigma = generate_sigma(SigmaKind::SpdNonneg, p, 1200 + seed)?;
            let params = TraceWishartParams::new(two_alpha, BlockPartition::new(blocks(d, p, seed as usize))?, sigma)?;
            let exps: Vec<f64> = (0..d).map(|i| (1 + (seed as usize + i) % 2) as f64).collect();
            for d1 in 1..d {
                let r = check_conjecture1(&params, &exps, d1, CheckMethod::Wick, 0, 0)?;
                ensure!(r.verdict == Verdict::Holds, "2α {two_alpha} seed {seed} d1 {d1}: {r:?}");
                worst = worst.min(r.gap);
                checks += 1;
            }
        }
    }
    let mut exponent_set = Vec::new();
    for n1 in 1..=4u32 {
        for n2 in 0..=4 {
            for n3 in 1..=4 {
                if n1 + n2 + n3 <= 6 {
                    exponent_set.push(vec![n1, n2, n3]);
                }
            }
        }
    }
    let space = HuntSpace {
        blocks: vec![1, 1, 1],
        two_alpha: 1.0,
        family: SigmaKind::SpdNonneg,
        target: HuntTarget::Conjecture1,
        exponent_set,
        splits: None,
    };
    let hunt = hunt_counterexample(&space, 10_000, 17)?;
    ensure!(hunt.best.gap >= 0.0, "hunter found gap {} at {:?}", hunt.best.gap, hunt.exponents);
    Ok(format!("{checks} splits hold (min gap {worst:.3e}), hunter best gap {:.3e} over {} evaluations", hunt.best.gap, hunt.evaluations))
}

fn weak_form_first_moments() -> Result<String> {
    let mut worst = f64::INFINITY;
    for k in 0..50u64 {
        let d = 3 + k as usize % 3;
        let cov = to_correlation(&generate_sigma(SigmaKind::Spd, d, 1300 + k)?)?;
        let params = TraceWishartParams::squared_gaussian(&cov)?;
        let r = check_weak_gpi(&params, &vec![1.0; d], WeakGpiVariant::Eq14, CheckMethod::Wick, 0, 0)?;
        ensure!(r.verdict == Verdict::Holds, "matrix {k}: {r:?}");
        worst = worst.min(r.gap);
    }
    let params = TraceWishartParams::squared_gaussian(&equicorrelated(3, 0.5)?)?;
    let r = check_weak_gpi(&params, &[1.0; 3], WeakGpiVariant::Eq14, CheckMethod::Wick, 0, 0)?;
    ensure!((r.lhs.value - 3.5).abs() <= 1e-12, "equicorrelated left side {}", r.lhs.value);
    Ok(format!("50 matrices hold (min gap {worst:.3e}), equicorrelated left side 3.5"))
}

fn reproducibility() -> Result<String> {
    let params = TraceWishartParams::new(2.0, BlockPartition::new(vec![2, 1])?, generate_sigma(SigmaKind::Spd, 3, 1400)?)?;
    let phis = [CmFunction::stretched_exp(0.5)?, CmFunction::neg_power(-0.3)?];
    let run = || check_thm1(&params, &phis, 1, CheckMethod::Mc, 100_000, 7);
    let (a, b) = (serde_json::to_string(&run()?)?, serde_json::to_string(&run()?)?);
    ensure!(a == b, "reports differ between runs");
    let threaded = |n: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
        Ok(serde_json::to_string(&pool.install(run)?)?)
    };
    ensure!(threaded(1)? == threaded(4)?, "reports differ between 1 and 4 threads");
    Ok("identical across reruns and thread counts".into())
}

type Criterion = (&'static str, fn() -> Result<String>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("laplace order under block diagonalization", lt_order_random),
        ("Fischer determinant gap", fischer_random),
        ("squared Gaussian pair closed form", cor2_closed_form),
        ("negative powers by quadrature", quadrature_negative_powers),
        ("stretched exponential by Monte Carlo", stretched_exponential_mc),
        ("matrix exponential traces", matrix_exponential_checks),
        ("Kronecker identities", kronecker_identities),
        ("moment engine against closed forms", wick_against_closed_forms),
        ("trace exponential complete monotonicity", trace_exp_screen),
        ("split moments for nonnegative covariance", split_moments_nonnegative),
        ("weak form with unit exponents", weak_form_first_moments),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(detail)) => Ok(detail),
            Ok(Err(e)) => Err(format!("{e:#}")),
            Err(_) => Err("panicked".to_string()),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1} s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1} s)", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use gpi_core::estimators::{
    expectation_product_mc, gap_mc, moment_neg_quadrature, moment_wick, neg_moment_with_nodes, PointFn, Power,
};
use gpi_core::sigma_gen::{generate_sigma, SigmaKind};
use gpi_core::{BlockPartition, SymMatrix, TraceWishartParams};

fn powers(exps: &[u32]) -> Vec<Power> {
    exps.iter().map(|&e| Power(e as f64)).collect()
}

#[test]
fn monte_carlo_matches_wick_moments() {
    let cases: [(f64, Vec<usize>, Vec<u32>); 5] = [
        (1.0, vec![1, 1], vec![1, 1]),
        (2.0, vec![1, 2], vec![2, 1]),
        (3.0, vec![2, 1, 1], vec![1, 1, 1]),
        (1.0, vec![1, 1, 1], vec![2, 1, 1]),
        (4.0, vec![2, 2], vec![1, 2]),
    ];
    for (k, (two_alpha, blocks, exps)) in cases.into_iter().enumerate() {
        let p: usize = blocks.iter().sum();
        let sigma = generate_sigma(SigmaKind::Spd, p, 100 + k as u64).unwrap().scaled(1.0 / p as f64);
        let params = TraceWishartParams::new(two_alpha, BlockPartition::new(blocks).unwrap(), sigma).unwrap();
        let exact = moment_wick(&params, &exps).unwrap().value;
        let pw = powers(&exps);
        let fs: Vec<&dyn PointFn> = pw.iter().map(|p| p as &dyn PointFn).collect();
        let mc = expectation_product_mc(&params, &fs, 200_000, k as u64).unwrap();
        assert!((mc.value - exact).abs() <= 5.0 * mc.stderr, "case {k}: mc {mc:?} vs exact {exact}");
    }
}

#[test]
fn quadrature_refinement_is_stable() {
    for seed in 0..8 {
        let sigma = generate_sigma(SigmaKind::Spd, 3, seed).unwrap();
        let params = TraceWishartParams::new(3.0, BlockPartition::new(vec![2, 1]).unwrap(), sigma).unwrap();
        for q in [[0.25, 0.5], [1.35, 1.35], [0.1, 1.0]] {
            let coarse = neg_moment_with_nodes(&params, &q, 64).unwrap();
            let fine = moment_neg_quadrature(&params, &q).unwrap();
            assert!((fine.value - coarse).abs() < 1e-6 * fine.value, "seed {seed} q {q:?}");
            assert_eq!(fine.error_bound, Some((fine.value - coarse).abs()));
        }
    }
}

#[test]
fn block_diagonal_gap_within_five_sigma() {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.4, 0.0], vec![0.4, 1.0, 0.0], vec![0.0, 0.0, 0.7]]).unwrap();
    let params = TraceWishartParams::new(2.0, BlockPartition::new(vec![2, 1]).unwrap(), sigma).unwrap();
    let (a, b) = (Power(1.0), Power(0.5));
    let inside = (0..100u64)
        .filter(|&seed| {
            let g = gap_mc(&params, &[&a, &b], 1, 10_000, seed * 7).unwrap();
            g.gap.abs() <= 5.0 * g.gap_stderr
        })
        .count();
    assert!(inside >= 99, "{inside} of 100 within five standard errors");
}

#[test]
fn worker_count_does_not_change_estimates() {
    let sigma = generate_sigma(SigmaKind::Spd, 3, 5).unwrap();
    let params = TraceWishartParams::new(3.0, BlockPartition::singletons(3).unwrap(), sigma).unwrap();
    let (x, y, z) = (Power(0.5), Power(1.0), Power(0.25));
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| gap_mc(&params, &[&x, &y, &z], 2, 50_000, 11).unwrap())
    };
    assert_eq!(run(1), run(4));
}

mod common;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;

use tscale::dynamics::LinearSystem;
use tscale::linalg;
use tscale::ranktests::*;

fn system(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> LinearSystem {
    LinearSystem::time_invariant(a, b, c).unwrap()
}

#[test]
fn gramian_kalman_and_pbh_agree() {
    let t = ensembles::controllability_equivalence(31, 150).unwrap();
    println!("{t}");
    assert!(t.checked - t.positive >= 40, "too few uncontrollable pairs: {t}");
    assert!(t.skipped < 60, "{t}");
}

#[test]
fn decompositions_split_the_state_space() {
    let mut r = rng(32);
    let mut checked = 0;
    while checked < 100 {
        let n = r.random_range(2..=4);
        let (a, b, rank) = random_pair(&mut r, n, 1, 1.0);
        if rank == 0 || rank == n {
            continue;
        }
        let d = controllable_decomposition(&a, &b, None).unwrap();
        assert_eq!(d.dim, rank);
        let p = &d.transform;
        assert!(rel_err(&(p.transpose() * p), &DMatrix::identity(n, n)) < 1e-12);
        assert!(rel_err(&(p.transpose() * &a * p), &d.a_hat) < 1e-12);
        assert!(rel_err(&(p.transpose() * &b), &d.io_hat) < 1e-12);
        assert!(d.residual <= d.tolerance);
        assert!(kalman_controllability(&d.a11(), &d.io11(), None).unwrap().pass);
        // the spectrum splits between the two diagonal blocks
        let mut whole: Vec<f64> = linalg::eigenvalues(&a).unwrap().iter().map(|z| z.re + z.im.abs()).collect();
        let mut parts: Vec<f64> = linalg::eigenvalues(&d.a11())
            .unwrap()
            .into_iter()
            .chain(linalg::eigenvalues(&d.a22()).unwrap())
            .map(|z| z.re + z.im.abs())
            .collect();
        whole.sort_by(f64::total_cmp);
        parts.sort_by(f64::total_cmp);
        for (x, y) in whole.iter().zip(&parts) {
            assert!((x - y).abs() < 1e-6, "{whole:?} vs {parts:?}");
        }

        // observable form on the dual pair
        let o = observable_decomposition(&a.transpose(), &b.transpose(), None).unwrap();
        assert_eq!(o.dim, rank);
        assert!(o.residual <= o.tolerance);
        assert!(kalman_observability(&o.a11(), &o.io11(), None).unwrap().pass);
        checked += 1;
    }
}

#[test]
fn full_rank_decomposition_is_trivial_and_zero_rank_fails() {
    let d = controllable_decomposition(&demo_a(), &demo_b(), None).unwrap();
    assert!(d.trivial);
    assert_eq!(d.transform, DMatrix::identity(2, 2));
    assert!(controllable_decomposition(&demo_a(), &DMatrix::zeros(2, 1), None).is_err());
}

#[test]
fn continuous_sequences_reduce_to_classical_ones() {
    let (gap, source) = tv::continuous_gap(false);
    assert_eq!(source, DerivativeSource::FiniteDifference);
    assert!(gap <= 1e-6, "finite differences off by {gap}");
    let (gap, source) = tv::continuous_gap(true);
    assert_eq!(source, DerivativeSource::Analytic);
    assert!(gap <= 1e-12, "analytic hooks off by {gap}");
    let g = continuous(0.0, 1.0, 1e-3);
    assert!(k_sequence(&tv::varying_system(false), &g, 0.5, 1).unwrap().warning.is_some());
}

#[test]
fn integer_grid_sequences_match_differences_of_the_kernel() {
    let g = z(0, 12);
    for k in 0..7 {
        let gap = tv::scattered_gap(&g, k);
        assert!(gap <= 1e-5, "node {k}: {gap}");
    }
}

#[test]
fn uneven_discrete_grid_sequences_match_differences_of_the_kernel() {
    let g = grid("points 0 0.5 1.5 2 3.5 4 4.25 5 6.5 7 8");
    for k in 0..5 {
        let gap = tv::scattered_gap(&g, k);
        assert!(gap <= 1e-9, "node {k}: {gap}");
    }
}

#[test]
fn sequence_needs_room_before_the_end() {
    let g = z(0, 4);
    let sys = tv::varying_system(false);
    assert!(k_sequence(&sys, &g, 3.0, 2).is_err());
    assert!(k_sequence(&sys, &g, 1.0, 2).is_ok());
}

#[test]
fn time_invariant_sequences_are_kalman_blocks_on_z() {
    // with constant A and B on Z, K_j = (-(I+A)^-1 A)^j ... only the rank matters here
    let g = z(0, 10);
    let sys = system(demo_a(), demo_b(), demo_c());
    let v = tv_controllability_rank(&sys, &g, &[0.0], 1, None).unwrap();
    assert_eq!(v.verdict, TvVerdict::Pass);
    assert_eq!(v.witness, Some(0.0));
    let w = tv_observability_rank(&sys, &g, &[0.0], 1, None).unwrap();
    assert_eq!(w.verdict, TvVerdict::Pass);
    let flat = system(demo_a(), DMatrix::zeros(2, 1), demo_c());
    let v = tv_controllability_rank(&flat, &g, &[0.0, 3.0], 1, None).unwrap();
    assert_eq!(v.verdict, TvVerdict::Inconclusive);
    assert_eq!(v.best_rank, 0);
}

#[test]
fn exact_kalman_matches_the_demo_pair() {
    let v = kalman_controllability_exact(&demo_qa(), &demo_qb()).unwrap();
    assert_eq!(v.matrix.to_string_rows(), [["2", "-29/90"], ["1", "-13/90"]]);
    let o = kalman_observability_exact(&demo_qa(), &demo_qc()).unwrap();
    assert_eq!(o.matrix.to_string_rows(), [["3", "4"], ["-28/45", "-3/10"]]);
    assert!(v.pass && o.pass);
}

//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tscale::exact::QMatrix;
use tscale::timescale::{Segment, TimeScaleGrid, TimeScaleSpec};

pub mod ensembles;
pub mod tv;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn grid(spec: &str) -> TimeScaleGrid {
    TimeScaleGrid::build(spec.parse().unwrap()).unwrap()
}

pub fn z(a: i64, b: i64) -> TimeScaleGrid {
    TimeScaleGrid::build(TimeScaleSpec::integers(a, b)).unwrap()
}

pub fn continuous(a: f64, b: f64, h: f64) -> TimeScaleGrid {
    TimeScaleGrid::build(TimeScaleSpec::interval(a, b, h)).unwrap()
}

pub fn uniform(mu: f64, count: usize) -> TimeScaleGrid {
    TimeScaleGrid::build(TimeScaleSpec::uniform(0.0, mu, count)).unwrap()
}

/// Period-8 grid: a unit interval (h = 0.1) followed by gaps of 1, 2 and 4.
pub fn mixed(periods: usize) -> TimeScaleGrid {
    let mut spec = TimeScaleSpec::default();
    for k in 0..periods {
        let t = 8.0 * k as f64;
        spec = spec
            .push(Segment::Interval {
                start: t,
                end: t + 1.0,
                step: 0.1,
            })
            .push(Segment::Points(vec![t + 2.0, t + 4.0]));
    }
    spec = spec.push(Segment::Points(vec![8.0 * periods as f64]));
    TimeScaleGrid::build(spec).unwrap()
}

pub fn demo_a() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-8.0 / 45.0, 1.0 / 30.0, -1.0 / 45.0, -1.0 / 10.0])
}

pub fn demo_b() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 1, &[2.0, 1.0])
}

pub fn demo_c() -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 2, &[3.0, 4.0])
}

pub fn demo_qa() -> QMatrix {
    QMatrix::parse_rows(&[vec!["-8/45", "1/30"], vec!["-1/45", "-1/10"]]).unwrap()
}

pub fn demo_qb() -> QMatrix {
    QMatrix::from_i64(2, 1, &[2, 1]).unwrap()
}

pub fn demo_qc() -> QMatrix {
    QMatrix::from_i64(1, 2, &[3, 4]).unwrap()
}

/// Dyadic entry `k / 8` with `|k| <= 8 * scale`.
pub fn dyadic(rng: &mut StdRng, scale: f64) -> f64 {
    let k = (8.0 * scale) as i64;
    rng.random_range(-k..=k) as f64 / 8.0
}

pub fn random_matrix(rng: &mut StdRng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| dyadic(rng, scale))
}

/// Integer unimodular matrix `L U` (unit triangular factors), so its inverse is integral too.
pub fn unimodular(rng: &mut StdRng, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut u = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            l[(i, j)] = rng.random_range(-1..=1) as f64;
            u[(j, i)] = rng.random_range(-1..=1) as f64;
        }
    }
    let t = &l * &u;
    let inv = t.clone().try_inverse().unwrap().map(f64::round);
    assert_eq!(&t * &inv, DMatrix::identity(n, n));
    (t, inv)
}

/// A random pair `(A, B)` that is uncontrollable by construction with probability
/// about one half, together with the true controllable dimension.
pub fn random_pair(rng: &mut StdRng, n: usize, m: usize, scale: f64) -> (DMatrix<f64>, DMatrix<f64>, usize) {
    if n < 2 || rng.random_bool(0.5) {
        let a = random_matrix(rng, n, n, scale);
        let b = random_matrix(rng, n, m, 1.0);
        let r = exact_rank_ctrb(&a, &b);
        return (a, b, r);
    }
    let k = rng.random_range(1..n);
    let mut ah = random_matrix(rng, n, n, scale);
    for i in k..n {
        for j in 0..k {
            ah[(i, j)] = 0.0;
        }
    }
    let mut bh = random_matrix(rng, n, m, 1.0);
    for i in k..n {
        for j in 0..m {
            bh[(i, j)] = 0.0;
        }
    }
    let (t, ti) = unimodular(rng, n);
    let a = &t * ah * &ti;
    let b = &t * bh;
    let r = exact_rank_ctrb(&a, &b);
    (a, b, r)
}

/// Exact rank of `[B, AB, ..]` over the rationals.
pub fn exact_rank_ctrb(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let qa = QMatrix::from_f64(a).unwrap();
    let qb = QMatrix::from_f64(b).unwrap();
    let mut blocks = vec![qb.clone()];
    for k in 1..a.nrows() {
        let next = &qa * &blocks[k - 1];
        blocks.push(next);
    }
    QMatrix::hstack(&blocks).unwrap().rank()
}

/// Classical matrix exponential `e^(A t)`.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

/// `∫_0^T e^(-A s) B B^T e^(-A^T s) ds` by Van Loan's block exponential.
pub fn van_loan(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(&(b * b.transpose()));
    m.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let e = (m * t).exp();
    let f22 = e.view((n, n), (n, n)).into_owned();
    let g12 = e.view((0, n), (n, n)).into_owned();
    f22.transpose() * g12
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn rel_err(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

/// Grid of period `2π`: a dense half period (h = π/20) followed by gaps of π/8 < 1/2.
pub fn periodic_2pi(periods: usize) -> TimeScaleGrid {
    use std::f64::consts::PI;
    let mut spec = TimeScaleSpec::default();
    for k in 0..periods {
        let t = 2.0 * PI * k as f64;
        spec = spec
            .push(Segment::Interval {
                start: t,
                end: t + PI,
                step: PI / 20.0,
            })
            .push(Segment::Points((1..8).map(|j| t + PI + j as f64 * PI / 8.0).collect()));
    }
    spec = spec.push(Segment::Points(vec![2.0 * PI * periods as f64]));
    TimeScaleGrid::build(spec).unwrap()
}

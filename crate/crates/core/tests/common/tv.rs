//! A smooth time-varying system with closed-form derivatives.

use nalgebra::DMatrix;

use super::rel_err;
use tscale::dynamics::{transition_matrix, Coefficient, LinearSystem};
use tscale::ranktests::{k_sequence, l_sequence, DerivativeSource};
use tscale::timescale::TimeScaleGrid;

pub fn a_of(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-0.6 + 0.5 * t.sin(), 0.3, 0.2 * t, -0.5])
}

fn a_dot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.5 * t.cos(), 0.0, 0.2, 0.0])
}

fn a_ddot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-0.5 * t.sin(), 0.0, 0.0, 0.0])
}

pub fn b_of(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 1, &[t.cos(), 1.0 + 0.5 * t * t])
}

fn b_dot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 1, &[-t.sin(), t])
}

fn b_ddot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 1, &[-t.cos(), 1.0])
}

pub fn c_of(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 2, &[1.0 + 0.5 * t, t.sin()])
}

fn c_dot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 2, &[0.5, t.cos()])
}

fn c_ddot(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 2, &[0.0, -t.sin()])
}

fn hooked(c: Coefficient, f: [fn(f64) -> DMatrix<f64>; 3]) -> Coefficient {
    c.with_derivatives(move |t, k| f[k](t))
}

/// The system, with analytic derivative hooks when `hooks` is set.
pub fn varying_system(hooks: bool) -> LinearSystem {
    let mut a = Coefficient::varying(2, 2, a_of);
    let mut b = Coefficient::varying(2, 1, b_of);
    let mut c = Coefficient::varying(1, 2, c_of);
    if hooks {
        a = hooked(a, [a_of, a_dot, a_ddot]);
        b = hooked(b, [b_of, b_dot, b_ddot]);
        c = hooked(c, [c_of, c_dot, c_ddot]);
    }
    LinearSystem::new(a, b, c, Coefficient::zeros(1, 1)).unwrap()
}

/// Classical `K_1 = B' - A B`, `K_2 = K_1' - A K_1` and `L_1 = C' + C A`, `L_2 = L_1' + L_1 A`.
pub fn classical(t: f64) -> ([DMatrix<f64>; 3], [DMatrix<f64>; 3]) {
    let (a, ad) = (a_of(t), a_dot(t));
    let k1 = b_dot(t) - &a * b_of(t);
    let k1d = b_ddot(t) - &ad * b_of(t) - &a * b_dot(t);
    let k2 = k1d - &a * &k1;
    let l1 = c_dot(t) + c_of(t) * &a;
    let l1d = c_ddot(t) + c_dot(t) * &a + c_of(t) * &ad;
    let l2 = l1d + &l1 * &a;
    ([b_of(t), k1, k2], [c_of(t), l1, l2])
}

/// Largest entrywise gap between the computed and classical `K_j`, `L_j` (`j <= 2`)
/// at `t = 0.5` on a continuous grid, plus the derivative source that was used.
pub fn continuous_gap(hooks: bool) -> (f64, DerivativeSource) {
    let g = super::continuous(0.0, 1.0, 1e-3);
    let (ks, ls) = classical(0.5);
    let sys = varying_system(hooks);
    let k = k_sequence(&sys, &g, 0.5, 2).unwrap();
    let l = l_sequence(&sys, &g, 0.5, 2).unwrap();
    let gap = (0..=2)
        .map(|j| (&k.terms[j] - &ks[j]).amax().max((&l.terms[j] - &ls[j]).amax()))
        .fold(0.0, f64::max);
    (gap, k.source)
}

/// Iterated delta differences of node samples: `(f(σ(s)) - f(s)) / μ(s)`.
fn delta_differences(grid: &TimeScaleGrid, k: usize, samples: &[DMatrix<f64>], order: usize) -> DMatrix<f64> {
    let mut level = samples.to_vec();
    for _ in 0..order {
        level = (0..level.len() - 1)
            .map(|i| (&level[i + 1] - &level[i]) / grid.mu_at(k + i))
            .collect();
    }
    level.swap_remove(0)
}

/// Largest relative gap between `K_j(t)` and the `j`-th delta difference of
/// `s ↦ Φ(σ(t), σ(s)) B(s)` at `s = t` (and dually `L_j` against `C(s) Φ(s, t)`),
/// for `j <= 3` at node `k` of a purely discrete grid.
pub fn scattered_gap(grid: &TimeScaleGrid, k: usize) -> f64 {
    let sys = varying_system(false);
    let q = 3;
    let t = grid.time(k);
    let seq_k = k_sequence(&sys, grid, t, q).unwrap();
    let seq_l = l_sequence(&sys, grid, t, q).unwrap();
    assert_eq!(seq_k.source, DerivativeSource::Exact);
    let st = grid.time(k + 1);
    let fk: Vec<DMatrix<f64>> = (k..=k + q)
        .map(|i| transition_matrix(&sys, grid, st, grid.time(i + 1)).unwrap() * b_of(grid.time(i)))
        .collect();
    let fl: Vec<DMatrix<f64>> = (k..=k + q)
        .map(|i| c_of(grid.time(i)) * transition_matrix(&sys, grid, grid.time(i), t).unwrap())
        .collect();
    (0..=q)
        .map(|j| {
            rel_err(&seq_k.terms[j], &delta_differences(grid, k, &fk, j))
                .max(rel_err(&seq_l.terms[j], &delta_differences(grid, k, &fl, j)))
        })
        .fold(0.0, f64::max)
}

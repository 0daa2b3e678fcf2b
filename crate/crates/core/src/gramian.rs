//! Controllability and observability Gramians, minimum-energy steering and
//! initial-state reconstruction.
//!
//! The controllability Gramian is accumulated cell by cell over the same
//! propagation steps that `simulate` uses. Each step `x_next = M x + N u`
//! contributes `Γ Γ^T / w` with `Γ = Φ(t0, t_next) N` and `w` the step width.
//! On a right-scattered step `N = μ B`, so the contribution is exactly
//! `μ Φ(t0, σ(t)) B B^T Φ^T(t0, σ(t))`; on continuous runs it is a
//! second-order quadrature of the same integral. Because the Gramian and the
//! steering input are built from the plant's own step maps, the steered
//! simulation reaches the target up to roundoff.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{step_ops, LinearSystem, SignalRole, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::timescale::TimeScaleGrid;

/// Default relative eigenvalue threshold for declaring a Gramian invertible.
pub const DEFAULT_PD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GramianKind {
    Controllability,
    Observability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianResult {
    pub matrix: DMatrix<f64>,
    pub interval: (f64, f64),
    pub kind: GramianKind,
    pub eigen_min: f64,
    pub eigen_max: f64,
    pub invertible: bool,
    pub tolerance: f64,
}

impl GramianResult {
    fn new(matrix: DMatrix<f64>, interval: (f64, f64), kind: GramianKind, tol: f64) -> Self {
        let matrix = linalg::symmetrize(&matrix);
        let (eigen_min, eigen_max) = linalg::symmetric_extremes(&matrix);
        Self {
            matrix,
            interval,
            kind,
            eigen_min,
            eigen_max,
            invertible: eigen_max > 0.0 && eigen_min > tol * eigen_max,
            tolerance: tol,
        }
    }

    /// Re-evaluates the invertibility flag with another threshold.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self.invertible = self.eigen_max > 0.0 && self.eigen_min > tol * self.eigen_max;
        self
    }

    pub fn condition_number(&self) -> f64 {
        if self.eigen_min > 0.0 {
            self.eigen_max / self.eigen_min
        } else {
            f64::INFINITY
        }
    }
}

fn check_window(grid: &TimeScaleGrid, t0: f64, tf: f64) -> Result<(usize, usize)> {
    let (i0, i1) = grid.span(t0, tf)?;
    if i1 <= i0 {
        return Err(Error::InvalidInterval {
            a: t0,
            b: tf,
            reason: "need t0 < tf".into(),
        });
    }
    Ok((i0, i1))
}

/// Per-step reachability data: `Γ_i = Φ(t0, t_{i+1}) N_i` and the step width.
struct ControlCells {
    start: usize,
    gamma: Vec<DMatrix<f64>>,
    width: Vec<f64>,
    /// `Φ(t0, tf)`
    psi_end: DMatrix<f64>,
}

fn control_cells(sys: &LinearSystem, grid: &TimeScaleGrid, i0: usize, i1: usize) -> Result<ControlCells> {
    let n = sys.n();
    let mut psi = DMatrix::<f64>::identity(n, n);
    let mut gamma = Vec::with_capacity(i1 - i0);
    let mut width = Vec::with_capacity(i1 - i0);
    for step in grid.steps(i0, i1) {
        let ops = step_ops(sys, &step, grid.mu_at(step.index), true)?;
        psi = &psi * linalg::inverse(&ops.state)?;
        gamma.push(&psi * ops.input.expect("input gain requested"));
        width.push(step.width());
    }
    Ok(ControlCells {
        start: i0,
        gamma,
        width,
        psi_end: psi,
    })
}

impl ControlCells {
    fn gramian(&self, n: usize) -> DMatrix<f64> {
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (gam, w) in self.gamma.iter().zip(&self.width) {
            g += gam * gam.transpose() / *w;
        }
        g
    }
}

pub fn controllability_gramian(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t0: f64,
    tf: f64,
) -> Result<GramianResult> {
    let (i0, i1) = check_window(grid, t0, tf)?;
    let cells = control_cells(sys, grid, i0, i1)?;
    Ok(GramianResult::new(
        cells.gramian(sys.n()),
        (grid.time(i0), grid.time(i1)),
        GramianKind::Controllability,
        DEFAULT_PD_TOL,
    ))
}

/// Observation samples `(weight, C(t), Φ(t, t0), t)` over `[t0, tf)`.
fn observation_samples(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    i0: usize,
    i1: usize,
) -> Result<Vec<(f64, DMatrix<f64>, DMatrix<f64>, f64)>> {
    let n = sys.n();
    let mut phi = vec![DMatrix::<f64>::identity(n, n)];
    for step in grid.steps(i0, i1) {
        let ops = step_ops(sys, &step, grid.mu_at(step.index), false)?;
        let next = ops.state * &phi[phi.len() - 1];
        phi.push(next);
    }
    grid.quadrature(i0, i1)
        .into_iter()
        .map(|q| Ok((q.weight, sys.c.at(q.t)?, phi[q.index - i0].clone(), q.t)))
        .collect()
}

pub fn observability_gramian(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t0: f64,
    tf: f64,
) -> Result<GramianResult> {
    let (i0, i1) = check_window(grid, t0, tf)?;
    let n = sys.n();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (w, c, x, _) in observation_samples(sys, grid, i0, i1)? {
        let cx = c * x;
        g += cx.transpose() * cx * w;
    }
    Ok(GramianResult::new(
        g,
        (grid.time(i0), grid.time(i1)),
        GramianKind::Observability,
        DEFAULT_PD_TOL,
    ))
}

pub fn min_energy_input(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t0: f64,
    tf: f64,
    x0: &DVector<f64>,
    xf: &DVector<f64>,
) -> Result<Trajectory> {
    min_energy_input_with(sys, grid, t0, tf, x0, xf, DEFAULT_PD_TOL)
}

/// Minimum-energy input steering `x0` at `t0` to `xf` at `tf`, sampled on `[t0, tf)`.
pub fn min_energy_input_with(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t0: f64,
    tf: f64,
    x0: &DVector<f64>,
    xf: &DVector<f64>,
    pd_tol: f64,
) -> Result<Trajectory> {
    let n = sys.n();
    if x0.len() != n || xf.len() != n {
        return Err(Error::Dimension(format!("x0 and xf must have length {n}")));
    }
    let (i0, i1) = check_window(grid, t0, tf)?;
    let cells = control_cells(sys, grid, i0, i1)?;
    let gram = GramianResult::new(
        cells.gramian(n),
        (t0, tf),
        GramianKind::Controllability,
        pd_tol,
    );
    if !gram.invertible {
        return Err(Error::NotControllable { t0, tf });
    }
    let v = x0 - &cells.psi_end * xf;
    let eta = gram
        .matrix
        .clone()
        .lu()
        .solve(&v)
        .ok_or(Error::NotControllable { t0, tf })?;
    let times = (cells.start..i1).map(|i| grid.time(i)).collect();
    let values = cells
        .gamma
        .iter()
        .zip(&cells.width)
        .map(|(gam, w)| -(gam.transpose() * &eta) / *w)
        .collect();
    Trajectory::new(SignalRole::Input, times, values)
}

pub fn reconstruct_initial_state(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    y: &Trajectory,
    t0: f64,
    tf: f64,
) -> Result<DVector<f64>> {
    reconstruct_initial_state_with(sys, grid, y, t0, tf, DEFAULT_PD_TOL)
}

/// Solves `G_O x0 = ∫ Φ^T C^T y Δt` for the zero-input initial state.
pub fn reconstruct_initial_state_with(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    y: &Trajectory,
    t0: f64,
    tf: f64,
    pd_tol: f64,
) -> Result<DVector<f64>> {
    let (i0, i1) = check_window(grid, t0, tf)?;
    let (n, _, p) = sys.dims();
    if !y.is_empty() && y.dim() != p {
        return Err(Error::Dimension(format!("output has dimension {}, expected {p}", y.dim())));
    }
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (w, c, x, t) in observation_samples(sys, grid, i0, i1)? {
        let cx = c * x;
        let yt = y.at(t).ok_or(Error::MissingSample(t))?;
        rhs += cx.transpose() * yt * w;
        g += cx.transpose() * cx * w;
    }
    let gram = GramianResult::new(g, (t0, tf), GramianKind::Observability, pd_tol);
    if !gram.invertible {
        return Err(Error::NotObservable { t0, tf });
    }
    gram.matrix
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotObservable { t0, tf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate;
    use crate::timescale::TimeScaleSpec;

    fn z(a: i64, b: i64) -> TimeScaleGrid {
        TimeScaleGrid::build(TimeScaleSpec::integers(a, b)).unwrap()
    }

    fn scalar(a: f64, b: f64, c: f64) -> LinearSystem {
        LinearSystem::time_invariant(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    #[test]
    fn zero_input_matrix_gives_zero_gramian() {
        let g = controllability_gramian(&scalar(0.3, 0.0, 1.0), &z(0, 4), 0.0, 4.0).unwrap();
        assert_eq!(g.matrix[(0, 0)], 0.0);
        assert!(!g.invertible);
        let o = observability_gramian(&scalar(0.3, 1.0, 0.0), &z(0, 4), 0.0, 4.0).unwrap();
        assert_eq!(o.matrix[(0, 0)], 0.0);
    }

    #[test]
    fn integrator_gramians_count_steps() {
        let sys = scalar(0.0, 1.0, 1.0);
        let g = z(0, 6);
        assert_eq!(controllability_gramian(&sys, &g, 0.0, 6.0).unwrap().matrix[(0, 0)], 6.0);
        assert_eq!(observability_gramian(&sys, &g, 0.0, 6.0).unwrap().matrix[(0, 0)], 6.0);
    }

    #[test]
    fn scalar_steering() {
        let sys = scalar(0.0, 1.0, 1.0);
        let g = z(0, 2);
        let u = min_energy_input(&sys, &g, 0.0, 2.0, &DVector::zeros(1), &DVector::from_element(1, 2.0))
            .unwrap();
        assert!(u.values().iter().all(|v| v[0] == 1.0));
        let (x, _) = simulate(&sys, &g, &DVector::zeros(1), &u, 0.0, 2.0).unwrap();
        assert_eq!(x.last().unwrap().1[0], 2.0);
    }

    #[test]
    fn zero_target_from_zero_is_zero_input() {
        let sys = scalar(0.5, 1.0, 1.0);
        let u = min_energy_input(&sys, &z(0, 3), 0.0, 3.0, &DVector::zeros(1), &DVector::zeros(1))
            .unwrap();
        assert!(u.values().iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn uncontrollable_steering_errors() {
        let sys = scalar(0.5, 0.0, 1.0);
        let err = min_energy_input(&sys, &z(0, 3), 0.0, 3.0, &DVector::zeros(1), &DVector::zeros(1))
            .unwrap_err();
        assert_eq!(err, Error::NotControllable { t0: 0.0, tf: 3.0 });
    }

    #[test]
    fn scalar_reconstruction() {
        let sys = scalar(0.0, 1.0, 1.0);
        let g = z(0, 3);
        let y = Trajectory::constant(&g, SignalRole::Output, 0.0, 3.0, DVector::from_element(1, 5.0))
            .unwrap();
        let x0 = reconstruct_initial_state(&sys, &g, &y, 0.0, 3.0).unwrap();
        assert!((x0[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn empty_window_rejected() {
        let sys = scalar(0.0, 1.0, 1.0);
        assert!(matches!(
            controllability_gramian(&sys, &z(0, 3), 2.0, 2.0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn continuous_integrator_gramian() {
        // A = 0, B = 1 on [0, 1]: G_C = 1 for every quadrature step
        let sys = scalar(0.0, 1.0, 1.0);
        let g = TimeScaleGrid::build(TimeScaleSpec::interval(0.0, 1.0, 0.1)).unwrap();
        let gc = controllability_gramian(&sys, &g, 0.0, 1.0).unwrap();
        assert!((gc.matrix[(0, 0)] - 1.0).abs() < 1e-14);
    }
}

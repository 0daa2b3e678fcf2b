//! Linear systems on a time scale: coefficients, regressivity, transition
//! matrices, scalar exponentials, simulation and the weighting pattern.
//!
//! Propagation over a right-scattered node is the exact step
//! `X(sigma(t)) = (I + mu(t) A(t)) X(t)`. Over a continuous run it is one
//! classical RK4 step per quadrature node, with inputs held constant across
//! the step.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::timescale::{Step, TimeScaleGrid};

/// Relative threshold used to declare `I + mu A` invertible.
pub const REGRESSIVITY_RTOL: f64 = 1e-10;

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
/// `(t, k)` -> k-th ordinary derivative at `t`.
pub type DerivativeFn = Arc<dyn Fn(f64, usize) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Coefficient {
    Constant(DMatrix<f64>),
    Varying {
        rows: usize,
        cols: usize,
        value: MatrixFn,
        derivative: Option<DerivativeFn>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Coefficient::Varying {
                rows,
                cols,
                derivative,
                ..
            } => f
                .debug_struct("Varying")
                .field("rows", rows)
                .field("cols", cols)
                .field("derivative_hook", &derivative.is_some())
                .finish(),
        }
    }
}

impl Coefficient {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Coefficient::Constant(DMatrix::zeros(rows, cols))
    }

    pub fn varying<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Coefficient::Varying {
            rows,
            cols,
            value: Arc::new(f),
            derivative: None,
        }
    }

    /// Attaches analytic ordinary derivatives, used on continuous runs by the
    /// K_j / L_j sequences. Has no effect on constant coefficients.
    pub fn with_derivatives<F>(self, d: F) -> Self
    where
        F: Fn(f64, usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        match self {
            Coefficient::Varying {
                rows, cols, value, ..
            } => Coefficient::Varying {
                rows,
                cols,
                value,
                derivative: Some(Arc::new(d)),
            },
            c => c,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coefficient::Constant(m) => m.shape(),
            Coefficient::Varying { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    pub fn as_constant(&self) -> Option<&DMatrix<f64>> {
        match self {
            Coefficient::Constant(m) => Some(m),
            _ => None,
        }
    }

    pub fn has_derivatives(&self) -> bool {
        match self {
            Coefficient::Constant(_) => true,
            Coefficient::Varying { derivative, .. } => derivative.is_some(),
        }
    }

    pub fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        match self {
            Coefficient::Constant(m) => Ok(m.clone()),
            Coefficient::Varying {
                rows, cols, value, ..
            } => {
                let m = value(t);
                if m.shape() != (*rows, *cols) {
                    return Err(Error::Dimension(format!(
                        "coefficient evaluated at t = {t} has shape {:?}, declared {:?}",
                        m.shape(),
                        (rows, cols)
                    )));
                }
                Ok(m)
            }
        }
    }

    /// k-th ordinary derivative, when known analytically.
    pub fn derivative(&self, t: f64, k: usize) -> Option<Result<DMatrix<f64>>> {
        if k == 0 {
            return Some(self.at(t));
        }
        match self {
            Coefficient::Constant(m) => Some(Ok(DMatrix::zeros(m.nrows(), m.ncols()))),
            Coefficient::Varying { derivative, .. } => derivative.as_ref().map(|d| Ok(d(t, k))),
        }
    }
}

impl From<DMatrix<f64>> for Coefficient {
    fn from(m: DMatrix<f64>) -> Self {
        Coefficient::Constant(m)
    }
}

/// The quadruple `(A, B, C, D)` of `x^Δ = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: Coefficient,
    pub b: Coefficient,
    pub c: Coefficient,
    pub d: Coefficient,
    n: usize,
    m: usize,
    p: usize,
}

impl LinearSystem {
    pub fn new(a: Coefficient, b: Coefficient, c: Coefficient, d: Coefficient) -> Result<Self> {
        let (n, n2) = a.shape();
        if n == 0 || n != n2 {
            return Err(Error::Dimension(format!("A must be square and nonempty, got {n}x{n2}")));
        }
        let (bn, m) = b.shape();
        if bn != n || m == 0 {
            return Err(Error::Dimension(format!("B must be {n}xm with m > 0, got {bn}x{m}")));
        }
        let (p, cn) = c.shape();
        if cn != n || p == 0 {
            return Err(Error::Dimension(format!("C must be px{n} with p > 0, got {p}x{cn}")));
        }
        if d.shape() != (p, m) {
            return Err(Error::Dimension(format!(
                "D must be {p}x{m}, got {:?}",
                d.shape()
            )));
        }
        Ok(Self { a, b, c, d, n, m, p })
    }

    /// Constant `(A, B, C)` with `D = 0`.
    pub fn time_invariant(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d = Coefficient::zeros(c.nrows(), b.ncols());
        Self::new(a.into(), b.into(), c.into(), d)
    }

    /// `x^Δ = A x + B u` with full-state output `y = x`.
    pub fn state_only(a: Coefficient, b: Coefficient) -> Result<Self> {
        let (n, m) = b.shape();
        Self::new(
            a,
            b,
            DMatrix::identity(n, n).into(),
            Coefficient::zeros(n, m),
        )
    }

    pub fn with_d(mut self, d: Coefficient) -> Result<Self> {
        if d.shape() != (self.p, self.m) {
            return Err(Error::Dimension("D shape".into()));
        }
        self.d = d;
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a.is_constant() && self.b.is_constant() && self.c.is_constant() && self.d.is_constant()
    }

    /// Constant `(A, B, C)` when the system is time invariant.
    pub fn constant_abc(&self) -> Option<(&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>)> {
        Some((self.a.as_constant()?, self.b.as_constant()?, self.c.as_constant()?))
    }

    pub fn has_derivative_hooks(&self) -> bool {
        self.a.has_derivatives() && self.b.has_derivatives() && self.c.has_derivatives()
    }
}

/// Matrices of one propagation step: `x_next = state * x + input * u`.
#[derive(Debug, Clone)]
pub(crate) struct StepOps {
    pub state: DMatrix<f64>,
    pub input: Option<DMatrix<f64>>,
}

fn regressivity_threshold(a: &DMatrix<f64>) -> f64 {
    REGRESSIVITY_RTOL * (1.0 + linalg::spectral_norm(a))
}

pub(crate) fn step_ops(
    sys: &LinearSystem,
    step: &Step,
    mu_at_t: f64,
    with_input: bool,
) -> Result<StepOps> {
    let n = sys.n();
    let id = DMatrix::<f64>::identity(n, n);
    let a0 = sys.a.at(step.t)?;
    if !step.dense {
        let mu = mu_at_t;
        let state = &id + &a0 * mu;
        let smin = linalg::sigma_min(&state);
        if smin <= regressivity_threshold(&a0) {
            return Err(Error::NotRegressive {
                t: step.t,
                sigma_min: smin,
            });
        }
        let input = if with_input {
            Some(sys.b.at(step.t)? * mu)
        } else {
            None
        };
        return Ok(StepOps { state, input });
    }
    let h = step.width();
    let tm = step.t + 0.5 * h;
    let am = sys.a.at(tm)?;
    let a1 = sys.a.at(step.next)?;
    let k1 = a0.clone();
    let k2 = &am * (&id + &k1 * (0.5 * h));
    let k3 = &am * (&id + &k2 * (0.5 * h));
    let k4 = &a1 * (&id + &k3 * h);
    let state = &id + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let input = if with_input {
        let b0 = sys.b.at(step.t)?;
        let bm = sys.b.at(tm)?;
        let b1 = sys.b.at(step.next)?;
        let j1 = b0;
        let j2 = &am * &j1 * (0.5 * h) + &bm;
        let j3 = &am * &j2 * (0.5 * h) + &bm;
        let j4 = &a1 * &j3 * h + b1;
        Some((j1 + j2 * 2.0 + j3 * 2.0 + j4) * (h / 6.0))
    } else {
        None
    };
    Ok(StepOps { state, input })
}

/// State step matrices for every step in `from..to`.
pub(crate) fn step_matrices(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    from: usize,
    to: usize,
) -> Result<Vec<DMatrix<f64>>> {
    grid.steps(from, to)
        .map(|s| step_ops(sys, &s, grid.mu_at(s.index), false).map(|o| o.state))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressivityReport {
    pub ok: bool,
    pub worst_condition_number: f64,
    pub failing_times: Vec<f64>,
    pub relative_tolerance: f64,
}

/// Checks that `I + mu(t) A(t)` is invertible at every grid point.
pub fn check_regressive(sys: &LinearSystem, grid: &TimeScaleGrid) -> Result<RegressivityReport> {
    let n = sys.n();
    let mut worst: f64 = 1.0;
    let mut failing = Vec::new();
    for i in 0..grid.len() {
        let mu = grid.mu_at(i);
        if mu == 0.0 {
            continue;
        }
        let t = grid.time(i);
        let a = sys.a.at(t)?;
        let m = DMatrix::<f64>::identity(n, n) + &a * mu;
        let s = linalg::singular_values(&m);
        let smin = s.last().copied().unwrap_or(0.0);
        let smax = s.first().copied().unwrap_or(0.0);
        if smin <= regressivity_threshold(&a) {
            failing.push(t);
            worst = f64::INFINITY;
        } else {
            worst = worst.max(smax / smin);
        }
    }
    Ok(RegressivityReport {
        ok: failing.is_empty(),
        worst_condition_number: worst,
        failing_times: failing,
        relative_tolerance: REGRESSIVITY_RTOL,
    })
}

/// Transition matrix `Φ_A(t, s)`.
pub fn transition_matrix(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t: f64,
    s: f64,
) -> Result<DMatrix<f64>> {
    let it = grid.index_of(t)?;
    let is = grid.index_of(s)?;
    transition_by_index(sys, grid, it, is)
}

pub(crate) fn transition_by_index(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    it: usize,
    is: usize,
) -> Result<DMatrix<f64>> {
    let n = sys.n();
    let (lo, hi) = if it >= is { (is, it) } else { (it, is) };
    let mut phi = DMatrix::<f64>::identity(n, n);
    for step in grid.steps(lo, hi) {
        let ops = step_ops(sys, &step, grid.mu_at(step.index), false)?;
        phi = ops.state * phi;
    }
    if it >= is {
        Ok(phi)
    } else {
        linalg::inverse(&phi)
    }
}

/// Scalar time-scale exponential `e_λ(t, s)`.
pub fn scalar_exp(grid: &TimeScaleGrid, lambda: C64, t: f64, s: f64) -> Result<C64> {
    let it = grid.index_of(t)?;
    let is = grid.index_of(s)?;
    let (lo, hi) = if it >= is { (is, it) } else { (it, is) };
    let mut prod = C64::new(1.0, 0.0);
    let mut dense_len = 0.0;
    for step in grid.steps(lo, hi) {
        if step.dense {
            dense_len += step.width();
        } else {
            let f = C64::new(1.0, 0.0) + lambda * step.width();
            if f.norm() <= REGRESSIVITY_RTOL * (1.0 + lambda.norm() * step.width()) {
                return Err(Error::RegressivityBoundary { t: step.t });
            }
            prod *= f;
        }
    }
    let value = prod * (lambda * dense_len).exp();
    Ok(if it >= is { value } else { value.inv() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRole {
    State,
    Input,
    Output,
}

/// Time-stamped vector samples on grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub role: SignalRole,
    times: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(role: SignalRole, times: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension("trajectory times/values length mismatch".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Dimension("trajectory times must be strictly increasing".into()));
        }
        if let Some(d) = values.first().map(|v| v.len()) {
            if values.iter().any(|v| v.len() != d) {
                return Err(Error::Dimension("trajectory samples differ in length".into()));
            }
        }
        Ok(Self {
            role,
            times,
            values,
        })
    }

    /// Samples `f` on grid points `t0 <= t < tf` (or `<= tf` when `inclusive`).
    pub fn sample<F>(
        grid: &TimeScaleGrid,
        role: SignalRole,
        t0: f64,
        tf: f64,
        inclusive: bool,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64) -> DVector<f64>,
    {
        let (i0, i1) = grid.span(t0, tf)?;
        let end = if inclusive { i1 + 1 } else { i1 };
        let times: Vec<f64> = (i0..end).map(|i| grid.time(i)).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(role, times, values)
    }

    /// Constant signal on `[t0, tf]`.
    pub fn constant(
        grid: &TimeScaleGrid,
        role: SignalRole,
        t0: f64,
        tf: f64,
        value: DVector<f64>,
    ) -> Result<Self> {
        Self::sample(grid, role, t0, tf, true, |_| value.clone())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn last(&self) -> Option<(f64, &DVector<f64>)> {
        self.times.last().map(|&t| (t, &self.values[self.values.len() - 1]))
    }

    pub fn at(&self, t: f64) -> Option<&DVector<f64>> {
        let tol = crate::timescale::LOOKUP_RTOL * t.abs().max(1.0);
        let pos = self.times.partition_point(|&x| x < t - tol);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= tol).then(|| &self.values[pos])
    }
}

/// Simulates the system on `[t0, tf]` from `x(t0) = x0`.
///
/// `u` must have a sample at every grid point of `[t0, tf)`. The output at
/// `tf` uses `u(tf)` if present and the last input sample otherwise.
pub fn simulate(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    x0: &DVector<f64>,
    u: &Trajectory,
    t0: f64,
    tf: f64,
) -> Result<(Trajectory, Trajectory)> {
    let (n, m, _) = sys.dims();
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
    }
    if !u.is_empty() && u.dim() != m {
        return Err(Error::Dimension(format!("input has dimension {}, expected {m}", u.dim())));
    }
    let (i0, i1) = grid.span(t0, tf)?;
    let mut x = x0.clone();
    let mut times = Vec::with_capacity(i1 - i0 + 1);
    let mut xs = Vec::with_capacity(i1 - i0 + 1);
    let mut ys = Vec::with_capacity(i1 - i0 + 1);
    let mut last_u: Option<DVector<f64>> = None;
    for step in grid.steps(i0, i1) {
        let uk = u.at(step.t).ok_or(Error::MissingSample(step.t))?.clone();
        let y = sys.c.at(step.t)? * &x + sys.d.at(step.t)? * &uk;
        times.push(step.t);
        xs.push(x.clone());
        ys.push(y);
        let ops = step_ops(sys, &step, grid.mu_at(step.index), true)?;
        x = ops.state * &x + ops.input.expect("input gain requested") * &uk;
        last_u = Some(uk);
    }
    let tf = grid.time(i1);
    let uf = match u.at(tf) {
        Some(v) => v.clone(),
        None => last_u.unwrap_or_else(|| DVector::zeros(m)),
    };
    let y = sys.c.at(tf)? * &x + sys.d.at(tf)? * &uf;
    times.push(tf);
    xs.push(x);
    ys.push(y);
    Ok((
        Trajectory::new(SignalRole::State, times.clone(), xs)?,
        Trajectory::new(SignalRole::Output, times, ys)?,
    ))
}

/// Weighting pattern `G(t, σ(s)) = C(t) Φ_A(t, σ(s)) B(s)`.
pub fn weighting_pattern(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    t: f64,
    s: f64,
) -> Result<DMatrix<f64>> {
    let is = grid.index_of(s)?;
    let it = grid.index_of(t)?;
    let target = if grid.is_dense(is) || is == grid.last_index() {
        is
    } else {
        is + 1
    };
    if it < target {
        return Err(Error::InvalidInterval {
            a: grid.time(target),
            b: t,
            reason: "weighting pattern needs t >= sigma(s)".into(),
        });
    }
    let phi = transition_by_index(sys, grid, it, target)?;
    Ok(sys.c.at(grid.time(it))? * phi * sys.b.at(grid.time(is))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::{Segment, TimeScaleSpec};

    fn scalar(a: f64, b: f64, c: f64) -> LinearSystem {
        LinearSystem::time_invariant(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    fn demo_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-8.0 / 45.0, 1.0 / 30.0, -1.0 / 45.0, -1.0 / 10.0])
    }

    fn z(a: i64, b: i64) -> TimeScaleGrid {
        TimeScaleGrid::build(TimeScaleSpec::integers(a, b)).unwrap()
    }

    #[test]
    fn regressivity_examples() {
        let rep = check_regressive(&scalar(-1.0, 1.0, 1.0), &z(0, 5)).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.failing_times.len(), 5);

        let sys = LinearSystem::state_only(demo_a().into(), DMatrix::from_element(2, 1, 1.0).into())
            .unwrap();
        let g = TimeScaleGrid::build(TimeScaleSpec::uniform(0.0, 4.0, 10)).unwrap();
        assert!(check_regressive(&sys, &g).unwrap().ok);

        let cont = TimeScaleGrid::build(TimeScaleSpec::interval(0.0, 1.0, 0.1)).unwrap();
        assert!(check_regressive(&scalar(-1e6, 1.0, 1.0), &cont).unwrap().ok);
    }

    #[test]
    fn discrete_transition_is_power() {
        let a = demo_a();
        let sys = LinearSystem::state_only(a.clone().into(), DMatrix::from_element(2, 1, 1.0).into())
            .unwrap();
        let g = z(0, 7);
        let phi = transition_matrix(&sys, &g, 7.0, 0.0).unwrap();
        let step = DMatrix::identity(2, 2) + &a;
        let mut pow = DMatrix::identity(2, 2);
        for _ in 0..7 {
            pow = &step * pow;
        }
        assert_eq!(phi, pow);
        assert_eq!(
            transition_matrix(&sys, &g, 3.0, 3.0).unwrap(),
            DMatrix::identity(2, 2)
        );
    }

    #[test]
    fn backward_transition_is_inverse() {
        let sys = scalar(0.5, 1.0, 1.0);
        let g = z(0, 4);
        let back = transition_matrix(&sys, &g, 0.0, 4.0).unwrap()[(0, 0)];
        assert!((back - 1.5f64.powi(-4)).abs() < 1e-14);
    }

    #[test]
    fn nonregressive_transition_errors() {
        let sys = scalar(-1.0, 1.0, 1.0);
        assert!(matches!(
            transition_matrix(&sys, &z(0, 3), 3.0, 0.0),
            Err(Error::NotRegressive { .. })
        ));
    }

    #[test]
    fn scalar_exp_examples() {
        let g = z(0, 3);
        assert_eq!(scalar_exp(&g, C64::new(0.0, 0.0), 3.0, 0.0).unwrap(), C64::new(1.0, 0.0));
        let v = scalar_exp(&g, C64::new(-0.25, 0.0), 3.0, 0.0).unwrap();
        assert!((v.re - 27.0 / 64.0).abs() < 1e-15);
        let r = TimeScaleGrid::build(TimeScaleSpec::interval(0.0, 1.0, 0.01)).unwrap();
        let e = scalar_exp(&r, C64::new(1.0, 0.0), 1.0, 0.0).unwrap();
        assert!((e.re - std::f64::consts::E).abs() < 1e-12);
        let boundary = TimeScaleGrid::build(TimeScaleSpec::uniform(0.0, 4.0, 2)).unwrap();
        assert!(matches!(
            scalar_exp(&boundary, C64::new(-0.25, 0.0), 8.0, 0.0),
            Err(Error::RegressivityBoundary { .. })
        ));
    }

    #[test]
    fn simulate_integrator() {
        let sys = scalar(0.0, 1.0, 1.0);
        let g = z(0, 5);
        let u = Trajectory::constant(&g, SignalRole::Input, 0.0, 5.0, DVector::from_element(1, 1.0))
            .unwrap();
        let (x, y) = simulate(&sys, &g, &DVector::zeros(1), &u, 0.0, 5.0).unwrap();
        assert_eq!(x.last().unwrap().1[0], 5.0);
        assert_eq!(y.len(), 6);
    }

    #[test]
    fn simulate_zero_dynamics_holds_state() {
        let sys = LinearSystem::time_invariant(
            DMatrix::zeros(2, 2),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
        )
        .unwrap();
        let g = TimeScaleGrid::build(
            TimeScaleSpec::interval(0.0, 1.0, 0.1).push(Segment::Points(vec![2.0, 3.0])),
        )
        .unwrap();
        let u = Trajectory::constant(&g, SignalRole::Input, 0.0, 3.0, DVector::zeros(1)).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -1.0]);
        let (x, y) = simulate(&sys, &g, &x0, &u, 0.0, 3.0).unwrap();
        assert!(x.values().iter().all(|v| v == &x0));
        assert!(y.values().iter().all(|v| (v[0] + 1.0).abs() < 1e-15));
    }

    #[test]
    fn simulate_errors() {
        let sys = scalar(0.0, 1.0, 1.0);
        let g = z(0, 5);
        let short =
            Trajectory::constant(&g, SignalRole::Input, 0.0, 2.0, DVector::from_element(1, 1.0))
                .unwrap();
        assert_eq!(
            simulate(&sys, &g, &DVector::zeros(1), &short, 0.0, 5.0).unwrap_err(),
            Error::MissingSample(3.0)
        );
        assert!(matches!(
            simulate(&sys, &g, &DVector::zeros(2), &short, 0.0, 2.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn weighting_pattern_discrete_power() {
        let a = 0.5;
        let sys = scalar(a, 1.0, 1.0);
        let g = z(0, 8);
        for (t, s) in [(5.0, 2.0), (3.0, 2.0), (8.0, 0.0)] {
            let w = weighting_pattern(&sys, &g, t, s).unwrap()[(0, 0)];
            let expect = (1.0f64 + a).powi((t - s - 1.0) as i32);
            assert!((w - expect).abs() < 1e-12 * expect);
        }
        assert!(weighting_pattern(&sys, &g, 2.0, 2.0).is_err());
    }

    #[test]
    fn varying_coefficient_shape_checked() {
        let bad = Coefficient::varying(2, 2, |_| DMatrix::zeros(3, 3));
        assert!(matches!(bad.at(0.0), Err(Error::Dimension(_))));
    }
}

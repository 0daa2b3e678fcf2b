//! Rank-based controllability and observability tests: Kalman matrices,
//! the time-varying K_j / L_j sequences, PBH tests and the block
//! decompositions that separate the controllable (observable) part.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::LinearSystem;
use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::linalg::{self, C64};
use crate::timescale::TimeScaleGrid;

/// Relative threshold on `σ_min([λI - A, B])` used by the PBH tests.
pub const PBH_RTOL: f64 = 1e-8;
/// Relative size allowed for the certified zero blocks of a decomposition.
pub const DECOMPOSITION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RankVerdict {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    pub n: usize,
    pub pass: bool,
}

impl RankVerdict {
    fn new(matrix: DMatrix<f64>, n: usize, tol: Option<f64>) -> Self {
        let (rank, singular_values, tolerance) = linalg::numerical_rank(&matrix, tol);
        Self {
            matrix,
            rank,
            singular_values,
            tolerance,
            n,
            pass: rank == n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRankVerdict {
    pub matrix: QMatrix,
    pub rank: usize,
    pub n: usize,
    pub pass: bool,
}

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!("A must be square and nonempty, got {:?}", a.shape())));
    }
    Ok(a.nrows())
}

/// `[B, AB, ..., A^(n-1) B]`
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
    }
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    Ok(out)
}

/// `[C; CA; ...; C A^(n-1)]`
pub fn observability_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    if c.ncols() != n {
        return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
    }
    let p = c.nrows();
    let mut out = DMatrix::zeros(n * p, n);
    let mut blk = c.clone();
    for k in 0..n {
        out.view_mut((k * p, 0), (p, n)).copy_from(&blk);
        blk *= a;
    }
    Ok(out)
}

pub fn kalman_controllability(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: Option<f64>) -> Result<RankVerdict> {
    Ok(RankVerdict::new(controllability_matrix(a, b)?, a.nrows(), tol))
}

pub fn kalman_observability(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: Option<f64>) -> Result<RankVerdict> {
    Ok(RankVerdict::new(observability_matrix(a, c)?, a.nrows(), tol))
}

fn exact_square(a: &QMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!("A must be square and nonempty, got {:?}", a.shape())));
    }
    Ok(a.nrows())
}

pub fn kalman_controllability_exact(a: &QMatrix, b: &QMatrix) -> Result<ExactRankVerdict> {
    let n = exact_square(a)?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
    }
    let mut blocks = vec![b.clone()];
    for k in 1..n {
        blocks.push(a * &blocks[k - 1]);
    }
    let matrix = QMatrix::hstack(&blocks)?;
    let rank = matrix.rank();
    Ok(ExactRankVerdict {
        matrix,
        rank,
        n,
        pass: rank == n,
    })
}

pub fn kalman_observability_exact(a: &QMatrix, c: &QMatrix) -> Result<ExactRankVerdict> {
    let n = exact_square(a)?;
    if c.ncols() != n {
        return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
    }
    let mut blocks = vec![c.clone()];
    for k in 1..n {
        blocks.push(&blocks[k - 1] * a);
    }
    let matrix = QMatrix::vstack(&blocks)?;
    let rank = matrix.rank();
    Ok(ExactRankVerdict {
        matrix,
        rank,
        n,
        pass: rank == n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    /// Only difference quotients across right-scattered points were needed.
    Exact,
    /// Analytic derivative hooks on continuous runs.
    Analytic,
    /// Finite differences on continuous runs.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub t: f64,
    pub terms: Vec<DMatrix<f64>>,
    pub source: DerivativeSource,
    pub warning: Option<String>,
}

const FD_WARNING: &str =
    "coefficient derivatives approximated by finite differences; marginal ranks may flip";

#[derive(Clone, Copy, PartialEq, Eq)]
enum SeqKind {
    K,
    L,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct SeqSolver<'a> {
    sys: &'a LinearSystem,
    grid: &'a TimeScaleGrid,
    kind: SeqKind,
    analytic: bool,
    used_fd: bool,
    used_analytic: bool,
    memo: HashMap<(usize, usize, bool), DMatrix<f64>>,
    t_req: f64,
    q: usize,
}

impl<'a> SeqSolver<'a> {
    fn new(sys: &'a LinearSystem, grid: &'a TimeScaleGrid, kind: SeqKind, t: f64, q: usize) -> Self {
        let analytic = match kind {
            SeqKind::K => sys.a.has_derivatives() && sys.b.has_derivatives(),
            SeqKind::L => sys.a.has_derivatives() && sys.c.has_derivatives(),
        };
        Self {
            sys,
            grid,
            kind,
            analytic,
            used_fd: false,
            used_analytic: false,
            memo: HashMap::new(),
            t_req: t,
            q,
        }
    }

    fn too_close(&self) -> Error {
        Error::TooCloseToEnd {
            t: self.t_req,
            needed: self.q,
        }
    }

    fn base(&self, t: f64) -> Result<DMatrix<f64>> {
        match self.kind {
            SeqKind::K => self.sys.b.at(t),
            SeqKind::L => self.sys.c.at(t),
        }
    }

    /// Value of the j-th term at node k, evaluated as the node really is.
    fn at_node(&mut self, j: usize, k: usize) -> Result<DMatrix<f64>> {
        if k == self.grid.last_index() {
            return if j == 0 {
                self.base(self.grid.time(k))
            } else {
                Err(self.too_close())
            };
        }
        self.value(j, k, self.grid.is_dense(k))
    }

    fn value(&mut self, j: usize, k: usize, dense: bool) -> Result<DMatrix<f64>> {
        if let Some(v) = self.memo.get(&(j, k, dense)) {
            return Ok(v.clone());
        }
        let t = self.grid.time(k);
        let v = if j == 0 {
            self.base(t)?
        } else if dense && self.analytic {
            self.used_analytic = true;
            self.analytic_terms(t, j)?.swap_remove(j)
        } else if dense {
            self.used_fd = true;
            self.dense_fd(j, k)?
        } else {
            self.scattered(j, k)?
        };
        self.memo.insert((j, k, dense), v.clone());
        Ok(v)
    }

    fn analytic_terms(&self, t: f64, jmax: usize) -> Result<Vec<DMatrix<f64>>> {
        let hook = |c: &crate::dynamics::Coefficient, r: usize| {
            c.derivative(t, r)
                .unwrap_or_else(|| Err(Error::Internal("missing derivative hook".into())))
        };
        let a: Vec<DMatrix<f64>> = (0..=jmax).map(|r| hook(&self.sys.a, r)).collect::<Result<_>>()?;
        let base = match self.kind {
            SeqKind::K => &self.sys.b,
            SeqKind::L => &self.sys.c,
        };
        let mut level: Vec<DMatrix<f64>> = (0..=jmax).map(|r| hook(base, r)).collect::<Result<_>>()?;
        let mut out = vec![level[0].clone()];
        for j in 0..jmax {
            let orders = jmax - j;
            let next: Vec<DMatrix<f64>> = (0..orders)
                .map(|r| {
                    let mut acc = level[r + 1].clone();
                    for i in 0..=r {
                        let w = binomial(r, i);
                        match self.kind {
                            SeqKind::K => acc -= &a[i] * &level[r - i] * w,
                            SeqKind::L => acc += &level[r - i] * &a[i] * w,
                        }
                    }
                    acc
                })
                .collect();
            out.push(next[0].clone());
            level = next;
        }
        Ok(out)
    }

    fn dense_fd(&mut self, j: usize, k: usize) -> Result<DMatrix<f64>> {
        let g = self.grid;
        let has_left = k > 0 && g.is_dense(k - 1);
        let has_right = k < g.last_index() && g.is_dense(k);
        let deriv = if has_left && has_right {
            let h = g.time(k + 1) - g.time(k);
            (self.value(j - 1, k + 1, true)? - self.value(j - 1, k - 1, true)?) / (2.0 * h)
        } else if has_right {
            let h = g.time(k + 1) - g.time(k);
            if k + 1 < g.last_index() && g.is_dense(k + 1) {
                (self.value(j - 1, k, true)? * -3.0 + self.value(j - 1, k + 1, true)? * 4.0
                    - self.value(j - 1, k + 2, true)?)
                    / (2.0 * h)
            } else {
                (self.value(j - 1, k + 1, true)? - self.value(j - 1, k, true)?) / h
            }
        } else if has_left {
            let h = g.time(k) - g.time(k - 1);
            if k >= 2 && g.is_dense(k - 2) {
                (self.value(j - 1, k, true)? * 3.0 - self.value(j - 1, k - 1, true)? * 4.0
                    + self.value(j - 1, k - 2, true)?)
                    / (2.0 * h)
            } else {
                (self.value(j - 1, k, true)? - self.value(j - 1, k - 1, true)?) / h
            }
        } else {
            return Err(Error::Internal("continuous run with a single node".into()));
        };
        let a = self.sys.a.at(g.time(k))?;
        let prev = self.value(j - 1, k, true)?;
        Ok(match self.kind {
            SeqKind::K => deriv - a * prev,
            SeqKind::L => prev * a + deriv,
        })
    }

    fn scattered(&mut self, j: usize, k: usize) -> Result<DMatrix<f64>> {
        let g = self.grid;
        let n = self.sys.n();
        let id = DMatrix::<f64>::identity(n, n);
        let t = g.time(k);
        let mu = g.mu_at(k);
        let a = self.sys.a.at(t)?;
        let prev = self.value(j - 1, k, false)?;
        let next = self.at_node(j - 1, k + 1)?;
        let delta = (next - &prev) / mu;
        match self.kind {
            SeqKind::L => Ok(prev * &a + delta * (&id + &a * mu)),
            SeqKind::K => {
                if k + 1 == g.last_index() {
                    return Err(self.too_close());
                }
                let ts = g.time(k + 1);
                let mu_s = g.mu_at(k + 1);
                let a_s = self.sys.a.at(ts)?;
                let m_inv = linalg::inverse(&(&id + &a * mu))?;
                let ms_inv = linalg::inverse(&(&id + &a_s * mu_s))?;
                let mu_delta = (mu_s - mu) / mu;
                let a_delta = (&a_s - &a) / mu;
                let bracket = &ms_inv * (&a_s * mu_delta + a_delta * mu) * &m_inv + &a * &m_inv;
                Ok(ms_inv * delta - bracket * prev)
            }
        }
    }

    fn run(mut self) -> Result<Sequence> {
        let k = self.grid.index_of(self.t_req)?;
        let terms = (0..=self.q).map(|j| self.at_node(j, k)).collect::<Result<Vec<_>>>()?;
        let source = if self.used_fd {
            DerivativeSource::FiniteDifference
        } else if self.used_analytic {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::Exact
        };
        Ok(Sequence {
            t: self.grid.time(k),
            terms,
            source,
            warning: self.used_fd.then(|| FD_WARNING.to_string()),
        })
    }
}

/// `K_0 .. K_q` at `t`.
pub fn k_sequence(sys: &LinearSystem, grid: &TimeScaleGrid, t: f64, q: usize) -> Result<Sequence> {
    SeqSolver::new(sys, grid, SeqKind::K, t, q).run()
}

/// `L_0 .. L_q` at `t`.
pub fn l_sequence(sys: &LinearSystem, grid: &TimeScaleGrid, t: f64, q: usize) -> Result<Sequence> {
    SeqSolver::new(sys, grid, SeqKind::L, t, q).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TvVerdict {
    Pass,
    /// The sufficient condition failed at every candidate; nothing is concluded.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvRankVerdict {
    pub verdict: TvVerdict,
    pub witness: Option<f64>,
    pub best_rank: usize,
    pub q: usize,
    pub source: DerivativeSource,
    pub warning: Option<String>,
}

fn tv_rank(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    candidates: &[f64],
    q: usize,
    tol: Option<f64>,
    kind: SeqKind,
) -> Result<TvRankVerdict> {
    let n = sys.n();
    let mut best = 0;
    let mut source = DerivativeSource::Exact;
    let mut warning = None;
    for &t in candidates {
        let seq = SeqSolver::new(sys, grid, kind, t, q).run()?;
        if seq.source != DerivativeSource::Exact {
            source = seq.source;
        }
        warning = warning.or(seq.warning);
        let stacked = match kind {
            SeqKind::K => seq.terms.iter().fold(DMatrix::zeros(n, 0), |acc, k| linalg::hstack(&acc, k)),
            SeqKind::L => seq.terms.iter().fold(DMatrix::zeros(0, n), |acc, l| linalg::vstack(&acc, l)),
        };
        let (rank, _, _) = linalg::numerical_rank(&stacked, tol);
        best = best.max(rank);
        if rank == n {
            return Ok(TvRankVerdict {
                verdict: TvVerdict::Pass,
                witness: Some(seq.t),
                best_rank: rank,
                q,
                source,
                warning,
            });
        }
    }
    Ok(TvRankVerdict {
        verdict: TvVerdict::Inconclusive,
        witness: None,
        best_rank: best,
        q,
        source,
        warning,
    })
}

/// Sufficient controllability test: `rank [K_0 .. K_q](t_c) = n` for some candidate.
pub fn tv_controllability_rank(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    candidates: &[f64],
    q: usize,
    tol: Option<f64>,
) -> Result<TvRankVerdict> {
    tv_rank(sys, grid, candidates, q, tol, SeqKind::K)
}

/// Sufficient observability test on the stacked `[L_0; ..; L_q](t_c)`.
pub fn tv_observability_rank(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    candidates: &[f64],
    q: usize,
    tol: Option<f64>,
) -> Result<TvRankVerdict> {
    tv_rank(sys, grid, candidates, q, tol, SeqKind::L)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbhEigenCheck {
    pub lambda: C64,
    pub sigma_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbhVerdict {
    pub pass: bool,
    pub checks: Vec<PbhEigenCheck>,
    /// Eigenvalue and eigenvector (left for controllability, right for
    /// observability) that is annihilated by B or C.
    pub witness: Option<(C64, DVector<C64>)>,
    pub tolerance: f64,
    pub note: &'static str,
}

const PBH_NOTE: &str = "rank can only drop at eigenvalues of A, so only those are tested";

fn distinct_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let scale = 1e-8 * (1.0 + linalg::spectral_norm(a));
    let mut out: Vec<C64> = Vec::new();
    for l in linalg::eigenvalues(a)? {
        if !out.iter().any(|x| (x - l).norm() <= scale) {
            out.push(l);
        }
    }
    Ok(out)
}

fn normalize_phase(mut v: DVector<C64>) -> DVector<C64> {
    let Some(big) = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())) else {
        return v;
    };
    if big.norm() > 0.0 {
        let phase = big / big.norm();
        v /= phase;
        v /= C64::new(v.norm(), 0.0);
    }
    v
}

fn pbh(a: &DMatrix<f64>, other: &DMatrix<f64>, tol: Option<f64>, controllability: bool) -> Result<PbhVerdict> {
    let n = check_square(a)?;
    let scale = linalg::spectral_norm(a).max(linalg::spectral_norm(other)).max(1.0);
    let tolerance = tol.unwrap_or(PBH_RTOL * scale);
    let ac = linalg::to_complex(a);
    let oc = linalg::to_complex(other);
    let mut checks = Vec::new();
    let mut witness = None;
    for lambda in distinct_eigenvalues(a)? {
        let shifted = DMatrix::<C64>::identity(n, n) * lambda - &ac;
        let m = if controllability {
            let mut m = DMatrix::<C64>::zeros(n, n + oc.ncols());
            m.view_mut((0, 0), (n, n)).copy_from(&shifted);
            m.view_mut((0, n), oc.shape()).copy_from(&oc);
            m
        } else {
            let mut m = DMatrix::<C64>::zeros(n + oc.nrows(), n);
            m.view_mut((0, 0), (n, n)).copy_from(&shifted);
            m.view_mut((n, 0), oc.shape()).copy_from(&oc);
            m
        };
        let svd = m.svd(true, true);
        let (imin, smin) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty spectrum");
        let pass = smin > tolerance;
        if !pass && witness.is_none() {
            let vec = if controllability {
                let u = svd.u.as_ref().expect("U requested");
                DVector::from_iterator(n, u.column(imin).iter().map(|z| z.conj()))
            } else {
                let vt = svd.v_t.as_ref().expect("V^T requested");
                DVector::from_iterator(n, vt.row(imin).iter().map(|z| z.conj()))
            };
            witness = Some((lambda, normalize_phase(vec)));
        }
        checks.push(PbhEigenCheck {
            lambda,
            sigma_min: smin,
            pass,
        });
    }
    Ok(PbhVerdict {
        pass: checks.iter().all(|c| c.pass),
        checks,
        witness,
        tolerance,
        note: PBH_NOTE,
    })
}

pub fn pbh_controllability(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: Option<f64>) -> Result<PbhVerdict> {
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension("B rows must match A".into()));
    }
    pbh(a, b, tol, true)
}

pub fn pbh_observability(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: Option<f64>) -> Result<PbhVerdict> {
    if c.ncols() != a.ncols() {
        return Err(Error::Dimension("C columns must match A".into()));
    }
    pbh(a, c, tol, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionKind {
    Controllable,
    Observable,
}

/// Block-triangular change of basis.
///
/// Controllable: `Â = P^-1 A P = [[Â11, Â12], [0, Â22]]`, `P^-1 B = [B̂11; 0]`.
/// Observable: `Â = Q^-1 A Q = [[Â11, 0], [Â21, Â22]]`, `C Q = [Ĉ11, 0]`.
/// `io_hat` holds `P^-1 B` or `C Q` respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub transform: DMatrix<f64>,
    pub a_hat: DMatrix<f64>,
    pub io_hat: DMatrix<f64>,
    pub dim: usize,
    pub n: usize,
    /// Norm of the blocks that must vanish.
    pub residual: f64,
    pub tolerance: f64,
    pub trivial: bool,
}

impl Decomposition {
    pub fn a11(&self) -> DMatrix<f64> {
        self.a_hat.view((0, 0), (self.dim, self.dim)).into_owned()
    }

    pub fn a22(&self) -> DMatrix<f64> {
        let r = self.n - self.dim;
        self.a_hat.view((self.dim, self.dim), (r, r)).into_owned()
    }

    /// `Â12` (controllable) or `Â21` (observable).
    pub fn a_coupling(&self) -> DMatrix<f64> {
        let r = self.n - self.dim;
        match self.kind {
            DecompositionKind::Controllable => self.a_hat.view((0, self.dim), (self.dim, r)).into_owned(),
            DecompositionKind::Observable => self.a_hat.view((self.dim, 0), (r, self.dim)).into_owned(),
        }
    }

    /// `B̂11` or `Ĉ11`.
    pub fn io11(&self) -> DMatrix<f64> {
        match self.kind {
            DecompositionKind::Controllable => {
                self.io_hat.view((0, 0), (self.dim, self.io_hat.ncols())).into_owned()
            }
            DecompositionKind::Observable => {
                self.io_hat.view((0, 0), (self.io_hat.nrows(), self.dim)).into_owned()
            }
        }
    }
}

pub fn controllable_decomposition(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: Option<f64>) -> Result<Decomposition> {
    let verdict = kalman_controllability(a, b, tol)?;
    let n = verdict.n;
    decompose(a, b, &verdict, DecompositionKind::Controllable, n)
}

pub fn observable_decomposition(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: Option<f64>) -> Result<Decomposition> {
    let verdict = kalman_observability(a, c, tol)?;
    let n = verdict.n;
    decompose(a, c, &verdict, DecompositionKind::Observable, n)
}

fn decompose(
    a: &DMatrix<f64>,
    io: &DMatrix<f64>,
    verdict: &RankVerdict,
    kind: DecompositionKind,
    n: usize,
) -> Result<Decomposition> {
    let dim = verdict.rank;
    if dim == 0 {
        return Err(Error::ZeroRank);
    }
    let scale = linalg::spectral_norm(a).max(linalg::spectral_norm(io)).max(f64::MIN_POSITIVE);
    let tolerance = DECOMPOSITION_RTOL * scale;
    if dim == n {
        let io_hat = io.clone();
        return Ok(Decomposition {
            kind,
            transform: DMatrix::identity(n, n),
            a_hat: a.clone(),
            io_hat,
            dim,
            n,
            residual: 0.0,
            tolerance,
            trivial: true,
        });
    }
    let (u, _, v) = linalg::svd_sorted(&verdict.matrix);
    // orthogonal bases: range of the controllability matrix (U), or row space
    // followed by nullspace of the observability matrix (V)
    let t = match kind {
        DecompositionKind::Controllable => u,
        DecompositionKind::Observable => v,
    };
    if t.shape() != (n, n) {
        return Err(Error::Internal(format!("basis has shape {:?}", t.shape())));
    }
    let a_hat = t.transpose() * a * &t;
    let r = n - dim;
    let (io_hat, residual) = match kind {
        DecompositionKind::Controllable => {
            let b_hat = t.transpose() * io;
            let res = linalg::spectral_norm(&a_hat.view((dim, 0), (r, dim)).into_owned())
                .max(linalg::spectral_norm(&b_hat.view((dim, 0), (r, io.ncols())).into_owned()));
            (b_hat, res)
        }
        DecompositionKind::Observable => {
            let c_hat = io * &t;
            let res = linalg::spectral_norm(&a_hat.view((0, dim), (dim, r)).into_owned())
                .max(linalg::spectral_norm(&c_hat.view((0, dim), (io.nrows(), r)).into_owned()));
            (c_hat, res)
        }
    };
    if residual > tolerance {
        return Err(Error::Internal(format!(
            "decomposition zero blocks have norm {residual:e} > {tolerance:e}"
        )));
    }
    Ok(Decomposition {
        kind,
        transform: t,
        a_hat,
        io_hat,
        dim,
        n,
        residual,
        tolerance,
        trivial: false,
    })
}

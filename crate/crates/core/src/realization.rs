//! Transfer functions and state-space realizations: the block-companion
//! realization of a strictly proper rational matrix, exact transfer-function
//! evaluation, minimality, realization of factored weighting patterns and the
//! partial-fraction data of the resolvent `(zI - A)^-1`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::{Coefficient, LinearSystem};
use crate::error::{Error, Result};
use crate::exact::{q_to_f64, Poly, QMatrix, RationalFn, RationalMatrix, Q};
use crate::gramian::{controllability_gramian, observability_gramian, GramianResult};
use crate::linalg::{self, C64};
use crate::ranktests::{kalman_controllability_exact, kalman_observability_exact};
use crate::timescale::TimeScaleGrid;

/// Eigenvalue clustering tolerance, relative to `‖A‖`.
pub const EIG_CLUSTER_RTOL: f64 = 1e-8;
/// Largest supported eigenvalue multiplicity in the spectral representation.
pub const MAX_MULTIPLICITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Companion,
    User,
    Transformed,
}

/// Constant `(A, B, C)` with exact rational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a: QMatrix,
    pub b: QMatrix,
    pub c: QMatrix,
    pub provenance: Provenance,
}

impl Realization {
    pub fn new(a: QMatrix, b: QMatrix, c: QMatrix, provenance: Provenance) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "realization shapes A {:?}, B {:?}, C {:?} are inconsistent",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { a, b, c, provenance })
    }

    /// Exact image of floating-point matrices (each double is a dyadic rational).
    pub fn from_f64(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Self> {
        Self::new(
            QMatrix::from_f64(a)?,
            QMatrix::from_f64(b)?,
            QMatrix::from_f64(c)?,
            Provenance::User,
        )
    }

    /// `(n, m, p)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.ncols(), self.c.nrows())
    }

    pub fn to_f64(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a.to_f64(), self.b.to_f64(), self.c.to_f64())
    }

    pub fn to_system(&self) -> Result<LinearSystem> {
        let (a, b, c) = self.to_f64();
        LinearSystem::time_invariant(a, b, c)
    }
}

/// `G(z) = C adj(zI - A) B / det(zI - A)`, entries reduced.
pub fn transfer_function(r: &Realization) -> Result<RationalMatrix> {
    let (n, m, p) = r.dims();
    let (charpoly, ms) = r.a.resolvent()?;
    // C M_k B is the coefficient of z^(n-k) in the numerator matrix
    let cmb: Vec<QMatrix> = ms.iter().map(|mk| &(&r.c * mk) * &r.b).collect();
    let mut entries = Vec::with_capacity(p * m);
    for i in 0..p {
        for j in 0..m {
            let mut coeffs = vec![Q::default(); n.max(1)];
            for (k, blk) in cmb.iter().enumerate() {
                coeffs[n - 1 - k] = blk.get(i, j).clone();
            }
            entries.push(RationalFn::new(Poly::new(coeffs), charpoly.clone())?);
        }
    }
    RationalMatrix::new(p, m, entries)
}

pub fn is_strictly_proper(g: &RationalMatrix) -> bool {
    g.is_strictly_proper()
}

/// Block-companion realization of a strictly proper `p x q` matrix.
///
/// With `d(z) = z^r + d_(r-1) z^(r-1) + ... + d_0` the monic lcm of the
/// denominators and `d(z) G(z) = P_0 + P_1 z + ... + P_(r-1) z^(r-1)`:
/// `A` has identity blocks on the block superdiagonal and last block row
/// `[-d_0 I, ..., -d_(r-1) I]`, `B = [0; ...; 0; I]`, `C = [P_0, ..., P_(r-1)]`.
/// The result is certified by an exact transfer-function round trip.
pub fn companion_realization(g: &RationalMatrix) -> Result<Realization> {
    if let Some((row, col)) = g.first_improper() {
        return Err(Error::NotStrictlyProper { row, col });
    }
    let (p, q) = g.shape();
    let d = g
        .entries()
        .iter()
        .filter(|e| !e.is_zero())
        .fold(Poly::one(), |acc, e| Poly::lcm(&acc, e.den()));
    let r = d.degree().unwrap_or(0);
    let n = q * r;
    let mut a = QMatrix::zeros(n, n);
    let mut b = QMatrix::zeros(n, q);
    let mut c = QMatrix::zeros(p, n);
    for blk in 0..r.saturating_sub(1) {
        a.set_block(blk * q, (blk + 1) * q, &QMatrix::identity(q));
    }
    if r > 0 {
        for k in 0..r {
            a.set_block((r - 1) * q, k * q, &QMatrix::identity(q).scale(&-d.coeff(k)));
        }
        b.set_block((r - 1) * q, 0, &QMatrix::identity(q));
    }
    for i in 0..p {
        for j in 0..q {
            let e = g.get(i, j);
            if e.is_zero() {
                continue;
            }
            let cofactor = d.divmod(e.den())?.0;
            let dg = e.num() * &cofactor;
            for k in 0..r {
                c.set(i, k * q + j, dg.coeff(k));
            }
        }
    }
    let real = Realization::new(a, b, c, Provenance::Companion)?;
    if &transfer_function(&real)? != g {
        return Err(Error::Internal("companion realization failed its round-trip check".into()));
    }
    Ok(real)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityVerdict {
    pub n: usize,
    pub controllable_rank: usize,
    pub observable_rank: usize,
    pub minimal: bool,
}

/// Minimal iff the exact Kalman controllability and observability ranks are both `n`.
pub fn is_minimal(r: &Realization) -> Result<MinimalityVerdict> {
    let (n, _, _) = r.dims();
    if n == 0 {
        return Ok(MinimalityVerdict {
            n,
            controllable_rank: 0,
            observable_rank: 0,
            minimal: true,
        });
    }
    let ctrb = kalman_controllability_exact(&r.a, &r.b)?;
    let obsv = kalman_observability_exact(&r.a, &r.c)?;
    Ok(MinimalityVerdict {
        n,
        controllable_rank: ctrb.rank,
        observable_rank: obsv.rank,
        minimal: ctrb.pass && obsv.pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvMinimality {
    pub controllability: GramianResult,
    pub observability: GramianResult,
    pub minimal: bool,
}

/// Time-varying minimality on `[t0, tf]`: both Gramians invertible.
pub fn is_minimal_tv(sys: &LinearSystem, grid: &TimeScaleGrid, t0: f64, tf: f64) -> Result<TvMinimality> {
    let controllability = controllability_gramian(sys, grid, t0, tf)?;
    let observability = observability_gramian(sys, grid, t0, tf)?;
    let minimal = controllability.invertible && observability.invertible;
    Ok(TvMinimality {
        controllability,
        observability,
        minimal,
    })
}

/// Realizes `G(t, σ(s)) = H(t) F(σ(s))` as `x^Δ = F(σ(t)) u`, `y = H(t) x`.
pub fn realize_from_factors(h: Coefficient, f: Coefficient, grid: &TimeScaleGrid) -> Result<LinearSystem> {
    let (p, n) = h.shape();
    let (fn_, m) = f.shape();
    if fn_ != n {
        return Err(Error::Dimension(format!("H is {p}x{n} but F is {fn_}x{m}")));
    }
    let b = match f {
        Coefficient::Constant(mat) => Coefficient::Constant(mat),
        Coefficient::Varying { value, .. } => {
            let grid = Arc::new(grid.clone());
            Coefficient::varying(n, m, move |t| value(grid.sigma(t).unwrap_or(t)))
        }
    };
    LinearSystem::new(Coefficient::zeros(n, n), b, h, Coefficient::zeros(p, m))
}

/// Resolvent partial fractions `(zI - A)^-1 = Σ_k Σ_j W_kj / (z - λ_k)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractions {
    pub eigenvalues: Vec<C64>,
    /// Exact value of each eigenvalue when it is rational.
    pub exact_eigenvalues: Vec<Option<Q>>,
    pub multiplicities: Vec<usize>,
    /// `residues[k][j - 1] = W_kj`
    pub residues: Vec<Vec<DMatrix<C64>>>,
    /// `‖Σ_k W_k1 - I‖`
    pub residue_sum_error: f64,
    pub cluster_tolerance: f64,
}

impl PartialFractions {
    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities.iter().copied().max().unwrap_or(0)
    }
}

pub fn partial_fractions(a: &DMatrix<f64>) -> Result<PartialFractions> {
    partial_fractions_exact(&QMatrix::from_f64(a)?)
}

/// Partial fractions of the resolvent of an exact matrix.
///
/// The characteristic polynomial is split exactly into square-free factors;
/// rational roots are found exactly and the remaining roots numerically, then
/// roots closer than `1e-8 ‖A‖` are merged.
pub fn partial_fractions_exact(a: &QMatrix) -> Result<PartialFractions> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension("partial fractions need a nonempty square matrix".into()));
    }
    let af = a.to_f64();
    let tol = EIG_CLUSTER_RTOL * linalg::spectral_norm(&af).max(f64::MIN_POSITIVE);
    let (charpoly, ms) = a.resolvent()?;

    let mut roots: Vec<(C64, Option<Q>, usize)> = Vec::new();
    for (factor, mult) in charpoly.squarefree_factorization() {
        let mut rest = factor.clone();
        for (r, _) in factor.rational_roots() {
            roots.push((C64::new(q_to_f64(&r), 0.0), Some(r.clone()), mult));
            rest = rest.divmod(&Poly::linear_root(&r))?.0;
        }
        if rest.degree().unwrap_or(0) > 0 {
            for z in rest.roots()? {
                roots.push((z, None, mult));
            }
        }
    }

    // merge numerically coincident roots
    let mut clusters: Vec<(C64, Option<Q>, usize, usize)> = Vec::new();
    for (z, exact, mult) in roots {
        if let Some(cl) = clusters.iter_mut().find(|c| (c.0 - z).norm() <= tol) {
            let total = cl.3 + 1;
            cl.0 = (cl.0 * cl.3 as f64 + z) / total as f64;
            cl.1 = if cl.1 == exact { exact } else { None };
            cl.2 += mult;
            cl.3 = total;
        } else {
            clusters.push((z, exact, mult, 1));
        }
    }
    for (i, x) in clusters.iter().enumerate() {
        for y in &clusters[i + 1..] {
            if (x.0 - y.0).norm() <= 10.0 * tol {
                return Err(Error::ClusterAmbiguity(format!("{} and {}", x.0, y.0)));
            }
        }
    }
    if clusters.iter().map(|c| c.2).sum::<usize>() != n {
        return Err(Error::Internal("eigenvalue multiplicities do not sum to n".into()));
    }

    let adj: Vec<DMatrix<f64>> = ms.iter().map(QMatrix::to_f64).collect();
    let mut residues = Vec::with_capacity(clusters.len());
    for (k, cl) in clusters.iter().enumerate() {
        let lambda = match &cl.1 {
            Some(q) => C64::new(q_to_f64(q), 0.0),
            None => cl.0,
        };
        let psi = cl.2;
        // Taylor coefficients at λ of adj(zI - A) = Σ M_k z^(n-k)
        let adj_series: Vec<DMatrix<C64>> = (0..psi)
            .map(|r| {
                let mut acc = DMatrix::<C64>::zeros(n, n);
                for (idx, mk) in adj.iter().enumerate() {
                    let power = n - 1 - idx;
                    if power >= r {
                        let w = binomial(power, r) * lambda.powi((power - r) as i32);
                        acc += linalg::to_complex(mk) * w;
                    }
                }
                acc
            })
            .collect();
        // Taylor coefficients at λ of q_k(z) = Π_{l != k} (z - λ_l)^ψ_l
        let mut q_series = vec![C64::new(0.0, 0.0); psi];
        q_series[0] = C64::new(1.0, 0.0);
        for (l, other) in clusters.iter().enumerate() {
            if l == k {
                continue;
            }
            let mu = match &other.1 {
                Some(q) => C64::new(q_to_f64(q), 0.0),
                None => other.0,
            };
            for _ in 0..other.2 {
                // multiply by ((z - λ) + (λ - μ))
                let shift = lambda - mu;
                for r in (0..psi).rev() {
                    let lower = if r > 0 { q_series[r - 1] } else { C64::new(0.0, 0.0) };
                    q_series[r] = q_series[r] * shift + lower;
                }
            }
        }
        let mut w = Vec::with_capacity(psi);
        for r in 0..psi {
            let mut acc = adj_series[r].clone();
            for i in 1..=r {
                acc -= &w[r - i] * q_series[i];
            }
            w.push(acc / q_series[0]);
        }
        // W_kj is the Taylor coefficient of order ψ - j
        residues.push((1..=psi).map(|j| w[psi - j].clone()).collect::<Vec<_>>());
    }

    let mut sum = DMatrix::<C64>::zeros(n, n);
    for r in &residues {
        sum += &r[0];
    }
    let residue_sum_error = linalg::spectral_norm_c(&(sum - DMatrix::<C64>::identity(n, n)));
    let scale = residues.iter().map(|r| linalg::spectral_norm_c(&r[0])).fold(1.0, f64::max);
    if residue_sum_error > 1e-6 * scale {
        return Err(Error::Internal(format!(
            "resolvent residues sum to I only within {residue_sum_error:e}"
        )));
    }

    Ok(PartialFractions {
        eigenvalues: clusters.iter().map(|c| match &c.1 {
            Some(q) => C64::new(q_to_f64(q), 0.0),
            None => c.0,
        }).collect(),
        exact_eigenvalues: clusters.iter().map(|c| c.1.clone()).collect(),
        multiplicities: clusters.iter().map(|c| c.2).collect(),
        residues,
        residue_sum_error,
        cluster_tolerance: tol,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact eigenvalues of `A` when its characteristic polynomial splits over the rationals.
pub fn rational_spectrum(a: &QMatrix) -> Result<Option<Vec<(Q, usize)>>> {
    let p = a.charpoly()?;
    let roots = p.rational_roots();
    let total: usize = roots.iter().map(|r| r.1).sum();
    Ok((total == a.nrows()).then_some(roots))
}

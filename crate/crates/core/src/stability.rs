//! Exponential and BIBO stability on time scales.
//!
//! Unbounded time is modelled by an increasing schedule of horizons
//! `T_1 < ... < T_K` on the grid; every asymptotic quantity is reported per
//! horizon together with the rule that turned it into a verdict.

use nalgebra::DMatrix;

use crate::dynamics::{self, LinearSystem, REGRESSIVITY_RTOL};
use crate::error::{Error, Result};
use crate::exact::{q_to_f64, Poly, RationalMatrix, Q};
use crate::linalg::{self, C64};
use crate::realization::{self, MinimalityVerdict, Realization, MAX_MULTIPLICITY};
use crate::timescale::TimeScaleGrid;

/// Default decision margin for the averaged growth functional.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Relative size of the last increment below which a partial sequence has converged.
pub const CONVERGENCE_RTOL: f64 = 1e-6;
/// Largest number of targets for which the TV BIBO sup is taken over the full triangle.
pub const FULL_TRIANGLE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inside,
    Outside,
    Marginal,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Inside => "inside",
            Region::Outside => "outside",
            Region::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// The stability notion a criterion certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notion {
    /// `‖Φ(t, t0)‖ ≤ γ e_{-λ}(t, t0)` with `-λ` positively regressive.
    ExponentialTimeScaleBound,
    /// `‖Φ(t, t0)‖ ≤ K e^{-α (t - t0)}` with an ordinary exponential.
    ExponentialRate,
    /// `sup ‖y‖ ≤ η sup ‖u‖` for the time-varying zero-state response.
    BiboTimeVarying,
    /// Absolutely integrable impulse response of a time-invariant system.
    BiboTimeInvariant,
}

impl Notion {
    pub fn label(self) -> &'static str {
        match self {
            Notion::ExponentialTimeScaleBound => {
                "uniform exponential stability, bound ||Phi(t,t0)|| <= gamma e_{-lambda}(t,t0)"
            }
            Notion::ExponentialRate => {
                "uniform exponential stability, bound ||Phi(t,t0)|| <= K exp(-alpha (t-t0))"
            }
            Notion::BiboTimeVarying => "uniform BIBO stability (time-varying)",
            Notion::BiboTimeInvariant => "uniform BIBO stability (time-invariant)",
        }
    }
}

/// `log|1 + s λ| / s` at `s = mu`, or its limit `Re λ` at `mu = 0`.
pub fn region_integrand(mu: f64, lambda: C64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInterval {
            a: mu,
            b: mu,
            reason: "graininess must be finite and nonnegative".into(),
        });
    }
    if mu == 0.0 {
        return Ok(lambda.re);
    }
    let f = (C64::new(1.0, 0.0) + lambda * mu).norm();
    if f <= REGRESSIVITY_RTOL * (1.0 + lambda.norm() * mu) {
        return Err(Error::RegressivityBoundary { t: f64::NAN });
    }
    Ok(f.ln() / mu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRegionQuery {
    pub lambda: C64,
    pub horizons: Vec<f64>,
    /// Averaged growth `Λ(T_i)` per horizon.
    pub values: Vec<f64>,
    /// Max of `Λ` over the latter half of the schedule.
    pub tail_max: f64,
    pub delta: f64,
    pub region: Region,
}

fn horizon_indices(grid: &TimeScaleGrid, horizons: &[f64]) -> Result<Vec<usize>> {
    if horizons.is_empty() {
        return Err(Error::InvalidInterval {
            a: grid.t_min(),
            b: grid.t_max(),
            reason: "empty horizon schedule".into(),
        });
    }
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let i = grid.index_of(h)?;
        let prev = out.last().copied().unwrap_or(0);
        if i <= prev {
            return Err(Error::InvalidInterval {
                a: grid.time(prev),
                b: h,
                reason: "horizons must increase strictly and lie after the grid start".into(),
            });
        }
        out.push(i);
    }
    Ok(out)
}

/// Tests `λ` against the stability region of the grid.
pub fn in_stability_region(
    grid: &TimeScaleGrid,
    lambda: C64,
    horizons: &[f64],
    delta: f64,
) -> Result<StabilityRegionQuery> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInterval {
            a: delta,
            b: delta,
            reason: "decision margin must be positive".into(),
        });
    }
    let idx = horizon_indices(grid, horizons)?;
    let t0 = grid.t_min();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(idx.len());
    let mut next = 0;
    for step in grid.steps(0, *idx.last().expect("nonempty")) {
        acc += if step.dense {
            lambda.re * step.width()
        } else {
            let mu = step.width();
            region_integrand(mu, lambda).map_err(|e| match e {
                Error::RegressivityBoundary { .. } => Error::RegressivityBoundary { t: step.t },
                other => other,
            })? * mu
        };
        if step.index + 1 == idx[next] {
            values.push(acc / (step.next - t0));
            next += 1;
        }
    }
    let tail_max = values[values.len() / 2..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let region = if tail_max < -delta {
        Region::Inside
    } else if tail_max > delta {
        Region::Outside
    } else {
        Region::Marginal
    };
    Ok(StabilityRegionQuery {
        lambda,
        horizons: horizons.to_vec(),
        values,
        tail_max,
        delta,
        region,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVerdict {
    pub eigenvalues: Vec<StabilityRegionQuery>,
    pub verdict: Verdict,
    pub notion: Notion,
}

/// Exponential stability of a time-invariant `A` from the location of its spectrum.
pub fn exp_stable_spectrum(
    a: &DMatrix<f64>,
    grid: &TimeScaleGrid,
    horizons: &[f64],
    delta: f64,
) -> Result<SpectrumVerdict> {
    let eigenvalues = linalg::eigenvalues(a)?
        .into_iter()
        .map(|l| in_stability_region(grid, l, horizons, delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumVerdict {
        verdict: region_verdict(eigenvalues.iter().map(|q| q.region)),
        eigenvalues,
        notion: Notion::ExponentialRate,
    })
}

fn region_verdict(regions: impl Iterator<Item = Region>) -> Verdict {
    let mut verdict = Verdict::Stable;
    for r in regions {
        match r {
            Region::Outside => return Verdict::Unstable,
            Region::Marginal => verdict = Verdict::Marginal,
            Region::Inside => {}
        }
    }
    verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `β` with `∫ ‖Φ(t, t0)‖ Δt ≤ β`.
    ExpIntegral,
    /// `ρ` with `∫_τ^t ‖G(t, σ(s))‖ Δs ≤ ρ`.
    BiboTv,
    /// `β` with `∫ ‖G(t)‖ Δt ≤ β`.
    BiboTi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Converged,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub kind: BoundKind,
    pub horizons: Vec<f64>,
    /// Partial values per horizon, nondecreasing.
    pub partials: Vec<f64>,
    pub convergence: Convergence,
    /// Last increment of the partial sequence.
    pub tail: f64,
    pub relative_tolerance: f64,
    /// The TV sup was taken over a subsample of targets.
    pub sampled: bool,
}

impl BoundEstimate {
    pub fn converged(&self) -> bool {
        self.convergence == Convergence::Converged
    }

    /// The bound itself when the partials have converged.
    pub fn value(&self) -> Option<f64> {
        self.converged().then(|| *self.partials.last().expect("nonempty"))
    }

    pub fn verdict(&self) -> Verdict {
        match self.convergence {
            Convergence::Converged => Verdict::Stable,
            Convergence::Divergent => Verdict::Unstable,
            Convergence::Inconclusive => Verdict::Inconclusive,
        }
    }

    pub fn notion(&self) -> Notion {
        match self.kind {
            BoundKind::ExpIntegral => Notion::ExponentialTimeScaleBound,
            BoundKind::BiboTv => Notion::BiboTimeVarying,
            BoundKind::BiboTi => Notion::BiboTimeInvariant,
        }
    }
}

/// Converged when the last increment is below `CONVERGENCE_RTOL` of the value;
/// divergent when the growth rate over the last horizon step is at least the
/// largest rate seen over the first half of the schedule.
fn classify(t0: f64, horizons: &[f64], partials: &[f64]) -> (Convergence, f64) {
    let k = partials.len();
    let last = partials[k - 1];
    if !last.is_finite() {
        return (Convergence::Divergent, f64::INFINITY);
    }
    let prev = if k >= 2 { partials[k - 2] } else { 0.0 };
    let tail = last - prev;
    if k >= 2 && tail <= CONVERGENCE_RTOL * last {
        return (Convergence::Converged, tail);
    }
    if k == 1 {
        let c = if last == 0.0 {
            Convergence::Converged
        } else {
            Convergence::Inconclusive
        };
        return (c, tail);
    }
    let rate = |i: usize| {
        let (p0, s0) = if i == 0 {
            (0.0, t0)
        } else {
            (partials[i - 1], horizons[i - 1])
        };
        (partials[i] - p0) / (horizons[i] - s0)
    };
    let early = (0..(k / 2).max(1)).map(rate).fold(0.0, f64::max);
    if rate(k - 1) > 0.0 && rate(k - 1) >= early {
        (Convergence::Divergent, tail)
    } else {
        (Convergence::Inconclusive, tail)
    }
}

const OVERFLOW_GUARD: f64 = 1e150;

/// Partials of `∫_{t0}^{T_i} f(Φ(t, t0), t) Δt` with the grid quadrature.
fn transition_integral<F>(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    idx: &[usize],
    mut f: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&DMatrix<f64>, f64) -> Result<f64>,
{
    let n = sys.n();
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut fk = f(&phi, grid.time(0))?;
    let mut acc = 0.0;
    let mut partials = Vec::with_capacity(idx.len());
    let mut next = 0;
    for step in grid.steps(0, *idx.last().expect("nonempty")) {
        let ops = dynamics::step_ops(sys, &step, grid.mu_at(step.index), false)?;
        phi = ops.state * phi;
        let fnext = f(&phi, step.next)?;
        acc += if step.dense {
            0.5 * step.width() * (fk + fnext)
        } else {
            step.width() * fk
        };
        fk = fnext;
        if step.index + 1 == idx[next] {
            partials.push(acc);
            next += 1;
        }
        if !acc.is_finite() || fk > OVERFLOW_GUARD {
            partials.resize(idx.len(), f64::INFINITY);
            break;
        }
    }
    Ok(partials)
}

/// Integral criterion for uniform exponential stability: partials of
/// `∫_{t0}^{T_i} ‖Φ(t, t0)‖ Δt`, with `t0` the grid start.
pub fn exp_stable_integral(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    horizons: &[f64],
) -> Result<BoundEstimate> {
    let idx = horizon_indices(grid, horizons)?;
    let partials = transition_integral(sys, grid, &idx, |phi, _| Ok(linalg::spectral_norm(phi)))?;
    Ok(estimate(BoundKind::ExpIntegral, grid, horizons, partials, false))
}

fn estimate(
    kind: BoundKind,
    grid: &TimeScaleGrid,
    horizons: &[f64],
    partials: Vec<f64>,
    sampled: bool,
) -> BoundEstimate {
    let (convergence, tail) = classify(grid.t_min(), horizons, &partials);
    BoundEstimate {
        kind,
        horizons: horizons.to_vec(),
        partials,
        convergence,
        tail,
        relative_tolerance: CONVERGENCE_RTOL,
        sampled,
    }
}

/// `f_0 .. f_jmax` for the scalar `λ` on `[t0, t)`.
pub fn f_sequence(
    grid: &TimeScaleGrid,
    lambda: C64,
    t0: f64,
    t: f64,
    jmax: usize,
) -> Result<Vec<C64>> {
    if jmax > 3 {
        return Err(Error::UnsupportedOrder(jmax));
    }
    let (i0, it) = grid.span(t0, t)?;
    let one = C64::new(1.0, 0.0);
    let (mut i1, mut i2, mut i3) = (C64::default(), C64::default(), C64::default());
    for step in grid.steps(i0, it) {
        let mu = step.width();
        if step.dense {
            i1 += mu;
            continue;
        }
        let d = one + lambda * mu;
        if d.norm() <= REGRESSIVITY_RTOL * (1.0 + lambda.norm() * mu) {
            return Err(Error::RegressivityBoundary { t: step.t });
        }
        i1 += mu / d;
        i2 += mu * mu / (d * d);
        i3 += 2.0 * mu * mu * mu / (d * d * d);
    }
    let all = [
        one,
        i1,
        i1 * i1 - i2,
        i1 * i1 * i1 - 3.0 * i2 * i1 + i3,
    ];
    Ok(all[..=jmax].to_vec())
}

/// `e_A(t, t0)` from the resolvent partial fractions of `A`.
pub fn spectral_exponential(
    a: &DMatrix<f64>,
    grid: &TimeScaleGrid,
    t0: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let pf = realization::partial_fractions(a)?;
    spectral_exponential_from(&pf, grid, t0, t)
}

pub fn spectral_exponential_from(
    pf: &realization::PartialFractions,
    grid: &TimeScaleGrid,
    t0: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let psi = pf.max_multiplicity();
    if psi > MAX_MULTIPLICITY {
        return Err(Error::MultiplicityTooHigh(psi));
    }
    let n = pf.residues.first().map_or(0, |w| w[0].nrows());
    let mut sum = DMatrix::<C64>::zeros(n, n);
    for (k, &lambda) in pf.eigenvalues.iter().enumerate() {
        let psi_k = pf.multiplicities[k];
        let f = f_sequence(grid, lambda, t0, t, psi_k - 1)?;
        let e = dynamics::scalar_exp(grid, lambda, t, t0)?;
        let mut factorial = 1.0;
        for j in 1..=psi_k {
            if j > 1 {
                factorial *= (j - 1) as f64;
            }
            sum += &pf.residues[k][j - 1] * (f[j - 1] / factorial * e);
        }
    }
    Ok(sum.map(|z| z.re))
}

/// Time-varying BIBO criterion: `ρ(T_i)` is the largest
/// `∫_τ^t ‖C(t) Φ(t, σ(s)) B(s)‖ Δs` over sampled `τ ≤ t ≤ T_i`.
///
/// The integrand is nonnegative, so for each `t` the sup over `τ` is attained at
/// the grid start; the triangle reduces to one integral per target `t`.
pub fn bibo_tv_integral(
    sys: &LinearSystem,
    grid: &TimeScaleGrid,
    horizons: &[f64],
) -> Result<BoundEstimate> {
    let idx = horizon_indices(grid, horizons)?;
    let h = *idx.last().expect("nonempty");
    let steps: Vec<_> = grid.steps(0, h).collect();
    let m = dynamics::step_matrices(sys, grid, 0, h)?;
    let b = (0..=h).map(|j| sys.b.at(grid.time(j))).collect::<Result<Vec<_>>>()?;

    let s_at = |k: usize| -> Result<f64> {
        let mut r = sys.c.at(grid.time(k))?;
        let mut acc = 0.0;
        let mut g_right = None;
        for j in (0..k).rev() {
            let st = &steps[j];
            if st.dense {
                let right = g_right.unwrap_or_else(|| linalg::spectral_norm(&(&r * &b[j + 1])));
                r = &r * &m[j];
                let left = linalg::spectral_norm(&(&r * &b[j]));
                acc += 0.5 * st.width() * (left + right);
                g_right = Some(left);
            } else {
                acc += st.width() * linalg::spectral_norm(&(&r * &b[j]));
                r = &r * &m[j];
                g_right = None;
            }
            if !acc.is_finite() || acc > OVERFLOW_GUARD {
                return Ok(f64::INFINITY);
            }
        }
        Ok(acc)
    };

    let mut s = vec![None; h + 1];
    let sampled = h > FULL_TRIANGLE_LIMIT;
    if sampled {
        let stride = h.div_ceil(FULL_TRIANGLE_LIMIT);
        let mut targets: Vec<usize> = (stride..=h).step_by(stride).collect();
        targets.extend_from_slice(&idx);
        for k in targets {
            s[k] = Some(s_at(k)?);
        }
        let worst = (0..=h)
            .filter_map(|k| s[k].map(|v| (k, v)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map_or(h, |(k, _)| k);
        for k in worst.saturating_sub(stride).max(1)..=(worst + stride).min(h) {
            if s[k].is_none() {
                s[k] = Some(s_at(k)?);
            }
        }
    } else {
        for (k, slot) in s.iter_mut().enumerate().skip(1) {
            *slot = Some(s_at(k)?);
        }
    }

    let mut partials = Vec::with_capacity(idx.len());
    let mut running: f64 = 0.0;
    let mut k = 0;
    for &hi in &idx {
        while k <= hi {
            if let Some(v) = s[k] {
                running = running.max(v);
            }
            k += 1;
        }
        partials.push(running);
    }
    Ok(estimate(BoundKind::BiboTv, grid, horizons, partials, sampled))
}

/// A pole of a transfer function, exact when rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub value: C64,
    pub exact: Option<Q>,
    pub query: StabilityRegionQuery,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiboTiVerdict {
    pub integral: BoundEstimate,
    pub poles: Vec<Pole>,
    pub pole_verdict: Verdict,
    pub minimality: Option<MinimalityVerdict>,
    pub routes_agree: bool,
    pub warning: Option<String>,
    /// The integral route decides.
    pub verdict: Verdict,
}

/// Distinct roots of `p`: rational ones exactly, the rest numerically.
fn distinct_roots(p: &Poly) -> Result<Vec<(C64, Option<Q>)>> {
    let sf = p.squarefree();
    let mut out = Vec::new();
    let mut rest = sf.clone();
    for (r, _) in sf.rational_roots() {
        rest = rest.divmod(&Poly::linear_root(&r))?.0;
        out.push((C64::new(q_to_f64(&r), 0.0), Some(r)));
    }
    if rest.degree().unwrap_or(0) > 0 {
        out.extend(rest.roots()?.into_iter().map(|z| (z, None)));
    }
    Ok(out)
}

/// Poles of a reduced transfer-function matrix.
pub fn transfer_poles(g: &RationalMatrix) -> Result<Vec<(C64, Option<Q>)>> {
    let den = g
        .entries()
        .iter()
        .fold(Poly::one(), |acc, e| Poly::lcm(&acc, e.den()));
    distinct_roots(&den)
}

/// BIBO stability of a time-invariant realization by the impulse-response
/// integral and by pole location.
pub fn bibo_ti(
    r: &Realization,
    grid: &TimeScaleGrid,
    horizons: &[f64],
    delta: f64,
) -> Result<BiboTiVerdict> {
    let g = realization::transfer_function(r)?;
    let minimality = realization::is_minimal(r)?;
    let warning = (!minimality.minimal).then(|| {
        "realization is not minimal: pole cancellation may hide unstable modes; \
         the integral route is authoritative"
            .to_string()
    });
    bibo_ti_inner(r, &g, Some(minimality), warning, grid, horizons, delta)
}

/// BIBO stability of a strictly proper transfer function, realized in companion form.
pub fn bibo_ti_transfer(
    g: &RationalMatrix,
    grid: &TimeScaleGrid,
    horizons: &[f64],
    delta: f64,
) -> Result<BiboTiVerdict> {
    let r = realization::companion_realization(g)?;
    bibo_ti_inner(&r, g, None, None, grid, horizons, delta)
}

fn bibo_ti_inner(
    r: &Realization,
    g: &RationalMatrix,
    minimality: Option<MinimalityVerdict>,
    warning: Option<String>,
    grid: &TimeScaleGrid,
    horizons: &[f64],
    delta: f64,
) -> Result<BiboTiVerdict> {
    let idx = horizon_indices(grid, horizons)?;
    let integral = if r.dims().0 == 0 || g.is_zero() {
        estimate(BoundKind::BiboTi, grid, horizons, vec![0.0; idx.len()], false)
    } else {
        let sys = r.to_system()?;
        let (_, b, c) = r.to_f64();
        let partials =
            transition_integral(&sys, grid, &idx, |phi, _| Ok(linalg::spectral_norm(&(&c * phi * &b))))?;
        estimate(BoundKind::BiboTi, grid, horizons, partials, false)
    };
    let poles = transfer_poles(g)?
        .into_iter()
        .map(|(value, exact)| {
            in_stability_region(grid, value, horizons, delta).map(|query| Pole { value, exact, query })
        })
        .collect::<Result<Vec<_>>>()?;
    let pole_verdict = region_verdict(poles.iter().map(|p| p.query.region));
    let verdict = integral.verdict();
    Ok(BiboTiVerdict {
        routes_agree: verdict == pole_verdict,
        integral,
        poles,
        pole_verdict,
        minimality,
        warning,
        verdict,
    })
}

//! Random-system ensembles shared by the property suites and the acceptance run.

use nalgebra::DMatrix;
use rand::Rng;

use super::*;
use tscale::dynamics::{check_regressive, LinearSystem};
use tscale::gramian::{controllability_gramian, observability_gramian};
use tscale::linalg::{self, singular_values, C64};
use tscale::ranktests::*;
use tscale::realization::{is_minimal, Realization};
use tscale::stability::*;
use tscale::timescale::TimeScaleGrid;

pub const DELTA: f64 = 1e-3;
/// Systems whose growth exponent is this close to zero are marginal and skipped.
pub const MARGINAL_BAND: f64 = 0.05;

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub positive: usize,
    pub skipped: usize,
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} checked ({} positive, {} skipped)", self.checked, self.positive, self.skipped)
    }
}

fn system(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> LinearSystem {
    LinearSystem::time_invariant(a, b, c).unwrap()
}

/// Growth exponent of `λ` on a scale of constant graininess `mu`.
pub fn closed_form(mu: f64, lam: C64) -> f64 {
    if mu == 0.0 {
        lam.re
    } else {
        (C64::new(1.0, 0.0) + lam * mu).norm().ln() / mu
    }
}

/// Smallest relative singular value of the Kalman matrix.
pub fn kalman_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s = singular_values(&controllability_matrix(a, b).unwrap());
    if s[0] == 0.0 {
        return 0.0;
    }
    s[a.nrows() - 1] / s[0]
}

/// Gramian invertibility, Kalman rank and PBH (and their duals) on random pairs
/// whose exact controllable dimension is known.
pub fn controllability_equivalence(seed: u64, count: usize) -> Result<Tally, String> {
    let mut r = rng(seed);
    let grids = [z(0, 6), continuous(0.0, 4.0, 0.02), mixed(1)];
    let mut t = Tally::default();
    while t.checked < count {
        let n = r.random_range(1..=4);
        let m = r.random_range(1..=2);
        let (a, b, exact_rank) = random_pair(&mut r, n, m, 0.375);
        let controllable = exact_rank == n;
        // numerically indistinguishable from uncontrollable
        if controllable && kalman_margin(&a, &b) < 1e-6 {
            t.skipped += 1;
            continue;
        }
        let g = &grids[t.checked % grids.len()];
        let sys = system(a.clone(), b.clone(), b.transpose());
        // strongly contracting steps make Φ(t0, σ(t)) blow up and push the
        // Gramian past the relative definiteness threshold
        if check_regressive(&sys, g).unwrap().worst_condition_number > 20.0 {
            t.skipped += 1;
            continue;
        }
        let kalman = kalman_controllability(&a, &b, None).unwrap();
        let pbh = pbh_controllability(&a, &b, None).unwrap();
        let gram = controllability_gramian(&sys, g, g.t_min(), g.t_max()).unwrap();
        let dual = system(a.transpose(), b.clone(), b.transpose());
        let kal_o = kalman_observability(&a.transpose(), &b.transpose(), None).unwrap();
        let pbh_o = pbh_observability(&a.transpose(), &b.transpose(), None).unwrap();
        let gram_o = observability_gramian(&dual, g, g.t_min(), g.t_max()).unwrap();
        let verdicts = [
            kalman.rank == exact_rank,
            pbh.pass == controllable,
            gram.invertible == controllable,
            kal_o.pass == controllable,
            pbh_o.pass == controllable,
            gram_o.invertible == controllable,
        ];
        if verdicts.contains(&false) {
            return Err(format!("counterexample {verdicts:?} on\n{a}{b}"));
        }
        t.positive += usize::from(controllable);
        t.checked += 1;
    }
    Ok(t)
}

/// Spectrum and integral criteria for exponential stability, compared with the
/// classical closed form on a constant-graininess grid.
pub fn exponential_criteria(g: &TimeScaleGrid, mu: f64, horizons: &[f64], seed: u64, count: usize) -> Result<Tally, String> {
    let mut r = rng(seed);
    let mut t = Tally::default();
    while t.checked < count {
        let n = r.random_range(1..=4);
        let a = random_matrix(&mut r, n, n, 0.5);
        let sys = system(a.clone(), DMatrix::zeros(n, 1), DMatrix::zeros(1, n));
        let exps: Vec<f64> = linalg::eigenvalues(&a).unwrap().iter().map(|&l| closed_form(mu, l)).collect();
        let margin = exps.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        if margin < MARGINAL_BAND || !check_regressive(&sys, g).unwrap().ok {
            t.skipped += 1;
            continue;
        }
        let stable = exps.iter().all(|&e| e < 0.0);
        let expected = if stable { Verdict::Stable } else { Verdict::Unstable };
        let spec = exp_stable_spectrum(&a, g, horizons, DELTA).unwrap().verdict;
        let integral = exp_stable_integral(&sys, g, horizons).unwrap();
        if spec != expected || integral.verdict() != expected {
            return Err(format!(
                "expected {expected:?}, spectrum {spec:?}, integral {:?} {:?} on\n{a}",
                integral.verdict(),
                integral.partials
            ));
        }
        t.positive += usize::from(stable);
        t.checked += 1;
    }
    Ok(t)
}

/// Pole route, integral route and exponential stability on minimal realizations over Z.
pub fn bibo_routes(seed: u64, count: usize) -> Result<Tally, String> {
    let mut r = rng(seed);
    let g = z(0, 400);
    let horizons = [50.0, 100.0, 200.0, 400.0];
    let mut t = Tally::default();
    while t.checked < count {
        let n = r.random_range(1..=3);
        let a = random_matrix(&mut r, n, n, 0.5);
        let b = random_matrix(&mut r, n, 1, 1.0);
        let c = random_matrix(&mut r, 1, n, 1.0);
        let real = Realization::from_f64(&a, &b, &c).unwrap();
        let margin = linalg::eigenvalues(&a)
            .unwrap()
            .iter()
            .map(|&l| closed_form(1.0, l).abs())
            .fold(f64::INFINITY, f64::min);
        let sys = real.to_system().unwrap();
        if !is_minimal(&real).unwrap().minimal || margin < MARGINAL_BAND || !check_regressive(&sys, &g).unwrap().ok {
            t.skipped += 1;
            continue;
        }
        let v = bibo_ti(&real, &g, &horizons, DELTA).unwrap();
        let e = exp_stable_spectrum(&a, &g, &horizons, DELTA).unwrap();
        if !v.routes_agree || v.pole_verdict != v.verdict || e.verdict != v.verdict || v.warning.is_some() {
            return Err(format!(
                "pole {:?}, integral {:?} {:?}, exponential {:?} on\n{a}{b}{c}",
                v.pole_verdict, v.verdict, v.integral.partials, e.verdict
            ));
        }
        t.positive += usize::from(v.verdict == Verdict::Stable);
        t.checked += 1;
    }
    Ok(t)
}

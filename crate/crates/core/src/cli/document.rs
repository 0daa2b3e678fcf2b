//! TOML system documents.
//!
//! ```toml
//! [timescale]
//! spec = "points 0 1 2 3 4 5 6 7 8 9 10"
//!
//! [system]
//! A = [["-8/45", "1/30"], ["-1/45", "-1/10"]]
//! B = [["2"], ["1"]]
//! C = [["3", "4"]]
//!
//! [analysis]
//! horizons = [5, 10]
//! ```
//!
//! Matrix entries are strings (`"p/q"`, integers or decimals, read exactly),
//! TOML integers (exact), TOML floats (accepted but flagged inexact), or arrays
//! of such scalars giving the ascending coefficients of a polynomial in `t`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Coefficient, LinearSystem};
use crate::error::{Error, Result};
use crate::exact::{parse_q, q_to_f64, QMatrix, Q};
use crate::linalg::C64;
use crate::stability::DEFAULT_DELTA;
use crate::timescale::{TimeScaleGrid, TimeScaleSpec};

pub const PRESETS: &[&str] = &["periodic-trig"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Scalar {
    /// Numeric value and, unless the entry was a TOML float, its exact value.
    pub fn resolve(&self) -> Result<(f64, Option<Q>)> {
        match self {
            Scalar::Text(s) => {
                let q = parse_q(s)?;
                Ok((q_to_f64(&q), Some(q)))
            }
            Scalar::Int(i) => Ok((*i as f64, Some(Q::from_integer((*i).into())))),
            Scalar::Float(x) => Ok((*x, None)),
        }
    }

    pub fn value(&self) -> Result<f64> {
        Ok(self.resolve()?.0)
    }

    pub fn exact(q: &Q) -> Self {
        if q.is_integer() {
            if let Ok(i) = i64::try_from(q.numer().clone()) {
                return Scalar::Int(i);
            }
        }
        Scalar::Text(q.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Scalar(Scalar),
    /// Ascending coefficients of a polynomial in `t`.
    Poly(Vec<Scalar>),
}

pub type MatrixRows = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScaleSection {
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixRows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixRows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixRows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xf: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Candidate times for the `K_j` / `L_j` rank tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub timescale: TimeScaleSection,
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub analysis: AnalysisSection,
}

fn is_default(a: &AnalysisSection) -> bool {
    *a == AnalysisSection::default()
}

impl SystemDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("cannot serialize document: {e}")))
    }

    /// Document for an exact time-invariant realization.
    pub fn from_exact(spec: &str, a: &QMatrix, b: &QMatrix, c: &QMatrix) -> Self {
        let rows = |m: &QMatrix| -> MatrixRows {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| Entry::Scalar(Scalar::exact(m.get(i, j)))).collect())
                .collect()
        };
        Self {
            timescale: TimeScaleSection { spec: spec.to_string() },
            system: SystemSection {
                preset: None,
                a: Some(rows(a)),
                b: Some(rows(b)),
                c: Some(rows(c)),
                d: None,
            },
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Section {
    Regressivity,
    Controllability,
    Observability,
    Realization,
    Stability,
}

impl Section {
    pub const ALL: [Section; 5] = [
        Section::Regressivity,
        Section::Controllability,
        Section::Observability,
        Section::Realization,
        Section::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Section::Regressivity => "regressivity",
            Section::Controllability => "controllability",
            Section::Observability => "observability",
            Section::Realization => "realization",
            Section::Stability => "stability",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("analysis.sections: unknown section '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub t0: f64,
    pub tf: f64,
    pub x0: Option<DVector<f64>>,
    pub xf: Option<DVector<f64>>,
    pub horizons: Vec<f64>,
    pub delta: f64,
    pub tol: Option<f64>,
    pub q: usize,
    pub tc: Vec<f64>,
    pub sections: Vec<Section>,
}

/// Exact `(A, B, C)` when every entry of a constant system was given exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactAbc {
    pub a: QMatrix,
    pub b: QMatrix,
    pub c: QMatrix,
}

/// A validated document, ready for analysis.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: TimeScaleGrid,
    pub system: LinearSystem,
    pub exact: Option<ExactAbc>,
    /// Some entry was a TOML float.
    pub inexact_entries: bool,
    pub preset: Option<String>,
    pub options: Options,
}

struct Parsed {
    coeff: Coefficient,
    exact: Option<QMatrix>,
    inexact: bool,
}

fn parse_matrix(name: &str, rows: &MatrixRows) -> Result<Parsed> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Parse(format!("system.{name}: matrix is empty")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Parse(format!(
            "system.{name}: row {} has {} entries, expected {c}",
            i + 1,
            rows[i].len()
        )));
    }
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(r * c);
    let mut exact = Some(Vec::with_capacity(r * c));
    let mut inexact = false;
    let mut varying = false;
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let at = |err: Error| Error::Parse(format!("system.{name}[{}][{}]: {err}", i + 1, j + 1));
            match e {
                Entry::Scalar(s) => {
                    let (v, q) = s.resolve().map_err(at)?;
                    inexact |= q.is_none();
                    match (q, exact.as_mut()) {
                        (Some(q), Some(ex)) => ex.push(q),
                        _ => exact = None,
                    }
                    polys.push(vec![v]);
                }
                Entry::Poly(cs) => {
                    if cs.is_empty() {
                        return Err(at(Error::Parse("empty coefficient list".into())));
                    }
                    let mut p = Vec::with_capacity(cs.len());
                    for s in cs {
                        let (v, q) = s.resolve().map_err(at)?;
                        inexact |= q.is_none();
                        p.push(v);
                    }
                    varying |= p.len() > 1;
                    exact = None;
                    polys.push(p);
                }
            }
        }
    }
    let coeff = if varying {
        polynomial_coefficient(r, c, polys)
    } else {
        Coefficient::Constant(DMatrix::from_row_iterator(r, c, polys.iter().map(|p| p[0])))
    };
    let exact = exact.map(|v| QMatrix::from_vec(r, c, v)).transpose()?;
    Ok(Parsed { coeff, exact, inexact })
}

fn polynomial_coefficient(r: usize, c: usize, polys: Vec<Vec<f64>>) -> Coefficient {
    let polys = Arc::new(polys);
    let value = polys.clone();
    let eval = move |p: &[f64], t: f64, k: usize| -> f64 {
        // k-th derivative by Horner on the differentiated coefficients
        let mut acc = 0.0;
        for (i, &a) in p.iter().enumerate().skip(k).rev() {
            let falling: f64 = (0..k).map(|s| (i - s) as f64).product();
            acc = acc * t + a * falling;
        }
        acc
    };
    Coefficient::varying(r, c, move |t| {
        DMatrix::from_row_iterator(r, c, value.iter().map(|p| eval(p, t, 0)))
    })
    .with_derivatives(move |t, k| {
        DMatrix::from_row_iterator(r, c, polys.iter().map(|p| eval(p, t, k)))
    })
}

fn scalars(name: &str, xs: &[Scalar]) -> Result<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, s)| s.value().map_err(|e| Error::Parse(format!("analysis.{name}[{}]: {e}", i + 1))))
        .collect()
}

/// `e_λ(t, t_min)` for any `t` in the window, continuing exponentially inside intervals.
fn exp_on_grid(grid: &TimeScaleGrid, lambda: f64, t: f64) -> f64 {
    let times = grid.times();
    let i = times.partition_point(|&x| x <= t).saturating_sub(1);
    let base = dynamics::scalar_exp(grid, C64::new(lambda, 0.0), times[i], times[0])
        .map(|z| z.re)
        .unwrap_or(f64::NAN);
    if grid.is_dense(i) {
        base * (lambda * (t - times[i])).exp()
    } else {
        base
    }
}

/// The 2x2 time-varying example with trigonometric coefficients and
/// `C(t) = [1, e_{-1}(t, t0)]`.
fn periodic_trig(grid: &TimeScaleGrid) -> Result<LinearSystem> {
    let a = Coefficient::varying(2, 2, |t| {
        DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, -1.0, -t.sin() - 2.0])
    })
    .with_derivatives(|t, k| {
        let d = -sin_derivative(t, k);
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, d])
    });
    let b = Coefficient::varying(2, 1, |t| DMatrix::from_row_slice(2, 1, &[t.cos(), t.sin()]))
        .with_derivatives(|t, k| {
            DMatrix::from_row_slice(2, 1, &[sin_derivative(t, k + 1), sin_derivative(t, k)])
        });
    let g1 = grid.clone();
    let g2 = grid.clone();
    let c = Coefficient::varying(1, 2, move |t| DMatrix::from_row_slice(1, 2, &[1.0, exp_on_grid(&g1, -1.0, t)]))
        .with_derivatives(move |t, k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            DMatrix::from_row_slice(1, 2, &[0.0, sign * exp_on_grid(&g2, -1.0, t)])
        });
    LinearSystem::new(a, b, c, Coefficient::zeros(1, 1))
}

fn sin_derivative(t: f64, k: usize) -> f64 {
    match k % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    }
}

pub fn preset_system(name: &str, grid: &TimeScaleGrid) -> Result<LinearSystem> {
    match name {
        "periodic-trig" => periodic_trig(grid),
        other => Err(Error::Parse(format!(
            "system.preset: unknown preset '{other}' (known: {})",
            PRESETS.join(", ")
        ))),
    }
}

fn default_horizons(grid: &TimeScaleGrid, t0: f64) -> Vec<f64> {
    let start = grid.index_of(t0).unwrap_or(0);
    let last = grid.last_index();
    let span = last - start;
    let mut out: Vec<f64> = (1..=4)
        .map(|k| start + (k * span).div_ceil(4))
        .filter(|&i| i > start)
        .map(|i| grid.time(i))
        .collect();
    out.dedup();
    out
}

impl Model {
    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let spec: TimeScaleSpec = doc
            .timescale
            .spec
            .parse()
            .map_err(|e| Error::Parse(format!("timescale.spec: {e}")))?;
        let grid = TimeScaleGrid::build(spec)?;
        let sys = &doc.system;

        let (system, exact, inexact, preset) = match &sys.preset {
            Some(name) => {
                if sys.a.is_some() || sys.b.is_some() || sys.c.is_some() || sys.d.is_some() {
                    return Err(Error::Parse(
                        "system: give either a preset or explicit matrices, not both".into(),
                    ));
                }
                (preset_system(name, &grid)?, None, false, Some(name.clone()))
            }
            None => {
                let need = |m: &Option<MatrixRows>, n: &str| {
                    m.as_ref()
                        .ok_or_else(|| Error::Parse(format!("system: missing matrix {n}")))
                        .and_then(|rows| parse_matrix(n, rows))
                };
                let a = need(&sys.a, "A")?;
                let b = need(&sys.b, "B")?;
                let c = need(&sys.c, "C")?;
                let d = sys.d.as_ref().map(|rows| parse_matrix("D", rows)).transpose()?;
                let inexact = a.inexact || b.inexact || c.inexact || d.as_ref().is_some_and(|d| d.inexact);
                let (p, m) = (c.coeff.shape().0, b.coeff.shape().1);
                let d_coeff = d.map_or_else(|| Coefficient::zeros(p, m), |d| d.coeff);
                let exact = match (a.exact, b.exact, c.exact) {
                    (Some(a), Some(b), Some(c)) => Some(ExactAbc { a, b, c }),
                    _ => None,
                };
                let system = LinearSystem::new(a.coeff, b.coeff, c.coeff, d_coeff)?;
                (system, exact, inexact, None)
            }
        };

        let an = &doc.analysis;
        let t0 = an.t0.as_ref().map(Scalar::value).transpose()?.unwrap_or(grid.t_min());
        let tf = an.tf.as_ref().map(Scalar::value).transpose()?.unwrap_or(grid.t_max());
        grid.span(t0, tf)?;
        let n = system.n();
        let vector = |name: &str, xs: &Option<Vec<Scalar>>| -> Result<Option<DVector<f64>>> {
            let Some(xs) = xs else { return Ok(None) };
            let v = scalars(name, xs)?;
            if v.len() != n {
                return Err(Error::Parse(format!("analysis.{name}: {} entries, expected {n}", v.len())));
            }
            Ok(Some(DVector::from_vec(v)))
        };
        let x0 = vector("x0", &an.x0)?;
        let xf = vector("xf", &an.xf)?;
        let horizons = match &an.horizons {
            Some(h) => scalars("horizons", h)?,
            None => default_horizons(&grid, t0),
        };
        let tc = match &an.tc {
            Some(tc) => scalars("tc", tc)?,
            None => vec![t0],
        };
        let sections = match &an.sections {
            Some(names) => {
                let mut s = names.iter().map(|x| Section::parse(x)).collect::<Result<Vec<_>>>()?;
                s.sort();
                s.dedup();
                s
            }
            None => Section::ALL.to_vec(),
        };
        let delta = an.delta_margin.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0) {
            return Err(Error::Parse("analysis.delta_margin must be positive".into()));
        }
        if let Some(tol) = an.tol {
            if !(tol > 0.0) {
                return Err(Error::Parse("analysis.tol must be positive".into()));
            }
        }
        let model = Self {
            options: Options {
                t0,
                tf,
                x0,
                xf,
                horizons,
                delta,
                tol: an.tol,
                q: an.q.unwrap_or(n.max(1)),
                tc,
                sections,
            },
            grid,
            system,
            exact,
            inexact_entries: inexact,
            preset,
        };
        model.validate_options()?;
        Ok(model)
    }

    /// Checks horizon and candidate times against the grid.
    pub fn validate_options(&self) -> Result<()> {
        let o = &self.options;
        if o.horizons.is_empty() {
            return Err(Error::Parse("analysis.horizons: empty schedule".into()));
        }
        let mut prev = self.grid.t_min();
        for &h in &o.horizons {
            self.grid
                .index_of(h)
                .map_err(|e| Error::Parse(format!("analysis.horizons: {e}")))?;
            if h <= prev {
                return Err(Error::Parse(format!(
                    "analysis.horizons: {h} must exceed {prev} (strictly increasing, after the grid start)"
                )));
            }
            prev = h;
        }
        for &t in &o.tc {
            self.grid
                .index_of(t)
                .map_err(|e| Error::Parse(format!("analysis.tc: {e}")))?;
        }
        Ok(())
    }

    pub fn wants(&self, s: Section) -> bool {
        self.options.sections.contains(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
[timescale]
spec = "points 0 1 2 3 4 5 6 7 8 9 10"

[system]
A = [["-8/45", "1/30"], ["-1/45", "-1/10"]]
B = [["2"], ["1"]]
C = [[3, 4]]

[analysis]
x0 = ["5", "2"]
horizons = [5, 10]
"#;

    #[test]
    fn emit_parse_emit_is_fixed_point() {
        let doc = SystemDocument::parse(DEMO).unwrap();
        let once = doc.emit().unwrap();
        let again = SystemDocument::parse(&once).unwrap();
        assert_eq!(again, doc);
        assert_eq!(again.emit().unwrap(), once);
    }

    #[test]
    fn exact_entries_are_kept() {
        let model = Model::from_document(&SystemDocument::parse(DEMO).unwrap()).unwrap();
        let ex = model.exact.unwrap();
        assert_eq!(ex.a.get(0, 0), &crate::exact::q(-8, 45));
        assert!(!model.inexact_entries);
        assert_eq!(model.options.horizons, vec![5.0, 10.0]);
        assert_eq!(model.options.q, 2);
    }

    #[test]
    fn floats_are_flagged() {
        let text = DEMO.replace("[[3, 4]]", "[[3.0, 0.25]]");
        let model = Model::from_document(&SystemDocument::parse(&text).unwrap()).unwrap();
        assert!(model.inexact_entries);
        assert!(model.exact.is_none());
    }

    #[test]
    fn polynomial_entries_vary_in_time() {
        let text = DEMO.replace(r#"B = [["2"], ["1"]]"#, r#"B = [[["0", "1"]], [[1, 0, 2]]]"#);
        let model = Model::from_document(&SystemDocument::parse(&text).unwrap()).unwrap();
        assert!(!model.system.is_time_invariant());
        let b3 = model.system.b.at(3.0).unwrap();
        assert_eq!((b3[(0, 0)], b3[(1, 0)]), (3.0, 19.0));
        let d1 = model.system.b.derivative(3.0, 1).unwrap().unwrap();
        assert_eq!((d1[(0, 0)], d1[(1, 0)]), (1.0, 12.0));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = DEMO.replace(r#"["-1/45", "-1/10"]"#, r#"["-1/45"]"#);
        let err = Model::from_document(&SystemDocument::parse(&bad).unwrap()).unwrap_err();
        assert!(err.to_string().contains("system.A: row 2"), "{err}");
        let bad = DEMO.replace(r#""1/30""#, r#""1/0""#);
        let err = Model::from_document(&SystemDocument::parse(&bad).unwrap()).unwrap_err();
        assert!(err.to_string().contains("system.A[1][2]"), "{err}");
        assert!(SystemDocument::parse("[system]\nA = 1").is_err());
        let unknown = DEMO.replace("[analysis]", "[analysis]\nbogus = 1");
        assert!(SystemDocument::parse(&unknown).is_err());
    }

    #[test]
    fn preset_builds_on_grid() {
        let text = r#"
[timescale]
spec = "interval 0 2 0.1; points 2.4 2.8"

[system]
preset = "periodic-trig"
"#;
        let model = Model::from_document(&SystemDocument::parse(text).unwrap()).unwrap();
        let c = model.system.c.at(2.8).unwrap();
        let expect = (-2.0f64).exp() * 0.6 * 0.6;
        assert!((c[(0, 1)] - expect).abs() < 1e-12);
        let mid = model.system.c.at(1.05).unwrap();
        assert!((mid[(0, 1)] - (-1.05f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn default_horizons_split_the_window() {
        let g = TimeScaleGrid::build(TimeScaleSpec::integers(0, 10)).unwrap();
        assert_eq!(default_horizons(&g, 0.0), vec![3.0, 5.0, 8.0, 10.0]);
    }
}

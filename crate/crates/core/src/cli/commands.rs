use nalgebra::DVector;
use serde_json::{json, Value};

use super::document::{Model, Section, SystemDocument};
use super::report::{self, complex, matrix, num, nums, qmatrix, unavailable, vector, Report};
use crate::dynamics::{self, SignalRole, Trajectory};
use crate::error::{Error, Result};
use crate::exact::{q_to_f64, RationalMatrix};
use crate::gramian::{self, GramianResult};
use crate::ranktests::{self, Decomposition, PbhVerdict, TvRankVerdict};
use crate::realization::{self, Provenance, Realization};
use crate::stability::{self, BoundEstimate, StabilityRegionQuery};
use crate::timescale::TimeScaleGrid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MATH: i32 = 3;

/// 2 for malformed or inconsistent input, 3 for a failed mathematical precondition.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyTimeScale
        | Error::InvalidSegment { .. }
        | Error::OverlappingSegments { .. }
        | Error::NotOnGrid(_)
        | Error::InvalidInterval { .. }
        | Error::FinalPoint(_)
        | Error::Dimension(_)
        | Error::Parse(_)
        | Error::EmptyMatrix
        | Error::MissingSample(_) => EXIT_INPUT,
        _ => EXIT_MATH,
    }
}

pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
    pub document: Option<String>,
    pub code: i32,
}

fn or_unavailable(r: Result<Value>) -> Value {
    r.unwrap_or_else(unavailable)
}

fn header(report: &mut Report, model: &Model, input: &str) {
    let (n, m, p) = model.system.dims();
    report.insert("input", json!(input));
    report.insert(
        "system",
        json!({
            "n": n, "m": m, "p": p,
            "time_invariant": model.system.is_time_invariant(),
            "exact": model.exact.is_some(),
            "inexact_entries": model.inexact_entries,
            "preset": model.preset,
        }),
    );
    report.insert("timescale", timescale_info(&model.grid));
    let o = &model.options;
    report.insert(
        "options",
        json!({
            "t0": num(o.t0), "tf": num(o.tf),
            "horizons": nums(&o.horizons),
            "delta_margin": num(o.delta),
            "tol": o.tol.map(num),
            "q": o.q,
            "tc": nums(&o.tc),
            "sections": o.sections.iter().map(|s| s.name()).collect::<Vec<_>>(),
        }),
    );
}

fn timescale_info(grid: &TimeScaleGrid) -> Value {
    json!({
        "spec": grid.spec().to_string(),
        "points": grid.len(),
        "t_min": num(grid.t_min()),
        "t_max": num(grid.t_max()),
        "mu_max": num(grid.mu_max()),
        "discrete": grid.is_discrete(),
    })
}

fn regressivity(model: &Model) -> Result<(Value, bool)> {
    let r = dynamics::check_regressive(&model.system, &model.grid)?;
    Ok((
        json!({
            "ok": r.ok,
            "worst_condition_number": num(r.worst_condition_number),
            "failing_times": nums(&r.failing_times),
            "relative_tolerance": num(r.relative_tolerance),
        }),
        r.ok,
    ))
}

fn gramian_value(g: &GramianResult) -> Value {
    json!({
        "interval": [num(g.interval.0), num(g.interval.1)],
        "matrix": matrix(&g.matrix),
        "eigen_min": num(g.eigen_min),
        "eigen_max": num(g.eigen_max),
        "condition_number": num(g.condition_number()),
        "invertible": g.invertible,
        "tolerance": num(g.tolerance),
    })
}

fn tv_value(v: &TvRankVerdict, candidates: &[f64]) -> Value {
    json!({
        "verdict": v.verdict,
        "witness": v.witness.map(num),
        "best_rank": v.best_rank,
        "q": v.q,
        "candidates": nums(candidates),
        "derivative_source": v.source,
        "warning": v.warning,
    })
}

fn pbh_value(v: &PbhVerdict) -> Value {
    json!({
        "pass": v.pass,
        "tolerance": num(v.tolerance),
        "note": v.note,
        "eigenvalues": v.checks.iter().map(|c| json!({
            "lambda": complex(c.lambda),
            "sigma_min": num(c.sigma_min),
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "witness": v.witness.as_ref().map(|(l, w)| json!({
            "lambda": complex(*l),
            "vector": w.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        })),
    })
}

fn decomposition_value(d: &Decomposition) -> Value {
    json!({
        "dim": d.dim,
        "n": d.n,
        "trivial": d.trivial,
        "residual": num(d.residual),
        "tolerance": num(d.tolerance),
        "transform": matrix(&d.transform),
        "a_hat": matrix(&d.a_hat),
        "io_hat": matrix(&d.io_hat),
    })
}

#[derive(Clone, Copy)]
enum Dual {
    Controllability,
    Observability,
}

fn duality_section(model: &Model, regressive: bool, dual: Dual) -> Value {
    let sys = &model.system;
    let grid = &model.grid;
    let o = &model.options;
    let mut out = serde_json::Map::new();
    let gram = if !regressive {
        unavailable("system is not regressive on the grid")
    } else {
        or_unavailable(
            match dual {
                Dual::Controllability => gramian::controllability_gramian(sys, grid, o.t0, o.tf),
                Dual::Observability => gramian::observability_gramian(sys, grid, o.t0, o.tf),
            }
            .map(|g| gramian_value(&g)),
        )
    };
    out.insert("gramian".into(), gram);

    if let Some((a, b, c)) = sys.constant_abc() {
        let io = match dual {
            Dual::Controllability => b,
            Dual::Observability => c,
        };
        let kalman = match (&model.exact, dual) {
            (Some(ex), Dual::Controllability) => ranktests::kalman_controllability_exact(&ex.a, &ex.b)
                .map(|v| json!({ "mode": "exact", "matrix": qmatrix(&v.matrix), "rank": v.rank, "n": v.n, "pass": v.pass })),
            (Some(ex), Dual::Observability) => ranktests::kalman_observability_exact(&ex.a, &ex.c)
                .map(|v| json!({ "mode": "exact", "matrix": qmatrix(&v.matrix), "rank": v.rank, "n": v.n, "pass": v.pass })),
            (None, _) => match dual {
                Dual::Controllability => ranktests::kalman_controllability(a, io, o.tol),
                Dual::Observability => ranktests::kalman_observability(a, io, o.tol),
            }
            .map(|v| {
                json!({
                    "mode": "float",
                    "matrix": matrix(&v.matrix),
                    "rank": v.rank,
                    "n": v.n,
                    "pass": v.pass,
                    "singular_values": nums(&v.singular_values),
                    "tolerance": num(v.tolerance),
                })
            }),
        };
        out.insert("kalman".into(), or_unavailable(kalman));
        let pbh = match dual {
            Dual::Controllability => ranktests::pbh_controllability(a, io, o.tol),
            Dual::Observability => ranktests::pbh_observability(a, io, o.tol),
        };
        out.insert("pbh".into(), or_unavailable(pbh.map(|v| pbh_value(&v))));
        let dec = match dual {
            Dual::Controllability => ranktests::controllable_decomposition(a, io, o.tol),
            Dual::Observability => ranktests::observable_decomposition(a, io, o.tol),
        };
        out.insert("decomposition".into(), or_unavailable(dec.map(|d| decomposition_value(&d))));
    }

    let tv = match dual {
        Dual::Controllability => ranktests::tv_controllability_rank(sys, grid, &o.tc, o.q, o.tol),
        Dual::Observability => ranktests::tv_observability_rank(sys, grid, &o.tc, o.q, o.tol),
    };
    let key = match dual {
        Dual::Controllability => "k_sequence",
        Dual::Observability => "l_sequence",
    };
    out.insert(key.into(), or_unavailable(tv.map(|v| tv_value(&v, &o.tc))));
    Value::Object(out)
}

fn realization_of(model: &Model) -> Option<Result<Realization>> {
    if let Some(ex) = &model.exact {
        return Some(Realization::new(ex.a.clone(), ex.b.clone(), ex.c.clone(), Provenance::User));
    }
    model
        .system
        .constant_abc()
        .map(|(a, b, c)| Realization::from_f64(a, b, c))
}

fn realization_section(model: &Model, regressive: bool) -> Value {
    match realization_of(model) {
        Some(r) => or_unavailable(r.and_then(|r| {
            let g = realization::transfer_function(&r)?;
            let m = realization::is_minimal(&r)?;
            let spectrum = realization::rational_spectrum(&r.a)?;
            Ok(json!({
                "mode": if model.exact.is_some() { "exact" } else { "exact image of float entries" },
                "transfer_function": report::rational_matrix(&g),
                "rational_eigenvalues": spectrum.map(|s| s.iter()
                    .map(|(q, k)| json!({ "value": q.to_string(), "multiplicity": k }))
                    .collect::<Vec<_>>()),
                "minimality": {
                    "n": m.n,
                    "controllable_rank": m.controllable_rank,
                    "observable_rank": m.observable_rank,
                    "minimal": m.minimal,
                },
            }))
        })),
        None if !regressive => unavailable("system is not regressive on the grid"),
        None => {
            let o = &model.options;
            or_unavailable(
                realization::is_minimal_tv(&model.system, &model.grid, o.t0, o.tf).map(|m| {
                    json!({
                        "mode": "gramian",
                        "controllability_gramian_invertible": m.controllability.invertible,
                        "observability_gramian_invertible": m.observability.invertible,
                        "minimal": m.minimal,
                    })
                }),
            )
        }
    }
}

fn region_value(q: &StabilityRegionQuery) -> Value {
    json!({
        "lambda": complex(q.lambda),
        "values": nums(&q.values),
        "tail_max": num(q.tail_max),
        "region": q.region.as_str(),
    })
}

fn bound_value(b: &BoundEstimate) -> Value {
    json!({
        "notion": b.notion().label(),
        "horizons": nums(&b.horizons),
        "partials": nums(&b.partials),
        "convergence": format!("{:?}", b.convergence).to_lowercase(),
        "bound": b.value().map(num),
        "tail": num(b.tail),
        "relative_tolerance": num(b.relative_tolerance),
        "sampled": b.sampled,
        "verdict": b.verdict().as_str(),
    })
}

fn stability_section(model: &Model, regressive: bool) -> Value {
    let sys = &model.system;
    let grid = &model.grid;
    let o = &model.options;
    let mut out = serde_json::Map::new();
    out.insert("delta_margin".into(), num(o.delta));
    if let Some((a, _, _)) = sys.constant_abc() {
        let spec = stability::exp_stable_spectrum(a, grid, &o.horizons, o.delta).map(|v| {
            json!({
                "notion": v.notion.label(),
                "verdict": v.verdict.as_str(),
                "eigenvalues": v.eigenvalues.iter().map(region_value).collect::<Vec<_>>(),
            })
        });
        out.insert("spectrum".into(), or_unavailable(spec));
    }
    if !regressive {
        out.insert("exp_integral".into(), unavailable("system is not regressive on the grid"));
        return Value::Object(out);
    }
    out.insert(
        "exp_integral".into(),
        or_unavailable(stability::exp_stable_integral(sys, grid, &o.horizons).map(|b| bound_value(&b))),
    );
    match realization_of(model) {
        Some(r) => {
            let v = r.and_then(|r| stability::bibo_ti(&r, grid, &o.horizons, o.delta)).map(|v| {
                json!({
                    "verdict": v.verdict.as_str(),
                    "integral": bound_value(&v.integral),
                    "poles": v.poles.iter().map(|p| json!({
                        "lambda": complex(p.value),
                        "exact": p.exact.as_ref().map(|q| q.to_string()),
                        "tail_max": num(p.query.tail_max),
                        "region": p.query.region.as_str(),
                    })).collect::<Vec<_>>(),
                    "pole_verdict": v.pole_verdict.as_str(),
                    "routes_agree": v.routes_agree,
                    "minimal": v.minimality.map(|m| m.minimal),
                    "warning": v.warning,
                })
            });
            out.insert("bibo_ti".into(), or_unavailable(v));
        }
        None => {
            out.insert(
                "bibo_tv".into(),
                or_unavailable(stability::bibo_tv_integral(sys, grid, &o.horizons).map(|b| bound_value(&b))),
            );
        }
    }
    Value::Object(out)
}

/// Runs the requested sections. A system that is not regressive still gets
/// its algebraic sections; the exit code then reports the failed precondition.
pub fn analyze(model: &Model, input: &str, command: &str) -> Result<Outcome> {
    let mut report = Report::new(command);
    header(&mut report, model, input);
    let (reg, regressive) = regressivity(model)?;
    if model.wants(Section::Regressivity) {
        report.insert("regressivity", reg);
    }
    if model.wants(Section::Controllability) {
        report.insert("controllability", duality_section(model, regressive, Dual::Controllability));
    }
    if model.wants(Section::Observability) {
        report.insert("observability", duality_section(model, regressive, Dual::Observability));
    }
    if model.wants(Section::Realization) {
        report.insert("realization", realization_section(model, regressive));
    }
    if model.wants(Section::Stability) {
        report.insert("stability", stability_section(model, regressive));
    }
    Ok(Outcome {
        report,
        csv: None,
        document: None,
        code: if regressive { EXIT_OK } else { EXIT_MATH },
    })
}

pub fn stability(model: &Model, input: &str) -> Result<Outcome> {
    let mut m = model.clone();
    m.options.sections = vec![Section::Regressivity, Section::Stability];
    analyze(&m, input, "stability")
}

pub struct SimulateFlags {
    pub u: Option<Vec<f64>>,
    pub steer: Option<Vec<f64>>,
    pub reconstruct: bool,
}

fn csv(model: &Model, xs: &Trajectory, ys: &Trajectory, u: &Trajectory) -> String {
    let (n, m, p) = model.system.dims();
    let mut head = vec!["t".to_string()];
    head.extend((1..=n).map(|i| format!("x{i}")));
    head.extend((1..=p).map(|i| format!("y{i}")));
    head.extend((1..=m).map(|i| format!("u{i}")));
    let mut out = head.join(",");
    out.push('\n');
    for (k, &t) in xs.times().iter().enumerate() {
        let mut row = vec![format!("{t:?}")];
        row.extend(xs.values()[k].iter().map(|v| format!("{v:?}")));
        row.extend(ys.values()[k].iter().map(|v| format!("{v:?}")));
        match u.at(t) {
            Some(uk) => row.extend(uk.iter().map(|v| format!("{v:?}"))),
            None => row.extend(std::iter::repeat_n(String::new(), m)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn simulate(model: &Model, input: &str, flags: &SimulateFlags) -> Result<Outcome> {
    let sys = &model.system;
    let grid = &model.grid;
    let o = &model.options;
    let (n, m, _) = sys.dims();
    let mut report = Report::new("simulate");
    header(&mut report, model, input);
    let x0 = o.x0.clone().unwrap_or_else(|| DVector::zeros(n));

    let mut steering = None;
    let u = if let Some(target) = &flags.steer {
        if target.len() != n {
            return Err(Error::Dimension(format!("--steer has {} entries, expected {n}", target.len())));
        }
        let xf = DVector::from_column_slice(target);
        steering = Some(xf.clone());
        gramian::min_energy_input(sys, grid, o.t0, o.tf, &x0, &xf)?
    } else {
        let v = flags.u.clone().unwrap_or_else(|| vec![0.0; m]);
        if v.len() != m {
            return Err(Error::Dimension(format!("--u has {} entries, expected {m}", v.len())));
        }
        Trajectory::constant(grid, SignalRole::Input, o.t0, o.tf, DVector::from_vec(v))?
    };
    let (xs, ys) = dynamics::simulate(sys, grid, &x0, &u, o.t0, o.tf)?;
    let (tf, x_final) = xs.last().expect("simulation has samples");
    let mut sim = json!({
        "samples": xs.len(),
        "x0": vector(&x0),
        "t_final": num(tf),
        "x_final": vector(x_final),
        "y_final": vector(ys.last().expect("samples").1),
    });
    if let Some(xf) = steering {
        let energy: f64 = grid
            .quadrature(grid.index_of(o.t0)?, grid.index_of(o.tf)?)
            .iter()
            .filter_map(|q| u.at(q.t).map(|v| q.weight * v.norm_squared()))
            .sum();
        sim["steering"] = json!({
            "target": vector(&xf),
            "terminal_error": num((x_final - &xf).norm()),
            "input_energy": num(energy),
        });
    }
    if flags.reconstruct {
        let zero_state = dynamics::simulate(sys, grid, &DVector::zeros(n), &u, o.t0, o.tf)?.1;
        let free: Vec<DVector<f64>> = ys
            .values()
            .iter()
            .zip(zero_state.values())
            .map(|(y, f)| y - f)
            .collect();
        let y_free = Trajectory::new(SignalRole::Output, ys.times().to_vec(), free)?;
        let rec = gramian::reconstruct_initial_state(sys, grid, &y_free, o.t0, o.tf);
        sim["reconstruction"] = or_unavailable(rec.map(|x| {
            json!({
                "x0_estimate": vector(&x),
                "error": num((&x - &x0).norm()),
            })
        }));
    }
    report.insert("simulation", sim);
    Ok(Outcome {
        csv: Some(csv(model, &xs, &ys, &u)),
        report,
        document: None,
        code: EXIT_OK,
    })
}

pub fn realize(g: &RationalMatrix, input: &str, timescale: &str) -> Result<Outcome> {
    let mut report = Report::new("realize");
    report.insert("input", json!(input));
    report.insert("transfer_function", report::rational_matrix(g));
    let r = realization::companion_realization(g)?;
    let (n, m, p) = r.dims();
    let round_trip = realization::transfer_function(&r)? == *g;
    let minimality = realization::is_minimal(&r)?;
    report.insert(
        "realization",
        json!({
            "form": "companion",
            "n": n, "m": m, "p": p,
            "A": qmatrix(&r.a),
            "B": qmatrix(&r.b),
            "C": qmatrix(&r.c),
            "round_trip_exact": round_trip,
            "minimality": {
                "n": minimality.n,
                "controllable_rank": minimality.controllable_rank,
                "observable_rank": minimality.observable_rank,
                "minimal": minimality.minimal,
            },
            "poles": stability::transfer_poles(g)?.iter().map(|(z, q)| json!({
                "lambda": complex(*z),
                "exact": q.as_ref().map(|q| q.to_string()),
            })).collect::<Vec<_>>(),
        }),
    );
    let document = if n > 0 {
        Some(SystemDocument::from_exact(timescale, &r.a, &r.b, &r.c).emit()?)
    } else {
        None
    };
    if !round_trip {
        return Err(Error::Internal("companion realization does not reproduce G".into()));
    }
    Ok(Outcome {
        report,
        csv: None,
        document,
        code: EXIT_OK,
    })
}

/// Exact value of a rational, for flags such as `--horizons 1/2,3`.
pub fn parse_number(s: &str) -> Result<f64> {
    crate::exact::parse_q(s).map(|q| q_to_f64(&q))
}

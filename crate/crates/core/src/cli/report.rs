//! Schema-versioned JSON reports with a flat text mirror.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use crate::exact::{QMatrix, RationalMatrix};
use crate::linalg::C64;

pub const SCHEMA: &str = "tscale-report";
pub const SCHEMA_VERSION: u32 = 1;

/// Reports round floats to 10 significant digits so that they are stable
/// across platforms and harmless to diff.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        return json!("nan");
    }
    if x.is_infinite() {
        return json!(if x > 0.0 { "inf" } else { "-inf" });
    }
    let r: f64 = format!("{x:.9e}").parse().expect("formatted float");
    json!(if r == 0.0 { 0.0 } else { r })
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn vector(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn complex(z: C64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

pub fn qmatrix(m: &QMatrix) -> Value {
    json!(m.to_string_rows())
}

pub fn rational_matrix(g: &RationalMatrix) -> Value {
    let (r, c) = g.shape();
    Value::Array(
        (0..r)
            .map(|i| Value::Array((0..c).map(|j| json!(g.get(i, j).to_entry_string())).collect()))
            .collect(),
    )
}

/// A failed sub-analysis, reported in place of its result.
pub fn unavailable(reason: impl std::fmt::Display) -> Value {
    json!({ "status": "unavailable", "reason": reason.to_string() })
}

pub struct Report {
    body: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut body = Map::new();
        body.insert("schema".into(), json!(SCHEMA));
        body.insert("schema_version".into(), json!(SCHEMA_VERSION));
        body.insert(
            "provenance".into(),
            json!({ "tool": "tscale", "version": env!("CARGO_PKG_VERSION") }),
        );
        body.insert("command".into(), json!(command));
        Self { body }
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.body.insert(key.into(), value);
    }

    pub fn value(&self) -> Value {
        Value::Object(self.body.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.body).expect("report serializes");
        s.push('\n');
        s
    }

    /// One `path = value` line per leaf.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        flatten("", &Value::Object(self.body.clone()), &mut out);
        out
    }
}

fn flatten(path: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = xs.iter().map(leaf).collect();
            out.push_str(&format!("{path} = [{}]\n", items.join(", ")));
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{path}[{i}]"), x, out);
            }
        }
        other => out.push_str(&format!("{path} = {}\n", leaf(other))),
    }
}

fn leaf(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_stable() {
        assert_eq!(num(0.1 + 0.2), json!(0.3));
        assert_eq!(num(-0.0), json!(0.0));
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(1.0 / 3.0), json!(0.3333333333));
    }

    #[test]
    fn text_mirror_flattens() {
        let mut r = Report::new("analyze");
        r.insert("x", json!({ "rank": 2, "rows": [[1, 2], [3, 4]], "tag": "ok" }));
        let t = r.to_text();
        assert!(t.contains("x.rank = 2\n"));
        assert!(t.contains("x.rows[1] = [3, 4]\n"));
        assert!(t.contains("x.tag = ok\n"));
        assert!(t.starts_with("command = analyze\n"));
    }
}

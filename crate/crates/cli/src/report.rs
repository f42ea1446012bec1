//! Reports and their two renderings.
//!
//! JSON objects are `serde_json` maps, which keep keys sorted; floats go
//! through the shortest round-trip formatter, so equal reports give equal
//! bytes.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::grammar::fmt_num;

pub const SCHEMA: &str = "jetmoments.report/1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub residual: f64,
    pub tol: f64,
}

impl Residual {
    /// NaN fails.
    pub fn pass(&self) -> bool {
        self.residual.abs() < self.tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub kind: Option<String>,
    /// Names and values of the evaluation point coordinates.
    pub point: Vec<(String, f64)>,
    pub values: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, Residual>,
    pub warnings: Vec<String>,
    pub non_normative: bool,
}

impl Report {
    pub fn new(command: &str, kind: Option<&str>) -> Self {
        Self {
            command: command.to_string(),
            kind: kind.map(str::to_string),
            point: Vec::new(),
            values: BTreeMap::new(),
            residuals: BTreeMap::new(),
            warnings: Vec::new(),
            non_normative: false,
        }
    }

    pub fn value(&mut self, name: impl Into<String>, v: impl Into<Value>) {
        self.values.insert(name.into(), v.into());
    }

    pub fn residual(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        self.residuals.insert(name.into(), Residual { residual, tol });
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn failures(&self) -> Vec<(&String, &Residual)> {
        self.residuals.iter().filter(|(_, r)| !r.pass()).collect()
    }

    pub fn passed(&self) -> bool {
        self.residuals.values().all(Residual::pass)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("command".into(), json!(self.command));
        if let Some(k) = &self.kind {
            m.insert("kind".into(), json!(k));
        }
        if !self.point.is_empty() {
            let p: Map<String, Value> = self.point.iter().map(|(n, x)| (n.clone(), num(*x))).collect();
            m.insert("point".into(), Value::Object(p));
        }
        m.insert("values".into(), Value::Object(self.values.clone().into_iter().collect()));
        if !self.residuals.is_empty() {
            let r: Map<String, Value> = self
                .residuals
                .iter()
                .map(|(n, r)| (n.clone(), json!({"residual": num(r.residual), "tol": num(r.tol), "pass": r.pass()})))
                .collect();
            m.insert("residuals".into(), Value::Object(r));
            m.insert("pass".into(), json!(self.passed()));
        }
        m.insert("warnings".into(), json!(self.warnings));
        if self.non_normative {
            m.insert("non_normative".into(), json!(true));
        }
        Value::Object(m)
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report values serialize");
        s.push('\n');
        s
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command  {}\n", self.command));
        if let Some(k) = &self.kind {
            out.push_str(&format!("kind     {k}\n"));
        }
        if !self.point.is_empty() {
            let p: Vec<String> = self.point.iter().map(|(n, x)| format!("{n}={}", fmt_num(*x))).collect();
            out.push_str(&format!("point    {}\n", p.join(" ")));
        }
        if self.non_normative {
            out.push_str("note     non-normative (tolerances rescaled)\n");
        }
        let mut rows = Vec::new();
        for (k, v) in &self.values {
            flatten(k, v, &mut rows);
        }
        if !rows.is_empty() {
            out.push_str("\nvalues\n");
            let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
            for (k, v) in rows {
                out.push_str(&format!("  {k:<w$}  {v}\n"));
            }
        }
        if !self.residuals.is_empty() {
            out.push_str("\nresiduals\n");
            let w = self.residuals.keys().map(|k| k.chars().count()).max().unwrap_or(0).max(4);
            out.push_str(&format!("  {:<w$}  {:>24}  {:>10}  status\n", "name", "residual", "tol"));
            for (k, r) in &self.residuals {
                let status = if r.pass() { "pass" } else { "FAIL" };
                out.push_str(&format!("  {k:<w$}  {:>24}  {:>10}  {status}\n", fmt_num(r.residual), fmt_num(r.tol)));
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("\nwarnings\n");
            for w in &self.warnings {
                out.push_str(&format!("  {w}\n"));
            }
        }
        out
    }
}

/// JSON number, or `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => fmt_num(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar_text).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => serde_json::to_string(v).expect("serializable"),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, rows);
            }
        }
        _ => rows.push((prefix.to_string(), scalar_text(v))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("verify", Some("gas"));
        r.point = vec![("T".into(), 2.0), ("p".into(), 1.0)];
        r.value("I2", num(2.5));
        r.value("ideal_gas", true);
        r.value("nested", json!({"b": 1, "a": [0.1, 0.2]}));
        r.residual("F", 1e-17, 1e-10);
        r.residual("bad", 1.0, 1e-10);
        r.residual("nan", f64::NAN, 1e-10);
        r
    }

    #[test]
    fn json_is_sorted_and_schema_tagged() {
        let s = sample().render_json();
        assert_eq!(s, sample().render_json());
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["values"]["I2"].as_f64(), Some(2.5));
        assert_eq!(v["residuals"]["F"]["residual"].as_f64(), Some(1e-17));
        assert_eq!(v["pass"], false);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn floats_survive_json_exactly() {
        let mut r = Report::new("x", None);
        let xs = [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, -123456.789e10];
        r.value("xs", nums(&xs));
        let v: Value = serde_json::from_str(&r.render_json()).unwrap();
        let back: Vec<f64> = v["values"]["xs"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(back, xs);
    }

    #[test]
    fn table_lists_residuals_with_tolerances() {
        let t = sample().render_table();
        let line = t.lines().find(|l| l.trim_start().starts_with("F ")).unwrap();
        assert!(line.contains("1e-17") && line.contains("1e-10") && line.ends_with("pass"), "{line}");
        assert!(t.lines().any(|l| l.trim_start().starts_with("bad") && l.ends_with("FAIL")));
        assert!(t.lines().any(|l| l.trim_start().starts_with("nan") && l.ends_with("FAIL")));
        assert!(t.lines().any(|l| l.trim_start().starts_with("nested.a ") && l.ends_with("[0.1, 0.2]")));
    }
}

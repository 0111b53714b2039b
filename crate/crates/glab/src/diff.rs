use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::report::VOLATILE_KEYS;

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// Absolute tolerances by dotted path or by leaf key; the path wins.
#[derive(Debug, Clone, Default)]
pub struct Tolerances {
    pub default: f64,
    pub by_key: BTreeMap<String, f64>,
}

impl Tolerances {
    fn lookup(&self, path: &str) -> f64 {
        if let Some(t) = self.by_key.get(path) {
            return *t;
        }
        let leaf = path.rsplit('.').next().unwrap_or(path);
        let leaf = leaf.split('[').next().unwrap_or(leaf);
        self.by_key.get(leaf).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Difference {
    pub path: String,
    pub a: Value,
    pub b: Value,
    /// `|a − b|` for numbers.
    pub delta: Option<f64>,
    pub tol: Option<f64>,
}

/// Field-by-field comparison of two run reports.
pub fn report_diff(a: &Value, b: &Value, tol: &Tolerances) -> Result<Vec<Difference>, DiffError> {
    let kind = |v: &Value| v.get("experiment").and_then(Value::as_str).map(str::to_string);
    match (kind(a), kind(b)) {
        (Some(x), Some(y)) if x == y => {}
        (Some(x), Some(y)) => {
            return Err(DiffError::SchemaMismatch(format!("experiments differ: {x} vs {y}")));
        }
        _ => return Err(DiffError::SchemaMismatch("missing `experiment` field".into())),
    }
    let mut out = Vec::new();
    walk("", a, b, tol, &mut out);
    Ok(out)
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn walk(path: &str, a: &Value, b: &Value, tol: &Tolerances, out: &mut Vec<Difference>) {
    let mut push = |delta: Option<f64>, t: Option<f64>| {
        out.push(Difference {
            path: path.to_string(),
            a: a.clone(),
            b: b.clone(),
            delta,
            tol: t,
        })
    };
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                if path.is_empty() && VOLATILE_KEYS.contains(&k.as_str()) {
                    continue;
                }
                let missing = Value::String("<missing>".into());
                walk(
                    &join(path, k),
                    x.get(k).unwrap_or(&missing),
                    y.get(k).unwrap_or(&missing),
                    tol,
                    out,
                );
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                walk(&format!("{path}[{i}]"), p, q, tol, out);
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (p, q) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            let t = tol.lookup(path);
            let delta = (p - q).abs();
            if !(delta <= t) {
                push(Some(delta), Some(t));
            }
        }
        _ if a == b => {}
        _ => push(None, None),
    }
}

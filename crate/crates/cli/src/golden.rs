//! Golden files: selected report fields with the tolerance each one is compared at.
//!
//! ```json
//! {"example": "example2", "radius": 50,
//!  "fields": {"report.alpha": {"value": 0.16666666666666666, "tol": 1e-15}}}
//! ```
//! Paths are dotted, array elements are addressed by index. Strings and booleans
//! compare exactly; numbers compare within `tol` (absolute).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenField {
    pub value: Value,
    #[serde(default)]
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Golden {
    pub example: String,
    pub radius: usize,
    pub fields: BTreeMap<String, GoldenField>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub path: String,
    pub expected: Value,
    pub actual: Option<Value>,
    pub tol: f64,
}

pub fn lookup<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |v, key| match v {
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
        Value::Object(m) => m.get(key),
        _ => None,
    })
}

impl Golden {
    /// Captures `paths` of `doc` with their tolerances.
    pub fn capture(example: &str, radius: usize, doc: &Value, paths: &[(&str, f64)]) -> Result<Self, CliError> {
        let mut fields = BTreeMap::new();
        for &(p, tol) in paths {
            let v = lookup(doc, p).ok_or_else(|| CliError::Usage(format!("report has no field `{p}`")))?;
            fields.insert(p.to_string(), GoldenField { value: v.clone(), tol });
        }
        Ok(Golden {
            example: example.to_string(),
            radius,
            fields,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("golden serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn compare(&self, doc: &Value) -> Vec<Mismatch> {
        let mut out = Vec::new();
        for (path, f) in &self.fields {
            let actual = lookup(doc, path);
            let ok = match (&f.value, actual) {
                (Value::Number(a), Some(Value::Number(b))) => {
                    let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
                    (a - b).abs() <= f.tol
                }
                (expected, Some(v)) => expected == v,
                (_, None) => false,
            };
            if !ok {
                out.push(Mismatch {
                    path: path.clone(),
                    expected: f.value.clone(),
                    actual: actual.cloned(),
                    tol: f.tol,
                });
            }
        }
        out
    }
}

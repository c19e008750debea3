//! Shared helpers for the integration suites: running the binary and
//! validating JSON sidecars against the structural schemas in schemas/.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tileweight")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary failed to launch")
}

pub fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).expect("schema file is not valid JSON")
}

fn type_matches(expected: &str, value: &serde_json::Value) -> bool {
    match expected {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        other => panic!("unknown schema type {other}"),
    }
}

/// Structural subset of JSON Schema: `type` (string or list of strings),
/// `required`, `properties`, `items`. Absent keys are unconstrained.
pub fn validate(schema: &serde_json::Value, value: &serde_json::Value, at: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            serde_json::Value::String(s) => type_matches(s, value),
            serde_json::Value::Array(options) => options
                .iter()
                .any(|s| type_matches(s.as_str().expect("type option"), value)),
            _ => panic!("malformed type at {at}"),
        };
        if !ok {
            return Err(format!("{at}: expected {t} got {value}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
        let obj = value
            .as_object()
            .ok_or_else(|| format!("{at}: required on non-object"))?;
        for key in required {
            let key = key.as_str().expect("required key");
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing required key {key}"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(|p| p.as_object()) {
        if let Some(obj) = value.as_object() {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    validate(sub, v, &format!("{at}.{key}"))?;
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                validate(items, v, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}

pub fn validate_file(schema_name: &str, path: &Path) {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).expect("output is not valid JSON");
    let s = schema(schema_name);
    if let Err(msg) = validate(&s, &value, "$") {
        panic!("{} violates {schema_name}: {msg}", path.display());
    }
}

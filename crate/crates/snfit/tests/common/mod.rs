//! Shared helpers for the integration tests: a minimal JSON-schema checker
//! covering the subset the shipped schemas use (type, enum, properties,
//! required, items).

use serde_json::Value;

fn type_matches(name: &str, instance: &Value) -> bool {
    match name {
        "null" => instance.is_null(),
        "boolean" => instance.is_boolean(),
        "number" => instance.is_number(),
        "integer" => instance.as_i64().is_some() || instance.as_u64().is_some(),
        "string" => instance.is_string(),
        "array" => instance.is_array(),
        "object" => instance.is_object(),
        _ => false,
    }
}

pub fn validate(schema: &Value, instance: &Value, path: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(list) => list.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        if !allowed.iter().any(|name| type_matches(name, instance)) {
            return Err(format!(
                "{path}: expected type {allowed:?}, got {instance}"
            ));
        }
        // null is acceptable when listed; nothing further to check
        if instance.is_null() {
            return Ok(());
        }
    }
    if let Some(options) = schema.get("enum").and_then(|e| e.as_array()) {
        if !options.contains(instance) {
            return Err(format!("{path}: {instance} not in enum {options:?}"));
        }
    }
    if let Some(obj) = instance.as_object() {
        if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
            for key in required.iter().filter_map(|k| k.as_str()) {
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required key {key:?}"));
                }
            }
        }
        if let Some(props) = schema.get("properties").and_then(|p| p.as_object()) {
            for (key, sub) in props {
                if let Some(child) = obj.get(key) {
                    validate(sub, child, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let Some(arr) = instance.as_array() {
        if let Some(items) = schema.get("items") {
            for (i, child) in arr.iter().enumerate() {
                validate(items, child, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

pub fn load_schema(name: &str) -> Value {
    let path = format!("{}/schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!("cannot read schema {path}: {e}")
    }))
    .expect("schema parses")
}

//! A small JSON Schema checker covering the keywords used by the shipped output schema:
//! `type`, `enum`, `required`, `properties`, `additionalProperties` and `items`.

use serde_json::Value;

/// The output schema shipped with the crate.
pub const OUTPUT_SCHEMA: &str = include_str!("../schema/output.schema.json");

pub fn output_schema() -> Value {
    serde_json::from_str(OUTPUT_SCHEMA).expect("shipped schema is valid JSON")
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        _ => false,
    }
}

/// Returns every violation as `path: message`; empty means valid.
pub fn validate(schema: &Value, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, value, "$", &mut errors);
    errors
}

fn check(schema: &Value, v: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(name) => type_matches(name, v),
            Value::Array(names) => names.iter().filter_map(Value::as_str).any(|n| type_matches(n, v)),
            _ => true,
        };
        if !ok {
            errors.push(format!("{path}: expected type {t}, found {v}"));
            return;
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(v) {
            errors.push(format!("{path}: {v} is not one of {}", Value::Array(allowed.clone())));
        }
    }
    if let Value::Object(obj) = v {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    errors.push(format!("{path}: missing required key {key:?}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, child) in obj {
            let child_path = format!("{path}.{key}");
            match props.and_then(|p| p.get(key)) {
                Some(sub) => check(sub, child, &child_path, errors),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errors.push(format!("{child_path}: unexpected key"));
                }
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (v, schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            check(sub, item, &format!("{path}[{i}]"), errors);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn accepts_empty_run() {
        let doc = json!({
            "rows": [],
            "summary": {
                "experiment_id": "e", "command": "stieltjes", "measure": "free", "perturbation": "none",
                "mode": "boundary", "tolerance": null, "entries": [], "failures": []
            }
        });
        assert!(validate(&output_schema(), &doc).is_empty());
    }

    #[test]
    fn reports_paths() {
        let doc = json!({ "rows": [{ "x0": "zero" }], "extra": 1 });
        let errs = validate(&output_schema(), &doc);
        assert!(errs.iter().any(|e| e.starts_with("$: missing required key \"summary\"")));
        assert!(errs.iter().any(|e| e.starts_with("$.extra: unexpected key")));
        assert!(errs.iter().any(|e| e.starts_with("$.rows[0].x0: expected type")));
        assert!(errs.iter().any(|e| e.contains("missing required key \"status\"")));
    }

    #[test]
    fn integer_is_not_any_number() {
        let schema = json!({ "type": "integer" });
        assert!(validate(&schema, &json!(3)).is_empty());
        assert_eq!(validate(&schema, &json!(3.5)).len(), 1);
        assert!(validate(&json!({ "enum": ["a"] }), &json!("b")).len() == 1);
    }
}

//! `summary.json` against the committed JSON Schema, checked with a small
//! validator that covers the keywords the schema uses.

use serde_json::Value;

use semcom::config::default_config;
use semcom::output::{read_records, read_summary, write_outputs, SUMMARY_SCHEMA};
use semcom::policy::PolicyTag;
use semcom::sim::run_simulation;

fn type_ok(ty: &str, v: &Value) -> bool {
    match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "integer" => v.is_i64() || v.is_u64(),
        "number" => v.is_number(),
        "null" => v.is_null(),
        other => panic!("unsupported type {other}"),
    }
}

fn validate(schema: &Value, root: &Value, v: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").expect("local refs only");
        return validate(&root["$defs"][name], root, v, path, errors);
    }
    let mut fail = |msg: String| errors.push(format!("{path}: {msg}"));
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        if !type_ok(ty, v) {
            fail(format!("expected {ty}, got {v}"));
            return;
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            fail(format!("expected {c}, got {v}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            fail(format!("{v} not in {options:?}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(lo) = schema.get("minimum").and_then(Value::as_f64) {
            if x < lo {
                fail(format!("{x} < {lo}"));
            }
        }
        if let Some(hi) = schema.get("maximum").and_then(Value::as_f64) {
            if x > hi {
                fail(format!("{x} > {hi}"));
            }
        }
        if let Some(lo) = schema.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= lo {
                fail(format!("{x} <= {lo}"));
            }
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                fail(format!("missing `{key}`"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
        for (key, child) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(s) => validate(s, root, child, &format!("{path}/{key}"), errors),
                None if closed => errors.push(format!("{path}: unexpected `{key}`")),
                None => {}
            }
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                errors.push(format!("{path}: {} items < {min}", items.len()));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(s, root, item, &format!("{path}/{i}"), errors);
            }
        }
    }
}

fn errors_for(doc: &Value) -> Vec<String> {
    let schema: Value = serde_json::from_str(SUMMARY_SCHEMA).unwrap();
    let mut errors = Vec::new();
    validate(&schema, &schema, doc, "", &mut errors);
    errors
}

#[test]
fn written_summaries_conform_to_schema_for_every_policy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg.slots = 40;
    for tag in [
        PolicyTag::Proposed,
        PolicyTag::PsnrMax,
        PolicyTag::LatencyMin,
        PolicyTag::PsnrFeasible,
    ] {
        let out_dir = dir.path().join(tag.as_str());
        let out = run_simulation(&cfg, tag).unwrap();
        write_outputs(&out, &cfg, &out_dir).unwrap();

        let text = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(errors_for(&doc), Vec::<String>::new(), "{tag:?}");

        let back = read_summary(&out_dir.join("summary.json")).unwrap();
        assert_eq!(back.summary, out.summary);
        let (records, ids) = read_records(&out_dir.join("records.csv")).unwrap();
        assert_eq!(records, out.records);
        assert_eq!(ids, vec![1, 2, 3, 4]);
    }
}

#[test]
fn validator_rejects_broken_summaries() {
    let mut cfg = default_config();
    cfg.slots = 5;
    let out = run_simulation(&cfg, PolicyTag::PsnrMax).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&out, &cfg, dir.path()).unwrap();
    let good: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert!(errors_for(&good).is_empty());

    let mut bad = good.clone();
    bad["schema_version"] = Value::from(2);
    assert_eq!(errors_for(&bad).len(), 1);

    let mut bad = good.clone();
    bad["summary"]["avg_satisfaction_pct"] = Value::from(101.0);
    assert_eq!(errors_for(&bad).len(), 1);

    let mut bad = good.clone();
    bad["summary"]["update_ms"]
        .as_object_mut()
        .unwrap()
        .remove("count");
    assert_eq!(errors_for(&bad).len(), 1);

    let mut bad = good;
    bad["extra"] = Value::from(true);
    assert_eq!(errors_for(&bad).len(), 1);
}

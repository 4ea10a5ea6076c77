//! Canonical JSON emission: sorted keys, no whitespace, floats printed with
//! 17 significant digits. Identical in-memory values always produce
//! identical bytes, which the determinism tests rely on.

use serde_json::Value;

/// Fixed float formatting: 17 significant digits in exponent notation.
/// Round-trips every finite f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a JSON value canonically. Object keys are emitted in sorted
/// order (serde_json's default map is a BTreeMap).
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_f64(n.as_f64().expect("finite number")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write_value(out, v);
            }
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_through_canonical_form() {
        for &v in &[0.0, 1.0, -1.5, 0.99f64.powi(5), 1e-300, std::f64::consts::PI] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "value {v} via {s}");
        }
    }

    #[test]
    fn keys_sorted_and_compact() {
        let v = json!({"b": 1, "a": {"z": true, "y": null}, "c": [1.5]});
        assert_eq!(
            to_canonical_string(&v),
            r#"{"a":{"y":null,"z":true},"b":1,"c":[1.5000000000000000e0]}"#
        );
    }

    #[test]
    fn identical_values_identical_bytes() {
        let a = json!({"x": 0.1 + 0.2});
        let b = json!({"x": 0.1 + 0.2});
        assert_eq!(to_canonical_string(&a), to_canonical_string(&b));
    }
}

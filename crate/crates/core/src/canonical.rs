//! Canonical text encoding shared by model bundles, clips, catalogs and the
//! HTTP API.
//!
//! The encoding is JSON with object keys sorted lexicographically (by byte),
//! numbers written by `serde_json` (shortest round-tripping decimal for
//! floats), two-space indentation, UTF-8 and a single trailing LF. The
//! compact form is identical minus whitespace and is used where one value
//! must fit on a line.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub use serde_json::Error as CanonicalError;

/// Pretty canonical form, terminated by `\n`.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, Some(0), &mut out);
    out.push('\n');
    Ok(out)
}

/// Single-line canonical form (no trailing newline).
pub fn to_compact_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, None, &mut out);
    Ok(out)
}

pub fn from_str<T: DeserializeOwned>(s: &str) -> Result<T, CanonicalError> {
    serde_json::from_str(s)
}

fn indent(out: &mut String, level: usize) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: Option<usize>, out: &mut String) {
    match v {
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Arrays of scalars stay on one line to keep vertex lists readable.
            let flat = items.iter().all(|i| !matches!(i, Value::Array(_) | Value::Object(_)))
                || items.iter().all(is_scalar_array);
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat && level.is_some() {
                        out.push(' ');
                    }
                }
                match level {
                    Some(l) if !flat => {
                        indent(out, l + 1);
                        write_value(item, Some(l + 1), out);
                    }
                    Some(_) => write_value(item, None, out),
                    None => write_value(item, None, out),
                }
            }
            if let (Some(l), false) = (level, flat) {
                indent(out, l);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(l) = level {
                    indent(out, l + 1);
                }
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push(':');
                if level.is_some() {
                    out.push(' ');
                }
                write_value(&map[*k], level.map(|l| l + 1), out);
            }
            if let Some(l) = level {
                indent(out, l);
            }
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn is_scalar_array(v: &Value) -> bool {
    matches!(v, Value::Array(items) if items.iter().all(|i| !matches!(i, Value::Array(_) | Value::Object(_))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_trailing_newline() {
        let v = json!({"b": 1, "a": {"z": [1, 2], "c": 0.1}});
        let s = to_string(&v).unwrap();
        assert_eq!(s, "{\n  \"a\": {\n    \"c\": 0.1,\n    \"z\": [1, 2]\n  },\n  \"b\": 1\n}\n");
        assert_eq!(to_compact_string(&v).unwrap(), r#"{"a":{"c":0.1,"z":[1,2]},"b":1}"#);
    }

    #[test]
    fn nested_scalar_arrays_stay_flat() {
        let v = json!({"v": [[1.5, 2.0], [3.0, -0.0]]});
        let s = to_string(&v).unwrap();
        assert_eq!(s, "{\n  \"v\": [[1.5,2.0], [3.0,-0.0]]\n}\n");
        let back: Value = from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1f64, 1.0 / 3.0, 1e-300, 123456.789, f64::MAX] {
            let s = to_compact_string(&x).unwrap();
            let back: f64 = from_str(&s).unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}

//! Byte-stable number formatting and JSON output.
//!
//! Floats are written with at most 17 significant digits (enough to round-trip
//! any `f64`) and trailing zeros trimmed. Objects are emitted with sorted keys.

use serde_json::Value;

/// Shortest-form-independent decimal rendering with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-7..21).contains(&exp) {
        if exp < 0 {
            out.push_str("0.");
            for _ in 0..(-exp - 1) {
                out.push('0');
            }
            out.push_str(digits);
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                for _ in digits.len()..int_len {
                    out.push('0');
                }
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        }
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push('e');
        out.push_str(&exp.to_string());
    }
    out
}

/// Pretty-printed JSON with sorted keys, 17-digit floats and `null` for
/// non-finite numbers.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

/// Canonical rendering of any serializable value.
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> crate::Result<String> {
    Ok(to_canonical_string(&serde_json::to_value(value)?))
}

/// JSON value for a float: `null` when non-finite.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    let s = format_sig17(x);
                    out.push_str(&s);
                    if !s.contains(['.', 'e']) {
                        out.push_str(".0");
                    }
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (j, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                if j + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (j, key) in keys.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
                if j + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum ProbRepr {
    Text(String),
    Number(f64),
}

impl ProbRepr {
    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            ProbRepr::Number(x) => Ok(x),
            ProbRepr::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| E::custom(format!("`{s}` is not a decimal probability"))),
        }
    }
}

/// Serde adapter: probability written as a 17-digit decimal string, read
/// from either a string or a number.
pub mod prob {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_sig17(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        super::ProbRepr::deserialize(d)?.value()
    }
}

/// [`prob`] for vectors.
pub mod prob_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::format_sig17(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<super::ProbRepr>::deserialize(d)?
            .into_iter()
            .map(|p| p.value())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_sig17(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(format_sig17(0.5), "0.5");
        assert_eq!(format_sig17(1.0), "1");
        assert_eq!(format_sig17(-0.25), "-0.25");
        assert_eq!(format_sig17(1234.5), "1234.5");
        assert_eq!(format_sig17(1e-9), "1.0000000000000001e-9");
        assert_eq!(format_sig17(1e-3), "0.001");
        assert_eq!(format_sig17(0.1), "0.10000000000000001");
    }

    #[test]
    fn round_trips_bit_for_bit() {
        let xs = [
            2.0 / 3.0,
            0.1,
            1.0 / 7.0,
            std::f64::consts::PI,
            1e-300,
            5e-324,
            1.7976931348623157e308,
            0.30000000000000004,
            123456789.123,
        ];
        for x in xs {
            let s = format_sig17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn canonical_json_sorts_keys_and_nulls_non_finite() {
        let v = serde_json::json!({"b": 1, "a": [0.5, 2.0 / 3.0], "c": {"z": true, "y": null}});
        let s = to_canonical_string(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("0.66666666666666663"));
        assert!(s.find("\"y\"").unwrap() < s.find("\"z\"").unwrap());
        assert_eq!(number(f64::INFINITY), Value::Null);
    }
}

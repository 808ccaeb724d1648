//! Round-trip-exact decimal formatting for exported numbers.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{Number, Value};
use std::str::FromStr;

/// Formats `v` with 17 significant digits (scientific notation).
///
/// Seventeen significant digits are sufficient to recover every `f64`
/// bit pattern exactly on re-parse.
pub fn sig17(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of exported files
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

fn rewrite_floats(v: &mut Value) -> Result<()> {
    match v {
        Value::Number(n) if n.to_string().contains(['.', 'e', 'E']) => {
            let f = n.as_f64().ok_or(Error::NonFinite("exported number"))?;
            *n = Number::from_str(&sig17(f)).map_err(|e| Error::Serialization(e.to_string()))?;
        }
        Value::Array(a) => a.iter_mut().try_for_each(rewrite_floats)?,
        Value::Object(o) => o.values_mut().try_for_each(rewrite_floats)?,
        _ => {}
    }
    Ok(())
}

/// Pretty JSON in which every floating-point number carries exactly 17
/// significant digits (integers are left untouched).
pub fn to_exact_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Serialization(e.to_string()))?;
    rewrite_floats(&mut v)?;
    serde_json::to_string_pretty(&v).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for v in [1.0 / 3.0, -2.5e-3, 19.8052, 1e-300, 7.0e22, 0.1 + 0.2] {
            let s = sig17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[derive(Serialize, serde::Deserialize, PartialEq, Debug)]
    struct Doc {
        count: usize,
        values: Vec<f64>,
        offset: Vec<i64>,
    }

    #[test]
    fn exact_json_round_trip() {
        let d = Doc { count: 3, values: vec![0.1, -3.25, 1.0 / 7.0, 1.0], offset: vec![-1, 2] };
        let text = to_exact_json(&d).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(text.contains("1.0000000000000000e+0"), "{text}");
        assert!(text.contains("\"count\": 3"));
        let back: Doc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }
}

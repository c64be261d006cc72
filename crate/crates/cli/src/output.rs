//! Deterministic output rendering: fixed-precision float formatting and a
//! JSON printer built on it.
//!
//! serde_json's default float rendering is shortest-round-trip, which is not
//! stable across rewrites of the algorithm; golden outputs instead pin every
//! float to 12 significant digits in printf `%g` style (fixed notation for
//! moderate exponents, scientific otherwise, trailing zeros trimmed).

use serde_json::Value;

pub const JSON_SIG_DIGITS: usize = 12;
pub const CSV_SIG_DIGITS: usize = 17;

/// Format with `sig` significant digits, `%g`-style.
pub fn format_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round to `sig` digits via scientific formatting, then re-render.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("{:e} always has an exponent");
    let exp: i32 = exp_str.parse().expect("exponent is an integer");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if exp < -4 || exp >= sig as i32 {
        let trimmed = digits.trim_end_matches('0');
        let head = &trimmed[..1];
        let tail = &trimmed[1..];
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    } else if exp >= 0 {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{}{}", digits, "0".repeat(point - digits.len()))
        } else {
            let frac = digits[point..].trim_end_matches('0');
            if frac.is_empty() {
                digits[..point].to_string()
            } else {
                format!("{}.{}", &digits[..point], frac)
            }
        }
    } else {
        let zeros = (-exp - 1) as usize;
        let frac_digits = digits.trim_end_matches('0');
        format!("0.{}{}", "0".repeat(zeros), frac_digits)
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Build a JSON number value, spelling non-finite floats as strings.
pub fn num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(format_sig(x, JSON_SIG_DIGITS)),
    }
}

/// Render a JSON value compactly with deterministic key order (serde_json's
/// default map is ordered) and all floats at [`JSON_SIG_DIGITS`].
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_sig(n.as_f64().expect("finite"), JSON_SIG_DIGITS));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("keys always serialize"));
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

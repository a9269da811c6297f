//! JSON rendering of reports and trajectories.
//!
//! Reals are written as strings holding a positional decimal with 17
//! significant digits, so that reports round-trip exactly and compare
//! byte-for-byte across runs.

use serde_json::{json, Map, Value};

use crate::apps::RoundingReport;
use crate::rounding::RoundingTrajectory;

/// Positional decimal with 17 significant digits; `"NaN"`, `"inf"` and
/// `"-inf"` for non-finite input.
///
/// ```
/// assert_eq!(pipage::report::fmt_real(0.1), "0.10000000000000001");
/// assert_eq!(pipage::report::fmt_real(-250.0), "-250.00000000000000");
/// ```
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v.is_sign_negative() && v != 0.0 { "-" } else { "" };
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{}{}", digits, "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    format!("{sign}{body}")
}

pub fn real(v: f64) -> Value {
    Value::String(fmt_real(v))
}

pub fn reals(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| real(x)).collect())
}

fn opt_real(v: Option<f64>) -> Value {
    v.map_or(Value::Null, real)
}

impl RoundingTrajectory {
    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| json!({ "a": s.a, "b": s.b, "z": real(s.z), "g": opt_real(s.g) }))
            .collect();
        json!({
            "start": reals(&self.start),
            "steps": steps,
            "end": reals(&self.end),
            "seed": self.seed,
            "snap_distance": real(self.snap_distance),
        })
    }
}

impl RoundingReport {
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("selected".into(), json!(self.selected));
        map.insert("alpha_achieved".into(), real(self.alpha_achieved));
        map.insert("alpha_certified".into(), real(self.alpha_certified));
        map.insert("bound_value".into(), real(self.bound_value));
        map.insert("mode".into(), json!(self.mode.as_str()));
        map.insert("seed".into(), json!(self.seed));
        map.insert("trajectory".into(), self.trajectory.to_json());
        Value::Object(map)
    }
}

/// Pretty-printed JSON followed by a newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(1.0), "1.0000000000000000");
        assert_eq!(fmt_real(0.0), "0.0000000000000000");
        assert_eq!(fmt_real(-0.0), "0.0000000000000000");
        assert_eq!(fmt_real(1.5e-3), "0.0015000000000000000");
        assert_eq!(fmt_real(1e20), "100000000000000000000");
        assert_eq!(fmt_real(f64::NAN), "NaN");
        assert_eq!(fmt_real(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn round_trips() {
        for v in [
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02214076e23,
            2.2250738585072014e-308,
            -7.25,
        ] {
            let back: f64 = fmt_real(v).parse().unwrap();
            assert_eq!(back, v);
        }
    }
}

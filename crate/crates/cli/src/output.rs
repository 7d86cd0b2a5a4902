use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::experiment::ExperimentResult;

/// Rounds to 12 significant digits so output is stable across platforms.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let text = format!("{:.11e}", x);
    let rounded: f64 = text.parse().unwrap_or(x);
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Applies [`round_sig`] to every float inside a JSON value.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(m) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = m;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_rounded_value<T: Serialize>(item: &T) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(item)?;
    round_floats(&mut v);
    Ok(v)
}

pub fn write_json_line<T: Serialize>(out: &mut dyn Write, item: &T) -> anyhow::Result<()> {
    let v = to_rounded_value(item)?;
    serde_json::to_writer(&mut *out, &v)?;
    writeln!(out)?;
    Ok(())
}

pub const CSV_HEADER: [&str; 13] = [
    "protocol",
    "r",
    "n",
    "k",
    "instance",
    "prover",
    "accept_prob",
    "lambda_max",
    "bound",
    "satisfied",
    "proof_dim",
    "seed",
    "wall_time_ms",
];

fn num(x: f64) -> String {
    let v = round_sig(x);
    format!("{v}")
}

pub fn csv_row(result: &ExperimentResult) -> Vec<String> {
    vec![
        result.protocol.clone(),
        result.r.to_string(),
        result.n.to_string(),
        result.k.to_string(),
        result.instance.clone(),
        result.prover.clone(),
        num(result.accept_prob),
        result.lambda_max.map(num).unwrap_or_default(),
        result.bound.as_ref().map(|b| num(b.value)).unwrap_or_default(),
        result.bound.as_ref().map(|b| b.satisfied.to_string()).unwrap_or_default(),
        result.proof_dimension.map(|d| d.to_string()).unwrap_or_default(),
        result.seed.to_string(),
        result.wall_time_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 - 1e-15), 1.0);
        assert_eq!(round_sig(0.123456789012345), 0.123456789012);
        assert_eq!(round_sig(-2.5e-20), -2.5e-20);
        let mut v = serde_json::json!({"a": [0.30000000000000004, 3], "b": {"c": 0.6545084971874736}});
        round_floats(&mut v);
        assert_eq!(v, serde_json::json!({"a": [0.3, 3], "b": {"c": 0.654508497187}}));
    }
}

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use dqma_core::{BitString, Error};

use crate::config::{ExperimentConfig, InputRule, ProtocolName, SweepConfig};
use crate::experiment::{run_experiment, ExperimentResult, Settings};

/// A cell that could not run because its proof space is too large.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedCell {
    pub skipped: bool,
    pub reason: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Done(Box<ExperimentResult>),
    Skipped(SkippedCell),
}

fn resize(x: &BitString, n: usize) -> BitString {
    let bits: String = x.to_string().chars().chain(std::iter::repeat('0')).take(n).collect();
    bits.parse().expect("binary digits")
}

fn pairs(rule: InputRule, n: usize, x: &BitString, y: &BitString) -> Vec<(BitString, BitString)> {
    let ones: BitString = "1".repeat(n).parse().expect("binary digits");
    match rule {
        InputRule::Template => vec![(resize(x, n), resize(y, n))],
        InputRule::Equal => {
            let v = BitString::from_u64(1, n).unwrap_or_else(|_| BitString::zeros(n));
            vec![(v.clone(), v)]
        }
        InputRule::Distinct => vec![(BitString::zeros(n), ones)],
        InputRule::AllPairs | InputRule::AllDistinct => {
            let all: Vec<BitString> = BitString::all(n).collect();
            let mut out = Vec::new();
            for a in &all {
                for b in &all {
                    if rule == InputRule::AllPairs || a != b {
                        out.push((a.clone(), b.clone()));
                    }
                }
            }
            out
        }
    }
}

fn field<T: serde::de::DeserializeOwned>(params: &Value, key: &str) -> anyhow::Result<Option<T>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => Ok(Some(serde_json::from_value(v.clone())?)),
    }
}

/// Expands the cartesian product of the axes, in row-major order over
/// `r`, `n`, `k`, `scheme`, then generated inputs.
pub fn expand(sweep: &SweepConfig) -> anyhow::Result<Vec<ExperimentConfig>> {
    let template = &sweep.template;
    let params = template.params.as_object().ok_or_else(|| Error::InvalidParameter("params must be an object".into()))?;
    let protocol = template.protocol;
    let opt = |axis: &[usize]| -> Vec<Option<usize>> {
        if axis.is_empty() {
            vec![None]
        } else {
            axis.iter().copied().map(Some).collect()
        }
    };
    let schemes: Vec<Option<&crate::config::SchemeSpec>> =
        if sweep.axes.scheme.is_empty() { vec![None] } else { sweep.axes.scheme.iter().map(Some).collect() };
    let reps_key = if protocol == ProtocolName::EqRelay { "reps_per_segment" } else { "reps" };
    if !sweep.axes.scheme.is_empty()
        && matches!(protocol, ProtocolName::Gt | ProtocolName::GtLt | ProtocolName::GtGe | ProtocolName::GtLe
            | ProtocolName::Rv | ProtocolName::ForallF | ProtocolName::FromOnewayQma)
    {
        return Err(Error::InvalidParameter(format!("{} has no scheme parameter", protocol.as_str())).into());
    }
    if sweep.inputs != InputRule::Template && !protocol.has_pair() {
        return Err(Error::InvalidParameter("generated inputs need a protocol with x and y".into()).into());
    }

    let mut cells = Vec::new();
    for r in opt(&sweep.axes.r) {
        for n in opt(&sweep.axes.n) {
            for k in opt(&sweep.axes.k) {
                for scheme in &schemes {
                    let mut base = params.clone();
                    if let Some(r) = r {
                        if !protocol.has_pair() {
                            return Err(Error::InvalidParameter("the r axis needs a path protocol".into()).into());
                        }
                        base.insert("r".into(), json!(r));
                    }
                    if let Some(k) = k {
                        base.insert(reps_key.into(), json!(k));
                    }
                    if let Some(s) = scheme {
                        base.insert("scheme".into(), serde_json::to_value(s)?);
                    }
                    let generated: Vec<serde_json::Map<String, Value>> = if protocol.has_pair() {
                        let value = Value::Object(base.clone());
                        let x: BitString = field(&value, "x")?.ok_or_else(|| Error::InvalidParameter("missing x".into()))?;
                        let y: BitString = field(&value, "y")?.ok_or_else(|| Error::InvalidParameter("missing y".into()))?;
                        let width = n.unwrap_or(x.len());
                        pairs(sweep.inputs, width, &x, &y)
                            .into_iter()
                            .map(|(a, b)| {
                                let mut m = base.clone();
                                m.insert("x".into(), json!(a.to_string()));
                                m.insert("y".into(), json!(b.to_string()));
                                m
                            })
                            .collect()
                    } else {
                        let mut m = base.clone();
                        if let Some(n) = n {
                            let value = Value::Object(base.clone());
                            let inputs: Vec<BitString> = field(&value, "inputs")?.unwrap_or_default();
                            let resized: Vec<String> = inputs.iter().map(|x| resize(x, n).to_string()).collect();
                            m.insert("inputs".into(), json!(resized));
                        }
                        vec![m]
                    };
                    for m in generated {
                        let mut cell = template.clone();
                        cell.params = Value::Object(m);
                        cells.push(cell);
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Runs every cell in parallel; results keep cell order.
pub fn run_sweep(sweep: &SweepConfig, settings: &Settings) -> anyhow::Result<Vec<CellOutcome>> {
    let cells = expand(sweep)?;
    cells
        .into_par_iter()
        .map(|cell| match run_experiment(&cell, settings) {
            Ok(result) => Ok(CellOutcome::Done(Box::new(result))),
            Err(e) => match e.downcast_ref::<Error>() {
                Some(inner @ Error::DimensionCap { .. }) => {
                    Ok(CellOutcome::Skipped(SkippedCell { skipped: true, reason: inner.to_string(), config: cell }))
                }
                _ => Err(e),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepAxes;

    fn template() -> ExperimentConfig {
        serde_json::from_value(json!({"protocol": "eq_path", "params": {"r": 2, "x": "01", "y": "10"}})).unwrap()
    }

    #[test]
    fn empty_axes_give_one_cell() {
        let sweep = SweepConfig { template: template(), axes: SweepAxes::default(), inputs: InputRule::Template };
        let cells = expand(&sweep).unwrap();
        assert_eq!(cells, vec![template()]);
    }

    #[test]
    fn product_order_and_inputs() {
        let axes = SweepAxes { r: vec![2, 3], n: vec![1, 3], ..Default::default() };
        let sweep = SweepConfig { template: template(), axes, inputs: InputRule::Template };
        let cells = expand(&sweep).unwrap();
        let got: Vec<(u64, String)> = cells
            .iter()
            .map(|c| (c.params["r"].as_u64().unwrap(), c.params["x"].as_str().unwrap().to_string()))
            .collect();
        assert_eq!(got, vec![(2, "0".into()), (2, "010".into()), (3, "0".into()), (3, "010".into())]);
        let sweep = SweepConfig { template: template(), axes: SweepAxes::default(), inputs: InputRule::AllDistinct };
        assert_eq!(expand(&sweep).unwrap().len(), 12);
    }
}

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use dqma_core::adversary::{apply_strategy, ProverStrategy};
use dqma_core::network::{compile, simulate_sampled, ProtocolPipeline};
use dqma_core::protocols::{
    build_eq_path, build_eq_relay, build_eq_tree, build_forall_f, build_from_oneway_qma, build_gt, build_rv,
    gt_adversary_value, path_soundness_bound, Bound, EqPathParams, GtParams, RelayParams, RvParams, TreeParams,
};
use dqma_core::Error;

use crate::config::{
    EqPathConfig, ExperimentConfig, ForallConfig, GtConfig, Mode, ProtocolName, QmaConfig, RelayConfig, RvConfig,
    TreeConfig,
};

/// Command-line settings that apply to every experiment.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: Option<u64>,
    pub dim_cap: Option<usize>,
    pub timing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub formula: String,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledReport {
    pub shots: u64,
    pub seed: u64,
    pub accept_frequency: f64,
    pub accept_stderr: f64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub protocol: String,
    pub r: usize,
    pub n: usize,
    pub k: usize,
    pub instance: String,
    pub prover: String,
    pub accept_prob: f64,
    pub lambda_max: Option<f64>,
    pub per_node_reject: BTreeMap<String, f64>,
    pub bound: Option<BoundReport>,
    pub proof_dimension: Option<u128>,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
    pub sampled: Option<SampledReport>,
    pub details: serde_json::Value,
}

fn parse<T: serde::de::DeserializeOwned>(value: &serde_json::Value, what: &str) -> anyhow::Result<T> {
    serde_json::from_value(value.clone()).with_context(|| format!("invalid params for {what}"))
}

/// Independent verifications whose acceptances multiply.
struct Parts {
    pipelines: Vec<ProtocolPipeline>,
    r: usize,
    n: usize,
    k: usize,
    yes: Option<bool>,
    bound: Option<Bound>,
    /// Overrides the product of per-part optimal values.
    optimum: Option<(f64, serde_json::Value)>,
    details: serde_json::Value,
}

impl Parts {
    fn single(p: ProtocolPipeline, r: usize, n: usize, k: usize) -> Self {
        let yes = p.yes_instance;
        Parts { pipelines: vec![p], r, n, k, yes, bound: None, optimum: None, details: json!({}) }
    }
}

fn build_parts(config: &ExperimentConfig, cap: usize) -> anyhow::Result<Parts> {
    let name = config.protocol.as_str();
    let params = &config.params;
    let wants_opt = matches!(config.prover, ProverStrategy::EntangledOpt);
    Ok(match config.protocol {
        ProtocolName::EqPath => {
            let c: EqPathConfig = parse(params, name)?;
            let n = c.x.len();
            let scheme = c.scheme.build(n, cap)?;
            let mut p = EqPathParams::new(c.r, scheme, c.x, c.y).reps(c.reps).final_test(c.final_test).dim_cap(cap);
            p.gap = c.gap;
            let mut parts = Parts::single(build_eq_path(&p)?, c.r, n, c.reps);
            if parts.yes == Some(false) && c.gap.is_none() {
                parts.bound = Some(path_soundness_bound(c.r, c.reps));
            }
            parts
        }
        ProtocolName::Gt | ProtocolName::GtLt | ProtocolName::GtGe | ProtocolName::GtLe => {
            let variant = config.protocol.gt_variant().expect("comparison protocol");
            let c: GtConfig = parse(params, name)?;
            let n = c.x.len();
            let mut p = GtParams::honest(variant, c.r, c.x, c.y);
            p.reps = c.reps;
            p.node_indices = c.node_indices;
            p.dim_cap = cap;
            let mut optimum = None;
            match c.index {
                Some(i) => p.index = i,
                None if wants_opt && p.node_indices.is_none() => {
                    let (value, best) = gt_adversary_value(&p)?;
                    p.index = best;
                    optimum = Some((value, json!({ "best_index": best })));
                }
                None => {}
            }
            let mut parts = Parts::single(build_gt(&p)?, c.r, n, c.reps);
            parts.details = json!({ "index": p.index });
            parts.optimum = optimum;
            if parts.yes == Some(false) {
                parts.bound = Some(path_soundness_bound(c.r, c.reps));
            }
            parts
        }
        ProtocolName::EqTree => {
            let c: TreeConfig = parse(params, name)?;
            let n = c.inputs.first().map_or(0, |x| x.len());
            let topo = c.topology.build(&c.inputs)?;
            let r = topo.radius();
            let mut p = TreeParams::new(topo);
            p.reps = c.reps;
            p.dim_cap = cap;
            Parts::single(build_eq_tree(&p, &c.scheme.build(n, cap)?)?, r, n, c.reps)
        }
        ProtocolName::ForallF => {
            let c: ForallConfig = parse(params, name)?;
            let n = c.inputs.first().map_or(0, |x| x.len());
            let protocol = c.protocol(cap)?;
            let topo = c.topology.build(&c.inputs)?;
            let r = topo.radius();
            let mut p = TreeParams::new(topo);
            p.reps = c.reps;
            p.dim_cap = cap;
            let pipelines = build_forall_f(&p, &protocol)?;
            let yes = pipelines.iter().try_fold(true, |acc, p| p.yes_instance.map(|y| acc && y));
            Parts { pipelines, r, n, k: c.reps, yes, bound: None, optimum: None, details: json!({}) }
        }
        ProtocolName::EqRelay => {
            let c: RelayConfig = parse(params, name)?;
            let n = c.x.len();
            let mut p = RelayParams::new(c.r, c.x.clone(), c.y.clone());
            p.segment_length = c.segment_length;
            p.reps_per_segment = c.reps_per_segment;
            p.segment_scheme = c.scheme.as_ref().map(|s| s.build(n, cap)).transpose()?;
            p.dim_cap = cap;
            let relay = build_eq_relay(&p)?;
            let pipelines = relay.pipelines(&relay.honest_strings())?;
            let yes = Some(c.x == c.y);
            let bound = (c.x != c.y).then(|| {
                relay
                    .segments()
                    .iter()
                    .map(|&(a, b)| relay.segment_bound(b - a))
                    .fold(None::<Bound>, |acc, b| match acc {
                        Some(a) if a.value >= b.value => Some(a),
                        _ => Some(b),
                    })
                    .expect("at least one segment")
            });
            let optimum = if wants_opt {
                let v = relay.adversary_value()?;
                let strings: Vec<String> = v.strings.iter().map(|s| s.to_string()).collect();
                Some((v.value, json!({ "relay_strings": strings, "segment_values": v.segment_values })))
            } else {
                None
            };
            Parts {
                pipelines,
                r: c.r,
                n,
                k: relay.reps,
                yes,
                bound,
                optimum,
                details: json!({ "segment_length": relay.segment_length, "relays": relay.relays }),
            }
        }
        ProtocolName::FromOnewayQma => {
            let c: QmaConfig = parse(params, name)?;
            let n = c.x.len();
            Parts::single(build_from_oneway_qma(&c.protocol, c.r, &c.x, &c.y, c.reps, cap)?, c.r, n, c.reps)
        }
        ProtocolName::Rv => unreachable!("ranking verification is evaluated separately"),
    })
}

fn run_rv(config: &ExperimentConfig, cap: usize, seed: u64) -> anyhow::Result<ExperimentResult> {
    let c: RvConfig = parse(&config.params, "rv")?;
    let n = c.inputs.first().map_or(0, |x| x.len());
    let topo = c.topology.build(&c.inputs)?;
    let r = topo.radius();
    let model = build_rv(&RvParams { topology: topo, i: c.i, j: c.j, reps: c.reps, dim_cap: cap })?;
    let (accept, lambda) = match &config.prover {
        ProverStrategy::Honest => (model.honest_value, None),
        ProverStrategy::EntangledOpt => (model.value, Some(model.value)),
        other => bail!(Error::InvalidParameter(format!("rv supports honest and entangled_opt provers, not {}", other.name()))),
    };
    if !matches!(config.mode, Mode::Exact) {
        bail!(Error::InvalidParameter("rv is evaluated exactly only".into()));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        protocol: "rv".into(),
        r,
        n,
        k: c.reps,
        instance: if model.truth { "yes" } else { "no" }.into(),
        prover: config.prover.name().into(),
        accept_prob: accept,
        lambda_max: lambda,
        per_node_reject: BTreeMap::new(),
        bound: None,
        proof_dimension: None,
        seed,
        wall_time_ms: None,
        sampled: None,
        details: json!({ "targets": model.targets, "admissible_assignments": model.assignments.iter().filter(|a| a.admissible).count() }),
    })
}

pub fn run_experiment(config: &ExperimentConfig, settings: &Settings) -> anyhow::Result<ExperimentResult> {
    let start = Instant::now();
    let cap = settings.dim_cap.or(config.dim_cap).unwrap_or(dqma_core::DEFAULT_DIM_CAP);
    let mode_seed = match config.mode {
        Mode::Sample { seed, .. } => seed,
        Mode::Exact => None,
    };
    let seed = settings.seed.or(mode_seed).unwrap_or(0);
    if let ProverStrategy::Attack { .. } = config.prover {
        bail!(Error::InvalidParameter("attack provers run through the `attack` command".into()));
    }
    let mut result = if config.protocol == ProtocolName::Rv {
        run_rv(config, cap, seed)?
    } else {
        let parts = build_parts(config, cap)?;
        evaluate(config, parts, seed)?
    };
    if settings.timing {
        result.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(result)
}

fn evaluate(config: &ExperimentConfig, parts: Parts, seed: u64) -> anyhow::Result<ExperimentResult> {
    if matches!(config.prover, ProverStrategy::Explicit { .. }) && parts.pipelines.len() != 1 {
        bail!(Error::InvalidParameter("explicit proofs need a single-pipeline protocol".into()));
    }
    let outcomes = parts
        .pipelines
        .par_iter()
        .map(|p| {
            let model = compile(p)?;
            let outcome = apply_strategy(&model, &config.prover, seed)?;
            let rejects = model.per_node_rejection(&outcome.proof)?;
            Ok((model.proof_dimension() as u128, outcome, rejects))
        })
        .collect::<dqma_core::Result<Vec<_>>>()?;
    let mut accept: f64 = outcomes.iter().map(|o| o.1.accept_prob).product();
    let mut lambda = outcomes.iter().map(|o| o.1.lambda_max).collect::<Option<Vec<f64>>>().map(|v| v.iter().product());
    let mut details = parts.details.clone();
    if let Some((value, extra)) = &parts.optimum {
        accept = *value;
        lambda = Some(*value);
        if let (Some(d), Some(e)) = (details.as_object_mut(), extra.as_object()) {
            d.extend(e.clone());
        }
    }
    if let Some(d) = details.as_object_mut() {
        let seps: Vec<bool> = outcomes.iter().filter_map(|o| o.1.separable.as_ref().map(|s| s.converged)).collect();
        if !seps.is_empty() {
            d.insert("seesaw_converged".into(), json!(seps.iter().all(|&c| c)));
        }
    }
    let mut per_node: BTreeMap<String, f64> = BTreeMap::new();
    for (_, _, rejects) in &outcomes {
        for (node, p) in rejects {
            let keep = per_node.entry(node.clone()).or_insert(0.0);
            *keep = 1.0 - (1.0 - *keep) * (1.0 - p);
        }
    }
    let proof_dimension = outcomes.iter().try_fold(1u128, |acc, o| acc.checked_mul(o.0));
    let sampled = match config.mode {
        Mode::Exact => None,
        Mode::Sample { shots, .. } => {
            if parts.optimum.is_some() {
                bail!(Error::InvalidParameter("sampling needs a concrete proof; set `index` explicitly".into()));
            }
            let mut freq = 1.0;
            let mut rel_var = 0.0;
            for (k, (p, o)) in parts.pipelines.iter().zip(&outcomes).enumerate() {
                let s = simulate_sampled(p, &o.1.proof, shots, seed.wrapping_add(k as u64))?;
                freq *= s.accept_frequency;
                if s.accept_frequency > 0.0 {
                    rel_var += (s.accept_stderr / s.accept_frequency).powi(2);
                }
            }
            let stderr = freq * rel_var.sqrt();
            let sigma = (accept * (1.0 - accept) / shots as f64).sqrt();
            Some(SampledReport {
                shots,
                seed,
                accept_frequency: freq,
                accept_stderr: stderr,
                within_3_sigma: (freq - accept).abs() <= 3.0 * sigma.max(stderr) + 1e-9,
            })
        }
    };
    let bound = parts.bound.map(|b| BoundReport { satisfied: accept <= b.value + 1e-9, formula: b.formula, value: b.value });
    Ok(ExperimentResult {
        config: config.clone(),
        protocol: config.protocol.as_str().into(),
        r: parts.r,
        n: parts.n,
        k: parts.k,
        instance: match parts.yes {
            Some(true) => "yes",
            Some(false) => "no",
            None => "unknown",
        }
        .into(),
        prover: config.prover.name().into(),
        accept_prob: accept,
        lambda_max: lambda,
        per_node_reject: per_node,
        bound,
        proof_dimension,
        seed,
        wall_time_ms: None,
        sampled,
        details,
    })
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gt::{build_gt, gt_adversary_value, GtParams, GtVariant};
use crate::fingerprint::BitString;
use crate::network::{compile, ProofState, Topology};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// Ranking verification: is terminal `i`'s input the `j`-th largest?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RvParams {
    pub topology: Topology,
    /// 1-based position of the ranked terminal in `topology.terminals`.
    pub i: usize,
    /// 1-based rank.
    pub j: usize,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

fn one() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

/// One direction claim per other terminal and the resulting value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvAssignment {
    pub directions: Vec<GtVariant>,
    /// Whether the root's count check passes.
    pub admissible: bool,
    /// Cheating value of each path's comparison protocol.
    pub path_values: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvModel {
    /// Other terminals in order, with their path lengths from the root.
    pub targets: Vec<(String, usize)>,
    pub truth: bool,
    pub assignments: Vec<RvAssignment>,
    /// Best value over admissible assignments.
    pub value: f64,
    /// Acceptance of the honest prover (0 on no-instances).
    pub honest_value: f64,
}

/// The ranking predicate itself.
pub fn rv_truth(inputs: &[BitString], i: usize, j: usize) -> bool {
    let xi = inputs[i - 1].to_u64();
    let count = inputs.iter().enumerate().filter(|&(k, x)| k != i - 1 && xi >= x.to_u64()).count();
    count + j == inputs.len()
}

/// Enumerates direction assignments; the root accepts a count of `≥` equal to `t − j`.
pub fn build_rv(p: &RvParams) -> Result<RvModel> {
    let t = p.topology.terminals.len();
    if p.i == 0 || p.i > t || p.j == 0 || p.j > t || t < 2 {
        return Err(Error::param(format!("need 1 ≤ i, j ≤ t = {t} and t ≥ 2")));
    }
    let root = &p.topology.terminals[p.i - 1];
    let tree = p.topology.reroot(&root.node)?;
    let inputs: Vec<BitString> = p.topology.terminals.iter().map(|term| term.input.clone()).collect();
    let targets: Vec<(String, usize, BitString)> = p
        .topology
        .terminals
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != p.i - 1)
        .map(|(_, term)| (term.node.clone(), tree.depth(&term.node), term.input.clone()))
        .collect();
    let xi = root.input.clone();
    let want = t - p.j;
    let gt_params = |dir: GtVariant, r: usize, y: &BitString| GtParams {
        reps: p.reps,
        dim_cap: p.dim_cap,
        ..GtParams::honest(dir, r, xi.clone(), y.clone())
    };

    // Path values per (target, direction).
    let per_path = targets
        .par_iter()
        .map(|(_, r, y)| {
            let ge = gt_adversary_value(&gt_params(GtVariant::Ge, *r, y))?.0;
            let lt = gt_adversary_value(&gt_params(GtVariant::Lt, *r, y))?.0;
            Ok([ge, lt])
        })
        .collect::<Result<Vec<_>>>()?;

    let m = targets.len();
    let mut assignments = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let directions: Vec<GtVariant> =
            (0..m).map(|k| if mask >> k & 1 == 0 { GtVariant::Ge } else { GtVariant::Lt }).collect();
        let admissible = directions.iter().filter(|d| **d == GtVariant::Ge).count() == want;
        let path_values: Vec<f64> =
            (0..m).map(|k| per_path[k][if directions[k] == GtVariant::Ge { 0 } else { 1 }]).collect();
        let value = if admissible { path_values.iter().product() } else { 0.0 };
        assignments.push(RvAssignment { directions, admissible, path_values, value });
    }
    let value = assignments.iter().map(|a| a.value).fold(0.0, f64::max);

    let truth = rv_truth(&inputs, p.i, p.j);
    let honest_value = if truth {
        targets
            .par_iter()
            .map(|(_, r, y)| {
                let dir = if GtVariant::Ge.eval(&xi, y) { GtVariant::Ge } else { GtVariant::Lt };
                let pipe = build_gt(&gt_params(dir, *r, y))?;
                let proof = pipe.honest_state()?;
                compile(&pipe)?.accept_probability(&ProofState::Pure(proof))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .product()
    } else {
        0.0
    };
    Ok(RvModel {
        targets: targets.into_iter().map(|(n, r, _)| (n, r)).collect(),
        truth,
        assignments,
        value,
        honest_value,
    })
}

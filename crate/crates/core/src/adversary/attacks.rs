use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::classical::ClassicalDmaProtocol;
use crate::fingerprint::{BitString, BooleanFunction};
use crate::network::{compile, simulate_sampled, ProofState, ProtocolPipeline};
use crate::qcore::kernel::kron_vectors;
use crate::qcore::{partial_trace, tensor, C64};
use crate::{Error, Result};

/// Builds the pipeline of a path protocol on inputs `(x, y)`.
pub type PipelineBuilder<'a> = dyn Fn(&BitString, &BitString) -> Result<ProtocolPipeline> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackStatus {
    Ok,
    NoPair,
    NotApplicable,
}

/// Summary of one attack run, serialized as the attack output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackReport {
    pub attack: String,
    pub cut_index: Option<usize>,
    pub pair_found: bool,
    pub accept_prob: Option<f64>,
    pub reference_line: Option<f64>,
    pub witness: serde_json::Value,
    pub status: AttackStatus,
}

impl AttackReport {
    fn not_applicable(attack: &str, reason: impl Into<String>) -> Self {
        AttackReport {
            attack: attack.into(),
            cut_index: None,
            pair_found: false,
            accept_prob: None,
            reference_line: None,
            witness: json!({ "reason": reason.into() }),
            status: AttackStatus::NotApplicable,
        }
    }

    /// Whether the attack reached its reference line.
    pub fn beats_reference(&self) -> bool {
        matches!((self.accept_prob, self.reference_line), (Some(a), Some(r)) if a >= r - crate::tol::STRUCTURAL)
    }
}

/// What is needed to re-run the attacked verification by sampling.
#[derive(Debug, Clone)]
pub enum Replay {
    Quantum { pipeline: ProtocolPipeline, proof: ProofState },
    Classical { protocol: ClassicalDmaProtocol, x: BitString, y: BitString, proof: Vec<u64> },
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub report: AttackReport,
    pub replay: Option<Replay>,
}

impl AttackOutcome {
    /// Sampled acceptance frequency and its standard error.
    pub fn resample(&self, shots: u64, seed: u64) -> Result<Option<(f64, f64)>> {
        Ok(match &self.replay {
            None => None,
            Some(Replay::Quantum { pipeline, proof }) => {
                let s = simulate_sampled(pipeline, proof, shots, seed)?;
                Some((s.accept_frequency, s.accept_stderr))
            }
            Some(Replay::Classical { protocol, x, y, proof }) => {
                let f = protocol.simulate(x, y, proof, shots, seed)?;
                Some((f, (f * (1.0 - f) / shots.max(1) as f64).sqrt()))
            }
        })
    }
}

fn check_fooling(f: &BooleanFunction, fooling: &[(BitString, BitString)]) -> Result<()> {
    if fooling.len() < 2 {
        return Err(Error::param("a fooling set needs at least two pairs"));
    }
    if let Some((x, y)) = fooling.iter().find(|(x, y)| !f.eval(x, y)) {
        return Err(Error::param(format!("fooling pair ({x}, {y}) is not a yes-instance")));
    }
    Ok(())
}

/// First `(a, b)` with `a != b` and `f(x_a, y_b) = 0`, scanning `candidates` in order.
fn stitchable(
    f: &BooleanFunction,
    fooling: &[(BitString, BitString)],
    candidates: impl Iterator<Item = (usize, usize)>,
) -> Option<(usize, usize)> {
    candidates.into_iter().find(|&(a, b)| a != b && !f.eval(&fooling[a].0, &fooling[b].1))
}

/// Cut-and-paste against a classical protocol with short labels around some cut.
///
/// Applies when `c_i + c_{i+1} <= floor(log2(k - 1) / 2)` for some cut `1 <= i <= r - 2`,
/// where `k` is the fooling-set size.
pub fn classical_fooling_attack(
    protocol: &ClassicalDmaProtocol,
    f: &BooleanFunction,
    fooling: &[(BitString, BitString)],
) -> Result<AttackOutcome> {
    const NAME: &str = "classical_fooling";
    protocol.validate()?;
    check_fooling(f, fooling)?;
    let k = fooling.len();
    let budget = ((k - 1) as f64).log2().div_euclid(2.0).max(0.0) as usize;
    let r = protocol.r;
    let cut = (1..r.saturating_sub(1)).find(|&i| protocol.proof_bits[i] + protocol.proof_bits[i + 1] <= budget);
    let Some(cut) = cut else {
        return Ok(AttackOutcome {
            report: AttackReport::not_applicable(
                NAME,
                format!("no cut 1 <= i <= r-2 with label bits at most {budget}"),
            ),
            replay: None,
        });
    };
    let best: Vec<(f64, Vec<u64>)> = fooling.iter().map(|(x, y)| protocol.best_proof(x, y)).collect();
    let p_err = 1.0 - protocol.completeness;
    let reference = 1.0 - 2.0 * p_err;
    let mut buckets: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (a, (_, w)) in best.iter().enumerate() {
        buckets.entry((w[cut], w[cut + 1])).or_default().push(a);
    }
    let pair = buckets
        .values()
        .find_map(|ids| stitchable(f, fooling, ids.iter().flat_map(|&a| ids.iter().map(move |&b| (a, b)))));
    let Some((a, b)) = pair else {
        return Ok(AttackOutcome {
            report: AttackReport {
                attack: NAME.into(),
                cut_index: Some(cut),
                pair_found: false,
                accept_prob: None,
                reference_line: Some(reference),
                witness: json!({ "classes": buckets.len() }),
                status: AttackStatus::NoPair,
            },
            replay: None,
        });
    };
    let stitched: Vec<u64> = (0..=r).map(|j| if j <= cut { best[a].1[j] } else { best[b].1[j] }).collect();
    let (x, y) = (fooling[a].0.clone(), fooling[b].1.clone());
    let accept = protocol.accept_probability(&x, &y, &stitched)?;
    Ok(AttackOutcome {
        report: AttackReport {
            attack: NAME.into(),
            cut_index: Some(cut),
            pair_found: true,
            accept_prob: Some(accept),
            reference_line: Some(reference),
            witness: json!({
                "pair_a": [fooling[a].0.to_string(), fooling[a].1.to_string()],
                "pair_b": [fooling[b].0.to_string(), fooling[b].1.to_string()],
                "no_instance": [x.to_string(), y.to_string()],
                "labels_a": best[a].1,
                "labels_b": best[b].1,
                "stitched_labels": stitched,
            }),
            status: AttackStatus::Ok,
        },
        replay: Some(Replay::Classical { protocol: protocol.clone(), x, y, proof: stitched }),
    })
}

fn path_order(p: &ProtocolPipeline) -> Vec<String> {
    p.path.clone().unwrap_or_else(|| p.nodes.clone())
}

fn node_position(order: &[String], node: &str) -> Result<usize> {
    order.iter().position(|n| n == node).ok_or_else(|| Error::param(format!("node `{node}` is not on the path")))
}

/// Honest content per proof register, in proof-layout order.
fn honest_parts(p: &ProtocolPipeline) -> Result<Vec<(String, String, Vec<C64>)>> {
    let parts = p
        .honest_proof
        .as_ref()
        .ok_or_else(|| Error::NotApplicable(format!("{} has no honest proof", p.name)))?;
    p.proof_registers()
        .iter()
        .map(|reg| {
            let part = parts
                .iter()
                .find(|h| h.register == reg.id)
                .ok_or_else(|| Error::NotApplicable(format!("no honest content for `{}`", reg.id)))?;
            Ok((reg.id.clone(), reg.owner.clone(), part.state.amplitudes()?.as_slice().to_vec()))
        })
        .collect()
}

/// Cut-and-paste with honest product proofs: finds two fooling pairs whose proofs
/// at `v_cut, v_{cut+1}` have overlap above `1 - delta^2 / 8`, then feeds the
/// proof of the first pair left of the cut and of the second pair right of it.
pub fn separable_cut_paste_attack(
    build: &PipelineBuilder<'_>,
    f: &BooleanFunction,
    fooling: &[(BitString, BitString)],
    cut: usize,
    delta: f64,
) -> Result<AttackOutcome> {
    const NAME: &str = "separable_cut_paste";
    check_fooling(f, fooling)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta must be positive"));
    }
    let pipelines = fooling.iter().map(|(x, y)| build(x, y)).collect::<Result<Vec<_>>>()?;
    let order = path_order(&pipelines[0]);
    if cut + 1 >= order.len() {
        return Err(Error::param(format!("cut {cut} is outside a path with {} nodes", order.len())));
    }
    let mut honest_accept = Vec::with_capacity(pipelines.len());
    let mut parts = Vec::with_capacity(pipelines.len());
    for p in &pipelines {
        let model = compile(p)?;
        honest_accept.push(model.accept_probability(&p.honest_state()?.into())?);
        parts.push(honest_parts(p)?);
    }
    let p_err = 1.0 - honest_accept.iter().cloned().fold(1.0, f64::min);
    let reference = 1.0 - 2.0 * p_err - delta;
    let near = |owner: &str| matches!(node_position(&order, owner), Ok(j) if j == cut || j == cut + 1);
    let overlap = |a: usize, b: usize| -> f64 {
        parts[a]
            .iter()
            .zip(&parts[b])
            .filter(|(pa, _)| near(&pa.1))
            .map(|(pa, pb)| pa.2.iter().zip(&pb.2).map(|(u, v)| u.conj() * v).sum::<C64>().norm())
            .product()
    };
    let threshold = 1.0 - delta * delta / 8.0;
    let k = fooling.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 0..k {
        for b in 0..k {
            if a == b || f.eval(&fooling[a].0, &fooling[b].1) {
                continue;
            }
            let o = overlap(a, b);
            if o > threshold && best.map_or(true, |(bo, _, _)| o > bo) {
                best = Some((o, a, b));
            }
        }
    }
    let Some((ov, a, b)) = best else {
        return Ok(AttackOutcome {
            report: AttackReport {
                attack: NAME.into(),
                cut_index: Some(cut),
                pair_found: false,
                accept_prob: None,
                reference_line: Some(reference),
                witness: json!({ "threshold": threshold }),
                status: AttackStatus::NoPair,
            },
            replay: None,
        });
    };
    let (x, y) = (fooling[a].0.clone(), fooling[b].1.clone());
    let target = build(&x, &y)?;
    let layout = target.proof_layout()?;
    let mut sources = BTreeMap::new();
    let vectors = layout
        .registers()
        .iter()
        .map(|reg| {
            let left = node_position(&order, &reg.owner)? <= cut;
            sources.insert(reg.owner.clone(), if left { "a" } else { "b" });
            let from = if left { &parts[a] } else { &parts[b] };
            from.iter()
                .find(|p| p.0 == reg.id)
                .map(|p| p.2.clone())
                .ok_or_else(|| Error::LayoutMismatch(format!("register `{}` missing in a fooling pipeline", reg.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let slices: Vec<&[C64]> = vectors.iter().map(|v| v.as_slice()).collect();
    let proof: ProofState =
        crate::qcore::StateVector::normalized(layout, kron_vectors(&slices).into())?.into();
    let accept = compile(&target)?.accept_probability(&proof)?;
    Ok(AttackOutcome {
        report: AttackReport {
            attack: NAME.into(),
            cut_index: Some(cut),
            pair_found: true,
            accept_prob: Some(accept),
            reference_line: Some(reference),
            witness: json!({
                "pair_a": [fooling[a].0.to_string(), fooling[a].1.to_string()],
                "pair_b": [fooling[b].0.to_string(), fooling[b].1.to_string()],
                "no_instance": [x.to_string(), y.to_string()],
                "overlap": ov,
                "threshold": threshold,
                "proof_source": sources,
            }),
            status: AttackStatus::Ok,
        },
        replay: Some(Replay::Quantum { pipeline: target, proof }),
    })
}

/// Entangled cut-and-paste across two consecutive nodes that hold no proof.
///
/// Takes accepting proofs for the yes-instances `(x, y)` and `(x2, y2)`, keeps
/// the left marginal of the first and the right marginal of the second, and
/// feeds their product to the verifiers on `(x, y2)`.
pub fn entangled_no_proof_attack(
    build: &PipelineBuilder<'_>,
    f: &BooleanFunction,
    first: (&BitString, &BitString),
    second: (&BitString, &BitString),
) -> Result<AttackOutcome> {
    const NAME: &str = "entangled_no_proof";
    if !f.eval(first.0, first.1) || !f.eval(second.0, second.1) {
        return Err(Error::param("both source pairs must be yes-instances"));
    }
    if f.eval(first.0, second.1) {
        return Err(Error::param("the stitched pair must be a no-instance"));
    }
    let pa = build(first.0, first.1)?;
    let pb = build(second.0, second.1)?;
    let target = build(first.0, second.1)?;
    let order = path_order(&target);
    let owners: Vec<usize> = target
        .proof_registers()
        .iter()
        .map(|r| node_position(&order, &r.owner))
        .collect::<Result<_>>()?;
    let cut = (0..order.len().saturating_sub(1)).find(|&i| owners.iter().all(|&o| o != i && o != i + 1));
    let Some(cut) = cut else {
        return Ok(AttackOutcome {
            report: AttackReport::not_applicable(NAME, "every pair of adjacent nodes holds some proof"),
            replay: None,
        });
    };
    if owners.windows(2).any(|w| w[0] > cut && w[1] <= cut) {
        return Err(Error::LayoutMismatch("proof registers are not ordered along the path".into()));
    }
    let layout = target.proof_layout()?;
    let left: Vec<String> =
        layout.registers().iter().zip(&owners).filter(|(_, &o)| o <= cut).map(|(r, _)| r.id.clone()).collect();
    let right: Vec<String> =
        layout.registers().iter().zip(&owners).filter(|(_, &o)| o > cut).map(|(r, _)| r.id.clone()).collect();
    let accepting = |p: &ProtocolPipeline| -> Result<(f64, crate::qcore::StateVector)> {
        let model = compile(p)?;
        match p.honest_state() {
            Ok(s) => Ok((model.accept_probability(&s.clone().into())?, s)),
            Err(_) => model.top_eigenpair(),
        }
    };
    let (acc_a, psi_a) = accepting(&pa)?;
    let (acc_b, psi_b) = accepting(&pb)?;
    let p_err = 1.0 - acc_a.min(acc_b);
    let reference = 1.0 - 2.0 * p_err;
    let rho_left = partial_trace(&psi_a.to_density(), &left)?;
    let rho_right = partial_trace(&psi_b.to_density(), &right)?;
    let joint = if left.is_empty() {
        rho_right
    } else if right.is_empty() {
        rho_left
    } else {
        tensor(&rho_left, &rho_right)?
    };
    let proof = ProofState::Mixed(crate::qcore::DensityOperator::new(layout, joint.matrix().clone())?);
    let accept = compile(&target)?.accept_probability(&proof)?;
    Ok(AttackOutcome {
        report: AttackReport {
            attack: NAME.into(),
            cut_index: Some(cut),
            pair_found: true,
            accept_prob: Some(accept),
            reference_line: Some(reference),
            witness: json!({
                "first": [first.0.to_string(), first.1.to_string()],
                "second": [second.0.to_string(), second.1.to_string()],
                "no_instance": [first.0.to_string(), second.1.to_string()],
                "empty_nodes": [order[cut], order[cut + 1]],
                "left_registers": left,
                "right_registers": right,
            }),
            status: AttackStatus::Ok,
        },
        replay: Some(Replay::Quantum { pipeline: target, proof }),
    })
}

//! Provers: honest, optimal entangled, best product, and the cut-and-paste attacks.

mod attacks;
mod classical;
mod seesaw;
mod strategy;

pub use attacks::{
    classical_fooling_attack, entangled_no_proof_attack, separable_cut_paste_attack, AttackOutcome, AttackReport,
    AttackStatus, PipelineBuilder, Replay,
};
pub use classical::{truncated_eq, truncated_eq_honest, ClassicalDmaProtocol};
pub use seesaw::{optimal_separable_value, SeeSawOptions, SeparableResult};
pub use strategy::{apply_strategy, AttackScheme, AttackSpec, ProverOutcome, ProverStrategy};

use std::f64::consts::PI;

use crate::fingerprint::{BitString, FingerprintScheme};
use crate::network::{AcceptanceModel, ProtocolPipeline};
use crate::qcore::{CVector, StateVector, C64};
use crate::qcore::kernel::kron_vectors;
use crate::{Error, Result};

/// The honest proof of a pipeline, when it has one.
pub fn honest_proof(pipeline: &ProtocolPipeline) -> Result<StateVector> {
    pipeline.honest_state()
}

/// `lambda_max` of the acceptance operator with a maximizing proof.
pub fn optimal_entangled_value(model: &AcceptanceModel) -> Result<(f64, StateVector)> {
    model.top_eigenpair()
}

/// Honest proof split by node, ready to seed [`optimal_separable_value`].
pub fn honest_node_states(pipeline: &ProtocolPipeline) -> Result<Vec<CVector>> {
    let parts = pipeline
        .honest_proof
        .as_ref()
        .ok_or_else(|| Error::NotApplicable(format!("{} has no honest proof", pipeline.name)))?;
    pipeline
        .node_grouping()
        .iter()
        .map(|(_, regs)| {
            let vectors = regs
                .iter()
                .map(|id| {
                    let part = parts
                        .iter()
                        .find(|p| &p.register == id)
                        .ok_or_else(|| Error::NotApplicable(format!("no honest content for `{id}`")))?;
                    Ok(part.state.amplitudes()?.as_slice().to_vec())
                })
                .collect::<Result<Vec<_>>>()?;
            let slices: Vec<&[C64]> = vectors.iter().map(|v| v.as_slice()).collect();
            let v = CVector::from_vec(kron_vectors(&slices));
            let n = v.norm();
            Ok(v.unscale(n))
        })
        .collect()
}

/// Qubit fingerprints `cos(x pi / 64)|0> + sin(x pi / 64)|1>` on `n` bits.
///
/// Neighbouring inputs have overlap `cos(pi / 64)`, which makes proofs for
/// different inputs nearly indistinguishable.
pub fn tiny_family_scheme(n: usize) -> Result<FingerprintScheme> {
    let states = BitString::all(n)
        .map(|x| {
            let theta = x.to_u64() as f64 * PI / 64.0;
            CVector::from_vec(vec![C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)])
        })
        .collect();
    FingerprintScheme::explicit(n, states)
}

/// Best product proof over the node grouping of `model`'s pipeline.
pub fn optimal_node_separable_value(model: &AcceptanceModel, opts: &SeeSawOptions) -> Result<SeparableResult> {
    let pipeline = model.pipeline();
    let grouping: Vec<Vec<String>> = pipeline.node_grouping().into_iter().map(|(_, r)| r).collect();
    let start = honest_node_states(pipeline).ok();
    optimal_separable_value(model, &grouping, opts, start)
}

#[cfg(test)]
mod tests;

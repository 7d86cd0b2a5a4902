use serde::{Deserialize, Serialize};

use super::attacks::{
    classical_fooling_attack, entangled_no_proof_attack, separable_cut_paste_attack, AttackOutcome,
};
use super::classical::truncated_eq;
use super::seesaw::{SeeSawOptions, SeparableResult};
use super::{optimal_node_separable_value, tiny_family_scheme};
use crate::fingerprint::{BitString, BooleanFunction, FingerprintScheme};
use crate::network::{AcceptanceModel, MatrixData, ProofState};
use crate::protocols::{build_eq_path, EqPathParams};
use crate::qcore::{CVector, DensityOperator, StateVector, C64};
use crate::{Error, Result};

fn restarts() -> usize {
    SeeSawOptions::default().restarts
}
fn max_iters() -> usize {
    SeeSawOptions::default().max_iters
}
fn tol() -> f64 {
    SeeSawOptions::default().tol
}

/// How the prover chooses its proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum ProverStrategy {
    #[default]
    Honest,
    EntangledOpt,
    SeparableOpt {
        #[serde(default = "restarts")]
        restarts: usize,
        #[serde(default = "max_iters")]
        max_iters: usize,
        #[serde(default = "tol")]
        tol: f64,
    },
    /// A fixed proof given either as amplitudes or as a density matrix.
    Explicit {
        #[serde(default)]
        amplitudes: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        density: Option<MatrixData>,
    },
    Attack { attack: AttackSpec },
}


impl ProverStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            ProverStrategy::Honest => "honest",
            ProverStrategy::EntangledOpt => "entangled_opt",
            ProverStrategy::SeparableOpt { .. } => "separable_opt",
            ProverStrategy::Explicit { .. } => "explicit",
            ProverStrategy::Attack { .. } => "attack",
        }
    }
}

/// Result of letting a prover strategy play against a model.
#[derive(Debug, Clone)]
pub struct ProverOutcome {
    pub accept_prob: f64,
    pub proof: ProofState,
    pub lambda_max: Option<f64>,
    pub separable: Option<SeparableResult>,
}

/// Plays `strategy` against `model`. Attack strategies are handled by [`AttackSpec::run`].
pub fn apply_strategy(model: &AcceptanceModel, strategy: &ProverStrategy, seed: u64) -> Result<ProverOutcome> {
    let layout = model.proof_layout().clone();
    match strategy {
        ProverStrategy::Honest => {
            let proof: ProofState = model.pipeline().honest_state()?.into();
            Ok(ProverOutcome { accept_prob: model.accept_probability(&proof)?, proof, lambda_max: None, separable: None })
        }
        ProverStrategy::EntangledOpt => {
            let (value, v) = model.top_eigenpair()?;
            Ok(ProverOutcome { accept_prob: value, proof: v.into(), lambda_max: Some(value), separable: None })
        }
        ProverStrategy::SeparableOpt { restarts, max_iters, tol } => {
            let opts = SeeSawOptions { restarts: *restarts, max_iters: *max_iters, tol: *tol, seed };
            let result = optimal_node_separable_value(model, &opts)?;
            let mut joint: Option<StateVector> = None;
            for s in &result.states {
                joint = Some(match joint {
                    None => s.clone(),
                    Some(j) => j.tensor(s, usize::MAX)?,
                });
            }
            let joint = match joint {
                Some(j) => j.with_layout(layout)?,
                None => StateVector::basis(layout, 0)?,
            };
            let proof: ProofState = joint.into();
            Ok(ProverOutcome {
                accept_prob: model.accept_probability(&proof)?,
                proof,
                lambda_max: None,
                separable: Some(result),
            })
        }
        ProverStrategy::Explicit { amplitudes, density } => {
            let proof: ProofState = match (amplitudes, density) {
                (Some(a), None) => StateVector::new(
                    layout,
                    CVector::from_iterator(a.len(), a.iter().map(|z| C64::new(z[0], z[1]))),
                )?
                .into(),
                (None, Some(m)) => ProofState::Mixed(DensityOperator::new(layout, m.to_matrix()?)?),
                _ => return Err(Error::param("explicit proof needs exactly one of `amplitudes` and `density`")),
            };
            Ok(ProverOutcome { accept_prob: model.accept_probability(&proof)?, proof, lambda_max: None, separable: None })
        }
        ProverStrategy::Attack { .. } => Err(Error::NotApplicable("attack strategies run through AttackSpec::run".into())),
    }
}

/// Fingerprints used by the cut-and-paste family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackScheme {
    /// `cos(x pi / 64)|0> + sin(x pi / 64)|1>`.
    #[default]
    Tiny,
    Hadamard,
}

fn classical_n() -> usize {
    3
}
fn classical_r() -> usize {
    4
}
fn classical_bits() -> Vec<usize> {
    vec![0, 1, 0, 1, 0]
}
fn cut_n() -> usize {
    3
}
fn cut_r() -> usize {
    3
}
fn cut_index() -> usize {
    1
}
fn cut_delta() -> f64 {
    0.25
}
fn gap_n() -> usize {
    2
}
fn gap_r() -> usize {
    5
}
fn gap_at() -> Option<usize> {
    Some(2)
}

/// One of the three attacks on an EQ family, with the family's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    /// Truncated-label classical EQ on a path, fooled with the pairs `(x, x)`.
    ClassicalFooling {
        #[serde(default = "classical_n")]
        n: usize,
        #[serde(default = "classical_r")]
        r: usize,
        #[serde(default = "classical_bits")]
        proof_bits: Vec<usize>,
    },
    /// Honest EQ-path proofs stitched across the cut `(v_cut, v_cut+1)`.
    SeparableCutPaste {
        #[serde(default = "cut_n")]
        n: usize,
        #[serde(default = "cut_r")]
        r: usize,
        #[serde(default = "cut_index")]
        cut: usize,
        #[serde(default = "cut_delta")]
        delta: f64,
        #[serde(default)]
        scheme: AttackScheme,
    },
    /// EQ path whose nodes `v_gap, v_gap+1` hold no proof; sources `(first, first)` and `(second, second)`.
    EntangledNoProof {
        #[serde(default = "gap_n")]
        n: usize,
        #[serde(default = "gap_r")]
        r: usize,
        #[serde(default = "gap_at")]
        gap: Option<usize>,
        #[serde(default)]
        first: Option<BitString>,
        #[serde(default)]
        second: Option<BitString>,
    },
}

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::ClassicalFooling { .. } => "classical_fooling",
            AttackSpec::SeparableCutPaste { .. } => "separable_cut_paste",
            AttackSpec::EntangledNoProof { .. } => "entangled_no_proof",
        }
    }

    /// Default instance of each attack.
    pub fn defaults() -> Vec<AttackSpec> {
        vec![
            AttackSpec::ClassicalFooling { n: classical_n(), r: classical_r(), proof_bits: classical_bits() },
            AttackSpec::SeparableCutPaste {
                n: cut_n(),
                r: cut_r(),
                cut: cut_index(),
                delta: cut_delta(),
                scheme: AttackScheme::Tiny,
            },
            AttackSpec::EntangledNoProof { n: gap_n(), r: gap_r(), gap: gap_at(), first: None, second: None },
        ]
    }

    pub fn run(&self, dim_cap: usize) -> Result<AttackOutcome> {
        let eq = BooleanFunction::Eq;
        let diagonal = |n: usize| -> Vec<(BitString, BitString)> { BitString::all(n).map(|x| (x.clone(), x)).collect() };
        match self {
            AttackSpec::ClassicalFooling { n, r, proof_bits } => {
                classical_fooling_attack(&truncated_eq(*n, *r, proof_bits.clone())?, &eq, &diagonal(*n))
            }
            AttackSpec::SeparableCutPaste { n, r, cut, delta, scheme } => {
                let scheme = match scheme {
                    AttackScheme::Tiny => tiny_family_scheme(*n)?,
                    AttackScheme::Hadamard => FingerprintScheme::hadamard(*n)?,
                };
                let build = |x: &BitString, y: &BitString| {
                    build_eq_path(&EqPathParams::new(*r, scheme.clone(), x.clone(), y.clone()).dim_cap(dim_cap))
                };
                separable_cut_paste_attack(&build, &eq, &diagonal(*n), *cut, *delta)
            }
            AttackSpec::EntangledNoProof { n, r, gap, first, second } => {
                let first = first.clone().unwrap_or_else(|| BitString::zeros(*n));
                let second = match second {
                    Some(s) => s.clone(),
                    None => BitString::all(*n).last().ok_or_else(|| Error::param("n must be positive"))?,
                };
                if first.len() != *n || second.len() != *n {
                    return Err(Error::param(format!("inputs must have {n} bits")));
                }
                let scheme = FingerprintScheme::hadamard(*n)?;
                let build = |x: &BitString, y: &BitString| {
                    let mut p = EqPathParams::new(*r, scheme.clone(), x.clone(), y.clone()).dim_cap(dim_cap);
                    p.gap = *gap;
                    build_eq_path(&p)
                };
                entangled_no_proof_attack(&build, &eq, (&first, &first), (&second, &second))
            }
        }
    }
}

//! Path protocols: a message leaves `v0`, intermediate nodes hold two
//! proof registers each, symmetrize them and SWAP-test one against the
//! register arriving from the left, and `v_r` applies a final test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fingerprint::{BitString, OneWayProtocol, OneWayQmaProtocol};
use crate::network::{
    ChannelSpec, HonestPart, LocalTest, Message, NodeChannel, PreparedState, ProtocolPipeline, StateSpec, TestSpec,
};
use crate::qcore::{check_cap, Register};
use crate::{Error, Result};

/// What `v0` sends.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LeftEnd {
    /// A node-generated state.
    Prepared(StateSpec),
    /// A proof register transformed by Alice's unitary together with an ancilla.
    QmaAlice { protocol: OneWayQmaProtocol, x: BitString, y: BitString },
}

/// The test at `v_r`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RightEnd {
    OneWay { protocol: OneWayProtocol, y: BitString },
    QmaBob { protocol: OneWayQmaProtocol, y: BitString },
    Projector(StateSpec),
    /// SWAP test against a state prepared at `v_r`.
    Swap(StateSpec),
}

/// Which test the last node of an EQ path applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalTest {
    /// Projection onto `|h_y⟩`.
    #[default]
    Povm,
    /// SWAP test against a locally prepared `|h_y⟩`.
    Swap,
}

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub name: String,
    pub r: usize,
    pub reps: usize,
    /// Dimension of every forwarded message.
    pub message_dim: usize,
    pub left: LeftEnd,
    pub right: RightEnd,
    /// Nodes `g` and `g + 1` receive no proof and run no test.
    pub gap: Option<usize>,
    pub dim_cap: usize,
    pub yes_instance: Option<bool>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

pub(crate) fn node(j: usize) -> String {
    format!("v{j}")
}

fn reg(j: usize, rep: usize, name: &str) -> String {
    format!("v{j}.k{rep}.{name}")
}

impl Chain {
    fn proof_free(&self, j: usize) -> bool {
        matches!(self.gap, Some(g) if j == g || j == g + 1)
    }

    /// Registers node `j` sends to `j + 1` in repetition `rep`, if any.
    fn outgoing(&self, j: usize, rep: usize) -> Option<Vec<String>> {
        if j == 0 {
            return Some(match self.left {
                LeftEnd::Prepared(_) => vec![reg(0, rep, "h")],
                LeftEnd::QmaAlice { .. } => vec![reg(0, rep, "P"), reg(0, rep, "A")],
            });
        }
        (!self.proof_free(j)).then(|| vec![reg(j, rep, "R1")])
    }

    pub fn build(&self) -> Result<ProtocolPipeline> {
        let r = self.r;
        if r == 0 || self.reps == 0 {
            return Err(Error::param("path length and repetitions must be at least 1"));
        }
        if let Some(g) = self.gap {
            if g == 0 || g + 1 >= r {
                return Err(Error::param(format!("gap at {g} must satisfy 1 ≤ g and g + 2 ≤ r = {r}")));
            }
        }
        let proof_registers = (1..r).filter(|&j| !self.proof_free(j)).count() * 2 * self.reps;
        let mut needed: u128 = 1;
        for _ in 0..proof_registers {
            needed = needed.saturating_mul(self.message_dim as u128);
        }
        if let LeftEnd::QmaAlice { protocol, .. } = &self.left {
            for _ in 0..self.reps {
                needed = needed.saturating_mul(protocol.proof_dimension() as u128);
            }
        }
        check_cap(needed, self.dim_cap)?;

        let nodes: Vec<String> = (0..=r).map(node).collect();
        let mut p = ProtocolPipeline::new(self.name.clone(), nodes.clone());
        p.dim_cap = self.dim_cap;
        p.path = Some(nodes);
        p.yes_instance = self.yes_instance;
        p.metadata = self.metadata.clone();
        p.metadata.insert("r".into(), r.into());
        p.metadata.insert("reps".into(), self.reps.into());
        if let Some(g) = self.gap {
            p.metadata.insert("gap".into(), g.into());
        }
        let mut honest: Option<Vec<HonestPart>> = Some(Vec::new());
        let message_state = match &self.left {
            LeftEnd::Prepared(s) => Some(s.clone()),
            LeftEnd::QmaAlice { protocol, x, y } => protocol
                .honest_proof(x, y)?
                .map(|_| StateSpec::QmaMessage { protocol: protocol.clone(), x: x.clone(), y: y.clone() }),
        };

        // v0
        for rep in 0..self.reps {
            match &self.left {
                LeftEnd::Prepared(state) => {
                    p.registers.push(Register::prepared(reg(0, rep, "h"), self.message_dim, node(0)));
                    p.prepared.push(PreparedState { register: reg(0, rep, "h"), state: state.clone() });
                }
                LeftEnd::QmaAlice { protocol, x, y } => {
                    let (pid, aid) = (reg(0, rep, "P"), reg(0, rep, "A"));
                    p.registers.push(Register::proof(pid.clone(), protocol.proof_dimension(), node(0)));
                    p.registers.push(Register::prepared(aid.clone(), protocol.ancilla_dimension(), node(0)));
                    p.prepared.push(PreparedState {
                        register: aid.clone(),
                        state: StateSpec::Basis { dim: protocol.ancilla_dimension(), index: 0 },
                    });
                    p.channels.push(NodeChannel {
                        node: node(0),
                        channel: ChannelSpec::QmaAlice { registers: vec![pid.clone(), aid], protocol: protocol.clone(), x: x.clone() },
                    });
                    honest = match (honest, protocol.honest_proof(x, y)?) {
                        (Some(mut h), Some(_)) => {
                            h.push(HonestPart {
                                register: pid,
                                state: StateSpec::QmaProof { protocol: protocol.clone(), x: x.clone(), y: y.clone() },
                            });
                            Some(h)
                        }
                        _ => None,
                    };
                }
            }
        }
        // Intermediate nodes.
        for j in 1..r {
            if self.proof_free(j) {
                continue;
            }
            for rep in 0..self.reps {
                let (r0, r1) = (reg(j, rep, "R0"), reg(j, rep, "R1"));
                p.registers.push(Register::proof(r0.clone(), self.message_dim, node(j)));
                p.registers.push(Register::proof(r1.clone(), self.message_dim, node(j)));
                p.channels.push(NodeChannel {
                    node: node(j),
                    channel: ChannelSpec::Symmetrize { groups: vec![vec![r0.clone()], vec![r1.clone()]] },
                });
                if let Some(incoming) = self.outgoing(j - 1, rep) {
                    p.tests.push(LocalTest {
                        node: node(j),
                        test: TestSpec::Symmetric { groups: vec![incoming, vec![r0.clone()]] },
                    });
                }
                honest = match (honest, &message_state) {
                    (Some(mut h), Some(s)) => {
                        h.push(HonestPart { register: r0, state: s.clone() });
                        h.push(HonestPart { register: r1, state: s.clone() });
                        Some(h)
                    }
                    _ => None,
                };
            }
        }
        // v_r
        for rep in 0..self.reps {
            let Some(incoming) = self.outgoing(r - 1, rep) else { continue };
            let test = match &self.right {
                RightEnd::OneWay { protocol, y } => {
                    TestSpec::OneWay { registers: incoming, protocol: protocol.clone(), y: y.clone() }
                }
                RightEnd::QmaBob { protocol, y } => {
                    TestSpec::QmaBob { registers: incoming, protocol: protocol.clone(), y: y.clone() }
                }
                RightEnd::Projector(state) => TestSpec::Projector { registers: incoming, state: state.clone() },
                RightEnd::Swap(state) => {
                    let h = reg(r, rep, "h");
                    p.registers.push(Register::prepared(h.clone(), self.message_dim, node(r)));
                    p.prepared.push(PreparedState { register: h.clone(), state: state.clone() });
                    TestSpec::Symmetric { groups: vec![incoming, vec![h]] }
                }
            };
            p.tests.push(LocalTest { node: node(r), test });
        }
        for j in 0..r {
            let registers: Vec<String> =
                (0..self.reps).filter_map(|rep| self.outgoing(j, rep)).flatten().collect();
            if !registers.is_empty() {
                p.messages.push(Message { from: node(j), to: node(j + 1), registers });
            }
        }
        p.honest_proof = honest;
        p.validate()?;
        Ok(p)
    }
}

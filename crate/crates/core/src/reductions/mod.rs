//! Two-party protocols obtained by cutting a path protocol at one edge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::network::{compile, AcceptanceModel, Message, ProtocolPipeline};
use crate::{Error, Result};

pub const ALICE: &str = "alice";
pub const BOB: &str = "bob";

/// A register whose dimension was rounded up to a power of two for qubit counting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Padding {
    pub register: String,
    pub dim: usize,
    pub qubits: usize,
}

/// Alice runs `v0..=vi`, Bob runs the rest; the proof is split the same way.
#[derive(Debug, Clone)]
pub struct TwoPartyQmaModel {
    pub cut: usize,
    pub alice_nodes: Vec<String>,
    pub bob_nodes: Vec<String>,
    pub alice_registers: Vec<String>,
    pub bob_registers: Vec<String>,
    /// Proof qubits held by Alice and Bob, and qubits sent across the cut.
    pub gamma1: usize,
    pub gamma2: usize,
    pub mu: usize,
    pub padding: Vec<Padding>,
    /// The protocol with every node renamed to its party.
    pub pipeline: ProtocolPipeline,
    pub model: AcceptanceModel,
}

impl TwoPartyQmaModel {
    pub fn total_cost(&self) -> usize {
        self.gamma1 + self.gamma2 + self.mu
    }

    /// Acceptance restricted to Alice's or Bob's tests.
    pub fn party_model(&self, party: &str) -> Result<AcceptanceModel> {
        self.model.node_model(party)
    }

    pub fn accept_value(&self) -> Result<f64> {
        Ok(self.model.top_eigenpair()?.0)
    }
}

/// Qubits needed for a `dim`-level register.
pub fn qubits(dim: usize) -> usize {
    dim.next_power_of_two().trailing_zeros() as usize
}

fn count(ids: &[String], pipeline: &ProtocolPipeline, padding: &mut Vec<Padding>) -> Result<usize> {
    ids.iter()
        .map(|id| {
            let dim = pipeline.dim_of(id)?;
            let q = qubits(dim);
            if !dim.is_power_of_two() {
                padding.push(Padding { register: id.clone(), dim, qubits: q });
            }
            Ok(q)
        })
        .sum()
}

pub fn cut_to_two_party(model: &AcceptanceModel, cut: usize) -> Result<TwoPartyQmaModel> {
    let source = model.pipeline();
    let path = source
        .path
        .clone()
        .ok_or_else(|| Error::NotApplicable(format!("{} is not a path protocol", source.name)))?;
    if cut + 1 >= path.len() {
        return Err(Error::param(format!("cut {cut} needs 0 <= i <= {}", path.len().saturating_sub(2))));
    }
    let side = |node: &str| -> Result<&'static str> {
        match path.iter().position(|n| n == node) {
            Some(j) if j <= cut => Ok(ALICE),
            Some(_) => Ok(BOB),
            None => Err(Error::param(format!("node `{node}` is not on the path"))),
        }
    };
    let mut pipeline = source.clone();
    pipeline.name = format!("{}_cut{cut}", source.name);
    pipeline.nodes = vec![ALICE.into(), BOB.into()];
    pipeline.path = None;
    for reg in &mut pipeline.registers {
        reg.owner = side(&reg.owner)?.into();
    }
    for ch in &mut pipeline.channels {
        ch.node = side(&ch.node)?.into();
    }
    for t in &mut pipeline.tests {
        t.node = side(&t.node)?.into();
    }
    for g in &mut pipeline.guards {
        g.node = side(&g.node)?.into();
    }
    let crossing: Vec<&Message> = source
        .messages
        .iter()
        .filter(|m| {
            let (a, b) = (&path[cut], &path[cut + 1]);
            (&m.from == a && &m.to == b) || (&m.from == b && &m.to == a)
        })
        .collect();
    pipeline.messages = crossing
        .iter()
        .map(|m| Ok(Message { from: side(&m.from)?.into(), to: side(&m.to)?.into(), registers: m.registers.clone() }))
        .collect::<Result<_>>()?;

    let mut alice_registers = Vec::new();
    let mut bob_registers = Vec::new();
    for reg in source.proof_registers() {
        if side(&reg.owner)? == ALICE {
            alice_registers.push(reg.id.clone());
        } else {
            bob_registers.push(reg.id.clone());
        }
    }
    let mut padding = Vec::new();
    let gamma1 = count(&alice_registers, source, &mut padding)?;
    let gamma2 = count(&bob_registers, source, &mut padding)?;
    let sent: Vec<String> = crossing.iter().flat_map(|m| m.registers.iter().cloned()).collect();
    let mu = count(&sent, source, &mut padding)?;
    let model = compile(&pipeline)?;
    Ok(TwoPartyQmaModel {
        cut,
        alice_nodes: path[..=cut].to_vec(),
        bob_nodes: path[cut + 1..].to_vec(),
        alice_registers,
        bob_registers,
        gamma1,
        gamma2,
        mu,
        padding,
        pipeline,
        model,
    })
}

/// One line of the cut report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub i: usize,
    pub gamma1: usize,
    pub gamma2: usize,
    pub mu: usize,
    pub total_cost: usize,
    pub accept_value: f64,
}

/// Every cut of a path model, with the source value for comparison.
pub fn cut_reports(model: &AcceptanceModel) -> Result<(f64, Vec<CutReport>)> {
    let cuts = model.pipeline().path.as_ref().map_or(0, |p| p.len().saturating_sub(1));
    if cuts == 0 {
        return Err(Error::NotApplicable(format!("{} is not a path protocol", model.pipeline().name)));
    }
    let source = model.top_eigenpair()?.0;
    let reports = (0..cuts)
        .into_par_iter()
        .map(|i| {
            let two = cut_to_two_party(model, i)?;
            Ok(CutReport {
                i,
                gamma1: two.gamma1,
                gamma2: two.gamma2,
                mu: two.mu,
                total_cost: two.total_cost(),
                accept_value: two.accept_value()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((source, reports))
}

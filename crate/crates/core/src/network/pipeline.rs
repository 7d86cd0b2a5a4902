use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::spec::{ChannelSpec, StateSpec, TestSpec};
use crate::qcore::{check_cap, dim_product, kernel::kron_vectors, Register, RegisterLayout, Role, StateVector};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// A register filled by its owning node with a fixed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparedState {
    pub register: String,
    pub state: StateSpec,
}

/// A channel together with the node applying it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeChannel {
    pub node: String,
    pub channel: ChannelSpec,
}

/// A local two-outcome test performed by a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalTest {
    pub node: String,
    pub test: TestSpec,
}

/// A classical check evaluated before any quantum step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalGuard {
    pub node: String,
    pub description: String,
    pub passed: bool,
}

/// Ownership transfer of registers along an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub from: String,
    pub to: String,
    pub registers: Vec<String>,
}

/// Honest content of one proof register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HonestPart {
    pub register: String,
    pub state: StateSpec,
}

/// A protocol reduced to prepared states, channels and disjoint local tests.
///
/// Register ownership in `registers` is the owner after the prover hands out
/// proofs; `messages` records forwarding. Tests are applied after all
/// channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolPipeline {
    pub name: String,
    pub nodes: Vec<String>,
    pub registers: Vec<Register>,
    pub prepared: Vec<PreparedState>,
    pub channels: Vec<NodeChannel>,
    pub tests: Vec<LocalTest>,
    pub guards: Vec<ClassicalGuard>,
    pub messages: Vec<Message>,
    /// Honest proof as a product over proof registers, when one exists.
    pub honest_proof: Option<Vec<HonestPart>>,
    /// Nodes in path order for path-shaped protocols.
    pub path: Option<Vec<String>>,
    /// Whether the inputs form a yes-instance, when known.
    pub yes_instance: Option<bool>,
    pub dim_cap: usize,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl ProtocolPipeline {
    pub fn new(name: impl Into<String>, nodes: Vec<String>) -> Self {
        ProtocolPipeline {
            name: name.into(),
            nodes,
            registers: Vec::new(),
            prepared: Vec::new(),
            channels: Vec::new(),
            tests: Vec::new(),
            guards: Vec::new(),
            messages: Vec::new(),
            honest_proof: Some(Vec::new()),
            path: None,
            yes_instance: None,
            dim_cap: DEFAULT_DIM_CAP,
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::param(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ProtocolPipeline = serde_json::from_str(text).map_err(|e| Error::param(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn register(&self, id: &str) -> Result<&Register> {
        self.registers.iter().find(|r| r.id == id).ok_or_else(|| Error::UnknownRegister(id.into()))
    }

    pub fn dim_of(&self, id: &str) -> Result<usize> {
        Ok(self.register(id)?.dim)
    }

    pub fn proof_registers(&self) -> Vec<&Register> {
        self.registers.iter().filter(|r| r.role == Role::Proof).collect()
    }

    pub fn proof_dimension(&self) -> u128 {
        dim_product(self.proof_registers().iter().map(|r| r.dim))
    }

    /// Layout of the proof registers in pipeline order.
    pub fn proof_layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::with_cap(self.proof_registers().into_iter().cloned().collect(), self.dim_cap)
    }

    /// Proof registers grouped by owning node, in node order; nodes without proof are omitted.
    pub fn node_grouping(&self) -> Vec<(String, Vec<String>)> {
        self.nodes
            .iter()
            .filter_map(|n| {
                let regs: Vec<String> =
                    self.proof_registers().iter().filter(|r| &r.owner == n).map(|r| r.id.clone()).collect();
                (!regs.is_empty()).then(|| (n.clone(), regs))
            })
            .collect()
    }

    pub fn guards_pass(&self) -> bool {
        self.guards.iter().all(|g| g.passed)
    }

    /// Structural checks: known ids, disjoint tests, prepared registers filled, dimension cap.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for r in &self.registers {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::DuplicateRegister(r.id.clone()));
            }
            if r.dim == 0 {
                return Err(Error::param(format!("register `{}` has dimension 0", r.id)));
            }
            if !self.nodes.contains(&r.owner) {
                return Err(Error::param(format!("register `{}` owned by unknown node `{}`", r.id, r.owner)));
            }
        }
        let node_set: HashSet<&str> = self.nodes.iter().map(|s| s.as_str()).collect();
        let prepared: HashMap<&str, &StateSpec> =
            self.prepared.iter().map(|p| (p.register.as_str(), &p.state)).collect();
        for r in &self.registers {
            let has = prepared.contains_key(r.id.as_str());
            match r.role {
                Role::Proof if has => return Err(Error::param(format!("proof register `{}` is prepared", r.id))),
                Role::Prepared | Role::Ancilla if !has => {
                    return Err(Error::param(format!("register `{}` has no prepared state", r.id)))
                }
                _ => {}
            }
        }
        for p in &self.prepared {
            let d = self.dim_of(&p.register)?;
            let v = p.state.amplitudes()?;
            if v.len() != d {
                return Err(Error::LayoutMismatch(format!(
                    "prepared state of dimension {} in register `{}` of dimension {d}",
                    v.len(),
                    p.register
                )));
            }
        }
        let dim_of = |id: &str| self.dim_of(id);
        let mut used: HashMap<String, usize> = HashMap::new();
        for (k, t) in self.tests.iter().enumerate() {
            if !node_set.contains(t.node.as_str()) {
                return Err(Error::param(format!("test at unknown node `{}`", t.node)));
            }
            for id in t.test.registers() {
                self.dim_of(&id)?;
                if let Some(prev) = used.insert(id.clone(), k) {
                    if prev != k {
                        return Err(Error::param(format!("register `{id}` measured by tests {prev} and {k}")));
                    }
                    return Err(Error::DuplicateRegister(id));
                }
            }
        }
        for c in &self.channels {
            if !node_set.contains(c.node.as_str()) {
                return Err(Error::param(format!("channel at unknown node `{}`", c.node)));
            }
            c.channel.branches(&dim_of)?;
        }
        for g in &self.guards {
            if !node_set.contains(g.node.as_str()) {
                return Err(Error::param(format!("guard at unknown node `{}`", g.node)));
            }
        }
        for m in &self.messages {
            for id in &m.registers {
                self.dim_of(id)?;
            }
        }
        check_cap(self.proof_dimension(), self.dim_cap)?;
        if let Some(honest) = &self.honest_proof {
            for part in honest {
                if self.register(&part.register)?.role != Role::Proof {
                    return Err(Error::param(format!("honest part for non-proof register `{}`", part.register)));
                }
            }
        }
        Ok(())
    }

    /// The honest proof as a state on [`ProtocolPipeline::proof_layout`].
    pub fn honest_state(&self) -> Result<StateVector> {
        let parts = self
            .honest_proof
            .as_ref()
            .ok_or_else(|| Error::NotApplicable(format!("{} has no honest proof for these inputs", self.name)))?;
        let by_reg: HashMap<&str, &StateSpec> = parts.iter().map(|p| (p.register.as_str(), &p.state)).collect();
        let layout = self.proof_layout()?;
        let vectors = layout
            .registers()
            .iter()
            .map(|r| {
                let spec = by_reg
                    .get(r.id.as_str())
                    .ok_or_else(|| Error::NotApplicable(format!("no honest content for `{}`", r.id)))?;
                let v = spec.amplitudes()?;
                if v.len() != r.dim {
                    return Err(Error::LayoutMismatch(format!("honest state for `{}`", r.id)));
                }
                Ok(v.as_slice().to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        let slices: Vec<&[_]> = vectors.iter().map(|v| v.as_slice()).collect();
        StateVector::normalized(layout, kron_vectors(&slices).into())
    }

    /// Disjoint union of pipelines; register ids get a `tag/` prefix, node ids are shared.
    pub fn combine(name: impl Into<String>, parts: &[(String, ProtocolPipeline)]) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        for (_, p) in parts {
            for n in &p.nodes {
                if !nodes.contains(n) {
                    nodes.push(n.clone());
                }
            }
        }
        let mut out = ProtocolPipeline::new(name, nodes);
        out.dim_cap = parts.iter().map(|(_, p)| p.dim_cap).max().unwrap_or(DEFAULT_DIM_CAP);
        let first_path = parts.first().and_then(|(_, p)| p.path.clone());
        out.path = if parts.iter().all(|(_, p)| p.path == first_path) { first_path } else { None };
        let mut yes = Some(true);
        for (tag, p) in parts {
            let rn = |id: &String| format!("{tag}/{id}");
            let rn_all = |ids: &[String]| ids.iter().map(rn).collect::<Vec<_>>();
            let rn_groups = |gs: &[Vec<String>]| gs.iter().map(|g| rn_all(g)).collect::<Vec<_>>();
            out.registers.extend(p.registers.iter().map(|r| Register { id: rn(&r.id), ..r.clone() }));
            out.prepared.extend(
                p.prepared.iter().map(|s| PreparedState { register: rn(&s.register), state: s.state.clone() }),
            );
            for c in &p.channels {
                let channel = match &c.channel {
                    ChannelSpec::Symmetrize { groups } => ChannelSpec::Symmetrize { groups: rn_groups(groups) },
                    ChannelSpec::QmaAlice { registers, protocol, x } => ChannelSpec::QmaAlice {
                        registers: rn_all(registers),
                        protocol: protocol.clone(),
                        x: x.clone(),
                    },
                    ChannelSpec::Explicit { registers, terms } => {
                        ChannelSpec::Explicit { registers: rn_all(registers), terms: terms.clone() }
                    }
                };
                out.channels.push(NodeChannel { node: c.node.clone(), channel });
            }
            for t in &p.tests {
                let test = match &t.test {
                    TestSpec::Symmetric { groups } => TestSpec::Symmetric { groups: rn_groups(groups) },
                    TestSpec::Projector { registers, state } => {
                        TestSpec::Projector { registers: rn_all(registers), state: state.clone() }
                    }
                    TestSpec::OneWay { registers, protocol, y } => {
                        TestSpec::OneWay { registers: rn_all(registers), protocol: protocol.clone(), y: y.clone() }
                    }
                    TestSpec::QmaBob { registers, protocol, y } => {
                        TestSpec::QmaBob { registers: rn_all(registers), protocol: protocol.clone(), y: y.clone() }
                    }
                    TestSpec::Explicit { registers, matrix } => {
                        TestSpec::Explicit { registers: rn_all(registers), matrix: matrix.clone() }
                    }
                };
                out.tests.push(LocalTest { node: t.node.clone(), test });
            }
            out.guards.extend(p.guards.iter().cloned());
            out.messages.extend(p.messages.iter().map(|m| Message {
                from: m.from.clone(),
                to: m.to.clone(),
                registers: rn_all(&m.registers),
            }));
            out.honest_proof = match (out.honest_proof.take(), &p.honest_proof) {
                (Some(mut acc), Some(h)) => {
                    acc.extend(h.iter().map(|hp| HonestPart { register: rn(&hp.register), state: hp.state.clone() }));
                    Some(acc)
                }
                _ => None,
            };
            yes = match (yes, p.yes_instance) {
                (Some(a), Some(b)) => Some(a && b),
                _ => None,
            };
            out.metadata.insert(tag.clone(), serde_json::Value::String(p.name.clone()));
        }
        out.yes_instance = yes;
        out.validate()?;
        Ok(out)
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chain::{Chain, FinalTest, LeftEnd, RightEnd};
use crate::fingerprint::{BitString, FingerprintScheme, OneWayProtocol, OneWayQmaProtocol};
use crate::network::{
    ChannelSpec, HonestPart, LocalTest, Message, NodeChannel, PreparedState, ProtocolPipeline, StateSpec, TestSpec,
    Topology,
};
use crate::qcore::{check_cap, Register};
use crate::symmetric::MAX_PERMUTED_REGISTERS;
use crate::{Error, Result, DEFAULT_DIM_CAP};

fn one() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

fn check_len(scheme: &FingerprintScheme, inputs: &[&BitString]) -> Result<()> {
    for x in inputs {
        if x.len() != scheme.n {
            return Err(Error::param(format!("input {x} has {} bits, scheme expects {}", x.len(), scheme.n)));
        }
    }
    Ok(())
}

/// Parameters of the EQ path protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqPathParams {
    pub r: usize,
    pub scheme: FingerprintScheme,
    pub x: BitString,
    pub y: BitString,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub final_test: FinalTest,
    /// Removes proofs and tests from nodes `gap` and `gap + 1`.
    #[serde(default)]
    pub gap: Option<usize>,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

impl EqPathParams {
    pub fn new(r: usize, scheme: FingerprintScheme, x: BitString, y: BitString) -> Self {
        EqPathParams { r, scheme, x, y, reps: 1, final_test: FinalTest::Povm, gap: None, dim_cap: DEFAULT_DIM_CAP }
    }

    pub fn reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn final_test(mut self, final_test: FinalTest) -> Self {
        self.final_test = final_test;
        self
    }

    pub fn gap(mut self, gap: usize) -> Self {
        self.gap = Some(gap);
        self
    }

    pub fn dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }
}

/// EQ on a path: fingerprints forwarded through symmetrized register pairs.
pub fn build_eq_path(p: &EqPathParams) -> Result<ProtocolPipeline> {
    check_len(&p.scheme, &[&p.x, &p.y])?;
    let hx = StateSpec::Fingerprint { scheme: p.scheme.clone(), x: p.x.clone() };
    let hy = StateSpec::Fingerprint { scheme: p.scheme.clone(), x: p.y.clone() };
    let right = match p.final_test {
        FinalTest::Povm => RightEnd::Projector(hy),
        FinalTest::Swap => RightEnd::Swap(hy),
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("n".into(), p.scheme.n.into());
    metadata.insert("x".into(), p.x.to_string().into());
    metadata.insert("y".into(), p.y.to_string().into());
    metadata.insert("scheme".into(), p.scheme.name().into());
    let name = if p.gap.is_some() { "eq_path_gapped" } else { "eq_path" };
    Chain {
        name: name.into(),
        r: p.r,
        reps: p.reps,
        message_dim: p.scheme.state_dimension,
        left: LeftEnd::Prepared(hx),
        right,
        gap: p.gap,
        dim_cap: p.dim_cap,
        yes_instance: Some(p.x == p.y),
        metadata,
    }
    .build()
}

/// Path conversion of a one-way QMA protocol.
pub fn build_from_oneway_qma(
    q: &OneWayQmaProtocol,
    r: usize,
    x: &BitString,
    y: &BitString,
    reps: usize,
    dim_cap: usize,
) -> Result<ProtocolPipeline> {
    let mut metadata = BTreeMap::new();
    metadata.insert("n".into(), q.n().into());
    metadata.insert("x".into(), x.to_string().into());
    metadata.insert("y".into(), y.to_string().into());
    metadata.insert("inner".into(), q.name().into());
    Chain {
        name: "from_oneway_qma".into(),
        r,
        reps,
        message_dim: q.message_dimension(),
        left: LeftEnd::QmaAlice { protocol: q.clone(), x: x.clone(), y: y.clone() },
        right: RightEnd::QmaBob { protocol: q.clone(), y: y.clone() },
        gap: None,
        dim_cap,
        yes_instance: Some(q.function().eval(x, y)),
        metadata,
    }
    .build()
}

/// Path conversion of a proof-free one-way protocol (message forwarded, `M_{y,1}` at the end).
pub fn build_oneway_path(
    protocol: &OneWayProtocol,
    r: usize,
    x: &BitString,
    y: &BitString,
    reps: usize,
    dim_cap: usize,
) -> Result<ProtocolPipeline> {
    Chain {
        name: "oneway_path".into(),
        r,
        reps,
        message_dim: protocol.message_dimension(),
        left: LeftEnd::Prepared(StateSpec::OneWayMessage { protocol: protocol.clone(), x: x.clone() }),
        right: RightEnd::OneWay { protocol: protocol.clone(), y: y.clone() },
        gap: None,
        dim_cap,
        yes_instance: Some(protocol.function().eval(x, y)),
        metadata: BTreeMap::new(),
    }
    .build()
}

/// Parameters shared by the tree builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub topology: Topology,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

impl TreeParams {
    pub fn new(topology: Topology) -> Self {
        TreeParams { topology, reps: 1, dim_cap: DEFAULT_DIM_CAP }
    }
}

fn tree_reg(node: &str, rep: usize, name: &str) -> String {
    format!("{node}.k{rep}.{name}")
}

fn tree_proof_dimension(t: &Topology, per_node: impl Fn(&str) -> usize, m: usize, reps: usize) -> u128 {
    let mut needed: u128 = 1;
    for n in &t.nodes {
        for _ in 0..per_node(n) * reps {
            needed = needed.saturating_mul(m as u128);
        }
    }
    needed
}

/// EQ on a tree with leaves-to-root flow and permutation tests.
pub fn build_eq_tree(p: &TreeParams, scheme: &FingerprintScheme) -> Result<ProtocolPipeline> {
    let t = &p.topology;
    t.validate()?;
    let root_input =
        t.input(&t.root).ok_or_else(|| Error::param(format!("root `{}` must be a terminal", t.root)))?.clone();
    for term in &t.terminals {
        check_len(scheme, &[&term.input])?;
    }
    let m = scheme.state_dimension;
    let is_relay = |n: &str| n != t.root && t.input(n).is_none();
    for n in &t.nodes {
        let kids = t.children(n).len();
        if n != &t.root && t.input(n).is_some() && kids > 0 {
            return Err(Error::param(format!("terminal `{n}` must be a leaf")));
        }
        if kids + 1 > MAX_PERMUTED_REGISTERS {
            return Err(Error::param(format!("node `{n}` has {kids} children; the permutation test allows at most {}", MAX_PERMUTED_REGISTERS - 1)));
        }
    }
    check_cap(tree_proof_dimension(t, |n| if is_relay(n) { 2 } else { 0 }, m, p.reps), p.dim_cap)?;

    let mut pipe = ProtocolPipeline::new("eq_tree", t.nodes.clone());
    pipe.dim_cap = p.dim_cap;
    pipe.yes_instance = Some(t.terminals.iter().all(|term| term.input == root_input));
    pipe.metadata.insert("root".into(), t.root.clone().into());
    pipe.metadata.insert("n".into(), scheme.n.into());
    let fp = |x: &BitString| StateSpec::Fingerprint { scheme: scheme.clone(), x: x.clone() };
    let upward = |n: &str, rep: usize| -> String {
        if is_relay(n) {
            tree_reg(n, rep, "R1")
        } else {
            tree_reg(n, rep, "h")
        }
    };
    let mut honest = Vec::new();
    for n in &t.nodes {
        let kids = t.children(n);
        for rep in 0..p.reps {
            let mut groups = Vec::new();
            if is_relay(n) {
                let (r0, r1) = (tree_reg(n, rep, "R0"), tree_reg(n, rep, "R1"));
                pipe.registers.push(Register::proof(r0.clone(), m, n.clone()));
                pipe.registers.push(Register::proof(r1.clone(), m, n.clone()));
                pipe.channels.push(NodeChannel {
                    node: n.clone(),
                    channel: ChannelSpec::Symmetrize { groups: vec![vec![r0.clone()], vec![r1.clone()]] },
                });
                honest.push(HonestPart { register: r0.clone(), state: fp(&root_input) });
                honest.push(HonestPart { register: r1, state: fp(&root_input) });
                groups.push(vec![r0]);
            } else {
                let h = tree_reg(n, rep, "h");
                pipe.registers.push(Register::prepared(h.clone(), m, n.clone()));
                let x = t.input(n).expect("terminal input");
                pipe.prepared.push(PreparedState { register: h.clone(), state: fp(x) });
                groups.push(vec![h]);
            }
            groups.extend(kids.iter().map(|c| vec![upward(c, rep)]));
            if groups.len() >= 2 {
                pipe.tests.push(LocalTest { node: n.clone(), test: TestSpec::Symmetric { groups } });
            }
        }
        if let Some(parent) = t.parent.get(n) {
            pipe.messages.push(Message {
                from: n.clone(),
                to: parent.clone(),
                registers: (0..p.reps).map(|rep| upward(n, rep)).collect(),
            });
        }
    }
    pipe.honest_proof = Some(honest);
    pipe.validate()?;
    Ok(pipe)
}

/// One pipeline per terminal: the tree rerooted there, with root-to-leaves
/// forwarding of the root's one-way message and the protocol's test at every leaf.
pub fn build_forall_f(p: &TreeParams, protocol: &OneWayProtocol) -> Result<Vec<ProtocolPipeline>> {
    let base = &p.topology;
    let m = protocol.message_dimension();
    let mut out = Vec::new();
    for term in &base.terminals {
        let t = base.reroot(&term.node)?;
        let root_input = term.input.clone();
        let is_relay = |n: &str| n != t.root && t.input(n).is_none();
        for n in &t.nodes {
            let kids = t.children(n).len();
            if n != &t.root && t.input(n).is_some() && kids > 0 {
                return Err(Error::param(format!("terminal `{n}` must be a leaf")));
            }
            if is_relay(n) && kids + 1 > MAX_PERMUTED_REGISTERS {
                return Err(Error::param(format!("node `{n}` needs {} symmetrized registers", kids + 1)));
            }
        }
        check_cap(tree_proof_dimension(&t, |n| if is_relay(n) { t.children(n).len() + 1 } else { 0 }, m, p.reps), p.dim_cap)?;
        let mut pipe = ProtocolPipeline::new(format!("forall_f[root={}]", t.root), t.nodes.clone());
        pipe.dim_cap = p.dim_cap;
        pipe.metadata.insert("root".into(), t.root.clone().into());
        pipe.metadata.insert("inner".into(), protocol.name().into());
        let f = protocol.function();
        pipe.yes_instance = Some(
            t.nodes
                .iter()
                .filter(|n| *n != &t.root)
                .filter_map(|n| t.input(n))
                .all(|y| f.eval(&root_input, y)),
        );
        let message = StateSpec::OneWayMessage { protocol: protocol.clone(), x: root_input.clone() };
        // Register sent from a node to its `mu`-th child (1-based).
        let downward = |n: &str, rep: usize, mu: usize| -> String {
            if n == t.root {
                tree_reg(n, rep, &format!("m{mu}"))
            } else {
                tree_reg(n, rep, &format!("R{mu}"))
            }
        };
        let mut honest = Vec::new();
        for n in &t.nodes {
            let kids = t.children(n);
            let from_parent = |rep: usize| -> Option<String> {
                let parent = t.parent.get(n)?;
                let mu = t.children(parent).iter().position(|c| c == n).expect("child of its parent") + 1;
                Some(downward(parent, rep, mu))
            };
            for rep in 0..p.reps {
                if n == &t.root {
                    for mu in 1..=kids.len() {
                        let id = downward(n, rep, mu);
                        pipe.registers.push(Register::prepared(id.clone(), m, n.clone()));
                        pipe.prepared.push(PreparedState { register: id, state: message.clone() });
                    }
                } else if is_relay(n) {
                    let delta = kids.len();
                    let regs: Vec<String> = (1..=delta + 1).map(|mu| tree_reg(n, rep, &format!("R{mu}"))).collect();
                    for id in &regs {
                        pipe.registers.push(Register::proof(id.clone(), m, n.clone()));
                        honest.push(HonestPart { register: id.clone(), state: message.clone() });
                    }
                    pipe.channels.push(NodeChannel {
                        node: n.clone(),
                        channel: ChannelSpec::Symmetrize { groups: regs.iter().map(|id| vec![id.clone()]).collect() },
                    });
                    let kept = regs[delta].clone();
                    let incoming = from_parent(rep).expect("relay nodes have parents");
                    pipe.tests.push(LocalTest {
                        node: n.clone(),
                        test: TestSpec::Symmetric { groups: vec![vec![incoming], vec![kept]] },
                    });
                } else {
                    let y = t.input(n).expect("leaf terminal").clone();
                    let incoming = from_parent(rep).expect("leaves have parents");
                    pipe.tests.push(LocalTest {
                        node: n.clone(),
                        test: TestSpec::OneWay { registers: vec![incoming], protocol: protocol.clone(), y },
                    });
                }
            }
            for (k, c) in kids.iter().enumerate() {
                pipe.messages.push(Message {
                    from: n.clone(),
                    to: c.clone(),
                    registers: (0..p.reps).map(|rep| downward(n, rep, k + 1)).collect(),
                });
            }
        }
        pipe.honest_proof = Some(honest);
        pipe.validate()?;
        out.push(pipe);
    }
    Ok(out)
}

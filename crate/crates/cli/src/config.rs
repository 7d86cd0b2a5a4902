use serde::{Deserialize, Serialize};

use dqma_core::adversary::ProverStrategy;
use dqma_core::fingerprint::{exact_send_protocol, eq_one_way, BitString, BooleanFunction, FingerprintScheme, OneWayQmaProtocol};
use dqma_core::network::{Terminal, Topology};
use dqma_core::protocols::{FinalTest, GtVariant};
use dqma_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    EqPath,
    EqTree,
    EqRelay,
    Gt,
    GtLt,
    GtGe,
    GtLe,
    Rv,
    ForallF,
    FromOnewayQma,
}

impl ProtocolName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolName::EqPath => "eq_path",
            ProtocolName::EqTree => "eq_tree",
            ProtocolName::EqRelay => "eq_relay",
            ProtocolName::Gt => "gt",
            ProtocolName::GtLt => "gt_lt",
            ProtocolName::GtGe => "gt_ge",
            ProtocolName::GtLe => "gt_le",
            ProtocolName::Rv => "rv",
            ProtocolName::ForallF => "forall_f",
            ProtocolName::FromOnewayQma => "from_oneway_qma",
        }
    }

    pub fn gt_variant(self) -> Option<GtVariant> {
        match self {
            ProtocolName::Gt => Some(GtVariant::Gt),
            ProtocolName::GtLt => Some(GtVariant::Lt),
            ProtocolName::GtGe => Some(GtVariant::Ge),
            ProtocolName::GtLe => Some(GtVariant::Le),
            _ => None,
        }
    }

    /// Whether the parameters carry a two-party input pair `x`, `y`.
    pub fn has_pair(self) -> bool {
        !matches!(self, ProtocolName::EqTree | ProtocolName::Rv | ProtocolName::ForallF)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum Mode {
    #[default]
    Exact,
    Sample {
        shots: u64,
        #[serde(default)]
        seed: Option<u64>,
    },
}


/// One experiment: a protocol instance and a prover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolName,
    pub params: serde_json::Value,
    #[serde(default)]
    pub prover: ProverStrategy,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub dim_cap: Option<usize>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum SchemeSpec {
    #[default]
    Hadamard,
    CodeBased {
        m: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Qubit states at angle `x pi / 64`.
    Tiny,
}


impl SchemeSpec {
    pub fn build(&self, n: usize, cap: usize) -> Result<FingerprintScheme> {
        match self {
            SchemeSpec::Hadamard => FingerprintScheme::hadamard_capped(n, cap),
            SchemeSpec::CodeBased { m, seed } => FingerprintScheme::code_based_search(n, *m, *seed, 1000),
            SchemeSpec::Tiny => dqma_core::adversary::tiny_family_scheme(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqPathConfig {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub final_test: FinalTest,
    #[serde(default)]
    pub gap: Option<usize>,
}

/// Tree shapes addressable from a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum TopologySpec {
    #[default]
    Star,
    Spider { arm_length: usize },
    Graph { nodes: Vec<String>, edges: Vec<(String, String)>, terminals: Vec<String>, root: String },
}


impl TopologySpec {
    pub fn build(&self, inputs: &[BitString]) -> Result<Topology> {
        match self {
            TopologySpec::Star => Topology::star(inputs),
            TopologySpec::Spider { arm_length } => Topology::spider(inputs, *arm_length),
            TopologySpec::Graph { nodes, edges, terminals, root } => {
                if terminals.len() != inputs.len() {
                    return Err(dqma_core::Error::InvalidParameter("one input per terminal".into()));
                }
                let terms =
                    terminals.iter().zip(inputs).map(|(n, x)| Terminal { node: n.clone(), input: x.clone() }).collect();
                Topology::from_graph(nodes, edges, terms, root)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub inputs: Vec<BitString>,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub scheme: SchemeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayConfig {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    #[serde(default)]
    pub segment_length: Option<usize>,
    #[serde(default)]
    pub reps_per_segment: Option<usize>,
    #[serde(default)]
    pub scheme: Option<SchemeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtConfig {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    #[serde(default = "one")]
    pub reps: usize,
    /// Index claimed by the prover; the honest index (or the best one for
    /// `entangled_opt`) when absent.
    #[serde(default)]
    pub index: Option<usize>,
    #[serde(default)]
    pub node_indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RvConfig {
    pub inputs: Vec<BitString>,
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default = "one")]
    pub reps: usize,
}

/// The one-way protocol run along every root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum OneWaySpec {
    #[default]
    ExactSend,
    Fingerprint {
        #[serde(default)]
        scheme: SchemeSpec,
    },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForallConfig {
    pub inputs: Vec<BitString>,
    pub function: BooleanFunction,
    #[serde(default)]
    pub oneway: OneWaySpec,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default = "one")]
    pub reps: usize,
}

impl ForallConfig {
    pub fn protocol(&self, cap: usize) -> Result<dqma_core::OneWayProtocol> {
        let n = self.inputs.first().map_or(0, |x| x.len());
        match &self.oneway {
            OneWaySpec::ExactSend => exact_send_protocol(self.function.clone(), n),
            OneWaySpec::Fingerprint { scheme } => {
                if self.function != BooleanFunction::Eq {
                    return Err(dqma_core::Error::InvalidParameter("fingerprint one-way protocols compute eq".into()));
                }
                eq_one_way(&scheme.build(n, cap)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmaConfig {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    #[serde(default = "one")]
    pub reps: usize,
    pub protocol: OneWayQmaProtocol,
}

/// Axes of a sweep; an empty axis keeps the template's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub r: Vec<usize>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub scheme: Vec<SchemeSpec>,
}

/// Input pairs generated for each sweep cell of a two-party protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum InputRule {
    /// Keep the template's `x`, `y` (padded or cut to `n` bits when `n` varies).
    #[default]
    Template,
    /// `x = y = 0…01`.
    Equal,
    /// `x = 0…0`, `y = 1…1`.
    Distinct,
    /// Every ordered pair.
    AllPairs,
    /// Every ordered pair with `x != y`.
    AllDistinct,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub template: ExperimentConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default)]
    pub inputs: InputRule,
}

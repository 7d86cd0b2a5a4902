//! Topologies, protocol pipelines, their compilation into acceptance
//! operators, and a sampling executor for cross-checks.

mod compile;
mod pipeline;
mod sampling;
mod spec;
mod topology;

pub use compile::{compile, AcceptanceModel, ProofState};
pub use pipeline::{ClassicalGuard, HonestPart, LocalTest, Message, NodeChannel, PreparedState, ProtocolPipeline};
pub use sampling::{simulate_sampled, SampledStats};
pub use spec::{BranchAction, ChannelSpec, ExplicitTerm, MatrixData, StateSpec, TestSpec};
pub use topology::{Terminal, Topology, TopologyKind};


#[cfg(test)]
mod tests;

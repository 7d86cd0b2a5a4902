//! Simulation and analysis of distributed quantum Merlin-Arthur (dQMA)
//! verification protocols on path and tree networks.
//!
//! The crate compiles a protocol description into an acceptance operator on
//! the prover's proof space. Exact completeness and soundness values follow
//! from that operator (the optimal cheating value is its top eigenvalue), and
//! a shot-based executor cross-checks the exact numbers.
//!
//! Module map:
//! - [`qcore`]: registers, states, operators, channels, distances.
//! - [`symmetric`]: SWAP test, permutation test, symmetric projectors.
//! - [`fingerprint`]: fingerprint states and one-way protocols.
//! - [`network`]: topologies, pipelines, compilation and sampling.
//! - [`protocols`]: builders for every supported protocol.
//! - [`adversary`]: honest, optimal and attack-constructed provers.
//! - [`reductions`]: cutting a path protocol into a two-party protocol.
//! - [`selftest`]: the built-in invariant suite.

pub mod adversary;
pub mod error;
pub mod fingerprint;
pub mod network;
pub mod protocols;
pub mod qcore;
pub mod reductions;
pub mod selftest;
pub mod symmetric;

pub use error::{Error, Result};
pub use fingerprint::{BitString, FingerprintScheme, OneWayProtocol, OneWayQmaProtocol};
pub use network::{AcceptanceModel, ProtocolPipeline, Topology};
pub use qcore::{
    CMatrix, CVector, DensityOperator, HermitianOperator, MixingChannel, Register,
    RegisterLayout, Role, StateVector, C64,
};

/// Numerical tolerances shared by every module.
pub mod tol {
    /// Structural checks: Hermiticity, normalization, positivity.
    pub const STRUCTURAL: f64 = 1e-9;
    /// Required residual of eigenpairs returned by the solvers.
    pub const EIGEN_RESIDUAL: f64 = 1e-8;
    /// Precision used when reporting numbers.
    pub const REPORT: f64 = 1e-12;
    /// Probabilities of a mixing channel must sum to one within this.
    pub const PROBABILITY_SUM: f64 = 1e-12;
}

/// Default bound on the dimension of any proof space.
pub const DEFAULT_DIM_CAP: usize = 4096;

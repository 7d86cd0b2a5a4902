//! Builders turning protocol parameters into pipelines.

mod bounds;
mod chain;
mod eq;
mod gt;
mod relay;
mod rv;

pub use bounds::{path_gap, path_soundness_bound, summed_rejection_bound, Bound};
pub use chain::FinalTest;
pub use eq::{build_eq_path, build_eq_tree, build_forall_f, build_from_oneway_qma, build_oneway_path, EqPathParams, TreeParams};
pub use gt::{build_gt, gt_adversary_value, prefix_state, GtParams, GtVariant};
pub use relay::{build_eq_relay, cube_root_ceil, RelayParams, RelayProtocol, RelayValue};
pub use rv::{build_rv, rv_truth, RvAssignment, RvModel, RvParams};

#[cfg(test)]
mod tests;

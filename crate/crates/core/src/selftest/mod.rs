//! Invariant suite behind the `selftest` command.

mod checks;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, DEFAULT_DIM_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub dim_cap: usize,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub seed: u64,
    pub dim_cap: usize,
    /// Shots per sampled cross-check.
    pub shots: u64,
    /// Random vectors per family in the brute-force comparison.
    pub brute_force_samples: usize,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { seed: 7, dim_cap: DEFAULT_DIM_CAP, shots: 100_000, brute_force_samples: 100_000 }
    }
}

/// Outcome of one check that ran to completion.
pub(crate) struct Verdict {
    pub ok: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict { ok, detail: detail.into() }
    }

    /// Passes when `worst <= limit`.
    pub fn within(worst: f64, limit: f64, what: &str) -> Self {
        Verdict::new(worst <= limit, format!("{what}: worst {worst:.3e} (limit {limit:.1e})"))
    }
}

type CheckFn = fn(&SelftestOptions) -> crate::Result<Verdict>;

pub fn check_names() -> Vec<&'static str> {
    checks::ALL.iter().map(|(name, _)| *name).collect()
}

fn run_one(name: &str, check: CheckFn, opts: &SelftestOptions) -> CheckResult {
    let (status, detail) = match check(opts) {
        Ok(v) if v.ok => (CheckStatus::Pass, v.detail),
        Ok(v) => (CheckStatus::Fail, v.detail),
        Err(e @ Error::DimensionCap { .. }) => (CheckStatus::Skipped, e.to_string()),
        Err(e) => (CheckStatus::Fail, format!("error: {e}")),
    };
    CheckResult { name: name.into(), status, detail }
}

/// Runs every check; the report lists them in a fixed order.
pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    run_selected(opts, &check_names())
}

/// Runs the named checks; unknown names are reported as failures.
pub fn run_selected(opts: &SelftestOptions, names: &[&str]) -> SelftestReport {
    let checks = names
        .par_iter()
        .map(|name| match checks::ALL.iter().find(|(n, _)| n == name) {
            Some((n, f)) => run_one(n, *f, opts),
            None => CheckResult { name: name.to_string(), status: CheckStatus::Fail, detail: "unknown check".into() },
        })
        .collect();
    SelftestReport { seed: opts.seed, dim_cap: opts.dim_cap, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass_and_repeat() {
        let opts = SelftestOptions { shots: 20_000, brute_force_samples: 2_000, ..Default::default() };
        let names = ["qcore.partial_trace_of_tensor", "symmetric.swap_product_formula", "adversary.seesaw_determinism"];
        let a = run_selected(&opts, &names);
        assert!(a.passed(), "{a:?}");
        assert_eq!(a, run_selected(&opts, &names));
    }

    #[test]
    fn low_cap_skips() {
        let opts = SelftestOptions { dim_cap: 8, ..Default::default() };
        let report = run_selected(&opts, &["protocols.repetition_multiplicative"]);
        assert_eq!(report.checks[0].status, CheckStatus::Skipped);
    }
}

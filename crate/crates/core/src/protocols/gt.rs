use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, LeftEnd, RightEnd};
use crate::fingerprint::{BitString, FingerprintScheme};
use crate::network::{compile, ClassicalGuard, ProtocolPipeline, StateSpec};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// Comparison computed by the protocol, with `x` at `v0` and `y` at `v_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtVariant {
    /// `x > y`
    Gt,
    /// `x < y`
    Lt,
    /// `x ≥ y`
    Ge,
    /// `x ≤ y`
    Le,
}

impl GtVariant {
    pub fn eval(self, x: &BitString, y: &BitString) -> bool {
        let (a, b) = (x.to_u64(), y.to_u64());
        match self {
            GtVariant::Gt => a > b,
            GtVariant::Lt => a < b,
            GtVariant::Ge => a >= b,
            GtVariant::Le => a <= b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GtVariant::Gt => "gt",
            GtVariant::Lt => "gt_lt",
            GtVariant::Ge => "gt_ge",
            GtVariant::Le => "gt_le",
        }
    }

    /// Non-strict variants also accept the equality index `n`.
    pub fn allows_equality(self) -> bool {
        matches!(self, GtVariant::Ge | GtVariant::Le)
    }

    /// Required `(x_i, y_i)` at a differing index.
    fn bits(self) -> (bool, bool) {
        match self {
            GtVariant::Gt | GtVariant::Ge => (true, false),
            GtVariant::Lt | GtVariant::Le => (false, true),
        }
    }

    /// Index choices available to the prover.
    pub fn index_range(self, n: usize) -> std::ops::Range<usize> {
        0..if self.allows_equality() { n + 1 } else { n }
    }

    /// Width of the compared prefixes.
    fn prefix_width(self, n: usize) -> usize {
        if self.allows_equality() {
            n
        } else {
            n.saturating_sub(1)
        }
    }

    /// The index an honest prover sends, if the comparison holds.
    pub fn honest_index(self, x: &BitString, y: &BitString) -> Option<usize> {
        if !self.eval(x, y) {
            return None;
        }
        match x.first_difference(y) {
            Some(i) => Some(i),
            None => Some(x.len()),
        }
    }
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

fn one() -> usize {
    1
}

/// Parameters of the comparison protocol for one index choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtParams {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    #[serde(default = "one")]
    pub reps: usize,
    pub variant: GtVariant,
    /// Index sent to every node; `n` denotes equality for non-strict variants.
    pub index: usize,
    /// Per-node indices `v0 … v_r`, when the prover sends inconsistent ones.
    #[serde(default)]
    pub node_indices: Option<Vec<usize>>,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

impl GtParams {
    pub fn new(variant: GtVariant, r: usize, x: BitString, y: BitString, index: usize) -> Self {
        GtParams { r, x, y, reps: 1, variant, index, node_indices: None, dim_cap: DEFAULT_DIM_CAP }
    }

    /// Parameters with the honest index, or index 0 when none exists.
    pub fn honest(variant: GtVariant, r: usize, x: BitString, y: BitString) -> Self {
        let index = variant.honest_index(&x, &y).unwrap_or(0);
        Self::new(variant, r, x, y, index)
    }
}

/// State a terminal prepares for the prefix of length `index`.
pub fn prefix_state(variant: GtVariant, input: &BitString, index: usize) -> Result<StateSpec> {
    let width = variant.prefix_width(input.len());
    let scheme = FingerprintScheme::hadamard(width)?;
    let dim = scheme.state_dimension + 1;
    if index == 0 {
        return Ok(StateSpec::Basis { dim, index: scheme.state_dimension });
    }
    Ok(StateSpec::Embedded {
        inner: Box::new(StateSpec::Fingerprint { scheme, x: input.prefix(index).padded(width) }),
        dim,
    })
}

/// The comparison protocol with the index fixed; bit and index checks become guards.
pub fn build_gt(p: &GtParams) -> Result<ProtocolPipeline> {
    let n = p.x.len();
    if p.y.len() != n || n == 0 {
        return Err(Error::param("inputs must be non-empty and of equal width"));
    }
    if !p.variant.index_range(n).contains(&p.index) {
        return Err(Error::param(format!("index {} outside {:?}", p.index, p.variant.index_range(n))));
    }
    let left = prefix_state(p.variant, &p.x, p.index)?;
    let right = prefix_state(p.variant, &p.y, p.index)?;
    let message_dim = (1usize << p.variant.prefix_width(n)) + 1;
    let mut metadata = BTreeMap::new();
    metadata.insert("n".into(), n.into());
    metadata.insert("x".into(), p.x.to_string().into());
    metadata.insert("y".into(), p.y.to_string().into());
    metadata.insert("index".into(), p.index.into());
    let mut pipe = Chain {
        name: p.variant.name().into(),
        r: p.r,
        reps: p.reps,
        message_dim,
        left: LeftEnd::Prepared(left),
        right: RightEnd::Projector(right),
        gap: None,
        dim_cap: p.dim_cap,
        yes_instance: Some(p.variant.eval(&p.x, &p.y)),
        metadata,
    }
    .build()?;
    let i = p.index;
    if i < n {
        let (want_x, want_y) = p.variant.bits();
        pipe.guards.push(ClassicalGuard {
            node: "v0".into(),
            description: format!("x[{i}] = {}", want_x as u8),
            passed: p.x.bit(i) == want_x,
        });
        pipe.guards.push(ClassicalGuard {
            node: format!("v{}", p.r),
            description: format!("y[{i}] = {}", want_y as u8),
            passed: p.y.bit(i) == want_y,
        });
    }
    if let Some(idx) = &p.node_indices {
        if idx.len() != p.r + 1 {
            return Err(Error::param(format!("expected {} node indices", p.r + 1)));
        }
        for j in 1..=p.r {
            pipe.guards.push(ClassicalGuard {
                node: format!("v{j}"),
                description: format!("index agrees with v{}", j - 1),
                passed: idx[j] == idx[j - 1] && idx[j] == i,
            });
        }
    }
    pipe.validate()?;
    Ok(pipe)
}

/// Best cheating value over all index choices, with the maximizing index.
pub fn gt_adversary_value(p: &GtParams) -> Result<(f64, usize)> {
    let values = p
        .variant
        .index_range(p.x.len())
        .into_par_iter()
        .map(|i| {
            let q = GtParams { index: i, node_indices: None, ..p.clone() };
            Ok((compile(&build_gt(&q)?)?.top_eigenpair()?.0, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold((0.0, 0), |best, v| if v.0 > best.0 { v } else { best }))
}

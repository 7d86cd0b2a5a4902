use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{path_soundness_bound, Bound};
use super::chain::FinalTest;
use super::eq::{build_eq_path, EqPathParams};
use crate::fingerprint::{BitString, FingerprintScheme};
use crate::network::{compile, ProofState, ProtocolPipeline};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// `⌈n^{1/3}⌉`.
pub fn cube_root_ceil(n: usize) -> usize {
    let mut c = 1;
    while c * c * c < n {
        c += 1;
    }
    c
}

/// Parameters of the relay-point EQ protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayParams {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    /// Spacing of relay nodes; defaults to `⌈n^{1/3}⌉`.
    #[serde(default)]
    pub segment_length: Option<usize>,
    /// Repetitions inside each segment; defaults to `42⌈n^{1/3}⌉²`.
    #[serde(default)]
    pub reps_per_segment: Option<usize>,
    /// Fingerprints used inside segments; defaults to the Hadamard scheme.
    #[serde(default)]
    pub segment_scheme: Option<FingerprintScheme>,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl RelayParams {
    pub fn new(r: usize, x: BitString, y: BitString) -> Self {
        RelayParams { r, x, y, segment_length: None, reps_per_segment: None, segment_scheme: None, dim_cap: DEFAULT_DIM_CAP }
    }
}

/// Relay nodes measure an `n`-bit proof; segments between them run EQ paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayProtocol {
    pub r: usize,
    pub x: BitString,
    pub y: BitString,
    pub segment_length: usize,
    pub reps: usize,
    pub scheme: FingerprintScheme,
    /// Positions of relay nodes on the path.
    pub relays: Vec<usize>,
    pub dim_cap: usize,
}

/// Outcome of the optimal relay-string search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayValue {
    pub value: f64,
    /// Maximizing strings at the relay nodes.
    pub strings: Vec<BitString>,
    pub segment_values: Vec<f64>,
}

pub fn build_eq_relay(p: &RelayParams) -> Result<RelayProtocol> {
    let n = p.x.len();
    if p.y.len() != n {
        return Err(Error::param("inputs of different widths"));
    }
    let segment_length = p.segment_length.unwrap_or_else(|| cube_root_ceil(n));
    if segment_length < 2 && segment_length < p.r {
        return Err(Error::param("segment length must be at least 2"));
    }
    let c = cube_root_ceil(n);
    let reps = p.reps_per_segment.unwrap_or(42 * c * c);
    let scheme = match &p.segment_scheme {
        Some(s) => s.clone(),
        None => FingerprintScheme::hadamard_capped(n, p.dim_cap)?,
    };
    if scheme.n != n {
        return Err(Error::param("segment scheme width differs from the inputs"));
    }
    crate::qcore::check_cap(1u128 << n, p.dim_cap)?;
    let relays = (1..).map(|k| k * segment_length).take_while(|&v| v < p.r).collect();
    Ok(RelayProtocol {
        r: p.r,
        x: p.x.clone(),
        y: p.y.clone(),
        segment_length,
        reps,
        scheme,
        relays,
        dim_cap: p.dim_cap,
    })
}

impl RelayProtocol {
    /// Consecutive endpoint pairs `(a, b)` along the path.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut points = vec![0];
        points.extend(&self.relays);
        points.push(self.r);
        points.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn honest_strings(&self) -> Vec<BitString> {
        vec![self.x.clone(); self.relays.len()]
    }

    fn endpoints(&self, strings: &[BitString]) -> Result<Vec<BitString>> {
        if strings.len() != self.relays.len() {
            return Err(Error::param(format!("expected {} relay strings", self.relays.len())));
        }
        let mut out = vec![self.x.clone()];
        out.extend(strings.iter().cloned());
        out.push(self.y.clone());
        Ok(out)
    }

    /// EQ path of the segment between strings `left` and `right`.
    pub fn segment_pipeline(&self, length: usize, left: &BitString, right: &BitString) -> Result<ProtocolPipeline> {
        let params = EqPathParams::new(length, self.scheme.clone(), left.clone(), right.clone())
            .reps(self.reps)
            .final_test(FinalTest::Swap)
            .dim_cap(self.dim_cap);
        build_eq_path(&params)
    }

    /// Segment pipelines for the given relay strings.
    pub fn pipelines(&self, strings: &[BitString]) -> Result<Vec<ProtocolPipeline>> {
        let ends = self.endpoints(strings)?;
        self.segments()
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| self.segment_pipeline(b - a, &ends[k], &ends[k + 1]))
            .collect()
    }

    /// All segments as one pipeline (a single segment is returned unchanged).
    pub fn combined_pipeline(&self, strings: &[BitString]) -> Result<ProtocolPipeline> {
        let mut parts = self.pipelines(strings)?;
        if parts.len() == 1 {
            return Ok(parts.remove(0));
        }
        let tagged: Vec<(String, ProtocolPipeline)> =
            parts.into_iter().enumerate().map(|(k, p)| (format!("seg{k}"), p)).collect();
        let mut out = ProtocolPipeline::combine("eq_relay", &tagged)?;
        out.yes_instance = Some(self.x == self.y);
        Ok(out)
    }

    /// `(1 − 4/(81 ℓ²))^reps` for a segment of length `ℓ`.
    pub fn segment_bound(&self, length: usize) -> Bound {
        path_soundness_bound(length, self.reps)
    }

    /// Acceptance of honest relay strings and honest segment proofs.
    pub fn honest_accept(&self) -> Result<f64> {
        let mut total = 1.0;
        for pipe in self.pipelines(&self.honest_strings())? {
            let proof = pipe.honest_state()?;
            total *= compile(&pipe)?.accept_probability(&ProofState::Pure(proof))?;
        }
        Ok(total)
    }

    /// Optimal cheating value of one segment for fixed endpoint strings.
    pub fn segment_value(&self, length: usize, left: &BitString, right: &BitString) -> Result<f64> {
        Ok(compile(&self.segment_pipeline(length, left, right)?)?.top_eigenpair()?.0)
    }

    /// Maximum over relay strings of the product of segment values.
    pub fn adversary_value(&self) -> Result<RelayValue> {
        let n = self.x.len();
        let all: Vec<BitString> = BitString::all(n).collect();
        let segments = self.segments();
        // Every (length, left, right) that can occur.
        let mut keys = Vec::new();
        for (k, &(a, b)) in segments.iter().enumerate() {
            let lefts = if k == 0 { vec![self.x.clone()] } else { all.clone() };
            let rights = if k + 1 == segments.len() { vec![self.y.clone()] } else { all.clone() };
            for l in &lefts {
                for r in &rights {
                    keys.push((b - a, l.clone(), r.clone()));
                }
            }
        }
        keys.sort();
        keys.dedup();
        let memo: HashMap<(usize, BitString, BitString), f64> = keys
            .par_iter()
            .map(|key| Ok((key.clone(), self.segment_value(key.0, &key.1, &key.2)?)))
            .collect::<Result<_>>()?;
        let count = all.len().pow(self.relays.len() as u32);
        let mut best = RelayValue { value: -1.0, strings: Vec::new(), segment_values: Vec::new() };
        for code in 0..count {
            let mut rem = code;
            let strings: Vec<BitString> = (0..self.relays.len())
                .map(|_| {
                    let s = all[rem % all.len()].clone();
                    rem /= all.len();
                    s
                })
                .collect();
            let ends = self.endpoints(&strings)?;
            let values: Vec<f64> = segments
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| memo[&(b - a, ends[k].clone(), ends[k + 1].clone())])
                .collect();
            let value = values.iter().product();
            if value > best.value {
                best = RelayValue { value, strings, segment_values: values };
            }
        }
        Ok(best)
    }
}

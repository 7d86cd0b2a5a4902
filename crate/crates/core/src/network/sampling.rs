//! Shot-by-shot execution of a pipeline.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compile::{global_stage, ProofState, Stage};
use super::pipeline::ProtocolPipeline;
use crate::qcore::linalg::psd_sqrt;
use crate::qcore::{CMatrix, C64};
use crate::{Error, Result};

const BATCH: u64 = 1024;
/// Upper bound on cached amplitudes across all memoized branch states.
const MEMO_AMPLITUDE_BUDGET: usize = 1 << 24;

/// Frequencies observed by [`simulate_sampled`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledStats {
    pub shots: u64,
    pub seed: u64,
    /// Fraction of shots in which every node accepted.
    pub accept_frequency: f64,
    pub accept_stderr: f64,
    /// Fraction of shots in which each node rejected.
    pub node_reject_frequency: BTreeMap<String, f64>,
    pub node_reject_stderr: BTreeMap<String, f64>,
}

fn stderr(p: f64, shots: u64) -> f64 {
    (p * (1.0 - p) / shots as f64).sqrt()
}

impl SampledStats {
    /// Whether an exact probability lies within `sigmas` standard errors
    /// (computed from the exact value) of the observed frequency.
    pub fn agrees_with(&self, exact: f64, sigmas: f64) -> bool {
        (self.accept_frequency - exact).abs() <= sigmas * stderr(exact, self.shots) + 1e-9
    }

    pub fn any_reject_frequency(&self) -> f64 {
        1.0 - self.accept_frequency
    }
}

type BranchKey = (usize, Vec<u16>, Vec<bool>);
/// Unnormalized branch state and its probability.
type Branch = Arc<(Vec<C64>, f64)>;

struct Executor<'a> {
    stage: &'a Stage,
    starts: Vec<Vec<C64>>,
    weights: Vec<f64>,
    /// Square roots of the accepting and rejecting elements of each test.
    roots: Vec<(CMatrix, CMatrix)>,
    memo: Mutex<HashMap<BranchKey, Branch>>,
    memo_size: Mutex<usize>,
}

impl Executor<'_> {
    fn accept_mass(&self, t: usize, state: &[C64]) -> f64 {
        let test = &self.stage.tests[t];
        let mut y = state.to_vec();
        test.plan.apply_in_place(&test.element, &mut y);
        let p: f64 = state.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        p.clamp(0.0, 1.0)
    }

    /// State before measuring test `outcomes.len()`, with that test's accept probability.
    fn node(&self, key: &BranchKey) -> Arc<(Vec<C64>, f64)> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(key) {
            return hit.clone();
        }
        let (component, choices, outcomes) = key;
        let state = match outcomes.split_last() {
            None => {
                let mut s = self.starts[*component].clone();
                for (ch, &b) in self.stage.channels.iter().zip(choices) {
                    ch.branches[b as usize].1.forward(&ch.plan, &mut s);
                }
                s
            }
            Some((&last, prefix)) => {
                let parent = self.node(&(*component, choices.clone(), prefix.to_vec()));
                let t = prefix.len();
                let test = &self.stage.tests[t];
                let root = if last { &self.roots[t].0 } else { &self.roots[t].1 };
                let mut s = parent.0.clone();
                test.plan.apply_in_place(root, &mut s);
                let mass = if last { parent.1 } else { 1.0 - parent.1 };
                let scale = 1.0 / mass.max(1e-300).sqrt();
                s.iter_mut().for_each(|z| *z *= scale);
                s
            }
        };
        let p = if outcomes.len() < self.stage.tests.len() { self.accept_mass(outcomes.len(), &state) } else { 1.0 };
        let entry = Arc::new((state, p));
        let mut size = self.memo_size.lock().expect("memo size lock");
        if *size + entry.0.len() <= MEMO_AMPLITUDE_BUDGET {
            *size += entry.0.len();
            self.memo.lock().expect("memo lock").insert(key.clone(), entry.clone());
        }
        entry
    }

    fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (k, w) in weights.enumerate() {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
        last
    }

    /// Per-test outcomes of one shot.
    fn shot(&self, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let component = Self::pick(rng, self.weights.iter().copied());
        let choices: Vec<u16> = self
            .stage
            .channels
            .iter()
            .map(|ch| Self::pick(rng, ch.branches.iter().map(|(p, _)| *p)) as u16)
            .collect();
        let mut outcomes = Vec::with_capacity(self.stage.tests.len());
        for _ in 0..self.stage.tests.len() {
            let entry = self.node(&(component, choices.clone(), outcomes.clone()));
            let u: f64 = rng.gen();
            outcomes.push(u < entry.1);
        }
        outcomes
    }
}

/// Runs `shots` independent executions of the pipeline on `proof`.
///
/// Shots are drawn in batches of 1024, batch `b` using stream `b` of a
/// ChaCha8 generator seeded with `seed`, so results do not depend on the
/// number of worker threads.
pub fn simulate_sampled(pipeline: &ProtocolPipeline, proof: &ProofState, shots: u64, seed: u64) -> Result<SampledStats> {
    if shots == 0 {
        return Err(Error::param("shots must be at least 1"));
    }
    pipeline.validate()?;
    let layout = pipeline.proof_layout()?;
    if proof.layout().ids() != layout.ids() || proof.layout().dims() != layout.dims() {
        return Err(Error::LayoutMismatch("proof does not match the pipeline's proof registers".into()));
    }
    let stage = global_stage(pipeline)?;
    let mut weights = Vec::new();
    let mut starts = Vec::new();
    for (w, v) in proof.components()? {
        weights.push(w);
        let r = stage.prepared.len();
        let mut s = vec![C64::new(0.0, 0.0); v.len() * r];
        for (i, xi) in v.iter().enumerate() {
            for (j, pj) in stage.prepared.iter().enumerate() {
                s[i * r + j] = xi * pj;
            }
        }
        starts.push(s);
    }
    let roots = stage
        .tests
        .iter()
        .map(|t| {
            let d = t.element.nrows();
            Ok((psd_sqrt(&t.element)?, psd_sqrt(&(CMatrix::identity(d, d) - &t.element))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let exec = Executor {
        stage: &stage,
        starts,
        weights,
        roots,
        memo: Mutex::new(HashMap::new()),
        memo_size: Mutex::new(0),
    };

    let node_index: HashMap<&str, usize> = pipeline.nodes.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
    let test_node: Vec<usize> = stage.tests.iter().map(|t| node_index[t.node.as_str()]).collect();
    let mut guard_reject = vec![false; pipeline.nodes.len()];
    for g in &pipeline.guards {
        if !g.passed {
            guard_reject[node_index[g.node.as_str()]] = true;
        }
    }

    let batches = shots.div_ceil(BATCH);
    let counts: Vec<(u64, Vec<u64>)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = BATCH.min(shots - b * BATCH);
            let mut accepted = 0u64;
            let mut node_rejects = vec![0u64; guard_reject.len()];
            for _ in 0..n {
                let outcomes = exec.shot(&mut rng);
                let mut rejected = guard_reject.clone();
                for (k, &ok) in outcomes.iter().enumerate() {
                    if !ok {
                        rejected[test_node[k]] = true;
                    }
                }
                if rejected.iter().all(|r| !r) {
                    accepted += 1;
                }
                for (c, r) in node_rejects.iter_mut().zip(&rejected) {
                    *c += *r as u64;
                }
            }
            (accepted, node_rejects)
        })
        .collect();

    let mut accepted = 0u64;
    let mut node_rejects = vec![0u64; pipeline.nodes.len()];
    for (a, nr) in counts {
        accepted += a;
        for (c, r) in node_rejects.iter_mut().zip(nr) {
            *c += r;
        }
    }
    let freq = accepted as f64 / shots as f64;
    let mut node_reject_frequency = BTreeMap::new();
    let mut node_reject_stderr = BTreeMap::new();
    for (n, &c) in pipeline.nodes.iter().zip(&node_rejects) {
        let f = c as f64 / shots as f64;
        node_reject_frequency.insert(n.clone(), f);
        node_reject_stderr.insert(n.clone(), stderr(f, shots));
    }
    Ok(SampledStats {
        shots,
        seed,
        accept_frequency: freq,
        accept_stderr: stderr(freq, shots),
        node_reject_frequency,
        node_reject_stderr,
    })
}

//! Compilation of a pipeline into its acceptance operator.
//!
//! Channels and tests are split into connected components (registers linked
//! by a shared channel or test). Each component's operator is applied by
//! embedding the proof next to the prepared registers the channels touch,
//! pulling the product of tests back through every channel branch, and
//! contracting the prepared registers again. Prepared registers that only
//! meet a test are contracted into that test up front.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::pipeline::ProtocolPipeline;
use super::spec::BranchAction;
use crate::qcore::kernel::{contract_fixed, kron_vectors, strides, LocalPlan};
use crate::qcore::linalg::{top_eigenpair_map, HermitianMap};
use crate::qcore::{
    check_cap, dim_product, CMatrix, CVector, DensityOperator, HermitianOperator, RegisterLayout, Role, StateVector,
    C64,
};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Work spaces may exceed the proof cap by this factor (prepared registers).
pub(crate) const WORK_CAP_FACTOR: usize = 64;

/// Component operators up to this dimension are materialized for matvecs.
const DENSE_COMPONENT_LIMIT: usize = 1024;

/// A proof handed to the verifiers.
#[derive(Debug, Clone)]
pub enum ProofState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl ProofState {
    pub fn layout(&self) -> &RegisterLayout {
        match self {
            ProofState::Pure(s) => s.layout(),
            ProofState::Mixed(r) => r.layout(),
        }
    }

    /// `(weight, vector)` decomposition.
    pub fn components(&self) -> Result<Vec<(f64, CVector)>> {
        match self {
            ProofState::Pure(s) => Ok(vec![(1.0, s.amplitudes().clone())]),
            ProofState::Mixed(r) => r.pure_components(),
        }
    }
}

impl From<StateVector> for ProofState {
    fn from(s: StateVector) -> Self {
        ProofState::Pure(s)
    }
}

impl From<DensityOperator> for ProofState {
    fn from(r: DensityOperator) -> Self {
        ProofState::Mixed(r)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Action {
    Identity,
    Permutation { forward: Vec<usize>, inverse: Vec<usize> },
    Unitary { forward: CMatrix, backward: CMatrix },
}

impl Action {
    fn from_branch(b: BranchAction) -> Self {
        match b {
            BranchAction::Identity => Action::Identity,
            BranchAction::Permutation(map) => {
                let mut inverse = vec![0; map.len()];
                for (col, &row) in map.iter().enumerate() {
                    inverse[row] = col;
                }
                Action::Permutation { forward: map, inverse }
            }
            BranchAction::Unitary(u) => Action::Unitary { backward: u.adjoint(), forward: u },
        }
    }

    pub(crate) fn forward(&self, plan: &LocalPlan, x: &mut [C64]) {
        match self {
            Action::Identity => {}
            Action::Permutation { forward, .. } => plan.permute_in_place(forward, x),
            Action::Unitary { forward, .. } => plan.apply_in_place(forward, x),
        }
    }

    fn backward(&self, plan: &LocalPlan, x: &mut [C64]) {
        match self {
            Action::Identity => {}
            Action::Permutation { inverse, .. } => plan.permute_in_place(inverse, x),
            Action::Unitary { backward, .. } => plan.apply_in_place(backward, x),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledChannel {
    pub plan: LocalPlan,
    pub branches: Vec<(f64, Action)>,
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledTest {
    pub node: String,
    pub plan: LocalPlan,
    pub element: CMatrix,
}

/// Channels and tests compiled against a work space of proof registers
/// followed by the prepared registers the channels touch.
#[derive(Debug, Clone)]
pub(crate) struct Stage {
    pub proof_dim: usize,
    /// Product state of the prepared part of the work space.
    pub prepared: Vec<C64>,
    pub channels: Vec<CompiledChannel>,
    pub tests: Vec<CompiledTest>,
}

impl Stage {
    fn build(
        pipeline: &ProtocolPipeline,
        proof_ids: &[String],
        residual_ids: &[String],
        channel_indices: &[usize],
        test_indices: &[usize],
        fixed: &HashSet<String>,
    ) -> Result<Self> {
        let dim_of = |id: &str| pipeline.dim_of(id);
        let work_ids: Vec<&String> = proof_ids.iter().chain(residual_ids).collect();
        let position: HashMap<&str, usize> = work_ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
        let work_dims = work_ids.iter().map(|id| dim_of(id)).collect::<Result<Vec<_>>>()?;
        let proof_dim: usize = work_dims[..proof_ids.len()].iter().product();
        check_cap(dim_product(work_dims.iter().copied()), pipeline.dim_cap.saturating_mul(WORK_CAP_FACTOR))?;
        let prepared_of: HashMap<&str, _> =
            pipeline.prepared.iter().map(|p| (p.register.as_str(), &p.state)).collect();
        let residual_vectors = residual_ids
            .iter()
            .map(|id| Ok(prepared_of[id.as_str()].amplitudes()?.as_slice().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let slices: Vec<&[C64]> = residual_vectors.iter().map(|v| v.as_slice()).collect();
        let prepared = kron_vectors(&slices);

        let mut channels = Vec::new();
        for &ci in channel_indices {
            let spec = &pipeline.channels[ci].channel;
            let targets = spec
                .registers()
                .iter()
                .map(|id| position.get(id.as_str()).copied().ok_or_else(|| Error::UnknownRegister(id.clone())))
                .collect::<Result<Vec<_>>>()?;
            let branches =
                spec.branches(&dim_of)?.into_iter().map(|(p, b)| (p, Action::from_branch(b))).collect();
            channels.push(CompiledChannel { plan: LocalPlan::new(&work_dims, &targets), branches });
        }

        let mut tests = Vec::new();
        for &ti in test_indices {
            let t = &pipeline.tests[ti];
            let regs = t.test.registers();
            let element = t.test.element(&dim_of)?;
            let reg_dims = regs.iter().map(|id| dim_of(id)).collect::<Result<Vec<_>>>()?;
            let fixed_pos: Vec<usize> = (0..regs.len()).filter(|&k| fixed.contains(&regs[k])).collect();
            let element = if fixed_pos.is_empty() {
                element
            } else {
                let phis = fixed_pos
                    .iter()
                    .map(|&k| Ok(prepared_of[regs[k].as_str()].amplitudes()?.as_slice().to_vec()))
                    .collect::<Result<Vec<_>>>()?;
                let slices: Vec<&[C64]> = phis.iter().map(|v| v.as_slice()).collect();
                contract_fixed(&reg_dims, &fixed_pos, &kron_vectors(&slices), &element)
            };
            let targets = regs
                .iter()
                .filter(|id| !fixed.contains(*id))
                .map(|id| position.get(id.as_str()).copied().ok_or_else(|| Error::UnknownRegister(id.clone())))
                .collect::<Result<Vec<_>>>()?;
            tests.push(CompiledTest {
                node: t.node.clone(),
                plan: LocalPlan::new(&work_dims, &targets),
                element,
            });
        }
        Ok(Stage { proof_dim, prepared, channels, tests })
    }

    fn work_dim(&self) -> usize {
        self.proof_dim * self.prepared.len()
    }

    /// `Σ_b p_b U_b† (…) U_b` recursively, with the test product at the bottom.
    fn pull(&self, level: usize, v: &[C64]) -> Vec<C64> {
        if level == self.channels.len() {
            let mut out = v.to_vec();
            for t in &self.tests {
                t.plan.apply_in_place(&t.element, &mut out);
            }
            return out;
        }
        let ch = &self.channels[level];
        if ch.branches.len() == 1 {
            let (_, action) = &ch.branches[0];
            let mut u = v.to_vec();
            action.forward(&ch.plan, &mut u);
            let mut w = self.pull(level + 1, &u);
            action.backward(&ch.plan, &mut w);
            return w;
        }
        let mut acc = vec![ZERO; v.len()];
        let mut u = vec![ZERO; v.len()];
        for (p, action) in &ch.branches {
            u.copy_from_slice(v);
            action.forward(&ch.plan, &mut u);
            let mut w = self.pull(level + 1, &u);
            action.backward(&ch.plan, &mut w);
            for (a, b) in acc.iter_mut().zip(&w) {
                *a += b * *p;
            }
        }
        acc
    }

    fn embed(&self, x: &[C64]) -> Vec<C64> {
        let r = self.prepared.len();
        let mut v = vec![ZERO; self.work_dim()];
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for (j, pj) in self.prepared.iter().enumerate() {
                v[i * r + j] = xi * pj;
            }
        }
        v
    }

    fn apply_proof(&self, x: &[C64], y: &mut [C64]) {
        let w = self.pull(0, &self.embed(x));
        let r = self.prepared.len();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.prepared.iter().enumerate().map(|(j, pj)| pj.conj() * w[i * r + j]).sum();
        }
    }
}

/// One connected block of channels and tests.
#[derive(Debug)]
pub(crate) struct Component {
    /// Positions in the proof layout, ascending.
    pub proof_positions: Vec<usize>,
    pub stage: Stage,
    dense: OnceLock<CMatrix>,
}

impl HermitianMap for Component {
    fn dim(&self) -> usize {
        self.stage.proof_dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        if let Some(m) = self.dense.get() {
            return HermitianMap::apply(m, x, y);
        }
        self.stage.apply_proof(x, y)
    }

    fn to_dense(&self) -> CMatrix {
        self.dense_matrix().clone()
    }
}

impl Component {
    fn dense_matrix(&self) -> &CMatrix {
        self.dense.get_or_init(|| {
            let n = self.stage.proof_dim;
            let columns: Vec<Vec<C64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut e = vec![ZERO; n];
                    e[j] = C64::new(1.0, 0.0);
                    let mut y = vec![ZERO; n];
                    self.stage.apply_proof(&e, &mut y);
                    y
                })
                .collect();
            let mut m = CMatrix::zeros(n, n);
            for (j, col) in columns.iter().enumerate() {
                m.column_mut(j).copy_from_slice(col);
            }
            // Symmetrize away rounding.
            (&m + m.adjoint()).unscale(2.0)
        })
    }

    fn apply_fast(&self, x: &[C64], y: &mut [C64]) {
        if self.stage.proof_dim <= DENSE_COMPONENT_LIMIT {
            HermitianMap::apply(self.dense_matrix(), x, y)
        } else {
            self.stage.apply_proof(x, y)
        }
    }
}

struct ModelInner {
    pipeline: ProtocolPipeline,
    proof_layout: RegisterLayout,
    rejecting: bool,
    components: Vec<Component>,
    dense: OnceLock<CMatrix>,
}

/// The acceptance operator of a pipeline on its proof registers.
///
/// Cheap to clone; clones share cached data.
#[derive(Clone)]
pub struct AcceptanceModel {
    inner: Arc<ModelInner>,
}

impl std::fmt::Debug for AcceptanceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcceptanceModel")
            .field("protocol", &self.inner.pipeline.name)
            .field("proof_dimension", &self.proof_dimension())
            .field("components", &self.inner.components.len())
            .finish()
    }
}

/// Compiles a pipeline into its acceptance model.
pub fn compile(pipeline: &ProtocolPipeline) -> Result<AcceptanceModel> {
    AcceptanceModel::compile(pipeline)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = a;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Channels that can influence some test, in pipeline order.
pub(crate) fn relevant_channels(pipeline: &ProtocolPipeline) -> Vec<usize> {
    let mut live: HashSet<String> = pipeline.tests.iter().flat_map(|t| t.test.registers()).collect();
    let mut kept = Vec::new();
    for (ci, c) in pipeline.channels.iter().enumerate().rev() {
        let regs = c.channel.registers();
        if regs.iter().any(|r| live.contains(r)) {
            live.extend(regs);
            kept.push(ci);
        }
    }
    kept.reverse();
    kept
}

/// Prepared registers touched by a relevant channel, and those that only meet a test.
pub(crate) fn split_prepared(pipeline: &ProtocolPipeline, channels: &[usize]) -> (HashSet<String>, HashSet<String>) {
    let touched: HashSet<String> = channels.iter().flat_map(|&c| pipeline.channels[c].channel.registers()).collect();
    let mut residual = HashSet::new();
    let mut fixed = HashSet::new();
    for r in &pipeline.registers {
        if r.role == Role::Proof {
            continue;
        }
        if touched.contains(&r.id) {
            residual.insert(r.id.clone());
        } else {
            fixed.insert(r.id.clone());
        }
    }
    (residual, fixed)
}

/// The global stage used by the sampler: all proof registers plus every residual prepared register.
pub(crate) fn global_stage(pipeline: &ProtocolPipeline) -> Result<Stage> {
    let channels = relevant_channels(pipeline);
    let (residual, fixed) = split_prepared(pipeline, &channels);
    let proof_ids: Vec<String> = pipeline.proof_registers().iter().map(|r| r.id.clone()).collect();
    let residual_ids: Vec<String> =
        pipeline.registers.iter().filter(|r| residual.contains(&r.id)).map(|r| r.id.clone()).collect();
    let tests: Vec<usize> = (0..pipeline.tests.len()).collect();
    Stage::build(pipeline, &proof_ids, &residual_ids, &channels, &tests, &fixed)
}

impl AcceptanceModel {
    pub fn compile(pipeline: &ProtocolPipeline) -> Result<Self> {
        pipeline.validate()?;
        let proof_layout = pipeline.proof_layout()?;
        let rejecting = !pipeline.guards_pass();
        let mut components = Vec::new();
        if !rejecting {
            let channels = relevant_channels(pipeline);
            let (residual, fixed) = split_prepared(pipeline, &channels);
            let index: HashMap<&str, usize> =
                pipeline.registers.iter().enumerate().map(|(k, r)| (r.id.as_str(), k)).collect();
            let mut uf = UnionFind((0..pipeline.registers.len()).collect());
            let link = |uf: &mut UnionFind, regs: &[String]| {
                for w in regs.windows(2) {
                    uf.union(index[w[0].as_str()], index[w[1].as_str()]);
                }
            };
            for &c in &channels {
                link(&mut uf, &pipeline.channels[c].channel.registers());
            }
            for t in &pipeline.tests {
                link(&mut uf, &t.test.registers());
            }
            let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for (ti, t) in pipeline.tests.iter().enumerate() {
                let regs = t.test.registers();
                let root = match regs.first() {
                    Some(id) => uf.find(index[id.as_str()]),
                    // A test on no registers: its own component.
                    None => usize::MAX - ti,
                };
                groups.entry(root).or_default().1.push(ti);
            }
            for &c in &channels {
                let first = &pipeline.channels[c].channel.registers()[0];
                let root = uf.find(index[first.as_str()]);
                groups.entry(root).or_default().0.push(c);
            }
            let proof_pos: HashMap<&str, usize> =
                proof_layout.ids().into_iter().enumerate().map(|(k, id)| (id, k)).collect();
            let roots: Vec<usize> = (0..pipeline.registers.len()).map(|k| uf.find(k)).collect();
            for (root, (chs, tests)) in groups {
                let in_component = |r: &crate::qcore::Register| roots[index[r.id.as_str()]] == root;
                let mut proof_ids = Vec::new();
                let mut proof_positions = Vec::new();
                let mut residual_ids = Vec::new();
                for r in &pipeline.registers {
                    if !in_component(r) {
                        continue;
                    }
                    if r.role == Role::Proof {
                        proof_ids.push(r.id.clone());
                        proof_positions.push(proof_pos[r.id.as_str()]);
                    } else if residual.contains(&r.id) {
                        residual_ids.push(r.id.clone());
                    }
                }
                let stage = Stage::build(pipeline, &proof_ids, &residual_ids, &chs, &tests, &fixed)?;
                components.push(Component { proof_positions, stage, dense: OnceLock::new() });
            }
        }
        Ok(AcceptanceModel {
            inner: Arc::new(ModelInner {
                pipeline: pipeline.clone(),
                proof_layout,
                rejecting,
                components,
                dense: OnceLock::new(),
            }),
        })
    }

    pub fn pipeline(&self) -> &ProtocolPipeline {
        &self.inner.pipeline
    }

    pub fn proof_layout(&self) -> &RegisterLayout {
        &self.inner.proof_layout
    }

    pub fn proof_dimension(&self) -> usize {
        self.inner.proof_layout.total_dimension()
    }

    /// True when a classical guard fails, so every proof is rejected.
    pub fn is_rejecting(&self) -> bool {
        self.inner.rejecting
    }

    pub fn component_count(&self) -> usize {
        self.inner.components.len()
    }

    /// Applies each component operator to its registers of a full proof vector.
    fn apply_components(&self, x: &[C64], y: &mut [C64]) {
        if self.inner.rejecting {
            y.iter_mut().for_each(|v| *v = ZERO);
            return;
        }
        let dims = self.inner.proof_layout.dims();
        let mut cur = x.to_vec();
        for comp in &self.inner.components {
            if comp.proof_positions.is_empty() {
                let mut s = [ZERO];
                comp.apply_fast(&[C64::new(1.0, 0.0)], &mut s);
                cur.iter_mut().for_each(|v| *v *= s[0]);
                continue;
            }
            let plan = LocalPlan::new(&dims, &comp.proof_positions);
            let l = plan.local_dim();
            let mut buf = vec![ZERO; l];
            let mut out = vec![ZERO; l];
            for &base in &plan.bases {
                for (a, &off) in plan.offsets.iter().enumerate() {
                    buf[a] = cur[base + off];
                }
                comp.apply_fast(&buf, &mut out);
                for (a, &off) in plan.offsets.iter().enumerate() {
                    cur[base + off] = out[a];
                }
            }
        }
        y.copy_from_slice(&cur);
    }

    /// Dense acceptance operator (cached).
    pub fn accept_operator(&self) -> Result<HermitianOperator> {
        let m = self.dense_matrix();
        HermitianOperator::povm_element(self.inner.proof_layout.clone(), m.clone())
    }

    fn dense_matrix(&self) -> &CMatrix {
        self.inner.dense.get_or_init(|| {
            let n = self.proof_dimension();
            let columns: Vec<Vec<C64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut e = vec![ZERO; n];
                    e[j] = C64::new(1.0, 0.0);
                    let mut y = vec![ZERO; n];
                    self.apply_components(&e, &mut y);
                    y
                })
                .collect();
            let mut m = CMatrix::zeros(n, n);
            for (j, col) in columns.iter().enumerate() {
                m.column_mut(j).copy_from_slice(col);
            }
            (&m + m.adjoint()).unscale(2.0)
        })
    }

    fn check_layout(&self, layout: &RegisterLayout) -> Result<()> {
        let ours = &self.inner.proof_layout;
        if layout.ids() != ours.ids() || layout.dims() != ours.dims() {
            return Err(Error::LayoutMismatch(format!(
                "proof on {:?}, model expects {:?}",
                layout.ids(),
                ours.ids()
            )));
        }
        Ok(())
    }

    /// `tr(A ρ)`.
    pub fn accept_probability(&self, proof: &ProofState) -> Result<f64> {
        self.check_layout(proof.layout())?;
        let mut total = 0.0;
        let n = self.proof_dimension();
        let mut y = vec![ZERO; n];
        for (w, v) in proof.components()? {
            self.apply_components(v.as_slice(), &mut y);
            total += w * v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<C64>().re;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Largest eigenvalue and eigenvector, assembled from the components.
    pub fn top_eigenpair(&self) -> Result<(f64, StateVector)> {
        let layout = self.inner.proof_layout.clone();
        let dims = layout.dims();
        let n = layout.total_dimension();
        if self.inner.rejecting {
            return Ok((0.0, StateVector::basis(layout, 0)?));
        }
        let pairs = self
            .inner
            .components
            .par_iter()
            .map(|c| {
                if c.stage.proof_dim <= DENSE_COMPONENT_LIMIT {
                    c.dense_matrix();
                }
                top_eigenpair_map(c, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        let value: f64 = pairs.iter().map(|(v, _)| v.max(0.0)).product();
        let st = strides(&dims);
        let covered: HashSet<usize> =
            self.inner.components.iter().flat_map(|c| c.proof_positions.iter().copied()).collect();
        let mut amplitudes = CVector::zeros(n);
        'outer: for (g, amp) in amplitudes.iter_mut().enumerate() {
            let digit = |k: usize| (g / st[k]) % dims[k];
            for k in 0..dims.len() {
                if !covered.contains(&k) && digit(k) != 0 {
                    continue 'outer;
                }
            }
            let mut a = C64::new(1.0, 0.0);
            for (c, (_, v)) in self.inner.components.iter().zip(&pairs) {
                if c.proof_positions.is_empty() {
                    continue;
                }
                let mut local = 0;
                for &k in &c.proof_positions {
                    local = local * dims[k] + digit(k);
                }
                a *= v[local];
            }
            *amp = a;
        }
        Ok((value.min(1.0), StateVector::normalized(layout, amplitudes)?))
    }

    /// Largest eigenpair found on the whole proof space without using the component split.
    pub fn top_eigenpair_unfactored(&self, seed: u64) -> Result<(f64, StateVector)> {
        let (value, v) = top_eigenpair_map(self, seed)?;
        Ok((value, StateVector::normalized(self.inner.proof_layout.clone(), CVector::from_vec(v))?))
    }

    /// Model of the same pipeline keeping only the tests and guards of `node`.
    pub fn node_model(&self, node: &str) -> Result<AcceptanceModel> {
        let mut p = self.inner.pipeline.clone();
        p.tests.retain(|t| t.node == node);
        p.guards.retain(|g| g.node == node);
        AcceptanceModel::compile(&p)
    }

    /// Marginal rejection probability of every node.
    pub fn per_node_rejection(&self, proof: &ProofState) -> Result<BTreeMap<String, f64>> {
        self.check_layout(proof.layout())?;
        self.inner
            .pipeline
            .nodes
            .par_iter()
            .map(|n| Ok((n.clone(), 1.0 - self.node_model(n)?.accept_probability(proof)?)))
            .collect()
    }
}

impl HermitianMap for AcceptanceModel {
    fn dim(&self) -> usize {
        self.proof_dimension()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        if let Some(m) = self.inner.dense.get() {
            return HermitianMap::apply(m, x, y);
        }
        self.apply_components(x, y)
    }

    fn to_dense(&self) -> CMatrix {
        self.dense_matrix().clone()
    }
}

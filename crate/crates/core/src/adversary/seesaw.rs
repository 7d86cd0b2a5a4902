use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::network::AcceptanceModel;
use crate::qcore::kernel::{strides, LocalPlan};
use crate::qcore::linalg::{top_eigenpair_dense, HermitianMap};
use crate::qcore::random::haar_vector;
use crate::qcore::{CMatrix, CVector, RegisterLayout, StateVector, C64};
use crate::{Error, Result};

/// Options of the alternating optimization over product proofs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeeSawOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeeSawOptions {
    fn default() -> Self {
        SeeSawOptions { restarts: 16, max_iters: 500, tol: 1e-9, seed: 0 }
    }
}

/// Best product proof found.
#[derive(Debug, Clone)]
pub struct SeparableResult {
    /// A lower bound on the optimal value over product proofs.
    pub value: f64,
    /// One state per group, on the group's registers.
    pub states: Vec<StateVector>,
    /// Whether the best run stopped because the improvement fell below `tol`.
    pub converged: bool,
    pub iterations: usize,
}

struct Groups {
    dims: Vec<usize>,
    positions: Vec<Vec<usize>>,
    plans: Vec<LocalPlan>,
}

impl Groups {
    fn new(layout: &RegisterLayout, grouping: &[Vec<String>]) -> Result<Self> {
        let dims = layout.dims();
        let mut seen = vec![false; dims.len()];
        let mut positions = Vec::new();
        for g in grouping {
            let pos = layout.positions(g)?;
            for &k in &pos {
                if std::mem::replace(&mut seen[k], true) {
                    return Err(Error::param(format!("register `{}` in two groups", layout.registers()[k].id)));
                }
            }
            positions.push(pos);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::param(format!("register `{}` in no group", layout.registers()[k].id)));
        }
        let plans = positions.iter().map(|p| LocalPlan::new(&dims, p)).collect();
        Ok(Groups { dims, positions, plans })
    }

    fn group_dim(&self, g: usize) -> usize {
        self.plans[g].local_dim()
    }

    /// `⊗_g states[g]` on the full layout.
    fn product(&self, states: &[Vec<C64>]) -> Vec<C64> {
        let total: usize = self.dims.iter().product();
        let st = strides(&self.dims);
        (0..total)
            .map(|idx| {
                let mut a = C64::new(1.0, 0.0);
                for (pos, s) in self.positions.iter().zip(states) {
                    let mut local = 0;
                    for &k in pos {
                        local = local * self.dims[k] + (idx / st[k]) % self.dims[k];
                    }
                    a *= s[local];
                }
                a
            })
            .collect()
    }

    /// Operator on group `g` with every other group fixed.
    fn effective(&self, model: &AcceptanceModel, states: &[Vec<C64>], g: usize) -> CMatrix {
        let plan = &self.plans[g];
        let mut probe: Vec<Vec<C64>> = states.to_vec();
        let mut e0 = vec![C64::new(0.0, 0.0); self.group_dim(g)];
        e0[0] = C64::new(1.0, 0.0);
        probe[g] = e0;
        let rest = self.product(&probe);
        let coef: Vec<C64> = plan.bases.iter().map(|&b| rest[b]).collect();
        let n = rest.len();
        let d = self.group_dim(g);
        let mut m = CMatrix::zeros(d, d);
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut y = vec![C64::new(0.0, 0.0); n];
        for col in 0..d {
            x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (c, &base) in coef.iter().zip(&plan.bases) {
                x[base + plan.offsets[col]] = *c;
            }
            model.apply(&x, &mut y);
            for (row, &off) in plan.offsets.iter().enumerate() {
                m[(row, col)] = coef.iter().zip(&plan.bases).map(|(c, &base)| c.conj() * y[base + off]).sum();
            }
        }
        (&m + m.adjoint()).unscale(2.0)
    }
}

fn value_of(model: &AcceptanceModel, v: &[C64]) -> f64 {
    let mut y = vec![C64::new(0.0, 0.0); v.len()];
    model.apply(v, &mut y);
    v.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
}

fn run(
    model: &AcceptanceModel,
    groups: &Groups,
    mut states: Vec<Vec<C64>>,
    opts: &SeeSawOptions,
) -> Result<(f64, Vec<Vec<C64>>, bool, usize)> {
    let mut value = value_of(model, &groups.product(&states));
    for it in 0..opts.max_iters {
        for g in 0..states.len() {
            let eff = groups.effective(model, &states, g);
            let (_, v) = top_eigenpair_dense(&eff)?;
            states[g] = v.as_slice().to_vec();
        }
        let next = value_of(model, &groups.product(&states));
        if next - value < opts.tol {
            return Ok((next.max(value), states, true, it + 1));
        }
        value = next;
    }
    Ok((value, states, false, opts.max_iters))
}

/// See-saw maximization of the acceptance over proofs that are products across `grouping`.
///
/// `start` (for instance an honest proof given per group) is tried in
/// addition to `opts.restarts` Haar-random starts.
pub fn optimal_separable_value(
    model: &AcceptanceModel,
    grouping: &[Vec<String>],
    opts: &SeeSawOptions,
    start: Option<Vec<CVector>>,
) -> Result<SeparableResult> {
    let layout = model.proof_layout().clone();
    let groups = Groups::new(&layout, grouping)?;
    let mut starts: Vec<Vec<Vec<C64>>> = Vec::new();
    if let Some(s) = start {
        if s.len() != grouping.len() {
            return Err(Error::param("start state needs one vector per group"));
        }
        starts.push(s.into_iter().map(|v| v.as_slice().to_vec()).collect());
    }
    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        starts.push(
            (0..grouping.len()).map(|g| haar_vector(groups.group_dim(g), &mut rng).as_slice().to_vec()).collect(),
        );
    }
    if starts.is_empty() {
        return Err(Error::param("see-saw needs at least one start"));
    }
    let runs = starts.into_par_iter().map(|s| run(model, &groups, s, opts)).collect::<Result<Vec<_>>>()?;
    let (value, states, converged, iterations) =
        runs.into_iter().fold(None, |best: Option<(f64, Vec<Vec<C64>>, bool, usize)>, r| match best {
            Some(b) if b.0 >= r.0 => Some(b),
            _ => Some(r),
        })
        .expect("at least one run");
    let states = grouping
        .iter()
        .zip(states)
        .map(|(g, v)| StateVector::normalized(layout.select(g)?, CVector::from_vec(v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparableResult { value: value.clamp(0.0, 1.0), states, converged, iterations })
}

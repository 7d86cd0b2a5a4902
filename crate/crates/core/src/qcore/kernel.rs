//! Index arithmetic for operators acting on a subset of registers.

use super::{CMatrix, C64};

/// Row-major strides of a register factorization (last register fastest).
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Precomputed gather/scatter pattern for a local operator.
///
/// `offsets[a]` is the displacement of local basis index `a` and `bases`
/// lists every global index whose target digits are all zero.
#[derive(Debug, Clone)]
pub struct LocalPlan {
    pub offsets: Vec<usize>,
    pub bases: Vec<usize>,
    pub total: usize,
}

impl LocalPlan {
    pub fn new(dims: &[usize], targets: &[usize]) -> Self {
        let st = strides(dims);
        let total: usize = dims.iter().product();
        let local_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
        let local: usize = local_dims.iter().product();
        let mut offsets = Vec::with_capacity(local);
        for a in 0..local {
            let mut rem = a;
            let mut off = 0;
            for (k, &t) in targets.iter().enumerate().rev() {
                let digit = rem % local_dims[k];
                rem /= local_dims[k];
                off += digit * st[t];
            }
            offsets.push(off);
        }
        let others: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
        let other_count: usize = others.iter().map(|&k| dims[k]).product();
        let mut bases = Vec::with_capacity(other_count);
        for b in 0..other_count {
            let mut rem = b;
            let mut base = 0;
            for &k in others.iter().rev() {
                base += (rem % dims[k]) * st[k];
                rem /= dims[k];
            }
            bases.push(base);
        }
        LocalPlan { offsets, bases, total }
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    /// `y = (op ⊗ I) x`.
    pub fn apply(&self, op: &CMatrix, x: &[C64], y: &mut [C64]) {
        let l = self.local_dim();
        debug_assert_eq!(op.nrows(), l);
        let mut buf = vec![C64::new(0.0, 0.0); l];
        for &base in &self.bases {
            for (a, &off) in self.offsets.iter().enumerate() {
                buf[a] = x[base + off];
            }
            for (a, &off) in self.offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (b, v) in buf.iter().enumerate() {
                    acc += op[(a, b)] * v;
                }
                y[base + off] = acc;
            }
        }
    }

    /// In-place variant of [`LocalPlan::apply`].
    pub fn apply_in_place(&self, op: &CMatrix, x: &mut [C64]) {
        let l = self.local_dim();
        let mut buf = vec![C64::new(0.0, 0.0); l];
        for &base in &self.bases {
            for (a, &off) in self.offsets.iter().enumerate() {
                buf[a] = x[base + off];
            }
            for (a, &off) in self.offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (b, v) in buf.iter().enumerate() {
                    acc += op[(a, b)] * v;
                }
                x[base + off] = acc;
            }
        }
    }

    /// Applies a local permutation matrix given as `perm[b] = a` (column b maps to row a).
    pub fn permute_in_place(&self, perm: &[usize], x: &mut [C64]) {
        let mut buf = vec![C64::new(0.0, 0.0); perm.len()];
        for &base in &self.bases {
            for (b, &off) in self.offsets.iter().enumerate() {
                buf[b] = x[base + off];
            }
            for (b, &a) in perm.iter().enumerate() {
                x[base + self.offsets[a]] = buf[b];
            }
        }
    }

    /// Dense `op ⊗ I` on the full space.
    pub fn embed(&self, op: &CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(self.total, self.total);
        for &base in &self.bases {
            for (a, &oa) in self.offsets.iter().enumerate() {
                for (b, &ob) in self.offsets.iter().enumerate() {
                    m[(base + oa, base + ob)] = op[(a, b)];
                }
            }
        }
        m
    }

    /// `(op ⊗ I) · m` for a dense matrix `m`.
    pub fn left_multiply(&self, op: &CMatrix, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        let mut col = vec![C64::new(0.0, 0.0); m.nrows()];
        let mut res = vec![C64::new(0.0, 0.0); m.nrows()];
        for j in 0..m.ncols() {
            col.copy_from_slice(m.column(j).as_slice());
            self.apply(op, &col, &mut res);
            out.column_mut(j).copy_from_slice(&res);
        }
        out
    }

    /// `(op ⊗ I) · m · (op ⊗ I)†`.
    pub fn conjugate(&self, op: &CMatrix, m: &CMatrix) -> CMatrix {
        let half = self.left_multiply(op, m);
        self.left_multiply(op, &half.adjoint()).adjoint()
    }
}

/// Partial trace keeping the registers at `keep` (in layout order).
pub fn partial_trace_matrix(dims: &[usize], keep: &[usize], m: &CMatrix) -> CMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let keep_plan = LocalPlan::new(dims, keep);
    let trace_plan = LocalPlan::new(dims, &traced);
    let kd = keep_plan.local_dim();
    let mut out = CMatrix::zeros(kd, kd);
    for (a, &oa) in keep_plan.offsets.iter().enumerate() {
        for (b, &ob) in keep_plan.offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &trace_plan.offsets {
                acc += m[(oa + t, ob + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Contracts the registers at `targets` against the fixed vector `phi`:
/// returns `(⟨phi| ⊗ I) op (|phi⟩ ⊗ I)` on the remaining registers of `dims`.
///
/// `op` acts on all of `dims`; `phi` is a vector on the ordered product of
/// the target registers.
pub fn contract_fixed(dims: &[usize], targets: &[usize], phi: &[C64], op: &CMatrix) -> CMatrix {
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let fixed_plan = LocalPlan::new(dims, targets);
    let rest_plan = LocalPlan::new(dims, &rest);
    let rd = rest_plan.local_dim();
    let mut out = CMatrix::zeros(rd, rd);
    for (a, &oa) in rest_plan.offsets.iter().enumerate() {
        for (b, &ob) in rest_plan.offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (p, &op_) in fixed_plan.offsets.iter().enumerate() {
                if phi[p] == C64::new(0.0, 0.0) {
                    continue;
                }
                for (q, &oq) in fixed_plan.offsets.iter().enumerate() {
                    acc += phi[p].conj() * op[(oa + op_, ob + oq)] * phi[q];
                }
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Kronecker product of vectors in order.
pub fn kron_vectors(parts: &[&[C64]]) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for part in parts {
        let mut next = Vec::with_capacity(out.len() * part.len());
        for a in &out {
            for b in part.iter() {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

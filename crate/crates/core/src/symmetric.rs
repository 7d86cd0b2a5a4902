//! SWAP test, permutation test, symmetric-subspace projectors and
//! symmetrization channels.
//!
//! The permutation test is the two-outcome measurement `{Π_sym, I − Π_sym}`;
//! its acceptance probability on `ρ` is `tr(Π_sym ρ)`.

use crate::qcore::kernel::strides;
use crate::qcore::{
    check_cap, dim_product, ChannelTerm, CMatrix, DensityOperator, LayoutOperator, MixingChannel,
    RegisterLayout, C64,
};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// Largest number of registers whose permutations are enumerated.
pub const MAX_PERMUTED_REGISTERS: usize = 6;

/// A permutation of `0..k` as the image list `perm[q] = π(q)`.
pub type Permutation = Vec<usize>;

/// All permutations of `0..k` in lexicographic order.
pub fn all_permutations(k: usize) -> Vec<Permutation> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// `(π ∘ σ)(q) = π(σ(q))`.
pub fn compose(pi: &[usize], sigma: &[usize]) -> Permutation {
    sigma.iter().map(|&s| pi[s]).collect()
}

fn validate_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::param(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Column-to-row map of `U_π`: basis state `col` is sent to basis state `map[col]`.
///
/// The digit in tensor position `q` moves to position `π(q)`, so output
/// position `p` carries input digit `π⁻¹(p)`.
pub fn permutation_index_map(perm: &[usize], d: usize) -> Vec<usize> {
    let k = perm.len();
    let dims = vec![d; k];
    let st = strides(&dims);
    let total = dim_product(dims.iter().copied()) as usize;
    (0..total)
        .map(|col| {
            let mut row = 0;
            for q in 0..k {
                let digit = (col / st[q]) % d;
                row += digit * st[perm[q]];
            }
            row
        })
        .collect()
}

/// `U_π` on `(C^d)^{⊗k}`.
pub fn permutation_unitary(perm: &[usize], d: usize) -> Result<CMatrix> {
    permutation_unitary_capped(perm, d, DEFAULT_DIM_CAP)
}

pub fn permutation_unitary_capped(perm: &[usize], d: usize, cap: usize) -> Result<CMatrix> {
    validate_permutation(perm)?;
    if perm.is_empty() || d == 0 {
        return Err(Error::param("permutation unitary needs k ≥ 1 and d ≥ 1"));
    }
    let total = check_cap(dim_product(std::iter::repeat(d).take(perm.len())), cap)?;
    let mut u = CMatrix::zeros(total, total);
    for (col, row) in permutation_index_map(perm, d).into_iter().enumerate() {
        u[(row, col)] = C64::new(1.0, 0.0);
    }
    Ok(u)
}

/// Projector onto the symmetric subspace of `k` registers of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricProjector {
    pub k: usize,
    pub d: usize,
    matrix: CMatrix,
}

impl SymmetricProjector {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `tr Π`, rounded.
    pub fn rank(&self) -> usize {
        crate::qcore::linalg::trace(&self.matrix).re.round() as usize
    }
}

/// `Π_sym = (1/k!) Σ_π U_π`.
pub fn symmetric_projector(k: usize, d: usize) -> Result<SymmetricProjector> {
    symmetric_projector_capped(k, d, DEFAULT_DIM_CAP)
}

pub fn symmetric_projector_capped(k: usize, d: usize, cap: usize) -> Result<SymmetricProjector> {
    if k == 0 || d == 0 {
        return Err(Error::param("symmetric projector needs k ≥ 1 and d ≥ 1"));
    }
    if k > MAX_PERMUTED_REGISTERS {
        return Err(Error::param(format!("k = {k} exceeds {MAX_PERMUTED_REGISTERS}")));
    }
    let total = check_cap(dim_product(std::iter::repeat(d).take(k)), cap)?;
    let perms = all_permutations(k);
    let weight = 1.0 / perms.len() as f64;
    let mut m = CMatrix::zeros(total, total);
    for perm in &perms {
        for (col, row) in permutation_index_map(perm, d).into_iter().enumerate() {
            m[(row, col)] += C64::new(weight, 0.0);
        }
    }
    Ok(SymmetricProjector { k, d, matrix: m })
}

fn equal_dims(layout: &RegisterLayout, min_k: usize) -> Result<(usize, usize)> {
    let dims = layout.dims();
    if dims.len() < min_k {
        return Err(Error::LayoutMismatch(format!("expected at least {min_k} registers, got {}", dims.len())));
    }
    if dims.iter().any(|&x| x != dims[0]) {
        return Err(Error::LayoutMismatch(format!("registers have unequal dimensions {dims:?}")));
    }
    Ok((dims.len(), dims[0]))
}

/// Acceptance probability of the SWAP test on a two-register state.
pub fn swap_test_accept(rho: &DensityOperator) -> Result<f64> {
    if rho.layout().len() != 2 {
        return Err(Error::LayoutMismatch("SWAP test needs exactly two registers".into()));
    }
    permutation_test_accept(rho)
}

/// Acceptance probability `tr(Π_sym ρ)` of the permutation test.
pub fn permutation_test_accept(rho: &DensityOperator) -> Result<f64> {
    let (k, d) = equal_dims(rho.layout(), 2)?;
    let pi = symmetric_projector_capped(k, d, usize::MAX)?;
    Ok(crate::qcore::linalg::trace(&(pi.matrix() * rho.matrix())).re)
}

/// Uniform mixture over all permutations of the given equal-dimension registers.
///
/// For two registers this is `{(½, I), (½, SWAP)}`.
pub fn symmetrize_channel<S: AsRef<str>>(layout: &RegisterLayout, registers: &[S]) -> Result<MixingChannel> {
    let sub = layout.select(registers)?;
    let (k, d) = equal_dims(&sub, 1)?;
    if k > MAX_PERMUTED_REGISTERS {
        return Err(Error::param(format!("k = {k} exceeds {MAX_PERMUTED_REGISTERS}")));
    }
    let ids: Vec<String> = registers.iter().map(|s| s.as_ref().to_string()).collect();
    let perms = all_permutations(k);
    let p = 1.0 / perms.len() as f64;
    let terms = perms
        .iter()
        .map(|perm| {
            Ok(ChannelTerm {
                probability: p,
                registers: ids.clone(),
                unitary: permutation_unitary_capped(perm, d, usize::MAX)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixingChannel::new(layout.clone(), terms)
}

/// Binomial coefficient as `f64`-safe integer arithmetic.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `rank Π_sym = C(d + k − 1, k)`.
pub fn symmetric_rank(k: usize, d: usize) -> usize {
    binomial(d + k - 1, k)
}

/// Convenience: `Π_sym` as an operator with a layout, for callers holding one.
pub fn projector_on<T: LayoutOperator>(layout: &RegisterLayout) -> Result<T> {
    let (k, d) = equal_dims(layout, 1)?;
    Ok(T::from_parts(layout.clone(), symmetric_projector_capped(k, d, usize::MAX)?.into_matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{CVector, StateVector};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn identity_and_swap() {
        assert_eq!(permutation_unitary(&[0, 1, 2], 2).unwrap(), CMatrix::identity(8, 8));
        let s = permutation_unitary(&[1, 0], 2).unwrap();
        let mut swap = CMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(a, b)] = c(1.0);
        }
        assert_eq!(s, swap);
    }

    #[test]
    fn digit_convention() {
        // π = (0→1, 1→2, 2→0): |i0 i1 i2⟩ ↦ |i2 i0 i1⟩.
        let map = permutation_index_map(&[1, 2, 0], 2);
        // |1 0 0⟩ = index 4 ↦ |0 1 0⟩ = index 2.
        assert_eq!(map[4], 2);
    }

    #[test]
    fn ranks() {
        assert_eq!(symmetric_projector(2, 2).unwrap().rank(), 3);
        assert_eq!(symmetric_projector(3, 2).unwrap().rank(), 4);
        assert_eq!(symmetric_rank(3, 3), 10);
    }

    #[test]
    fn two_register_projector_is_half_identity_plus_swap() {
        let p = symmetric_projector(2, 3).unwrap();
        let swap = permutation_unitary(&[1, 0], 3).unwrap();
        let expect = (CMatrix::identity(9, 9) + swap).scale(0.5);
        assert!((p.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn swap_test_basics() {
        let l = RegisterLayout::anonymous(&[2, 2]).unwrap();
        let prod = |a: [f64; 2], b: [f64; 2]| {
            let v = CVector::from_vec(vec![c(a[0]), c(a[1])]).kronecker(&CVector::from_vec(vec![c(b[0]), c(b[1])]));
            StateVector::normalized(l.clone(), v).unwrap().to_density()
        };
        let h = 0.5f64.sqrt();
        assert!((swap_test_accept(&prod([1.0, 0.0], [1.0, 0.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((swap_test_accept(&prod([1.0, 0.0], [0.0, 1.0])).unwrap() - 0.5).abs() < 1e-14);
        assert!((swap_test_accept(&prod([1.0, 0.0], [h, h])).unwrap() - 0.75).abs() < 1e-14);
        let singlet = StateVector::normalized(l, CVector::from_vec(vec![c(0.0), c(1.0), c(-1.0), c(0.0)]))
            .unwrap()
            .to_density();
        assert!(permutation_test_accept(&singlet).unwrap().abs() < 1e-14);
    }

    #[test]
    fn unequal_dims_rejected() {
        let l = RegisterLayout::anonymous(&[2, 3]).unwrap();
        assert!(symmetrize_channel(&l, &["q0", "q1"]).is_err());
        let rho = DensityOperator::maximally_mixed(l);
        assert!(swap_test_accept(&rho).is_err());
    }

    #[test]
    fn pair_channel_has_two_terms() {
        let l = RegisterLayout::anonymous(&[2, 2, 3]).unwrap();
        let ch = symmetrize_channel(&l, &["q0", "q1"]).unwrap();
        assert_eq!(ch.terms().len(), 2);
        assert!(ch.terms().iter().all(|t| (t.probability - 0.5).abs() < 1e-15));
    }
}

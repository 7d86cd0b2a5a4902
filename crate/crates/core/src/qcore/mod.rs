//! Complex linear algebra over multi-register Hilbert spaces.

mod channel;
pub mod kernel;
mod layout;
pub mod linalg;
pub mod random;
mod state;

pub use channel::{apply_channel, ChannelTerm, MixingChannel};
#[cfg(test)]
pub(crate) use channel::is_unitary;
pub use layout::{Register, RegisterLayout, Role};
pub(crate) use layout::{check_cap, dim_product};
pub use state::{DensityOperator, HermitianOperator, LayoutOperator, StateVector};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};
use kernel::partial_trace_matrix;
use linalg::{clamp_psd, eigh, trace_norm_hermitian};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Kronecker product on the concatenated layout.
pub fn tensor<T: LayoutOperator>(a: &T, b: &T) -> Result<T> {
    let layout = a.layout().concat(b.layout(), usize::MAX)?;
    Ok(T::from_parts(layout, a.matrix().kronecker(b.matrix())))
}

/// Traces out every register not named in `keep`.
pub fn partial_trace<T: LayoutOperator, S: AsRef<str>>(op: &T, keep: &[S]) -> Result<T> {
    let layout = op.layout();
    let kept = layout.select(keep)?;
    let mut positions = layout.positions(keep)?;
    positions.sort_unstable();
    let m = partial_trace_matrix(&layout.dims(), &positions, op.matrix());
    Ok(T::from_parts(kept, m))
}

fn same_layout(a: &RegisterLayout, b: &RegisterLayout) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_layout(rho.layout(), sigma.layout())?;
    Ok((0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix()))).clamp(0.0, 1.0))
}

/// Square root with eigenvalues under the solver's noise floor set to zero.
fn floored_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = eigh(m);
    let values = clamp_psd(&values)?;
    let floor = values.iter().cloned().fold(0.0, f64::max) * m.nrows() as f64 * f64::EPSILON;
    Ok(linalg::spectral_map(&values, &vectors, |v| if v > floor { v.sqrt() } else { 0.0 }))
}

/// `tr √(√ρ σ √ρ)`, computed as the trace norm of `√ρ √σ`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_layout(rho.layout(), sigma.layout())?;
    let product = floored_sqrt(rho.matrix())? * floored_sqrt(sigma.matrix())?;
    Ok(product.singular_values().iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Largest eigenvalue and a unit eigenvector.
pub fn top_eigenpair(op: &HermitianOperator) -> Result<(f64, StateVector)> {
    let (value, v) = linalg::top_eigenpair_dense(op.matrix())?;
    Ok((value, StateVector::normalized(op.layout().clone(), v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket(layout: RegisterLayout, amps: &[C64]) -> StateVector {
        StateVector::normalized(layout, CVector::from_column_slice(amps)).unwrap()
    }

    fn qubit(id: &str) -> RegisterLayout {
        RegisterLayout::new(vec![Register::anonymous(id, 2)]).unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let zero = ket(qubit("a"), &[c(1.0), c(0.0)]).to_density();
        let one = ket(qubit("b"), &[c(0.0), c(1.0)]).to_density();
        let t = tensor(&zero, &one).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(1, 1)] = c(1.0);
        assert_eq!(t.matrix(), &expect);
        assert_eq!(t.layout().ids(), vec!["a", "b"]);
        assert!(tensor(&zero, &zero).is_err());
    }

    #[test]
    fn tensor_of_maximally_mixed() {
        let a = DensityOperator::maximally_mixed(qubit("a"));
        let b = DensityOperator::maximally_mixed(qubit("b"));
        let t = tensor(&a, &b).unwrap();
        assert!((t.matrix() - CMatrix::identity(4, 4).unscale(4.0)).norm() < 1e-15);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let layout = RegisterLayout::anonymous(&[2, 2]).unwrap();
        let bell = ket(layout, &[c(1.0), c(0.0), c(0.0), c(1.0)]).to_density();
        let m = partial_trace(&bell, &["q0"]).unwrap();
        assert!((m.matrix() - CMatrix::identity(2, 2).unscale(2.0)).norm() < 1e-12);
        assert!(partial_trace(&bell, &["nope"]).is_err());
    }

    #[test]
    fn distances_of_simple_states() {
        let zero = ket(qubit("a"), &[c(1.0), c(0.0)]).to_density();
        let one = ket(qubit("a"), &[c(0.0), c(1.0)]).to_density();
        let plus = ket(qubit("a"), &[c(1.0), c(1.0)]).to_density();
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-9);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-9);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layout = RegisterLayout::anonymous(&[3]).unwrap();
        let a = random::haar_state(&layout, &mut rng);
        let b = random::haar_state(&layout, &mut rng);
        let f = fidelity(&a.to_density(), &b.to_density()).unwrap();
        assert!((f - a.inner(&b).unwrap().norm()).abs() < 1e-7);
    }

    #[test]
    fn top_eigenpair_of_diagonal() {
        let layout = qubit("a");
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.2), c(0.9)]));
        let (v, vec) = top_eigenpair(&HermitianOperator::new(layout.clone(), m).unwrap()).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
        assert!((vec.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
        let (v, _) = top_eigenpair(&HermitianOperator::identity(layout.clone())).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let bad = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(HermitianOperator::new(layout, bad).is_err());
    }

    #[test]
    fn half_swap_channel_on_01() {
        let layout = RegisterLayout::anonymous(&[2, 2]).unwrap();
        let mut swap = CMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(a, b)] = c(1.0);
        }
        let ch = MixingChannel::new(
            layout.clone(),
            vec![
                ChannelTerm { probability: 0.5, registers: vec![], unitary: CMatrix::identity(1, 1) },
                ChannelTerm { probability: 0.5, registers: vec!["q0".into(), "q1".into()], unitary: swap },
            ],
        )
        .unwrap();
        let rho = StateVector::basis(layout.clone(), 1).unwrap().to_density();
        let out = apply_channel(&ch, &rho).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(1, 1)] = c(0.5);
        expect[(2, 2)] = c(0.5);
        assert!((out.matrix() - expect).norm() < 1e-15);
        let id = MixingChannel::identity(layout);
        assert_eq!(apply_channel(&id, &rho).unwrap(), rho);
    }

    #[test]
    fn channel_rejects_bad_probabilities() {
        let layout = qubit("a");
        let t = ChannelTerm { probability: 0.7, registers: vec![], unitary: CMatrix::identity(1, 1) };
        assert!(MixingChannel::new(layout, vec![t]).is_err());
    }

    #[test]
    fn density_validation() {
        let layout = qubit("a");
        assert!(DensityOperator::new(layout.clone(), CMatrix::identity(2, 2)).is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(DensityOperator::new(layout, neg).is_err());
    }
}

//! Random states and operators for property tests and adversary restarts.

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{eigh, spectral_map};
use super::{CMatrix, CVector, DensityOperator, RegisterLayout, StateVector, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector of dimension `dim`.
pub fn haar_vector(dim: usize, rng: &mut impl Rng) -> CVector {
    loop {
        let v = CVector::from_iterator(dim, (0..dim).map(|_| gaussian(rng)));
        let n = v.norm();
        if n > 1e-12 {
            return v.unscale(n);
        }
    }
}

pub fn haar_state(layout: &RegisterLayout, rng: &mut impl Rng) -> StateVector {
    StateVector::from_parts_unchecked(layout.clone(), haar_vector(layout.total_dimension(), rng))
}

/// Mixture of one to four Haar-random pure states with random weights.
pub fn random_density(layout: &RegisterLayout, rng: &mut impl Rng) -> DensityOperator {
    let d = layout.total_dimension();
    let count = rng.gen_range(1..=4);
    let weights: Vec<f64> = (0..count).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(d, d);
    for w in weights {
        let v = haar_vector(d, rng);
        m += (&v * v.adjoint()).scale(w / total);
    }
    DensityOperator::from_parts_unchecked(layout.clone(), m)
}

/// Gaussian Hermitian matrix.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

/// Random unitary (eigenbasis of a random Hermitian matrix).
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let (_, vectors) = eigh(&random_hermitian(dim, rng));
    vectors
}

/// Random POVM element `0 ≤ M ≤ I` with uniform spectrum in `[0, 1]`.
pub fn random_povm_element(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let u = random_unitary(dim, rng);
    let values: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    spectral_map(&values, &u, |x| x)
}

//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqma_core::fingerprint::{BitString, FingerprintScheme};
use dqma_core::network::ProofState;
use dqma_core::protocols::{build_eq_path, EqPathParams};
use dqma_core::qcore::random::random_density;
use dqma_core::{DensityOperator, ProtocolPipeline, RegisterLayout};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// EQ path on `n`-bit inputs `0…0` and `0…01` with Hadamard fingerprints.
pub fn eq_no_instance(r: usize, n: usize, reps: usize) -> ProtocolPipeline {
    let scheme = FingerprintScheme::hadamard(n).expect("small n");
    let x = BitString::zeros(n);
    let y = BitString::from_u64(1, n).expect("n ≥ 1");
    build_eq_path(&EqPathParams::new(r, scheme, x, y).reps(reps)).expect("fits the default cap")
}

pub fn honest_proof(p: &ProtocolPipeline) -> ProofState {
    ProofState::Pure(p.honest_state().expect("honest proof"))
}

/// A random mixed state on `k` registers of dimension `d`.
pub fn random_registers(k: usize, d: usize, seed: u64) -> DensityOperator {
    let layout = RegisterLayout::anonymous(&vec![d; k]).expect("valid dims");
    random_density(&layout, &mut rng(seed))
}

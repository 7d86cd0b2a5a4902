use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqma_core::fingerprint::{BitString, FingerprintScheme};
use dqma_core::network::{compile, simulate_sampled, ProofState, ProtocolPipeline};
use dqma_core::protocols::{build_eq_path, path_soundness_bound, EqPathParams, FinalTest};
use dqma_core::qcore::random::{haar_state, random_density};
use dqma_core::qcore::{partial_trace, tensor, trace_distance};
use dqma_core::symmetric::swap_test_accept;
use dqma_core::{Register, RegisterLayout};

fn layout(prefix: &str, dims: &[usize]) -> RegisterLayout {
    let regs = dims.iter().enumerate().map(|(k, &d)| Register::anonymous(format!("{prefix}{k}"), d)).collect();
    RegisterLayout::new(regs).unwrap()
}

fn eq_pipeline(r: usize, n: usize, x: u64, y: u64, swap: bool) -> ProtocolPipeline {
    let scheme = FingerprintScheme::hadamard(n).unwrap();
    let test = if swap { FinalTest::Swap } else { FinalTest::Povm };
    let p = EqPathParams::new(r, scheme, BitString::from_u64(x, n).unwrap(), BitString::from_u64(y, n).unwrap());
    build_eq_path(&p.final_test(test)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bitstrings_round_trip(width in 1usize..12, raw in any::<u64>()) {
        let v = raw & ((1 << width) - 1);
        let b = BitString::from_u64(v, width).unwrap();
        prop_assert_eq!(b.to_u64(), v);
        prop_assert_eq!(b.len(), width);
        let parsed: BitString = b.to_string().parse().unwrap();
        prop_assert_eq!(parsed, b);
    }

    #[test]
    fn partial_trace_recovers_factors(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&layout("a", &[da]), &mut rng);
        let b = random_density(&layout("b", &[db]), &mut rng);
        let joint = tensor(&a, &b).unwrap();
        let back = partial_trace(&joint, &["a0"]).unwrap();
        prop_assert!((back.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn trace_distance_shrinks_under_partial_trace(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = layout("q", &[2, 3]);
        let (rho, sigma) = (random_density(&l, &mut rng), random_density(&l, &mut rng));
        let full = trace_distance(&rho, &sigma).unwrap();
        let reduced = trace_distance(&partial_trace(&rho, &["q1"]).unwrap(), &partial_trace(&sigma, &["q1"]).unwrap()).unwrap();
        prop_assert!(reduced <= full + 1e-9);
        prop_assert!((0.0..=1.0).contains(&full));
    }

    #[test]
    fn swap_test_on_products(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = haar_state(&layout("a", &[d]), &mut rng);
        let phi = haar_state(&layout("b", &[d]), &mut rng);
        let joint = tensor(&psi.to_density(), &phi.to_density()).unwrap();
        let overlap = psi.amplitudes().dotc(phi.amplitudes()).norm_sqr();
        prop_assert!((swap_test_accept(&joint).unwrap() - (1.0 + overlap) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn eq_path_values(r in 2usize..4, n in 1usize..3, x in 0u64..4, y in 0u64..4, swap in any::<bool>()) {
        let (x, y) = (x % (1 << n), y % (1 << n));
        let p = eq_pipeline(r, n, x, y, swap);
        let model = compile(&p).unwrap();
        let (lambda, _) = model.top_eigenpair().unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lambda));
        if x == y {
            let honest = model.accept_probability(&ProofState::Pure(p.honest_state().unwrap())).unwrap();
            prop_assert!((honest - 1.0).abs() < 1e-9);
            prop_assert!((lambda - 1.0).abs() < 1e-9);
        } else {
            prop_assert!(lambda <= path_soundness_bound(r, 1).value + 1e-9);
        }
    }

    #[test]
    fn random_proofs_stay_below_optimum(seed in any::<u64>(), x in 0u64..4, y in 0u64..4) {
        let p = eq_pipeline(2, 2, x, y, false);
        let model = compile(&p).unwrap();
        let (lambda, _) = model.top_eigenpair().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proof = ProofState::Mixed(random_density(model.proof_layout(), &mut rng));
        let v = model.accept_probability(&proof).unwrap();
        prop_assert!(v >= -1e-12 && v <= lambda + 1e-9);
    }
}

#[test]
fn sampling_is_reproducible() {
    let p = eq_pipeline(2, 1, 0, 1, false);
    let proof = ProofState::Pure(compile(&p).unwrap().top_eigenpair().unwrap().1);
    let a = simulate_sampled(&p, &proof, 4_000, 17).unwrap();
    let b = simulate_sampled(&p, &proof, 4_000, 17).unwrap();
    assert_eq!(a, b);
    let c = simulate_sampled(&p, &proof, 4_000, 18).unwrap();
    assert_ne!(a.accept_frequency, c.accept_frequency);
}

#[test]
fn pipelines_round_trip_through_json() {
    let p = eq_pipeline(3, 2, 1, 2, true);
    let text = p.to_json().unwrap();
    let back = ProtocolPipeline::from_json(&text).unwrap();
    assert_eq!(back, p);
    let a = compile(&p).unwrap().top_eigenpair().unwrap().0;
    let b = compile(&back).unwrap().top_eigenpair().unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn reference_eigenvalues() {
    // One-bit path protocol on inputs 0 and 1, values from a separate dense solver.
    for (r, swap, expect) in [(2, false, 0.5), (3, false, 0.6545084971874736), (2, true, 0.625), (3, true, 0.7102251214376523)] {
        let got = compile(&eq_pipeline(r, 1, 0, 1, swap)).unwrap().top_eigenpair().unwrap().0;
        assert!((got - expect).abs() < 1e-10, "r={r} swap={swap}: {got}");
    }
}

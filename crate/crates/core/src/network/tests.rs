use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fingerprint::{BitString, FingerprintScheme};
use crate::qcore::kernel::LocalPlan;
use crate::qcore::random::{haar_state, random_density};
use crate::qcore::{apply_channel, CMatrix, DensityOperator, Register, RegisterLayout, StateVector};
use crate::symmetric::{symmetric_projector, symmetrize_channel};

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

/// Hand-built EQ path with one intermediate node, one-bit inputs.
fn tiny_path(x: &str, y: &str) -> ProtocolPipeline {
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let nodes = vec!["v0".to_string(), "v1".to_string(), "v2".to_string()];
    let mut p = ProtocolPipeline::new("tiny", nodes);
    p.registers = vec![
        Register::proof("R0", 2, "v1"),
        Register::proof("R1", 2, "v1"),
        Register::prepared("h", 2, "v1"),
    ];
    p.prepared = vec![PreparedState {
        register: "h".into(),
        state: StateSpec::Fingerprint { scheme: scheme.clone(), x: bits(x) },
    }];
    p.channels = vec![NodeChannel {
        node: "v1".into(),
        channel: ChannelSpec::Symmetrize { groups: vec![vec!["R0".into()], vec!["R1".into()]] },
    }];
    p.tests = vec![
        LocalTest { node: "v1".into(), test: TestSpec::Symmetric { groups: vec![vec!["h".into()], vec!["R0".into()]] } },
        LocalTest {
            node: "v2".into(),
            test: TestSpec::Projector {
                registers: vec!["R1".into()],
                state: StateSpec::Fingerprint { scheme, x: bits(y) },
            },
        },
    ];
    p.honest_proof = Some(vec![
        HonestPart { register: "R0".into(), state: StateSpec::Basis { dim: 2, index: 0 } },
        HonestPart { register: "R1".into(), state: StateSpec::Basis { dim: 2, index: 0 } },
    ]);
    p
}

/// Direct density-matrix evaluation of [`tiny_path`].
fn oracle(rho: &DensityOperator, x: &str, y: &str) -> f64 {
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let hx = scheme.amplitudes(&bits(x)).unwrap();
    let hy = scheme.amplitudes(&bits(y)).unwrap();
    let full_layout = RegisterLayout::anonymous(&[2, 2, 2]).unwrap();
    let prep = DensityOperator::new(RegisterLayout::anonymous(&[2]).unwrap(), &hx * hx.adjoint()).unwrap();
    let joint = DensityOperator::new(full_layout.clone(), rho.matrix().kronecker(prep.matrix())).unwrap();
    let channel = symmetrize_channel(&full_layout, &["q0", "q1"]).unwrap();
    let after = apply_channel(&channel, &joint).unwrap();
    let swap = LocalPlan::new(&[2, 2, 2], &[2, 0]).embed(symmetric_projector(2, 2).unwrap().matrix());
    let proj = LocalPlan::new(&[2, 2, 2], &[1]).embed(&(&hy * hy.adjoint()));
    (swap * proj * after.matrix()).trace().re
}

#[test]
fn no_tests_accepts_everything() {
    let mut p = tiny_path("0", "1");
    p.tests.clear();
    let model = compile(&p).unwrap();
    let a = model.accept_operator().unwrap();
    assert!((a.matrix() - CMatrix::identity(4, 4)).norm() < 1e-12);
}

#[test]
fn matches_density_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (x, y) in [("0", "0"), ("0", "1"), ("1", "0")] {
        let p = tiny_path(x, y);
        let model = compile(&p).unwrap();
        for _ in 0..10 {
            let rho = random_density(model.proof_layout(), &mut rng);
            let exact = model.accept_probability(&ProofState::Mixed(rho.clone())).unwrap();
            assert!((exact - oracle(&rho, x, y)).abs() < 1e-10);
        }
    }
}

#[test]
fn honest_and_swap_only() {
    let p = tiny_path("1", "1");
    let model = compile(&p).unwrap();
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let h = scheme.amplitudes(&bits("1")).unwrap();
    let honest = StateVector::new(model.proof_layout().clone(), h.kronecker(&h)).unwrap();
    assert!((model.accept_probability(&honest.into()).unwrap() - 1.0).abs() < 1e-12);

    // Orthogonal fingerprints against one SWAP test accept half the time.
    let mut single = tiny_path("0", "0");
    single.tests.truncate(1);
    single.channels.clear();
    let m = compile(&single).unwrap();
    let h1 = scheme.amplitudes(&bits("1")).unwrap();
    let proof = StateVector::new(m.proof_layout().clone(), h1.kronecker(&h1)).unwrap();
    assert!((m.accept_probability(&proof.into()).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn factored_and_unfactored_eigenvalues_agree() {
    let a = tiny_path("0", "1");
    let b = tiny_path("1", "0");
    let both = ProtocolPipeline::combine("pair", &[("a".into(), a.clone()), ("b".into(), b)]).unwrap();
    let model = compile(&both).unwrap();
    assert_eq!(model.component_count(), 2);
    let (f, v) = model.top_eigenpair().unwrap();
    let (u, _) = model.top_eigenpair_unfactored(3).unwrap();
    let single = compile(&a).unwrap().top_eigenpair().unwrap().0;
    assert!((f - u).abs() < 1e-10);
    assert!((f - single * single).abs() < 1e-10);
    assert!((model.accept_probability(&v.into()).unwrap() - f).abs() < 1e-10);
}

#[test]
fn guard_failure_rejects() {
    let mut p = tiny_path("0", "0");
    p.guards.push(ClassicalGuard { node: "v2".into(), description: "bit".into(), passed: false });
    let model = compile(&p).unwrap();
    assert!(model.is_rejecting());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = haar_state(model.proof_layout(), &mut rng);
    assert_eq!(model.accept_probability(&psi.clone().into()).unwrap(), 0.0);
    let rej = model.per_node_rejection(&psi.into()).unwrap();
    assert_eq!(rej["v2"], 1.0);
}

#[test]
fn json_round_trip_is_exact() {
    let p = tiny_path("0", "1");
    let text = p.to_json().unwrap();
    let back = ProtocolPipeline::from_json(&text).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn overlapping_tests_are_rejected() {
    let mut p = tiny_path("0", "1");
    p.tests.push(LocalTest {
        node: "v2".into(),
        test: TestSpec::Projector { registers: vec!["R0".into()], state: StateSpec::Basis { dim: 2, index: 0 } },
    });
    assert!(p.validate().is_err());
}

#[test]
fn sampler_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = tiny_path("0", "1");
    let model = compile(&p).unwrap();
    let psi = haar_state(model.proof_layout(), &mut rng);
    let proof = ProofState::Pure(psi);
    let exact = model.accept_probability(&proof).unwrap();
    let stats = simulate_sampled(&p, &proof, 20_000, 5).unwrap();
    assert!(stats.agrees_with(exact, 3.0), "{} vs {exact}", stats.accept_frequency);
    let again = simulate_sampled(&p, &proof, 20_000, 5).unwrap();
    assert_eq!(stats, again);
    let rej = model.per_node_rejection(&proof).unwrap();
    for (node, r) in rej {
        let f = stats.node_reject_frequency[&node];
        assert!((f - r).abs() <= 3.0 * (r * (1.0 - r) / 20_000.0).sqrt() + 1e-9);
    }
}

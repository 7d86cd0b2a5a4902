use super::*;
use crate::fingerprint::{eq_one_way, exact_send_protocol, wrap_oneway_as_qma, BitString, BooleanFunction, FingerprintScheme, OneWayQmaProtocol};
use crate::network::{compile, ProofState, Topology};
use crate::DEFAULT_DIM_CAP;

fn b(s: &str) -> BitString {
    s.parse().unwrap()
}

fn honest_accept(p: &crate::network::ProtocolPipeline) -> f64 {
    compile(p).unwrap().accept_probability(&ProofState::Pure(p.honest_state().unwrap())).unwrap()
}

#[test]
fn eq_path_completeness_and_soundness() {
    let scheme = FingerprintScheme::hadamard(2).unwrap();
    for r in [2, 3] {
        for x in BitString::all(2) {
            for y in BitString::all(2) {
                let p = build_eq_path(&EqPathParams::new(r, scheme.clone(), x.clone(), y.clone())).unwrap();
                if x == y {
                    assert!((honest_accept(&p) - 1.0).abs() < 1e-9);
                } else if x.to_u64() < y.to_u64() {
                    let value = compile(&p).unwrap().top_eigenpair().unwrap().0;
                    assert!(value <= path_soundness_bound(r, 1).value + 1e-9, "r={r} value={value}");
                }
            }
        }
    }
}

#[test]
fn repetition_squares_the_value() {
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let base = EqPathParams::new(2, scheme, b("0"), b("1"));
    let single = compile(&build_eq_path(&base).unwrap()).unwrap().top_eigenpair().unwrap().0;
    let double = compile(&build_eq_path(&base.clone().reps(2)).unwrap()).unwrap();
    let (value, _) = double.top_eigenpair_unfactored(1).unwrap();
    assert!((value - single * single).abs() < 1e-8);
}

#[test]
fn path_shaped_tree_matches_path() {
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let topo = Topology::path(2, b("1"), b("0")).unwrap();
    let tree = build_eq_tree(&TreeParams::new(topo), &scheme).unwrap();
    // The tree sends leaf-to-root, i.e. from v2's input towards v0.
    let path = build_eq_path(&EqPathParams::new(2, scheme, b("0"), b("1")).final_test(FinalTest::Swap)).unwrap();
    let a = compile(&tree).unwrap().accept_operator().unwrap();
    let c = compile(&path).unwrap().accept_operator().unwrap();
    assert!((a.matrix() - c.matrix()).norm() < 1e-10);
}

#[test]
fn star_completeness() {
    let scheme = FingerprintScheme::hadamard(1).unwrap();
    let topo = Topology::star(&[b("1"), b("1"), b("1")]).unwrap();
    let tree = build_eq_tree(&TreeParams::new(topo), &scheme).unwrap();
    assert!((honest_accept(&tree) - 1.0).abs() < 1e-9);
}

#[test]
fn gt_example_and_guards() {
    let p = build_gt(&GtParams::honest(GtVariant::Gt, 2, b("101"), b("011"))).unwrap();
    assert_eq!(p.metadata["index"], 0);
    assert!((honest_accept(&p) - 1.0).abs() < 1e-12);
    let bad = build_gt(&GtParams::new(GtVariant::Gt, 2, b("011"), b("101"), 0)).unwrap();
    assert!(compile(&bad).unwrap().is_rejecting());
    let eq = build_gt(&GtParams::honest(GtVariant::Ge, 2, b("110"), b("110"))).unwrap();
    assert!((honest_accept(&eq) - 1.0).abs() < 1e-12);
    let mut mismatch = GtParams::honest(GtVariant::Gt, 2, b("101"), b("011"));
    mismatch.node_indices = Some(vec![0, 1, 0]);
    assert!(compile(&build_gt(&mismatch).unwrap()).unwrap().is_rejecting());
}

#[test]
fn relay_degenerates_to_path() {
    let mut params = RelayParams::new(3, b("01"), b("11"));
    params.segment_length = Some(3);
    params.reps_per_segment = Some(1);
    let relay = build_eq_relay(&params).unwrap();
    assert!(relay.relays.is_empty());
    let direct = build_eq_path(
        &EqPathParams::new(3, FingerprintScheme::hadamard(2).unwrap(), b("01"), b("11")).final_test(FinalTest::Swap),
    )
    .unwrap();
    assert_eq!(relay.combined_pipeline(&[]).unwrap(), direct);
    assert_eq!(cube_root_ceil(8), 2);
    assert_eq!(cube_root_ceil(9), 3);
}

#[test]
fn qma_conversion_collapses_at_r1() {
    let q = OneWayQmaProtocol::IndexWitness { n: 2 };
    for x in BitString::all(2) {
        for y in BitString::all(2) {
            let p = build_from_oneway_qma(&q, 1, &x, &y, 1, DEFAULT_DIM_CAP).unwrap();
            let value = compile(&p).unwrap().top_eigenpair().unwrap().0;
            assert!((value - q.two_party_value(&x, &y).unwrap()).abs() < 1e-10);
        }
    }
    let wrapped = wrap_oneway_as_qma(&eq_one_way(&FingerprintScheme::hadamard(2).unwrap()).unwrap());
    let p = build_from_oneway_qma(&wrapped, 3, &b("10"), &b("10"), 1, DEFAULT_DIM_CAP).unwrap();
    assert!((honest_accept(&p) - 1.0).abs() < 1e-9);
}

#[test]
fn forall_f_star() {
    let f = exact_send_protocol(BooleanFunction::HamLe { d: 1 }, 2).unwrap();
    let topo = Topology::star(&[b("00"), b("01"), b("01")]).unwrap();
    let pipes = build_forall_f(&TreeParams::new(topo), &f).unwrap();
    assert_eq!(pipes.len(), 3);
    for p in &pipes {
        assert_eq!(p.yes_instance, Some(true));
        assert!((honest_accept(p) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn rv_example() {
    let inputs = [b("101"), b("010"), b("111")];
    let topo = Topology::star(&inputs).unwrap();
    let yes = build_rv(&RvParams { topology: topo.clone(), i: 1, j: 2, reps: 1, dim_cap: DEFAULT_DIM_CAP }).unwrap();
    assert!(yes.truth);
    assert!((yes.honest_value - 1.0).abs() < 1e-9);
    let no = build_rv(&RvParams { topology: topo, i: 1, j: 1, reps: 1, dim_cap: DEFAULT_DIM_CAP }).unwrap();
    assert!(!no.truth);
    assert!(no.value < 1.0 - path_gap(2) + 1e-9);
}

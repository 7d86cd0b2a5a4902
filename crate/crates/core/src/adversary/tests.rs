use super::*;
use crate::fingerprint::BooleanFunction;
use crate::network::compile;
use crate::protocols::{build_eq_path, EqPathParams, FinalTest};

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

fn eq_pipeline(n: usize, r: usize, x: &str, y: &str) -> ProtocolPipeline {
    let scheme = FingerprintScheme::hadamard(n).unwrap();
    build_eq_path(&EqPathParams::new(r, scheme, bits(x), bits(y))).unwrap()
}

#[test]
fn separable_between_honest_and_entangled() {
    for (x, y) in [("0", "0"), ("0", "1")] {
        let p = eq_pipeline(1, 3, x, y);
        let model = compile(&p).unwrap();
        let (ent, _) = optimal_entangled_value(&model).unwrap();
        let opts = SeeSawOptions { restarts: 6, ..Default::default() };
        let sep = optimal_node_separable_value(&model, &opts).unwrap();
        let honest = model.accept_probability(&honest_proof(&p).unwrap().into()).unwrap();
        assert!(sep.value >= honest - 1e-9, "{} < {}", sep.value, honest);
        assert!(sep.value <= ent + 1e-9);
        let again = optimal_node_separable_value(&model, &opts).unwrap();
        assert_eq!(sep.value, again.value);
    }
}

#[test]
fn seesaw_on_product_operator_is_exact() {
    // Two nodes with independent tests: the optimum is already a product.
    let p = eq_pipeline(1, 2, "0", "1");
    let model = compile(&p).unwrap();
    let (ent, _) = model.top_eigenpair().unwrap();
    let grouping = vec![p.proof_registers().iter().map(|r| r.id.clone()).collect::<Vec<_>>()];
    let sep = optimal_separable_value(&model, &grouping, &SeeSawOptions::default(), None).unwrap();
    assert!((sep.value - ent).abs() < 1e-9);
}

#[test]
fn viterbi_matches_brute_force() {
    let p = truncated_eq(2, 3, vec![0, 2, 1, 2]).unwrap();
    for (x, y) in [("01", "01"), ("01", "11"), ("10", "00")] {
        let (x, y) = (bits(x), bits(y));
        let (v, w) = p.best_proof(&x, &y);
        let mut brute: f64 = 0.0;
        for a in 0..4u64 {
            for b in 0..2u64 {
                for c in 0..4u64 {
                    brute = brute.max(p.accept_probability(&x, &y, &[0, a, b, c]).unwrap());
                }
            }
        }
        assert_eq!(v, brute);
        assert_eq!(p.accept_probability(&x, &y, &w).unwrap(), v);
    }
}

#[test]
fn truncated_eq_is_complete() {
    let p = truncated_eq(3, 4, vec![0, 1, 0, 1, 0]).unwrap();
    for x in BitString::all(3) {
        let w = truncated_eq_honest(&p, &x);
        assert_eq!(p.accept_probability(&x, &x, &w).unwrap(), 1.0);
    }
}

#[test]
fn classical_attack_fools_short_labels() {
    let p = truncated_eq(3, 4, vec![0, 1, 0, 1, 0]).unwrap();
    let fooling: Vec<_> = BitString::all(3).map(|x| (x.clone(), x)).collect();
    let out = classical_fooling_attack(&p, &BooleanFunction::Eq, &fooling).unwrap();
    assert_eq!(out.report.status, AttackStatus::Ok);
    assert_eq!(out.report.cut_index, Some(1));
    assert_eq!(out.report.accept_prob, Some(1.0));
    assert!(out.report.beats_reference());
    let (freq, _) = out.resample(2000, 3).unwrap().unwrap();
    assert_eq!(freq, 1.0);

    let full = truncated_eq(3, 4, vec![0, 3, 3, 3, 0]).unwrap();
    let out = classical_fooling_attack(&full, &BooleanFunction::Eq, &fooling).unwrap();
    assert_eq!(out.report.status, AttackStatus::NotApplicable);
}

#[test]
fn tiny_family_cut_paste() {
    let scheme = tiny_family_scheme(3).unwrap();
    let build = |x: &BitString, y: &BitString| {
        build_eq_path(&EqPathParams::new(3, scheme.clone(), x.clone(), y.clone()).final_test(FinalTest::Povm))
    };
    let fooling: Vec<_> = BitString::all(3).map(|x| (x.clone(), x)).collect();
    let out = separable_cut_paste_attack(&build, &BooleanFunction::Eq, &fooling, 1, 0.25).unwrap();
    assert!(out.report.pair_found);
    let accept = out.report.accept_prob.unwrap();
    assert!(accept >= 0.75 - 1e-9, "{accept}");
    let (freq, se) = out.resample(20_000, 9).unwrap().unwrap();
    assert!((freq - accept).abs() <= 3.0 * se.max(1e-3));
}

#[test]
fn entangled_attack_on_gapped_path() {
    let scheme = FingerprintScheme::hadamard(2).unwrap();
    let build = |x: &BitString, y: &BitString| {
        build_eq_path(&EqPathParams::new(5, scheme.clone(), x.clone(), y.clone()).gap(2))
    };
    let (a, b) = (bits("00"), bits("11"));
    let out = entangled_no_proof_attack(&build, &BooleanFunction::Eq, (&a, &a), (&b, &b)).unwrap();
    assert_eq!(out.report.cut_index, Some(2));
    assert!((out.report.accept_prob.unwrap() - 1.0).abs() < 1e-9);

    let plain = |x: &BitString, y: &BitString| build_eq_path(&EqPathParams::new(3, scheme.clone(), x.clone(), y.clone()));
    let out = entangled_no_proof_attack(&plain, &BooleanFunction::Eq, (&a, &a), (&b, &b)).unwrap();
    assert_eq!(out.report.status, AttackStatus::NotApplicable);
}

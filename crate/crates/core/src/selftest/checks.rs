use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckFn, SelftestOptions, Verdict};
use crate::adversary::{
    optimal_node_separable_value, AttackOutcome, AttackSpec, SeeSawOptions,
};
use crate::fingerprint::{
    eq_one_way, exact_send_protocol, BitString, BooleanFunction, FingerprintScheme, OneWayQmaProtocol,
};
use crate::network::{compile, simulate_sampled, ProofState, ProtocolPipeline, Topology};
use crate::protocols::{
    build_eq_path, build_eq_relay, build_eq_tree, build_forall_f, build_from_oneway_qma, build_gt, build_rv,
    gt_adversary_value, path_soundness_bound, EqPathParams, FinalTest, GtParams, GtVariant, RelayParams, RvParams,
    TreeParams,
};
use crate::qcore::kernel::LocalPlan;
use crate::qcore::linalg::{eigenvalues, eigh, trace};
use crate::qcore::random::{haar_state, haar_vector, random_density, random_povm_element, random_unitary};
use crate::qcore::{
    apply_channel, fidelity, partial_trace, tensor, trace_distance, CMatrix, ChannelTerm, DensityOperator,
    HermitianOperator, MixingChannel, Register, RegisterLayout, C64,
};
use crate::reductions::{cut_to_two_party, qubits};
use crate::symmetric::{
    all_permutations, permutation_test_accept, permutation_unitary, swap_test_accept, symmetric_projector,
};
use crate::{Error, Result};

pub(super) const ALL: &[(&str, CheckFn)] = &[
    ("qcore.partial_trace_of_tensor", partial_trace_of_tensor),
    ("qcore.trace_distance_contractive", trace_distance_contractive),
    ("qcore.fuchs_van_de_graaf", fuchs_van_de_graaf),
    ("qcore.povm_distinguishability", povm_distinguishability),
    ("qcore.channel_trace_positivity", channel_trace_positivity),
    ("symmetric.swap_product_formula", swap_product_formula),
    ("symmetric.permutation_group_average", permutation_group_average),
    ("symmetric.swap_closeness", swap_closeness),
    ("symmetric.permutation_closeness", permutation_closeness),
    ("symmetric.projector_common_eigenspace", projector_common_eigenspace),
    ("symmetric.swap_equals_permutation", swap_equals_permutation),
    ("fingerprint.overlap_bound", overlap_bound),
    ("fingerprint.eq_one_way", eq_one_way_check),
    ("network.spectrum_in_unit_interval", spectrum_in_unit_interval),
    ("network.channel_adjointness", channel_adjointness),
    ("network.tensor_disjointness", tensor_disjointness),
    ("network.exact_vs_sampled", exact_vs_sampled),
    ("protocols.completeness", completeness),
    ("protocols.eq_path_soundness", eq_path_soundness),
    ("protocols.gt_soundness", gt_soundness),
    ("protocols.repetition_multiplicative", repetition_multiplicative),
    ("protocols.repetition_monotone", repetition_monotone),
    ("adversary.value_ordering", value_ordering),
    ("adversary.brute_force_bound", brute_force_bound),
    ("adversary.seesaw_determinism", seesaw_determinism),
    ("adversary.attacks_resampled", attacks_resampled),
    ("reductions.cut_invariance", cut_invariance),
];

fn rng(opts: &SelftestOptions, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(opts.seed);
    r.set_stream(salt);
    r
}

pub(crate) fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

fn layout(ids: &[(&str, usize)]) -> RegisterLayout {
    RegisterLayout::new(ids.iter().map(|&(id, d)| Register::anonymous(id, d)).collect()).expect("small layout")
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs `cell` on every item; cells over the dimension cap are counted, not failed.
fn cells<T>(items: &[T], mut cell: impl FnMut(&T) -> Result<f64>) -> Result<(f64, usize)> {
    let mut worst = f64::NEG_INFINITY;
    let mut skipped = 0;
    let mut last_cap = None;
    for item in items {
        match cell(item) {
            Ok(v) => worst = worst.max(v),
            Err(e @ Error::DimensionCap { .. }) => {
                skipped += 1;
                last_cap = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    match last_cap {
        Some(e) if skipped == items.len() => Err(e),
        _ => Ok((worst, skipped)),
    }
}

fn with_skips(v: Verdict, skipped: usize) -> Verdict {
    if skipped == 0 {
        v
    } else {
        Verdict { ok: v.ok, detail: format!("{}; {skipped} cells over dim cap", v.detail) }
    }
}

fn honest_accept(p: &ProtocolPipeline) -> Result<f64> {
    compile(p)?.accept_probability(&p.honest_state()?.into())
}

fn partial_trace_of_tensor(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 1);
    let (la, lb) = (layout(&[("a", 2)]), layout(&[("b", 3)]));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_density(&la, &mut rng);
        let sigma = random_density(&lb, &mut rng);
        let back = partial_trace(&tensor(&rho, &sigma)?, &["a"])?;
        worst = worst.max(max_abs(&(back.matrix() - rho.matrix())));
    }
    Ok(Verdict::within(worst, 1e-9, "entrywise deviation"))
}

fn two_register_pairs(opts: &SelftestOptions, salt: u64) -> Vec<(DensityOperator, DensityOperator)> {
    let mut rng = rng(opts, salt);
    let l = layout(&[("a", 2), ("b", 3)]);
    (0..100).map(|_| (random_density(&l, &mut rng), random_density(&l, &mut rng))).collect()
}

fn trace_distance_contractive(opts: &SelftestOptions) -> Result<Verdict> {
    let mut worst = f64::NEG_INFINITY;
    for (rho, sigma) in two_register_pairs(opts, 2) {
        let full = trace_distance(&rho, &sigma)?;
        let reduced = trace_distance(&partial_trace(&rho, &["a"])?, &partial_trace(&sigma, &["a"])?)?;
        worst = worst.max(reduced - full);
    }
    Ok(Verdict::within(worst, 1e-9, "D(reduced) - D(full)"))
}

fn fuchs_van_de_graaf(opts: &SelftestOptions) -> Result<Verdict> {
    let mut worst = f64::NEG_INFINITY;
    for (rho, sigma) in two_register_pairs(opts, 3) {
        let d = trace_distance(&rho, &sigma)?;
        let f = fidelity(&rho, &sigma)?;
        worst = worst.max((1.0 - f) - d).max(d - (1.0 - f * f).max(0.0).sqrt());
    }
    Ok(Verdict::within(worst, 1e-9, "violation"))
}

fn povm_distinguishability(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 4);
    let mut worst = f64::NEG_INFINITY;
    for (rho, sigma) in two_register_pairs(opts, 5) {
        let m = HermitianOperator::povm_element(rho.layout().clone(), random_povm_element(6, &mut rng))?;
        let gap = (m.expectation(&rho)? - m.expectation(&sigma)?).abs();
        worst = worst.max(gap - trace_distance(&rho, &sigma)?);
    }
    Ok(Verdict::within(worst, 1e-9, "|tr M(rho - sigma)| - D"))
}

fn channel_trace_positivity(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 6);
    let l = layout(&[("a", 2), ("b", 3)]);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let w: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 0.1).collect();
        let total: f64 = w.iter().sum();
        let targets = [vec!["a".to_string()], vec!["b".to_string()], vec!["a".to_string(), "b".to_string()]];
        let terms = w
            .iter()
            .zip(&targets)
            .map(|(p, regs)| {
                let d = l.select(regs).map(|s| s.total_dimension()).unwrap_or(1);
                ChannelTerm { probability: p / total, registers: regs.clone(), unitary: random_unitary(d, &mut rng) }
            })
            .collect();
        let ch = MixingChannel::new(l.clone(), terms)?;
        let out = apply_channel(&ch, &random_density(&l, &mut rng))?;
        let tr = trace(out.matrix()).re;
        let min = eigenvalues(out.matrix()).into_iter().fold(f64::INFINITY, f64::min);
        worst = worst.max((tr - 1.0).abs()).max(-min);
    }
    Ok(Verdict::within(worst, 1e-9, "trace and positivity defect"))
}

fn swap_product_formula(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 2 + i % 3;
        let psi = haar_state(&layout(&[("a", d)]), &mut rng);
        let phi = haar_state(&layout(&[("b", d)]), &mut rng);
        let overlap = psi.amplitudes().dotc(phi.amplitudes()).norm_sqr();
        let joint = psi.tensor(&phi, usize::MAX)?.to_density();
        worst = worst.max((swap_test_accept(&joint)? - (1.0 + overlap) / 2.0).abs());
    }
    Ok(Verdict::within(worst, 1e-10, "deviation from (1+|<psi|phi>|^2)/2"))
}

fn register_layout(k: usize, d: usize) -> RegisterLayout {
    RegisterLayout::new((0..k).map(|i| Register::anonymous(format!("r{i}"), d)).collect()).expect("small layout")
}

fn permutation_group_average(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 8);
    let mut worst: f64 = 0.0;
    for k in 2..=4 {
        for d in 2..=3 {
            let l = register_layout(k, d);
            let perms = all_permutations(k);
            for _ in 0..5 {
                let rho = random_density(&l, &mut rng);
                let avg: f64 = perms
                    .iter()
                    .map(|p| Ok(trace(&(permutation_unitary(p, d)? * rho.matrix())).re))
                    .sum::<Result<f64>>()?
                    / perms.len() as f64;
                worst = worst.max((permutation_test_accept(&rho)? - avg).abs());
            }
        }
    }
    Ok(Verdict::within(worst, 1e-10, "deviation from group average"))
}

/// Random states, many of them close to the symmetric subspace.
fn near_symmetric(k: usize, d: usize, rng: &mut ChaCha8Rng, index: usize) -> Result<DensityOperator> {
    let l = register_layout(k, d);
    let base = random_density(&l, rng);
    let pi = symmetric_projector(k, d)?;
    let projected = pi.matrix() * base.matrix() * pi.matrix();
    let norm = trace(&projected).re;
    let t = if index % 10 == 0 { 0.0 } else { rng.gen::<f64>().powi(3) };
    let m = projected.unscale(norm).scale(1.0 - t) + base.matrix().scale(t);
    DensityOperator::new(l, m)
}

fn closeness(k: usize, d: usize, opts: &SelftestOptions, salt: u64) -> Result<(f64, f64)> {
    let mut rng = rng(opts, salt);
    let (mut worst, mut exact_worst): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for i in 0..200 {
        let rho = near_symmetric(k, d, &mut rng, i)?;
        let eps = (1.0 - permutation_test_accept(&rho)?).max(0.0);
        let marginals =
            (0..k).map(|a| partial_trace(&rho, &[format!("r{a}")])).collect::<Result<Vec<_>>>()?;
        for a in 0..k {
            for b in a + 1..k {
                let dist = trace_distance(&marginals[a], &marginals[b])?;
                worst = worst.max(dist - (2.0 * eps.sqrt() + eps));
                if eps <= 1e-9 {
                    exact_worst = exact_worst.max(max_abs(&(marginals[a].matrix() - marginals[b].matrix())));
                }
            }
        }
    }
    Ok((worst, exact_worst))
}

fn swap_closeness(opts: &SelftestOptions) -> Result<Verdict> {
    let (mut worst, mut exact) = (f64::NEG_INFINITY, 0.0f64);
    for d in 2..=3 {
        let (w, e) = closeness(2, d, opts, 9 + d as u64)?;
        worst = worst.max(w);
        exact = exact.max(e);
    }
    Ok(Verdict::new(
        worst <= 1e-9 && exact <= 1e-7,
        format!("D - (2 sqrt(eps) + eps): worst {worst:.3e}; marginal gap at eps = 0: {exact:.3e}"),
    ))
}

fn permutation_closeness(opts: &SelftestOptions) -> Result<Verdict> {
    let mut worst = f64::NEG_INFINITY;
    for k in 2..=4 {
        for d in 2..=3 {
            worst = worst.max(closeness(k, d, opts, 20 + (k * 4 + d) as u64)?.0);
        }
    }
    Ok(Verdict::within(worst, 1e-9, "D - (2 sqrt(eps) + eps)"))
}

fn projector_common_eigenspace(_: &SelftestOptions) -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for k in 2..=3 {
        for d in 2usize..=3 {
            let dim = d.pow(k as u32);
            let mut gram = CMatrix::zeros(dim, dim);
            for p in all_permutations(k) {
                let diff = permutation_unitary(&p, d)? - CMatrix::identity(dim, dim);
                gram += diff.adjoint() * &diff;
            }
            let (values, vectors) = eigh(&gram);
            let mut common = CMatrix::zeros(dim, dim);
            for (i, v) in values.iter().enumerate() {
                if v.abs() < 1e-9 {
                    let col = vectors.column(i);
                    common += col * col.adjoint();
                }
            }
            worst = worst.max(max_abs(&(common - symmetric_projector(k, d)?.into_matrix())));
        }
    }
    Ok(Verdict::within(worst, 1e-9, "projector deviation"))
}

fn swap_equals_permutation(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 30);
    let mut worst: f64 = 0.0;
    for d in 2..=4 {
        for _ in 0..20 {
            let rho = random_density(&register_layout(2, d), &mut rng);
            worst = worst.max((swap_test_accept(&rho)? - permutation_test_accept(&rho)?).abs());
        }
    }
    Ok(Verdict::within(worst, 1e-12, "deviation"))
}

fn schemes(max_n: usize, seed: u64) -> Result<Vec<FingerprintScheme>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push(FingerprintScheme::hadamard(n)?);
        out.push(FingerprintScheme::code_based_search(n, 16 * n, seed, 200)?);
    }
    Ok(out)
}

fn overlap_bound(opts: &SelftestOptions) -> Result<Verdict> {
    let mut worst = f64::NEG_INFINITY;
    for s in schemes(6, opts.seed)? {
        let states = BitString::all(s.n).map(|x| s.amplitudes(&x)).collect::<Result<Vec<_>>>()?;
        for a in 0..states.len() {
            for b in a + 1..states.len() {
                worst = worst.max(states[a].dotc(&states[b]).norm() - s.overlap_bound);
            }
        }
    }
    Ok(Verdict::within(worst, 1e-9, "|<h_x|h_y>| - delta"))
}

fn eq_one_way_check(opts: &SelftestOptions) -> Result<Verdict> {
    let (mut complete, mut sound): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for s in schemes(4, opts.seed)? {
        let p = eq_one_way(&s)?;
        for x in BitString::all(s.n) {
            for y in BitString::all(s.n) {
                let a = p.accept_probability(&x, &y)?;
                if x == y {
                    complete = complete.max((1.0 - a).abs());
                } else {
                    sound = sound.max(a - s.overlap_bound.powi(2));
                }
            }
        }
    }
    Ok(Verdict::new(
        complete <= 1e-12 && sound <= 1e-12,
        format!("completeness defect {complete:.3e}; soundness excess over delta^2 {sound:.3e}"),
    ))
}

/// Small pipelines from every builder, at r <= 3.
pub(crate) fn catalog(cap: usize) -> Result<Vec<ProtocolPipeline>> {
    let h1 = FingerprintScheme::hadamard(1)?;
    let h2 = FingerprintScheme::hadamard(2)?;
    let eq = |r, s: &FingerprintScheme, x: &str, y: &str| EqPathParams::new(r, s.clone(), bits(x), bits(y)).dim_cap(cap);
    let tree = |inputs: &[&str]| -> Result<TreeParams> {
        let topo = Topology::star(&inputs.iter().map(|s| bits(s)).collect::<Vec<_>>())?;
        let mut p = TreeParams::new(topo);
        p.dim_cap = cap;
        Ok(p)
    };
    let gt = |variant, x: &str, y: &str, index| {
        let mut p = GtParams::new(variant, 2, bits(x), bits(y), index);
        p.dim_cap = cap;
        p
    };
    let ham = exact_send_protocol(BooleanFunction::HamLe { d: 1 }, 2)?;
    Ok(vec![
        build_eq_path(&eq(2, &h1, "1", "1"))?,
        build_eq_path(&eq(2, &h1, "0", "1"))?,
        build_eq_path(&eq(3, &h2, "01", "10"))?,
        build_eq_path(&eq(3, &h1, "0", "0").final_test(FinalTest::Swap))?,
        build_eq_path(&eq(2, &h1, "1", "0").reps(2))?,
        build_gt(&gt(GtVariant::Gt, "10", "01", 0))?,
        build_gt(&gt(GtVariant::Ge, "01", "10", 1))?,
        build_eq_tree(&tree(&["1", "1", "0"])?, &h1)?,
        build_forall_f(&tree(&["00", "01", "11"])?, &ham)?.remove(0),
        build_from_oneway_qma(&OneWayQmaProtocol::IndexWitness { n: 2 }, 2, &bits("01"), &bits("11"), 1, cap)?,
    ])
}

fn spectrum_in_unit_interval(opts: &SelftestOptions) -> Result<Verdict> {
    let pipes = catalog(opts.dim_cap)?;
    let (worst, skipped) = cells(&pipes, |p| {
        let values = eigenvalues(compile(p)?.accept_operator()?.matrix());
        Ok(values.iter().map(|&v| (-v).max(v - 1.0)).fold(f64::NEG_INFINITY, f64::max))
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-9, "distance outside [0,1]"), skipped))
}

/// Acceptance computed forward on the full register space: prepare, apply every
/// channel to the state, then measure the product of the test elements.
pub(crate) fn forward_accept(p: &ProtocolPipeline, proof: &DensityOperator) -> Result<f64> {
    if !p.guards_pass() {
        return Ok(0.0);
    }
    let proof_ids: Vec<String> = proof.layout().registers().iter().map(|r| r.id.clone()).collect();
    let mut regs: Vec<Register> = proof.layout().registers().to_vec();
    let mut ket: Vec<C64> = vec![C64::new(1.0, 0.0)];
    for reg in p.registers.iter().filter(|r| !proof_ids.contains(&r.id)) {
        let prep = p
            .prepared
            .iter()
            .find(|s| s.register == reg.id)
            .ok_or_else(|| Error::param(format!("register `{}` has no prepared state", reg.id)))?;
        let v = prep.state.amplitudes()?;
        ket = ket.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        regs.push(reg.clone());
    }
    let full = RegisterLayout::with_cap(regs, p.dim_cap)?;
    let prepared = crate::qcore::CVector::from_vec(ket);
    let mut rho = DensityOperator::new(full.clone(), proof.matrix().kronecker(&(&prepared * prepared.adjoint())))?;
    let dim_of = |id: &str| p.dim_of(id);
    for ch in &p.channels {
        let ids = ch.channel.registers();
        let d: usize = ids.iter().map(|id| p.dim_of(id)).product::<Result<usize>>()?;
        let terms = ch
            .channel
            .branches(&dim_of)?
            .into_iter()
            .map(|(prob, action)| ChannelTerm { probability: prob, registers: ids.clone(), unitary: action.matrix(d) })
            .collect();
        rho = apply_channel(&MixingChannel::new(full.clone(), terms)?, &rho)?;
    }
    let dims = full.dims();
    let mut element = CMatrix::identity(full.total_dimension(), full.total_dimension());
    for t in &p.tests {
        let ids = t.test.registers();
        let plan = LocalPlan::new(&dims, &full.positions(&ids)?);
        element = plan.embed(&t.test.element(&dim_of)?) * element;
    }
    Ok(trace(&(element * rho.matrix())).re)
}

fn channel_adjointness(opts: &SelftestOptions) -> Result<Verdict> {
    let mut rng = rng(opts, 40);
    let pipes: Vec<ProtocolPipeline> =
        catalog(opts.dim_cap)?.into_iter().filter(|p| p.registers.iter().map(|r| r.dim).product::<usize>() <= 512).collect();
    let (worst, skipped) = cells(&pipes, |p| {
        let model = compile(p)?;
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let rho = random_density(model.proof_layout(), &mut rng);
            let forward = forward_accept(p, &rho)?;
            worst = worst.max((forward - model.accept_probability(&ProofState::Mixed(rho))?).abs());
        }
        // Per channel: tr(T L(rho)) = tr(L*(T) rho).
        let full = RegisterLayout::with_cap(p.registers.clone(), p.dim_cap)?;
        let dim_of = |id: &str| p.dim_of(id);
        for ch in &p.channels {
            let ids = ch.channel.registers();
            let d: usize = ids.iter().map(|id| p.dim_of(id)).product::<Result<usize>>()?;
            let terms = ch
                .channel
                .branches(&dim_of)?
                .into_iter()
                .map(|(prob, a)| ChannelTerm { probability: prob, registers: ids.clone(), unitary: a.matrix(d) })
                .collect();
            let channel = MixingChannel::new(full.clone(), terms)?;
            let rho = random_density(&full, &mut rng);
            let t = HermitianOperator::povm_element(full.clone(), random_povm_element(full.total_dimension(), &mut rng))?;
            let lhs = t.expectation(&apply_channel(&channel, &rho)?)?;
            let rhs = channel.apply_adjoint(&t)?.expectation(&rho)?;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-9, "forward vs compiled acceptance"), skipped))
}

fn tensor_disjointness(opts: &SelftestOptions) -> Result<Verdict> {
    let h1 = FingerprintScheme::hadamard(1)?;
    let first = build_eq_path(&EqPathParams::new(2, h1, bits("0"), bits("1")).dim_cap(opts.dim_cap))?;
    let mut g = GtParams::new(GtVariant::Gt, 2, bits("01"), bits("10"), 1);
    g.dim_cap = opts.dim_cap;
    let second = build_gt(&g)?;
    let mut joint = ProtocolPipeline::combine("pair", &[("a".into(), first.clone()), ("b".into(), second.clone())])?;
    joint.dim_cap = opts.dim_cap;
    let a = compile(&first)?.top_eigenpair()?.0;
    let b = compile(&second)?.top_eigenpair()?.0;
    let model = compile(&joint)?;
    let whole = model.top_eigenpair_unfactored(opts.seed)?.0;
    let factored = model.top_eigenpair()?.0;
    let worst = (whole - a * b).abs().max((factored - a * b).abs());
    Ok(Verdict::within(worst, 1e-8, &format!("lambda(A1 x A2) vs {a:.6} * {b:.6}")))
}

pub(crate) fn sampling_pairs(opts: &SelftestOptions) -> Result<Vec<(String, ProtocolPipeline, ProofState)>> {
    let mut rng = rng(opts, 50);
    let mut out = Vec::new();
    for (i, p) in catalog(opts.dim_cap)?.into_iter().enumerate() {
        let model = compile(&p)?;
        let first: ProofState = match p.honest_state() {
            Ok(s) if p.yes_instance != Some(false) => s.into(),
            _ => model.top_eigenpair()?.1.into(),
        };
        let second: ProofState = if i % 2 == 0 {
            haar_state(model.proof_layout(), &mut rng).into()
        } else {
            ProofState::Mixed(random_density(model.proof_layout(), &mut rng))
        };
        out.push((format!("{}#{i}/a", p.name), p.clone(), first));
        out.push((format!("{}#{i}/b", p.name), p, second));
    }
    Ok(out)
}

fn exact_vs_sampled(opts: &SelftestOptions) -> Result<Verdict> {
    let pairs = sampling_pairs(opts)?;
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, (name, p, proof)) in pairs.iter().enumerate() {
        let exact = compile(p)?.accept_probability(proof)?;
        let stats = simulate_sampled(p, proof, opts.shots, opts.seed.wrapping_add(k as u64))?;
        let sigma = (exact * (1.0 - exact) / opts.shots as f64).sqrt();
        worst = worst.max((stats.accept_frequency - exact).abs() / sigma.max(1e-12));
        if !stats.agrees_with(exact, 3.0) {
            misses.push(name.clone());
        }
    }
    Ok(Verdict::new(
        misses.is_empty(),
        format!("{} pairs at {} shots, worst {:.2} sigma; outside 3 sigma: {misses:?}", pairs.len(), opts.shots, worst),
    ))
}

fn completeness(opts: &SelftestOptions) -> Result<Verdict> {
    let cap = opts.dim_cap;
    let mut items: Vec<Box<dyn Fn() -> Result<f64>>> = Vec::new();
    for n in 1..=3 {
        let s = FingerprintScheme::hadamard(n)?;
        for r in [2, 3] {
            for x in BitString::all(n) {
                let s = s.clone();
                items.push(Box::new(move || honest_accept(&build_eq_path(&EqPathParams::new(r, s.clone(), x.clone(), x.clone()).dim_cap(cap))?)));
            }
        }
    }
    for x in ["0", "1"] {
        items.push(Box::new(move || {
            let mut p = TreeParams::new(Topology::star(&[bits(x), bits(x), bits(x)])?);
            p.dim_cap = cap;
            honest_accept(&build_eq_tree(&p, &FingerprintScheme::hadamard(1)?)?)
        }));
    }
    for x in BitString::all(2) {
        items.push(Box::new(move || {
            let mut p = RelayParams::new(4, x.clone(), x.clone());
            p.segment_length = Some(2);
            p.reps_per_segment = Some(2);
            p.dim_cap = cap;
            build_eq_relay(&p)?.honest_accept()
        }));
    }
    for variant in [GtVariant::Gt, GtVariant::Lt, GtVariant::Ge, GtVariant::Le] {
        for x in BitString::all(3) {
            for y in BitString::all(3) {
                if variant.eval(&x, &y) {
                    let (x, y) = (x.clone(), y.clone());
                    items.push(Box::new(move || {
                        let mut p = GtParams::honest(variant, 2, x.clone(), y.clone());
                        p.dim_cap = cap;
                        honest_accept(&build_gt(&p)?)
                    }));
                }
            }
        }
    }
    for (inputs, i, j) in [(["10", "01", "11"], 1, 2), (["00", "11", "01"], 3, 2), (["10", "10", "00"], 2, 1)] {
        items.push(Box::new(move || {
            let topo = Topology::star(&inputs.map(bits))?;
            let model = build_rv(&RvParams { topology: topo, i, j, reps: 1, dim_cap: cap })?;
            if !model.truth {
                return Err(Error::param("catalog RV instance is not a yes-instance"));
            }
            Ok(model.honest_value)
        }));
    }
    let (worst, skipped) = cells(&items, |f| Ok((1.0 - f()?).abs()))?;
    Ok(with_skips(Verdict::within(worst, 1e-9, &format!("{} honest runs, 1 - accept", items.len())), skipped))
}

fn eq_path_soundness(opts: &SelftestOptions) -> Result<Verdict> {
    let mut cases = Vec::new();
    for n in 1..=3 {
        for r in [2, 3] {
            for x in BitString::all(n) {
                for y in BitString::all(n) {
                    if x != y {
                        cases.push((n, r, x.clone(), y));
                    }
                }
            }
        }
    }
    let (worst, skipped) = cells(&cases, |(n, r, x, y)| {
        let p = build_eq_path(
            &EqPathParams::new(*r, FingerprintScheme::hadamard(*n)?, x.clone(), y.clone()).dim_cap(opts.dim_cap),
        )?;
        Ok(compile(&p)?.top_eigenpair()?.0 - path_soundness_bound(*r, 1).value)
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-9, &format!("{} no-instances, lambda - bound", cases.len())), skipped))
}

fn gt_soundness(opts: &SelftestOptions) -> Result<Verdict> {
    let mut cases = Vec::new();
    for r in [2, 3] {
        for variant in [GtVariant::Gt, GtVariant::Lt, GtVariant::Ge, GtVariant::Le] {
            for x in BitString::all(3) {
                for y in BitString::all(3) {
                    if !variant.eval(&x, &y) {
                        cases.push((r, variant, x.clone(), y));
                    }
                }
            }
        }
    }
    let (worst, skipped) = cells(&cases, |(r, variant, x, y)| {
        let mut p = GtParams::new(*variant, *r, x.clone(), y.clone(), 0);
        p.dim_cap = opts.dim_cap;
        Ok(gt_adversary_value(&p)?.0 - path_soundness_bound(*r, 1).value)
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-9, &format!("{} no-instances, max over indices - bound", cases.len())), skipped))
}

fn repetition_values(opts: &SelftestOptions) -> Result<Vec<f64>> {
    let s = FingerprintScheme::hadamard(2)?;
    (1..=3)
        .map(|k| {
            let p = build_eq_path(&EqPathParams::new(2, s.clone(), bits("01"), bits("10")).reps(k).dim_cap(opts.dim_cap))?;
            Ok(compile(&p)?.top_eigenpair_unfactored(opts.seed)?.0)
        })
        .collect()
}

fn repetition_multiplicative(opts: &SelftestOptions) -> Result<Verdict> {
    let v = repetition_values(opts)?;
    let worst = v.iter().enumerate().map(|(i, x)| (x - v[0].powi(i as i32 + 1)).abs()).fold(0.0, f64::max);
    Ok(Verdict::within(worst, 1e-8, &format!("lambda_k vs lambda_1^k, lambda_1 = {:.9}", v[0])))
}

fn repetition_monotone(opts: &SelftestOptions) -> Result<Verdict> {
    let v = repetition_values(opts)?;
    let worst = v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(Verdict::within(worst, 1e-9, "lambda_{k+1} - lambda_k"))
}

fn seesaw_opts(opts: &SelftestOptions) -> SeeSawOptions {
    SeeSawOptions { seed: opts.seed, ..SeeSawOptions::default() }
}

fn value_ordering(opts: &SelftestOptions) -> Result<Verdict> {
    let pipes: Vec<ProtocolPipeline> =
        catalog(opts.dim_cap)?.into_iter().filter(|p| p.proof_dimension() <= 256).collect();
    let (worst, skipped) = cells(&pipes, |p| {
        let model = compile(p)?;
        let ent = model.top_eigenpair()?.0;
        let sep = optimal_node_separable_value(&model, &seesaw_opts(opts))?.value;
        let honest = match p.honest_state() {
            Ok(s) => model.accept_probability(&s.into())?,
            Err(_) => 0.0,
        };
        Ok((sep - ent).max(honest - sep))
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-9, "ordering violation"), skipped))
}

fn brute_force_bound(opts: &SelftestOptions) -> Result<Verdict> {
    let pipes: Vec<ProtocolPipeline> =
        catalog(opts.dim_cap)?.into_iter().filter(|p| p.proof_dimension() <= 64).collect();
    let mut rng = rng(opts, 60);
    let (worst, skipped) = cells(&pipes, |p| {
        let model = compile(p)?;
        let (lambda, top) = model.top_eigenpair()?;
        let a = model.accept_operator()?.into_matrix();
        let value = |v: &crate::qcore::CVector| (v.adjoint() * &a * v)[(0, 0)].re;
        let groups: Vec<Vec<usize>> = p
            .node_grouping()
            .iter()
            .map(|(_, regs)| model.proof_layout().positions(regs))
            .collect::<Result<_>>()?;
        let dims = model.proof_layout().dims();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..opts.brute_force_samples {
            best = best.max(value(&haar_vector(a.nrows(), &mut rng)));
            let parts: Vec<crate::qcore::CVector> =
                groups.iter().map(|g| haar_vector(g.iter().map(|&k| dims[k]).product(), &mut rng)).collect();
            let slices: Vec<&[C64]> = parts.iter().map(|v| v.as_slice()).collect();
            best = best.max(value(&crate::qcore::kernel::kron_vectors(&slices).into()));
        }
        Ok((best - lambda).max((value(top.amplitudes()) - lambda).abs()))
    })?;
    Ok(with_skips(Verdict::within(worst, 1e-6, "random value above lambda_max"), skipped))
}

fn seesaw_determinism(opts: &SelftestOptions) -> Result<Verdict> {
    let p = build_eq_path(
        &EqPathParams::new(3, FingerprintScheme::hadamard(1)?, bits("0"), bits("1")).dim_cap(opts.dim_cap),
    )?;
    let model = compile(&p)?;
    let a = optimal_node_separable_value(&model, &seesaw_opts(opts))?;
    let b = optimal_node_separable_value(&model, &seesaw_opts(opts))?;
    let same = a.value.to_bits() == b.value.to_bits()
        && a.states.iter().zip(&b.states).all(|(s, t)| s.amplitudes() == t.amplitudes());
    Ok(Verdict::new(same, format!("value {:.12}", a.value)))
}

pub(crate) fn catalog_attacks(cap: usize) -> Result<Vec<AttackOutcome>> {
    AttackSpec::defaults().iter().map(|a| a.run(cap)).collect()
}

fn attacks_resampled(opts: &SelftestOptions) -> Result<Verdict> {
    let mut detail = Vec::new();
    let mut ok = true;
    for (k, out) in catalog_attacks(opts.dim_cap)?.iter().enumerate() {
        let p = out.report.accept_prob.unwrap_or(f64::NAN);
        let beats = out.report.beats_reference();
        let Some((freq, _)) = out.resample(opts.shots, opts.seed.wrapping_add(k as u64))? else {
            ok = false;
            detail.push(format!("{}: nothing to replay", out.report.attack));
            continue;
        };
        let sigma = (p * (1.0 - p) / opts.shots as f64).sqrt();
        let close = (freq - p).abs() <= 3.0 * sigma + 1e-9;
        ok &= close && beats;
        detail.push(format!("{}: exact {p:.6} sampled {freq:.6} reference {:?}", out.report.attack, out.report.reference_line));
    }
    Ok(Verdict::new(ok, detail.join("; ")))
}

/// `sum_j c(v_j) + m(v_i, v_{i+1})` counted straight from the pipeline.
pub(crate) fn path_cut_cost(p: &ProtocolPipeline, cut: usize) -> Result<usize> {
    let path = p.path.clone().ok_or_else(|| Error::param("not a path"))?;
    let proof: usize = p.proof_registers().iter().map(|r| qubits(r.dim)).sum();
    let mut sent = 0;
    for m in &p.messages {
        let crosses = (m.from == path[cut] && m.to == path[cut + 1]) || (m.from == path[cut + 1] && m.to == path[cut]);
        if crosses {
            for id in &m.registers {
                sent += qubits(p.dim_of(id)?);
            }
        }
    }
    Ok(proof + sent)
}

fn cut_invariance(opts: &SelftestOptions) -> Result<Verdict> {
    let s = FingerprintScheme::hadamard(2)?;
    let mut worst: f64 = 0.0;
    let mut cost_ok = true;
    let mut costs = BTreeMap::new();
    for (x, y) in [("01", "10"), ("11", "11")] {
        let p = build_eq_path(&EqPathParams::new(3, s.clone(), bits(x), bits(y)).dim_cap(opts.dim_cap))?;
        let model = compile(&p)?;
        let source = model.top_eigenpair()?.0;
        for i in 0..3 {
            let two = cut_to_two_party(&model, i)?;
            worst = worst.max((two.accept_value()? - source).abs());
            cost_ok &= two.total_cost() == path_cut_cost(&p, i)?;
            costs.insert(i, two.total_cost());
        }
    }
    Ok(Verdict::new(
        worst <= 1e-10 && cost_ok,
        format!("value deviation {worst:.3e}; costs per cut {costs:?}; accounting {}", if cost_ok { "matches" } else { "differs" }),
    ))
}

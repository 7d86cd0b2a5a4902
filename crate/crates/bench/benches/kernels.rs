use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use dqma_bench::{eq_no_instance, honest_proof, random_registers};
use dqma_core::adversary::{optimal_node_separable_value, SeeSawOptions};
use dqma_core::network::{compile, simulate_sampled};
use dqma_core::qcore::{fidelity, partial_trace, trace_distance};
use dqma_core::symmetric::{permutation_test_accept, swap_test_accept};

fn state_kernels(c: &mut Criterion) {
    let pair = random_registers(2, 4, 1);
    c.bench_function("swap_test d=4", |b| b.iter(|| swap_test_accept(black_box(&pair)).unwrap()));
    let triple = random_registers(3, 3, 2);
    c.bench_function("permutation_test k=3 d=3", |b| b.iter(|| permutation_test_accept(black_box(&triple)).unwrap()));
    let big = random_registers(4, 3, 3);
    c.bench_function("partial_trace 4x3 keep 2", |b| b.iter(|| partial_trace(black_box(&big), &["q0", "q2"]).unwrap()));
    let other = random_registers(4, 3, 4);
    c.bench_function("trace_distance dim 81", |b| b.iter(|| trace_distance(&big, &other).unwrap()));
    c.bench_function("fidelity dim 81", |b| b.iter(|| fidelity(&big, &other).unwrap()));
}

fn compile_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("eq_path");
    group.sample_size(20);
    for (r, n) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
        let p = eq_no_instance(r, n, 1);
        group.bench_with_input(BenchmarkId::new("compile", format!("r{r}n{n}")), &p, |b, p| {
            b.iter(|| compile(p).unwrap())
        });
        let model = compile(&p).unwrap();
        group.bench_with_input(BenchmarkId::new("top_eigenpair", format!("r{r}n{n}")), &model, |b, m| {
            b.iter(|| m.top_eigenpair().unwrap())
        });
    }
    let repeated = eq_no_instance(2, 1, 3);
    let model = compile(&repeated).unwrap();
    group.bench_function("top_eigenpair_unfactored r2n1k3", |b| b.iter(|| model.top_eigenpair_unfactored(0).unwrap()));
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let p = eq_no_instance(3, 2, 1);
    let proof = honest_proof(&p);
    let mut group = c.benchmark_group("sampling");
    group.sample_size(10);
    group.bench_function("simulate 10^4 shots r3n2", |b| b.iter(|| simulate_sampled(&p, &proof, 10_000, 5).unwrap()));
    group.finish();
}

fn seesaw(c: &mut Criterion) {
    let model = compile(&eq_no_instance(3, 1, 1)).unwrap();
    let opts = SeeSawOptions { restarts: 4, ..Default::default() };
    let mut group = c.benchmark_group("seesaw");
    group.sample_size(10);
    group.bench_function("node separable r3n1", |b| b.iter(|| optimal_node_separable_value(&model, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, state_kernels, compile_and_solve, sampling, seesaw);
criterion_main!(benches);

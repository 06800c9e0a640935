use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lclab_bench::{chain_model, dense_chain, pauli};
use lclab_core::bounds::{BoundInputs, BoundParams};
use lclab_core::dynamics::{commutator_norm, evolve_operator, Backend, Evolver, LanczosOpts};
use lclab_core::protocol::{run_pair, CouplingMode, ProtocolConfig};
use lclab_core::Pauli;
use std::hint::black_box;

fn evolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve_operator");
    for n in [4usize, 6, 8] {
        let h = dense_chain(n);
        let o = pauli(0, Pauli::X);
        for (name, backend) in [("eigen", Backend::Eigen), ("expm", Backend::Expm)] {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| evolve_operator(&h, &o, black_box(0.7), backend).unwrap())
            });
        }
    }
    g.finish();
}

fn commutators(c: &mut Criterion) {
    let mut g = c.benchmark_group("commutator_norm");
    g.sample_size(10);
    let h = dense_chain(8);
    let o_t = evolve_operator(&h, &pauli(0, Pauli::X), 1.0, Backend::Eigen).unwrap();
    let p = pauli(7, Pauli::Z);
    g.bench_function("dense_8", |b| b.iter(|| commutator_norm(&o_t, &p).unwrap()));
    let model = chain_model(12);
    let ev = Evolver::new(&model, &model.lattice.full(), 12).unwrap();
    let o = pauli(0, Pauli::X);
    let p = pauli(11, Pauli::Z);
    g.bench_function("matrix_free_12", |b| {
        b.iter(|| ev.commutator_norm_matrix_free(&o, black_box(1.0), &p, &LanczosOpts::scan()).unwrap())
    });
    g.finish();
}

fn protocol(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocol");
    for n in [2usize, 4, 8] {
        let cfg = ProtocolConfig::chain(n, n, 2 * n, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        g.bench_with_input(BenchmarkId::new("run_pair", 2 * n), &n, |b, _| b.iter(|| run_pair(&cfg, 20).unwrap()));
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let mut g = c.benchmark_group("bounds");
    g.sample_size(10);
    g.bench_function("assemble_d1_alpha4", |b| {
        b.iter(|| BoundParams::new(BoundInputs::new(1, black_box(4.0), 1.0, 1.0)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, evolve, commutators, protocol, bounds);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use meanfield_bench::{fock_basis, generators, ring};
use meanfield_core::fluctuation::{evolve_fock, propagate_quadratic, DEFAULT_LEAK_THRESHOLD};
use meanfield_core::fock::{coherent_minus_product_norm, weyl_apply};
use meanfield_core::hartree::solve;
use meanfield_core::manybody::{assemble, reduce, SectorState};
use meanfield_core::{FockState, ModeFunction};

fn manybody(c: &mut Criterion) {
    let f = ring(6);
    let mut g = c.benchmark_group("manybody");
    g.sample_size(10);
    for n in [4, 6, 8] {
        g.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, &n| {
            b.iter(|| assemble(n, &f.grid, &f.potential).unwrap())
        });
        let h = assemble(n, &f.grid, &f.potential).unwrap();
        g.bench_with_input(BenchmarkId::new("diagonalize", n), &n, |b, _| b.iter(|| h.propagator().unwrap()));
        let prop = h.propagator().unwrap();
        let psi = SectorState::product(h.basis(), &f.phi0).unwrap();
        g.bench_with_input(BenchmarkId::new("propagate_and_reduce", n), &n, |b, _| {
            b.iter(|| {
                let out = prop.propagate(&psi, 1.0).unwrap();
                reduce(&out, 2).unwrap()
            })
        });
    }
    g.finish();
}

fn hartree(c: &mut Criterion) {
    let f = ring(6);
    c.bench_function("hartree/1000_steps", |b| b.iter(|| solve(&f.phi0, &f.grid, &f.potential, 1e-3, 1000).unwrap()));
}

fn fock(c: &mut Criterion) {
    let mut g = c.benchmark_group("fock");
    let basis = fock_basis(3, 14);
    let vac = FockState::vacuum(&basis);
    let f = ModeFunction::from_real(&[0.3, -0.2, 0.4]);
    g.bench_function("weyl_apply_m3_n14", |b| b.iter(|| weyl_apply(black_box(&f), &vac).unwrap()));
    let e = ModeFunction::basis(1, 0);
    g.bench_function("product_coherent_n12", |b| b.iter(|| coherent_minus_product_norm(&e, black_box(12)).unwrap()));
    g.finish();
}

fn fluctuation(c: &mut Criterion) {
    let gens = generators(8, 0.5);
    let mut g = c.benchmark_group("fluctuation");
    g.sample_size(10);
    let at = gens.at(0.25).unwrap();
    let basis = fock_basis(3, 12);
    let l2 = at.l2();
    let psi = FockState::vacuum(&basis);
    g.bench_function("l2_apply_n12", |b| b.iter(|| l2.apply(black_box(&psi))));
    g.bench_function("bogoliubov_t0.5", |b| b.iter(|| propagate_quadratic(&gens, 0.5).unwrap()));
    g.bench_function("fock_flow_t0.5_n12", |b| {
        b.iter(|| evolve_fock(&gens, &psi, 0.0, 0.5, DEFAULT_LEAK_THRESHOLD, |_, _| {}).unwrap())
    });
    g.finish();
}

criterion_group!(benches, manybody, hartree, fock, fluctuation);
criterion_main!(benches);

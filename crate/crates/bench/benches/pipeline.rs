//! Benchmarks for the hot paths of the density-shift pipeline: overlap
//! tables, coupling construction, block eigensolves, detuning sweeps with
//! reused eigenvectors, and whole Monte-Carlo rows.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use mbsed_core::couplings::{build_coupling_tables, CouplingTables, RabiModel};
use mbsed_core::evolution::DarkEigen;
use mbsed_core::hamiltonian::{build_full_hamiltonian, dark_blocks};
use mbsed_core::sampler::{draw_ensemble, partition_table};
use mbsed_core::spectroscopy::run_ramsey;
use mbsed_core::{Config, EigenSystem, OverlapCache, SliceOverlaps, StateVector};

fn config(n: usize, samples: usize) -> Config {
    let text = format!(
        "trap.nu_z_hz = 66e3\n\
         trap.nu_r_hz = 250.0\n\
         trap.depth_zquanta = 5.0\n\
         trap.misalignment_rad = 0.010\n\
         atoms.count = {n}\n\
         atoms.temperature_z_uk = 3.0\n\
         atoms.temperature_r_uk = 3.0\n\
         atoms.a_eg_minus_a0 = 68.0\n\
         atoms.b_gg_a0 = 73.8\n\
         atoms.b_ee_a0 = 150.19\n\
         atoms.b_eg_a0 = 192.34\n\
         protocol.kind = ramsey\n\
         protocol.bare_rabi_hz = 500.0\n\
         protocol.t1_s = 0.0005\n\
         protocol.dark_time_s = 0.08\n\
         protocol.detuning_min_hz = -3.0\n\
         protocol.detuning_max_hz = 3.0\n\
         protocol.detuning_points = 41\n\
         protocol.spin_sectors = 0\n\
         mc.min_samples = {samples}\n\
         mc.max_samples = {samples}\n\
         mc.target_stderr_hz = 1e-12\n\
         mc.master_seed = 7\n"
    );
    Config::from_str_validated(&text).unwrap()
}

/// One sampled coupling table at the benchmark's reference settings.
fn sample_tables(cfg: &Config) -> CouplingTables {
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
    let slice = SliceOverlaps::new(table.max_index).unwrap();
    let rabi = RabiModel::new(&cfg.trap, &cfg.constants, 500.0, table.max_index);
    let ens = draw_ensemble(&table, cfg.atoms.count, 7, 0).unwrap();
    build_coupling_tables(&ens.states, &cfg.atoms, &cfg.trap, &cfg.constants, &slice, &rabi)
        .unwrap()
}

fn bench_overlaps(c: &mut Criterion) {
    c.bench_function("overlap_recursions_cold_to_12", |b| {
        b.iter_batched(
            OverlapCache::new,
            |cache| {
                let mut acc = 0.0;
                for n1 in 0..=12u32 {
                    for n2 in 0..=12u32 {
                        acc += cache.s(n1, n2, n2, n1).unwrap();
                        acc += cache.p(n1, n2, n2, n1).unwrap();
                    }
                }
                acc
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("overlap_slice_tables_512", |b| {
        b.iter(|| SliceOverlaps::new(black_box(512)).unwrap())
    });
}

fn bench_couplings(c: &mut Criterion) {
    let cfg = config(5, 30);
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
    let slice = SliceOverlaps::new(table.max_index).unwrap();
    let rabi = RabiModel::new(&cfg.trap, &cfg.constants, 500.0, table.max_index);
    let ens = draw_ensemble(&table, 5, 7, 0).unwrap();
    c.bench_function("coupling_tables_5_atoms", |b| {
        b.iter(|| {
            build_coupling_tables(
                black_box(&ens.states),
                &cfg.atoms,
                &cfg.trap,
                &cfg.constants,
                &slice,
                &rabi,
            )
            .unwrap()
        })
    });
}

fn bench_eigensolves(c: &mut Criterion) {
    for n in [6usize, 10] {
        let cfg = config(n, 30);
        let tables = sample_tables(&cfg);
        let mut group = c.benchmark_group("dark_block_eigensolve");
        group.sample_size(10);
        group.bench_function(format!("{n}_atoms"), |b| {
            b.iter(|| DarkEigen::new(&dark_blocks(black_box(&tables))).unwrap())
        });
        group.finish();
    }
}

fn bench_detuning_sweep(c: &mut Criterion) {
    let cfg = config(6, 30);
    let tables = sample_tables(&cfg);
    let detunings: Vec<f64> = (0..41).map(|i| -3.0 + 0.15 * i as f64).collect();
    let dark = DarkEigen::new(&dark_blocks(&tables)).unwrap();
    let psi = StateVector::ground(1 << 6);

    c.bench_function("dark_sweep_reused_eigenvectors_41_points", |b| {
        b.iter(|| dark.sweep(black_box(&psi), 0.08, &detunings))
    });
    c.bench_function("dark_sweep_rediagonalized_41_points", |b| {
        b.iter(|| {
            detunings
                .iter()
                .map(|&d| {
                    EigenSystem::from_hamiltonian(
                        &build_full_hamiltonian(&tables, d, false).unwrap(),
                    )
                    .unwrap()
                    .evolve(&psi, 0.08)
                })
                .collect::<Vec<_>>()
        })
    });
}

fn bench_rabi_point(c: &mut Criterion) {
    let cfg = config(5, 30);
    let tables = sample_tables(&cfg);
    let psi = StateVector::ground(1 << 5);
    c.bench_function("driven_eigensolve_and_pulse_5_atoms", |b| {
        b.iter(|| {
            let h = build_full_hamiltonian(black_box(&tables), 1.3, true).unwrap();
            EigenSystem::from_hamiltonian(&h).unwrap().evolve(&psi, 0.05)
        })
    });
}

fn bench_ramsey_row(c: &mut Criterion) {
    let cfg = config(5, 30);
    let mut group = c.benchmark_group("ramsey_row");
    group.sample_size(10);
    group.bench_function("5_atoms_30_samples_41_points", |b| {
        b.iter(|| run_ramsey(black_box(&cfg), &[0.0005]).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_overlaps,
    bench_couplings,
    bench_eigensolves,
    bench_detuning_sweep,
    bench_rabi_point,
    bench_ramsey_row
);
criterion_main!(benches);

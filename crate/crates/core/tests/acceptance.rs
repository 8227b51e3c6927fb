//! Acceptance gate for the simulator core: one test per release criterion,
//! each printing a verdict line with the measured margin next to its pinned
//! tolerance. Run `cargo test --test acceptance -- --nocapture` to see every
//! line; any FAIL also fails the suite.

use mbsed_core::calibration::{
    fit_objective, fit_scattering_lengths, DataPoint, FitOptions, ShiftDataset,
};
use mbsed_core::couplings::{build_coupling_tables, RabiModel};
use mbsed_core::evolution::{project_state, pulse_product_state, DarkEigen};
use mbsed_core::hamiltonian::{
    build_full_hamiltonian, collective_dark_phases, collective_hamiltonian, dark_blocks,
    s_squared_dense, spin_sector_basis, states_by_excitation, sx_dense, sy_antisym_dense,
    sz_dense,
};
use mbsed_core::hermite::OverlapQuadrature;
use mbsed_core::sampler::{draw_ensemble, partition_table};
use mbsed_core::spectroscopy::{
    analytic_ramsey_shift, excitation_scan_t1, extract_shift, run_collective, run_rabi,
    run_ramsey, t1_for_excitation, thermal_mean_rabi_hz, zero_crossing, CollectiveRows,
    RabiPulse,
};
use mbsed_core::{Config, EigenSystem, OverlapCache, SliceOverlaps, StateVector};
use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::time::Instant;

const SEED: u64 = 20260814;

/// Prints the verdict line for one criterion and fails the test on FAIL.
fn report(id: usize, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:2} {verdict}: {detail}");
    assert!(pass, "criterion {id}: {detail}");
}

/// Reference trap and interaction settings with a fixed sample count; the
/// protocol block varies per criterion.
fn build_config(
    kind: &str,
    n: usize,
    t_z: f64,
    t_r: f64,
    rabi_hz: f64,
    dark_s: f64,
    half_grid_hz: f64,
    points: usize,
    samples: usize,
) -> Config {
    let dark_line = if dark_s > 0.0 {
        format!("protocol.dark_time_s = {dark_s}\n")
    } else {
        String::new()
    };
    let text = format!(
        "trap.nu_z_hz = 66e3\n\
         trap.nu_r_hz = 250.0\n\
         trap.depth_zquanta = 5.0\n\
         trap.misalignment_rad = 0.010\n\
         atoms.count = {n}\n\
         atoms.temperature_z_uk = {t_z}\n\
         atoms.temperature_r_uk = {t_r}\n\
         atoms.a_eg_minus_a0 = 68.0\n\
         atoms.b_gg_a0 = 73.8\n\
         atoms.b_ee_a0 = 150.19\n\
         atoms.b_eg_a0 = 192.34\n\
         protocol.kind = {kind}\n\
         protocol.bare_rabi_hz = {rabi_hz}\n\
         {dark_line}\
         protocol.detuning_min_hz = -{half_grid_hz}\n\
         protocol.detuning_max_hz = {half_grid_hz}\n\
         protocol.detuning_points = {points}\n\
         protocol.spin_sectors = 0\n\
         mc.min_samples = {samples}\n\
         mc.max_samples = {samples}\n\
         mc.target_stderr_hz = 1e-12\n\
         mc.master_seed = {SEED}\n"
    );
    Config::from_str_validated(&text).unwrap()
}

/// Coefficient of determination of a least-squares line through (xs, ys).
fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let f = my + slope * (x - mx);
            (y - f) * (y - f)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn criterion_01_overlap_recursions_match_quadrature() {
    let start = Instant::now();
    let cache = OverlapCache::new();
    let quad = OverlapQuadrature::for_max_index(15).unwrap();
    let mut worst = 0.0f64;
    for n1 in 0..=15u32 {
        for n2 in 0..=15u32 {
            for n3 in 0..=15u32 {
                for n4 in 0..=15u32 {
                    let idx = [n1 as usize, n2 as usize, n3 as usize, n4 as usize];
                    let pairs = [
                        (cache.s(n1, n2, n3, n4).unwrap(), quad.s_integral(idx)),
                        (cache.p(n1, n2, n3, n4).unwrap(), quad.p_integral(idx)),
                    ];
                    for (got, want) in pairs {
                        let tol = (1e-9 * want.abs()).max(1e-14);
                        worst = worst.max((got - want).abs() / tol);
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst <= 1.0 && secs < 60.0,
        &format!(
            "131072 overlap integrals up to index 15, worst deviation at {worst:.3} of \
             tolerance (rel 1e-9, abs floor 1e-14), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_02_overlap_anchor_values() {
    let cache = OverlapCache::new();
    let s0 = cache.s(0, 0, 0, 0).unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let anchor_err = (s0 - target).abs();
    let mut odd_exact = true;
    for n1 in 0..=6u32 {
        for n2 in 0..=6u32 {
            for n3 in 0..=6u32 {
                for n4 in 0..=6u32 {
                    if (n1 + n2 + n3 + n4) % 2 == 1 {
                        odd_exact &= cache.s(n1, n2, n3, n4).unwrap() == 0.0;
                    }
                }
            }
        }
    }
    let p0_exact = cache.p(0, 0, 0, 0).unwrap() == 0.0;
    report(
        2,
        anchor_err <= 1e-14 && odd_exact && p0_exact,
        &format!(
            "s(0,0,0,0) off 1/sqrt(2 pi) by {anchor_err:.1e} (tol 1e-14), odd-parity s \
             exactly zero: {odd_exact}, p(0,0,0,0) exactly zero: {p0_exact}"
        ),
    );
}

#[test]
fn criterion_03_thermal_sampler_statistics() {
    let start = Instant::now();
    let cfg = build_config("ramsey", 2, 3.0, 3.0, 500.0, 0.08, 3.0, 41, 30);
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
    let ensembles = 100_000u64;
    let mut counts: std::collections::HashMap<(u32, u32), u64> = std::collections::HashMap::new();
    for i in 0..ensembles {
        for s in &draw_ensemble(&table, 2, SEED, i).unwrap().states {
            *counts.entry((s.n_z, s.n_r())).or_insert(0) += 1;
        }
    }
    let total = (2 * ensembles) as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0f64, 0.0f64);
    for &(nz, nr, p) in &table.entries {
        exp_acc += p * total;
        obs_acc += counts.get(&(nz, nr)).copied().unwrap_or(0) as f64;
        if exp_acc >= 8.0 {
            bins.push((exp_acc, obs_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    if exp_acc > 0.0 {
        let last = bins.last_mut().unwrap();
        last.0 += exp_acc;
        last.1 += obs_acc;
    }
    let chi2: f64 = bins.iter().map(|&(e, o)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let crit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99);

    let cold = build_config("ramsey", 5, 1.0, 1.0, 500.0, 0.08, 3.0, 41, 30);
    let cold_table = partition_table(&cold.trap, &cold.atoms, &cold.constants).unwrap();
    let cold_runs = 20_000u64;
    let mut rejected = 0u64;
    for i in 0..cold_runs {
        rejected += draw_ensemble(&cold_table, 5, SEED ^ 0x9e37_79b9, i).unwrap().rejections;
    }
    let rate = rejected as f64 / (rejected + cold_runs) as f64;
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        chi2 < crit && rate < 5e-3 && secs < 60.0,
        &format!(
            "band occupation chi-square {chi2:.1} < {crit:.1} at significance 0.01 \
             ({dof} dof, 2e5 draws at 3 uK), Pauli rejection rate {rate:.2e} < 5e-3 \
             for 5 atoms at 1 uK, {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_04_spin_model_integrity() {
    let start = Instant::now();
    let cfg = build_config("ramsey", 6, 3.0, 3.0, 500.0, 0.08, 3.0, 41, 30);
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
    let slice = SliceOverlaps::new(table.max_index).unwrap();
    let rabi = RabiModel::new(&cfg.trap, &cfg.constants, 500.0, table.max_index);
    let deltas = [-2.0, -0.5, 0.0, 1.0, 3.0];
    let mut worst_herm = 0.0f64;
    let mut worst_norm = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut worst_casimir = 0.0f64;
    let mut worst_union = 0.0f64;
    let mut worst_reuse = 0.0f64;
    for n in 2..=6usize {
        let ens = draw_ensemble(&table, n, SEED, n as u64).unwrap();
        let tables =
            build_coupling_tables(&ens.states, &cfg.atoms, &cfg.trap, &cfg.constants, &slice, &rabi)
                .unwrap();
        let dim = 1usize << n;

        let driven = build_full_hamiltonian(&tables, 0.7, true).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                worst_herm = worst_herm.max((driven.matrix[(r, c)] - driven.matrix[(c, r)]).abs());
            }
        }

        let eig = EigenSystem::from_hamiltonian(&driven).unwrap();
        let psi1 = eig.evolve(&StateVector::ground(dim), 0.0008);
        let blocks = dark_blocks(&tables);
        let dark = DarkEigen::new(&blocks).unwrap();
        let psi2 = dark.evolve(&psi1, 0.08, 0.7);
        worst_norm = worst_norm.max((psi2.norm_sq() - 1.0).abs());
        for group in states_by_excitation(n) {
            let before: f64 = group.iter().map(|&k| psi1.probability(k)).sum();
            let after: f64 = group.iter().map(|&k| psi2.probability(k)).sum();
            worst_mass = worst_mass.max((after - before).abs());
        }

        let mut pair_sum = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair_sum += sx_dense(n, i) * sx_dense(n, j);
                    pair_sum += sz_dense(n, i) * sz_dense(n, j);
                    pair_sum -= sy_antisym_dense(n, i) * sy_antisym_dense(n, j);
                }
            }
        }
        let casimir = s_squared_dense(n) - DMatrix::identity(dim, dim) * (0.75 * n as f64);
        worst_casimir = worst_casimir.max((&pair_sum - &casimir).abs().max());

        let dark_dense = build_full_hamiltonian(&tables, 0.0, false).unwrap();
        let mut full_spec: Vec<f64> = nalgebra::SymmetricEigen::new(dark_dense.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        let mut union: Vec<f64> = blocks
            .blocks
            .iter()
            .flat_map(|b| {
                nalgebra::SymmetricEigen::new(b.matrix.clone())
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect::<Vec<f64>>()
            })
            .collect();
        full_spec.sort_by(f64::total_cmp);
        union.sort_by(f64::total_cmp);
        for (a, b) in full_spec.iter().zip(&union) {
            worst_union = worst_union.max((a - b).abs());
        }

        let swept = dark.sweep(&psi1, 0.08, &deltas);
        for (state, &delta) in swept.iter().zip(&deltas) {
            let rebuilt = EigenSystem::from_hamiltonian(
                &build_full_hamiltonian(&tables, delta, false).unwrap(),
            )
            .unwrap()
            .evolve(&psi1, 0.08);
            for k in 0..dim {
                let dr = state.re[k] - rebuilt.re[k];
                let di = state.im[k] - rebuilt.im[k];
                worst_reuse = worst_reuse.max(dr.hypot(di));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_herm <= 1e-12
        && worst_norm < 1e-10
        && worst_mass <= 1e-12
        && worst_casimir <= 1e-12
        && worst_union <= 1e-10
        && worst_reuse <= 1e-10
        && secs < 60.0;
    report(
        4,
        pass,
        &format!(
            "2..6 atoms: hermiticity {worst_herm:.1e}, norm drift {worst_norm:.1e} (tol 1e-10), \
             dark magnetization drift {worst_mass:.1e} (tol 1e-12), pair-sum Casimir identity \
             {worst_casimir:.1e} (tol 1e-12), block spectrum union {worst_union:.1e} (tol 1e-10), \
             reused-eigenvector sweep {worst_reuse:.1e} (tol 1e-10), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_05_sector_truncation_leakage() {
    let start = Instant::now();
    let text = "trap.nu_z_hz = 80e3\n\
                trap.nu_r_hz = 450.0\n\
                trap.depth_zquanta = 5.0\n\
                trap.misalignment_rad = 0.005\n\
                atoms.count = 12\n\
                atoms.temperature_z_uk = 1.5\n\
                atoms.temperature_r_uk = 3.0\n\
                atoms.a_eg_minus_a0 = 68.0\n\
                atoms.b_gg_a0 = 73.8\n\
                atoms.b_ee_a0 = 150.19\n\
                atoms.b_eg_a0 = 192.34\n\
                protocol.kind = ramsey\n\
                protocol.bare_rabi_hz = 500.0\n\
                protocol.dark_time_s = 0.08\n\
                protocol.detuning_min_hz = -3.0\n\
                protocol.detuning_max_hz = 3.0\n\
                protocol.detuning_points = 41\n\
                protocol.spin_sectors = 2\n\
                mc.min_samples = 30\n\
                mc.max_samples = 30\n\
                mc.target_stderr_hz = 1e-12\n\
                mc.master_seed = 20260814\n";
    let cfg = Config::from_str_validated(text).unwrap();
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
    let slice = SliceOverlaps::new(table.max_index).unwrap();
    let rabi = RabiModel::new(&cfg.trap, &cfg.constants, 500.0, table.max_index);
    let basis = spin_sector_basis(12, 1).unwrap();
    let tau = cfg.protocol.dark_time_s;
    let mut worst = 0.0f64;
    for sample in 0..3u64 {
        let ens = draw_ensemble(&table, 12, SEED, sample).unwrap();
        let tables =
            build_coupling_tables(&ens.states, &cfg.atoms, &cfg.trap, &cfg.constants, &slice, &rabi)
                .unwrap();
        let dark = DarkEigen::new(&dark_blocks(&tables)).unwrap();
        for pe in [0.2, 0.5, 0.8] {
            let t1 = t1_for_excitation(pe, tables.mean_rabi_hz()).unwrap();
            let psi0 = pulse_product_state(&tables.rabi_hz, 0.0, t1);
            for k in 0..=10 {
                let psi = dark.evolve(&psi0, tau * k as f64 / 10.0, 0.0);
                let coords = project_state(&basis, &psi);
                worst = worst.max(1.0 - coords.norm_sq());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        5,
        worst < 1e-2 && secs < 300.0,
        &format!(
            "12 atoms, top two spin sectors: peak leakage {worst:.2e} < 1e-2 over 3 samples, \
             3 pulse areas, 11 dark times, {secs:.1} s"
        ),
    );
}

/// Ramsey shift of the deterministic collective ladder at one pulse area,
/// extracted from a computed spectrum exactly as the pipeline does.
fn ladder_shift(n: usize, omega_hz: f64, xbar: f64, cbar: f64, t1: f64, tau: f64) -> f64 {
    let t2 = 0.25 / omega_hz;
    let grid: Vec<f64> = (0..121).map(|i| -3.0 + i as f64 * 0.05).collect();
    let mut pes = Vec::with_capacity(grid.len());
    for &delta in &grid {
        let eig = EigenSystem::new(collective_hamiltonian(n, omega_hz, 0.0, 0.0, delta)).unwrap();
        let psi1 = eig.evolve(&StateVector::ground(n + 1), t1);
        let mut psid = psi1.clone();
        for (q, &w) in collective_dark_phases(n, xbar, cbar, delta).iter().enumerate() {
            let (s, c) = (-w * tau).sin_cos();
            psid.re[q] = psi1.re[q] * c - psi1.im[q] * s;
            psid.im[q] = psi1.re[q] * s + psi1.im[q] * c;
        }
        let psi2 = eig.evolve(&psid, t2);
        pes.push((0..=n).map(|q| psi2.probability(q) * q as f64).sum::<f64>() / n as f64);
    }
    extract_shift(&grid, &pes, None).unwrap().shift_hz
}

#[test]
fn criterion_06_collective_zero_shift_fraction() {
    let start = Instant::now();
    let n = 5usize;
    let tau = 0.08;
    let (bee, beg, bgg) = (150.19f64, 192.34f64, 73.8f64);
    let volume_ratio =
        (bee.powi(3) - bgg.powi(3)) / (bee.powi(3) - 2.0 * beg.powi(3) + bgg.powi(3));
    let mut crossings = Vec::new();
    let mut ratio_err = 0.0f64;
    for t in [1.0, 5.0] {
        let cfg = build_config("collective-ramsey", n, t, t, 500.0, tau, 3.0, 41, 30);
        let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants).unwrap();
        let slice = SliceOverlaps::new(table.max_index).unwrap();
        let rabi = RabiModel::new(&cfg.trap, &cfg.constants, 500.0, table.max_index);
        let (mut omega_t, mut xbar_t, mut cbar_t) = (0.0, 0.0, 0.0);
        let samples = 1500u64;
        for i in 0..samples {
            let ens = draw_ensemble(&table, n, SEED, i).unwrap();
            let tables = build_coupling_tables(
                &ens.states,
                &cfg.atoms,
                &cfg.trap,
                &cfg.constants,
                &slice,
                &rabi,
            )
            .unwrap();
            let (o, x, c) = tables.collective_params();
            omega_t += o;
            xbar_t += x;
            cbar_t += c;
        }
        omega_t /= samples as f64;
        xbar_t /= samples as f64;
        cbar_t /= samples as f64;
        ratio_err = ratio_err.max((cbar_t / xbar_t - volume_ratio).abs());

        let pes_ideal: Vec<f64> = (0..=12).map(|k| 0.30 + 0.05 * k as f64).collect();
        let shifts: Vec<f64> = pes_ideal
            .iter()
            .map(|&pe| {
                let t1 = t1_for_excitation(pe, omega_t).unwrap();
                ladder_shift(n, omega_t, xbar_t, cbar_t, t1, tau)
            })
            .collect();
        crossings.push(zero_crossing(&pes_ideal, &shifts).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = crossings.iter().all(|p| (p - 0.643).abs() <= 0.005)
        && (crossings[0] - crossings[1]).abs() <= 0.003
        && ratio_err <= 1e-12
        && secs < 60.0;
    report(
        6,
        pass,
        &format!(
            "zero-shift excitation {:.4} at 1 uK, {:.4} at 5 uK from thermally averaged \
             couplings (band 0.643 +- 0.005, temperature spread tol 0.003), sampled C/X off \
             the volume ratio {volume_ratio:.5} by {ratio_err:.1e}, {secs:.1} s",
            crossings[0], crossings[1]
        ),
    );
}

#[test]
fn criterion_07_analytic_shift_matches_ladder() {
    let start = Instant::now();
    let n = 5usize;
    let omega = 2000.0;
    let tau = 0.1;
    let t2 = 1.0 / (4.0 * omega);
    let grid: Vec<f64> = (0..121).map(|i| -3.0 + i as f64 * 0.05).collect();
    let mut worst = 0.0f64;
    for xt in [0.06, 0.12, 0.18, 0.24, 0.30] {
        let xbar = xt / tau;
        let cbar = -0.3 * xbar;
        for theta in [0.3, 0.6, 0.9, 1.2, 1.5] {
            let t1 = theta / (2.0 * std::f64::consts::PI * omega);
            let analytic = analytic_ramsey_shift(omega, xbar, cbar, n, t1, tau);
            let mut pes = Vec::with_capacity(grid.len());
            for &delta in &grid {
                let eig =
                    EigenSystem::new(collective_hamiltonian(n, omega, xbar, cbar, delta)).unwrap();
                let psi1 = eig.evolve(&StateVector::ground(n + 1), t1);
                let mut psid = psi1.clone();
                for (q, &w) in collective_dark_phases(n, xbar, cbar, delta).iter().enumerate() {
                    let (s, c) = (-w * tau).sin_cos();
                    psid.re[q] = psi1.re[q] * c - psi1.im[q] * s;
                    psid.im[q] = psi1.re[q] * s + psi1.im[q] * c;
                }
                let psi2 = eig.evolve(&psid, t2);
                let pe: f64 =
                    (0..=n).map(|q| psi2.probability(q) * q as f64).sum::<f64>() / n as f64;
                pes.push(pe);
            }
            let numeric = extract_shift(&grid, &pes, None).unwrap().shift_hz;
            worst = worst.max((numeric - analytic).abs() / analytic.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        7,
        worst < 0.01 && secs < 60.0,
        &format!(
            "closed form vs ladder peak extraction on a 5 x 5 grid of pulse areas and dark \
             phases: worst relative deviation {worst:.2e} < 1e-2, {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_08_shift_scales_linearly_with_atom_number() {
    let start = Instant::now();
    let xs = [3.0, 4.0, 5.0, 6.0];
    let mut shifts = Vec::new();
    let mut errs = Vec::new();
    for n in 3..=6usize {
        let cfg = build_config("ramsey", n, 3.0, 3.0, 500.0, 0.08, 3.0, 41, 500);
        let t1 = t1_for_excitation(0.2, thermal_mean_rabi_hz(&cfg).unwrap()).unwrap();
        let rows = run_ramsey(&cfg, &[t1]).unwrap();
        shifts.push(rows[0].shift.shift_hz);
        errs.push(rows[0].shift.shift_stderr_hz);
    }
    let r2 = r_squared(&xs, &shifts);
    let mut worst_sigma = 0.0f64;
    for a in 0..4 {
        for b in a + 1..4 {
            let (ra, rb) = (shifts[a] / (xs[a] - 1.0), shifts[b] / (xs[b] - 1.0));
            let sig = (errs[a] / (xs[a] - 1.0)).hypot(errs[b] / (xs[b] - 1.0));
            worst_sigma = worst_sigma.max((ra - rb).abs() / sig);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        8,
        r2 > 0.99 && worst_sigma <= 2.0 && secs < 600.0,
        &format!(
            "shift vs atom number 3..6 at 500 samples: R^2 {r2:.4} > 0.99, per-pair collapse \
             of shift/(N-1) within {worst_sigma:.2} combined bootstrap sigma (tol 2), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_09_rabi_drive_strength_independence() {
    let start = Instant::now();
    let pulses: Vec<RabiPulse> = (1..=6).map(|k| RabiPulse::PiFraction(k as f64 / 8.0)).collect();
    let run_at = |omega: f64| {
        let half = (1.6 * omega).max(0.6);
        let cfg = build_config("rabi", 5, 3.0, 3.0, omega, 0.0, half, 49, 300);
        run_rabi(&cfg, &pulses).unwrap()
    };
    let strong: Vec<_> = [2.0, 5.0, 10.0].iter().map(|&w| run_at(w)).collect();
    let weak = run_at(0.2);
    let mut agree = 0.0f64;
    for a in 0..3 {
        for b in a + 1..3 {
            for i in 0..pulses.len() {
                let d = (strong[a][i].shift.shift_hz - strong[b][i].shift.shift_hz).abs();
                let s = strong[a][i]
                    .shift
                    .shift_stderr_hz
                    .hypot(strong[b][i].shift.shift_stderr_hz);
                agree = agree.max(d / s);
            }
        }
    }
    let mut deviate = 0.0f64;
    for i in 0..pulses.len() {
        let d = (weak[i].shift.shift_hz - strong[2][i].shift.shift_hz).abs();
        let s = weak[i].shift.shift_stderr_hz.hypot(strong[2][i].shift.shift_stderr_hz);
        deviate = deviate.max(d / s);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        9,
        agree <= 3.0 && deviate > 3.0 && secs < 600.0,
        &format!(
            "drives of 2, 5, 10 Hz agree within {agree:.2} combined sigma (tol 3) over six \
             pulse areas; 0.2 Hz drive deviates by {deviate:.1} sigma (require > 3), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_10_full_vs_collective_by_temperature() {
    let start = Instant::now();
    let compare = |t: f64| {
        let full_cfg = build_config("ramsey", 5, t, t, 500.0, 0.08, 3.0, 41, 400);
        let coll_cfg = build_config("collective-ramsey", 5, t, t, 500.0, 0.08, 3.0, 41, 400);
        let t1s = excitation_scan_t1(&full_cfg, 5).unwrap();
        let full = run_ramsey(&full_cfg, &t1s).unwrap();
        let coll = run_collective(&coll_cfg, CollectiveRows::Ramsey(&t1s)).unwrap();
        (0..t1s.len())
            .map(|i| {
                (full[i].shift.shift_hz - coll[i].shift.shift_hz).abs()
                    / full[i].shift.shift_stderr_hz.hypot(coll[i].shift.shift_stderr_hz)
            })
            .fold(0.0f64, f64::max)
    };
    let cold = compare(1.0);
    let hot = compare(5.0);
    let secs = start.elapsed().as_secs_f64();
    report(
        10,
        cold <= 3.0 && hot > 3.0 && secs < 900.0,
        &format!(
            "full vs collective over five pulse areas: worst {cold:.2} combined sigma at 1 uK \
             (tol 3), worst {hot:.1} sigma at 5 uK (require > 3), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_11_scattering_parameters_recovered_from_synthetic_data() {
    let start = Instant::now();
    let cfg = build_config("ramsey", 5, 3.0, 3.0, 500.0, 0.08, 3.0, 41, 60);
    let (truth_ee, truth_eg) = (150.19f64, 192.34f64);
    let pes = [0.15, 0.30, 0.45, 0.75, 0.85];
    let omega_ref = thermal_mean_rabi_hz(&cfg).unwrap();
    let t1s: Vec<f64> =
        pes.iter().map(|&pe| t1_for_excitation(pe, omega_ref).unwrap()).collect();
    let probe = ShiftDataset {
        points: pes.iter().map(|&pe| DataPoint { pe, shift_hz: 0.0, sigma_hz: 0.0 }).collect(),
        n_experiment: 5,
    };
    let (_, truth_shifts) = fit_objective(&cfg, &probe, &t1s, truth_ee, truth_eg, 60).unwrap();
    let scale = (truth_shifts.iter().map(|s| s * s).sum::<f64>() / truth_shifts.len() as f64)
        .sqrt();
    let data = ShiftDataset {
        points: pes
            .iter()
            .zip(&truth_shifts)
            .enumerate()
            .map(|(i, (&pe, &s))| DataPoint {
                pe,
                shift_hz: s * (1.0 + if i % 2 == 0 { 0.01 } else { -0.01 }),
                sigma_hz: 0.01 * scale,
            })
            .collect(),
        n_experiment: 5,
    };
    let opts = FitOptions {
        initial: (160.0, 180.0),
        fit_samples: 60,
        max_evaluations: 200,
        ..FitOptions::default()
    };
    let fit = fit_scattering_lengths(&cfg, &data, &opts).unwrap();
    let err_ee = (fit.b_ee_a0 - truth_ee).abs() / truth_ee;
    let err_eg = (fit.b_eg_a0 - truth_eg).abs() / truth_eg;
    let secs = start.elapsed().as_secs_f64();
    report(
        11,
        err_ee <= 0.02 && err_eg <= 0.02 && secs < 1200.0,
        &format!(
            "synthetic data with 1 percent noise under common random numbers: recovered \
             ({:.2}, {:.2}) vs truth ({truth_ee}, {truth_eg}), relative errors {:.3} percent \
             and {:.3} percent (tol 2 percent), {} evaluations, converged {}, {secs:.0} s",
            fit.b_ee_a0,
            fit.b_eg_a0,
            100.0 * err_ee,
            100.0 * err_eg,
            fit.evaluations,
            fit.converged
        ),
    );
}

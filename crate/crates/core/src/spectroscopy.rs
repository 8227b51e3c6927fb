//! Spectroscopy pipelines: thermal Monte-Carlo averaging of Ramsey and Rabi
//! spectra, peak extraction, and the analytic Ramsey shift.
//!
//! Every sampled ensemble owns an independent, index-seeded random stream,
//! and all reductions run in a fixed order, so results are identical for any
//! thread count. Convergence is judged by a bootstrap over samples: the run
//! stops once the resampled peak shift scatters less than the target.

use crate::config::{Config, Protocol};
use crate::couplings::{build_coupling_tables, CouplingTables, RabiModel};
use crate::error::{Error, Result};
use crate::evolution::{
    apply_pulse, expand_state, project_state, pulse_excitation, pulse_product_state, DarkEigen,
    EigenSystem, StateVector, TruncatedDarkEigen,
};
use crate::hamiltonian::{
    build_full_hamiltonian, collective_dark_phases, collective_hamiltonian, dark_blocks,
    spin_sector_basis_cached, truncated_dark_blocks, truncated_drive_matrix, SpinSectorBasis,
};
use crate::overlap::SliceOverlaps;
use crate::sampler::{draw_ensemble, partition_table, PartitionTable};
use crate::util::{mean, pairwise_sum, sample_std, standard_error, stream_seed};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Number of bootstrap resamples used for the shift uncertainty.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Samples added per convergence check after the initial batch.
const BATCH_SIZE: usize = 100;

/// Averaged excitation spectrum over the detuning grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub detunings_hz: Vec<f64>,
    pub pe: Vec<f64>,
    pub pe_stderr: Vec<f64>,
}

/// Extracted density shift and its context.
#[derive(Debug, Clone)]
pub struct ShiftResult {
    pub protocol: Protocol,
    pub n_atoms: usize,
    pub t_z_uk: f64,
    pub t_r_uk: f64,
    /// First-pulse duration for Ramsey-like rows, drive duration for Rabi
    /// rows (sample mean when it varies per sample), in seconds.
    pub pulse_s: f64,
    /// Dark time in seconds; zero for Rabi rows.
    pub dark_s: f64,
    pub shift_hz: f64,
    pub shift_stderr_hz: f64,
    /// Operating excitation fraction of the row.
    pub pe_op: f64,
    pub n_samples: usize,
    pub converged: bool,
    pub grid_warning: bool,
}

/// One scan row of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub spectrum: Spectrum,
    pub shift: ShiftResult,
    /// Rejected ensemble draws per attempted draw over the whole run.
    pub rejection_rate: f64,
}

/// Parabolic peak estimate on a uniform detuning grid.
#[derive(Debug, Clone, Copy)]
pub struct PeakEstimate {
    pub shift_hz: f64,
    pub pe_peak: f64,
    pub tilt_stderr_hz: f64,
    pub grid_warning: bool,
}

/// Locates the spectrum maximum by a three-point parabola around the
/// dominant grid point. Errors when the peak touches the grid boundary.
pub fn extract_shift(
    detunings_hz: &[f64],
    pe: &[f64],
    pe_stderr: Option<&[f64]>,
) -> Result<PeakEstimate> {
    let m = detunings_hz.len();
    if m < 3 || pe.len() != m {
        return Err(Error::Extraction("peak extraction needs at least three grid points".into()));
    }
    let mut peak = 0usize;
    for (i, &v) in pe.iter().enumerate() {
        if v > pe[peak] {
            peak = i;
        }
    }
    if peak == 0 || peak == m - 1 {
        return Err(Error::Extraction(format!(
            "resonance maximum sits on the detuning-grid boundary at {} Hz; widen the scan",
            detunings_hz[peak]
        )));
    }
    let h = 0.5 * (detunings_hz[peak + 1] - detunings_hz[peak - 1]);
    let (y0, y1, y2) = (pe[peak - 1], pe[peak], pe[peak + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom.abs() < 1e-300 {
        return Err(Error::Extraction("spectrum is flat around its maximum".into()));
    }
    let vertex = |a: f64, b: f64, c: f64| -> (f64, f64) {
        let d = a - 2.0 * b + c;
        let off = 0.5 * h * (a - c) / d;
        (detunings_hz[peak] + off, b - 0.125 * (a - c) * (a - c) / d)
    };
    let (shift, pe_peak) = vertex(y0, y1, y2);
    let grid_warning = (shift - detunings_hz[peak]).abs() > 0.5 * h.abs();

    let tilt = match pe_stderr {
        Some(s) if s.len() == m => {
            let (up, _) = vertex(y0 + s[peak - 1], y1, y2 - s[peak + 1]);
            let (dn, _) = vertex(y0 - s[peak - 1], y1, y2 + s[peak + 1]);
            0.5 * ((up - shift).abs() + (dn - shift).abs())
        }
        _ => 0.0,
    };
    Ok(PeakEstimate { shift_hz: shift, pe_peak, tilt_stderr_hz: tilt, grid_warning })
}

/// First zero crossing of y(x) by linear interpolation.
pub fn zero_crossing(xs: &[f64], ys: &[f64]) -> Option<f64> {
    for i in 1..xs.len() {
        let (a, b) = (ys[i - 1], ys[i]);
        if a == 0.0 {
            return Some(xs[i - 1]);
        }
        if a.signum() != b.signum() && b != 0.0 {
            return Some(xs[i - 1] + (xs[i] - xs[i - 1]) * a / (a - b));
        }
    }
    None
}

/// Closed-form Ramsey shift of the collective model with ideal pulses.
///
/// The transverse coherence of each atom picks up, per partner atom, the
/// phase of cos(X tau) + i cos(theta1) sin(X tau) during the dark time,
/// plus the longitudinal field C; the fringe maximum sits where the total
/// phase vanishes.
pub fn analytic_ramsey_shift(
    omega_bar_hz: f64,
    xbar_rad: f64,
    cbar_rad: f64,
    n_atoms: usize,
    t1_s: f64,
    tau_s: f64,
) -> f64 {
    let theta1 = 2.0 * std::f64::consts::PI * omega_bar_hz * t1_s;
    let ell = (theta1.cos() * (xbar_rad * tau_s).sin()).atan2((xbar_rad * tau_s).cos()) / tau_s;
    (n_atoms as f64 - 1.0) * (ell - cbar_rad) / (2.0 * std::f64::consts::PI)
}

/// Excitation fraction of a ladder state indexed by up-spin count.
fn ladder_excited_fraction(psi: &StateVector, n: usize) -> f64 {
    let mut acc = 0.0;
    for q in 0..psi.dim() {
        acc += psi.probability(q) * q as f64;
    }
    acc / n as f64
}

struct SampleOutcome {
    /// Excitation per row and detuning point.
    rows: Vec<Vec<f64>>,
    /// Operating excitation per row; NaN when defined only at the peak.
    pe_op: Vec<f64>,
    /// Realized pulse duration per row (seconds).
    pulse_s: Vec<f64>,
    rejections: u64,
}

struct ScanContext<'a> {
    cfg: &'a Config,
    table: &'a PartitionTable,
    slice: &'a SliceOverlaps,
    rabi: &'a RabiModel,
    basis: Option<Arc<SpinSectorBasis>>,
}

impl ScanContext<'_> {
    fn tables_for(&self, sample: u64) -> Result<(CouplingTables, u64)> {
        let ens = draw_ensemble(
            self.table,
            self.cfg.atoms.count,
            self.cfg.mc.master_seed,
            sample,
        )?;
        let tables = build_coupling_tables(
            &ens.states,
            &self.cfg.atoms,
            &self.cfg.trap,
            &self.cfg.constants,
            self.slice,
            self.rabi,
        )?;
        Ok((tables, ens.rejections))
    }
}

fn mean_spectrum(outcomes: &[SampleOutcome], row: usize, grid_len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid_len);
    let mut col = vec![0.0; outcomes.len()];
    for d in 0..grid_len {
        for (s, o) in outcomes.iter().enumerate() {
            col[s] = o.rows[row][d];
        }
        out.push(pairwise_sum(&col) / outcomes.len() as f64);
    }
    out
}

/// Bootstrap standard error of the peak shift for one row. Returns the
/// stderr and the number of failed resamples.
fn bootstrap_stderr(
    outcomes: &[SampleOutcome],
    row: usize,
    grid: &[f64],
    master_seed: u64,
) -> (f64, usize) {
    let n = outcomes.len();
    let mut rng = ChaCha8Rng::from_seed(stream_seed(
        master_seed ^ 0xb005_74a9_5eed_0001,
        row as u64,
    ));
    let mut shifts = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut failures = 0usize;
    let mut acc = vec![0.0; grid.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        acc.fill(0.0);
        for _ in 0..n {
            let s = rng.gen_range(0..n);
            for (a, v) in acc.iter_mut().zip(&outcomes[s].rows[row]) {
                *a += v;
            }
        }
        let inv = 1.0 / n as f64;
        for a in acc.iter_mut() {
            *a *= inv;
        }
        match extract_shift(grid, &acc, None) {
            Ok(p) => shifts.push(p.shift_hz),
            Err(_) => failures += 1,
        }
    }
    if shifts.len() < 2 {
        return (f64::INFINITY, failures);
    }
    (sample_std(&shifts), failures)
}

fn run_monte_carlo<F>(
    cfg: &Config,
    n_rows: usize,
    eval: F,
) -> Result<(Vec<SampleOutcome>, Vec<(f64, usize)>, bool)>
where
    F: Fn(u64) -> Result<SampleOutcome> + Sync,
{
    let grid = cfg.detuning_grid();
    let mc = &cfg.mc;
    let mut outcomes: Vec<SampleOutcome> = Vec::new();
    let mut converged = false;
    let mut stats = vec![(f64::INFINITY, 0usize); n_rows];
    while outcomes.len() < mc.max_samples {
        let start = outcomes.len();
        let batch = if start == 0 {
            mc.min_samples
        } else {
            BATCH_SIZE.min(mc.max_samples - start)
        };
        let fresh: Result<Vec<SampleOutcome>> =
            (start..start + batch).into_par_iter().map(|i| eval(i as u64)).collect();
        outcomes.extend(fresh?);
        let mut all_ok = true;
        for (row, stat) in stats.iter_mut().enumerate() {
            *stat = bootstrap_stderr(&outcomes, row, &grid, mc.master_seed);
            if !(stat.0 < mc.target_stderr_hz) || stat.1 > BOOTSTRAP_RESAMPLES / 10 {
                all_ok = false;
            }
        }
        if all_ok {
            converged = true;
            break;
        }
    }
    Ok((outcomes, stats, converged))
}

fn aggregate_rows(
    cfg: &Config,
    protocol: Protocol,
    dark_s: f64,
    outcomes: Vec<SampleOutcome>,
    stats: Vec<(f64, usize)>,
    converged: bool,
) -> Result<Vec<RunOutput>> {
    let grid = cfg.detuning_grid();
    let n_samples = outcomes.len();
    let rejections: u64 = outcomes.iter().map(|o| o.rejections).sum();
    let attempts = rejections + n_samples as u64;
    let rejection_rate = rejections as f64 / attempts as f64;

    let mut out = Vec::with_capacity(stats.len());
    for (row, stat) in stats.iter().enumerate() {
        let pe = mean_spectrum(&outcomes, row, grid.len());
        let mut stderr = Vec::with_capacity(grid.len());
        let mut col = vec![0.0; n_samples];
        for d in 0..grid.len() {
            for (s, o) in outcomes.iter().enumerate() {
                col[s] = o.rows[row][d];
            }
            stderr.push(standard_error(&col));
        }
        let peak = extract_shift(&grid, &pe, Some(&stderr))?;
        let pe_ops: Vec<f64> = outcomes.iter().map(|o| o.pe_op[row]).collect();
        let pe_op = if pe_ops.iter().all(|v| v.is_finite()) {
            mean(&pe_ops)
        } else {
            peak.pe_peak
        };
        let pulses: Vec<f64> = outcomes.iter().map(|o| o.pulse_s[row]).collect();
        let shift_stderr = if stat.0.is_finite() { stat.0 } else { peak.tilt_stderr_hz };
        out.push(RunOutput {
            spectrum: Spectrum { detunings_hz: grid.clone(), pe, pe_stderr: stderr },
            shift: ShiftResult {
                protocol,
                n_atoms: cfg.atoms.count,
                t_z_uk: cfg.atoms.temperature_z_uk,
                t_r_uk: cfg.atoms.temperature_r_uk,
                pulse_s: mean(&pulses),
                dark_s,
                shift_hz: peak.shift_hz,
                shift_stderr_hz: shift_stderr,
                pe_op,
                n_samples,
                converged,
                grid_warning: peak.grid_warning,
            },
            rejection_rate,
        });
    }
    Ok(out)
}

fn scan_context<'a>(
    cfg: &'a Config,
    table: &'a PartitionTable,
    slice: &'a SliceOverlaps,
    rabi: &'a RabiModel,
) -> Result<ScanContext<'a>> {
    let basis = match cfg.sector_depth() {
        None => None,
        Some(depth) => Some(spin_sector_basis_cached(cfg.atoms.count, depth)?),
    };
    Ok(ScanContext { cfg, table, slice, rabi, basis })
}

fn prepare(cfg: &Config) -> Result<(PartitionTable, SliceOverlaps, RabiModel)> {
    cfg.validate()?;
    let table = partition_table(&cfg.trap, &cfg.atoms, &cfg.constants)?;
    let slice = SliceOverlaps::new(table.max_index)?;
    let rabi = RabiModel::new(
        &cfg.trap,
        &cfg.constants,
        cfg.protocol.bare_rabi_hz,
        table.max_index,
    );
    Ok((table, slice, rabi))
}

/// Runs the Ramsey pipeline for a list of first-pulse durations.
pub fn run_ramsey(cfg: &Config, t1_list: &[f64]) -> Result<Vec<RunOutput>> {
    if !matches!(cfg.protocol.kind, Protocol::Ramsey) {
        return Err(Error::invalid("run_ramsey requires protocol = ramsey"));
    }
    let rows = resolve_t1_rows(cfg, t1_list)?;
    let tau = cfg.protocol.dark_time_s;
    let (table, slice, rabi) = prepare(cfg)?;
    let ctx = scan_context(cfg, &table, &slice, &rabi)?;
    let grid = cfg.detuning_grid();
    let n = cfg.atoms.count;

    let eval = |sample: u64| -> Result<SampleOutcome> {
        let (tables, rejections) = ctx.tables_for(sample)?;
        let omega_bar = tables.mean_rabi_hz();
        if !(omega_bar > 0.0) {
            return Err(Error::Sampler("mean Rabi frequency vanished for a sample".into()));
        }
        let t2 = cfg.protocol.t2_s.unwrap_or(0.25 / omega_bar);
        let mut rows_pe = Vec::with_capacity(rows.len());
        let mut pe_op = Vec::with_capacity(rows.len());
        match &ctx.basis {
            None => {
                let dark = DarkEigen::new(&dark_blocks(&tables))?;
                for &t1 in &rows {
                    let mut pe_row = Vec::with_capacity(grid.len());
                    for &delta in &grid {
                        let psi1 = pulse_product_state(&tables.rabi_hz, delta, t1);
                        let psid = dark.evolve(&psi1, tau, delta);
                        let psi2 = apply_pulse(&psid, &tables.rabi_hz, delta, t2);
                        pe_row.push(psi2.excited_fraction(n));
                    }
                    rows_pe.push(pe_row);
                    pe_op.push(pulse_excitation(&tables.rabi_hz, 0.0, t1));
                }
            }
            Some(basis) => {
                let blocks = truncated_dark_blocks(&tables, basis);
                let trunc = TruncatedDarkEigen::new(&blocks, basis.ncols())?;
                for &t1 in &rows {
                    let mut pe_row = Vec::with_capacity(grid.len());
                    for &delta in &grid {
                        let psi1 = pulse_product_state(&tables.rabi_hz, delta, t1);
                        let coords = project_state(basis, &psi1);
                        let evolved = trunc.evolve(&coords, tau, delta);
                        let full = expand_state(basis, &evolved);
                        let psi2 = apply_pulse(&full, &tables.rabi_hz, delta, t2);
                        let norm = psi2.norm_sq();
                        pe_row.push(if norm > 0.0 {
                            psi2.excited_fraction(n) / norm
                        } else {
                            0.0
                        });
                    }
                    rows_pe.push(pe_row);
                    pe_op.push(pulse_excitation(&tables.rabi_hz, 0.0, t1));
                }
            }
        }
        Ok(SampleOutcome {
            rows: rows_pe,
            pe_op,
            pulse_s: rows.clone(),
            rejections,
        })
    };

    let (outcomes, stats, converged) = run_monte_carlo(cfg, rows.len(), eval)?;
    let mut outputs = aggregate_rows(cfg, Protocol::Ramsey, tau, outcomes, stats, converged)?;
    for (o, &t1) in outputs.iter_mut().zip(&rows) {
        o.shift.pulse_s = t1;
    }
    Ok(outputs)
}

/// Drive duration of one Rabi row.
#[derive(Debug, Clone, Copy)]
pub enum RabiPulse {
    /// Fixed duration in seconds.
    Seconds(f64),
    /// Fraction of the sample's mean pi-pulse time.
    PiFraction(f64),
}

/// Runs the Rabi pipeline for a list of drive durations.
pub fn run_rabi(cfg: &Config, pulses: &[RabiPulse]) -> Result<Vec<RunOutput>> {
    if !matches!(cfg.protocol.kind, Protocol::Rabi) {
        return Err(Error::invalid("run_rabi requires protocol = rabi"));
    }
    let rows = resolve_rabi_rows(cfg, pulses)?;
    let (table, slice, rabi) = prepare(cfg)?;
    let ctx = scan_context(cfg, &table, &slice, &rabi)?;
    let grid = cfg.detuning_grid();
    let n = cfg.atoms.count;

    let eval = |sample: u64| -> Result<SampleOutcome> {
        let (tables, rejections) = ctx.tables_for(sample)?;
        let omega_bar = tables.mean_rabi_hz();
        if !(omega_bar > 0.0) {
            return Err(Error::Sampler("mean Rabi frequency vanished for a sample".into()));
        }
        let times: Vec<f64> = rows
            .iter()
            .map(|p| match *p {
                RabiPulse::Seconds(s) => s,
                RabiPulse::PiFraction(f) => f * 0.5 / omega_bar,
            })
            .collect();
        let mut rows_pe = vec![Vec::with_capacity(grid.len()); rows.len()];
        match &ctx.basis {
            None => {
                for &delta in &grid {
                    let h = build_full_hamiltonian(&tables, delta, true)?;
                    let eig = EigenSystem::from_hamiltonian(&h)?;
                    let psi0 = StateVector::ground(1 << n);
                    for (r, &t) in times.iter().enumerate() {
                        rows_pe[r].push(eig.evolve(&psi0, t).excited_fraction(n));
                    }
                }
            }
            Some(basis) => {
                let fixed = truncated_drive_matrix(&tables, basis);
                let two_pi = 2.0 * std::f64::consts::PI;
                for &delta in &grid {
                    let mut h = fixed.clone();
                    for c in 0..basis.ncols() {
                        h[(c, c)] -= two_pi * delta * 0.5 * basis.mz_twice[c] as f64;
                    }
                    let eig = EigenSystem::new(h)?;
                    // The all-down state is the first sector column up to
                    // sign; project it exactly.
                    let mut coords = StateVector::zeros(basis.ncols());
                    for c in 0..basis.ncols() {
                        coords.re[c] = basis.columns[(0, c)];
                    }
                    for (r, &t) in times.iter().enumerate() {
                        let evolved = eig.evolve(&coords, t);
                        let full = expand_state(basis, &evolved);
                        let norm = full.norm_sq();
                        rows_pe[r].push(if norm > 0.0 {
                            full.excited_fraction(n) / norm
                        } else {
                            0.0
                        });
                    }
                }
            }
        }
        Ok(SampleOutcome {
            rows: rows_pe,
            pe_op: vec![f64::NAN; rows.len()],
            pulse_s: times,
            rejections,
        })
    };

    let (outcomes, stats, converged) = run_monte_carlo(cfg, rows.len(), eval)?;
    aggregate_rows(cfg, Protocol::Rabi, 0.0, outcomes, stats, converged)
}

/// Runs the collective-model pipelines on the same sample stream as the
/// full model, for direct comparisons.
pub fn run_collective(cfg: &Config, rows_in: CollectiveRows<'_>) -> Result<Vec<RunOutput>> {
    let (table, slice, rabi) = prepare(cfg)?;
    let ctx = ScanContext { cfg, table: &table, slice: &slice, rabi: &rabi, basis: None };
    let grid = cfg.detuning_grid();
    let n = cfg.atoms.count;

    match rows_in {
        CollectiveRows::Ramsey(t1_list) => {
            if !matches!(cfg.protocol.kind, Protocol::CollectiveRamsey) {
                return Err(Error::invalid(
                    "collective Ramsey rows require protocol = collective-ramsey",
                ));
            }
            let rows = resolve_t1_rows(cfg, t1_list)?;
            let tau = cfg.protocol.dark_time_s;
            let eval = |sample: u64| -> Result<SampleOutcome> {
                let (tables, rejections) = ctx.tables_for(sample)?;
                let (omega_bar, xbar, cbar) = tables.collective_params();
                if !(omega_bar > 0.0) {
                    return Err(Error::Sampler("mean Rabi frequency vanished for a sample".into()));
                }
                let t2 = cfg.protocol.t2_s.unwrap_or(0.25 / omega_bar);
                let mut rows_pe = Vec::with_capacity(rows.len());
                let mut pe_op = Vec::with_capacity(rows.len());
                for &t1 in &rows {
                    let mut pe_row = Vec::with_capacity(grid.len());
                    for &delta in &grid {
                        let pulse = collective_hamiltonian(n, omega_bar, 0.0, 0.0, delta);
                        let eig = EigenSystem::new(pulse)?;
                        let psi1 = eig.evolve(&StateVector::ground(n + 1), t1);
                        let phases = collective_dark_phases(n, xbar, cbar, delta);
                        let mut psid = psi1.clone();
                        for (q, &w) in phases.iter().enumerate() {
                            let theta = -w * tau;
                            let (s, c) = theta.sin_cos();
                            let (re, im) = (psi1.re[q], psi1.im[q]);
                            psid.re[q] = re * c - im * s;
                            psid.im[q] = re * s + im * c;
                        }
                        let psi2 = eig.evolve(&psid, t2);
                        pe_row.push(ladder_excited_fraction(&psi2, n));
                    }
                    rows_pe.push(pe_row);
                    pe_op.push(
                        (1.0 - (2.0 * std::f64::consts::PI * omega_bar * t1).cos()) / 2.0,
                    );
                }
                Ok(SampleOutcome { rows: rows_pe, pe_op, pulse_s: rows.clone(), rejections })
            };
            let (outcomes, stats, converged) = run_monte_carlo(cfg, rows.len(), eval)?;
            let mut outputs =
                aggregate_rows(cfg, Protocol::CollectiveRamsey, tau, outcomes, stats, converged)?;
            for (o, &t1) in outputs.iter_mut().zip(&rows) {
                o.shift.pulse_s = t1;
            }
            Ok(outputs)
        }
        CollectiveRows::Rabi(pulses) => {
            if !matches!(cfg.protocol.kind, Protocol::CollectiveRabi) {
                return Err(Error::invalid(
                    "collective Rabi rows require protocol = collective-rabi",
                ));
            }
            let rows = resolve_rabi_rows(cfg, pulses)?;
            let eval = |sample: u64| -> Result<SampleOutcome> {
                let (tables, rejections) = ctx.tables_for(sample)?;
                let (omega_bar, xbar, cbar) = tables.collective_params();
                if !(omega_bar > 0.0) {
                    return Err(Error::Sampler("mean Rabi frequency vanished for a sample".into()));
                }
                let times: Vec<f64> = rows
                    .iter()
                    .map(|p| match *p {
                        RabiPulse::Seconds(s) => s,
                        RabiPulse::PiFraction(f) => f * 0.5 / omega_bar,
                    })
                    .collect();
                let mut rows_pe = vec![Vec::with_capacity(grid.len()); rows.len()];
                for &delta in &grid {
                    let h = collective_hamiltonian(n, omega_bar, xbar, cbar, delta);
                    let eig = EigenSystem::new(h)?;
                    let psi0 = StateVector::ground(n + 1);
                    for (r, &t) in times.iter().enumerate() {
                        rows_pe[r].push(ladder_excited_fraction(&eig.evolve(&psi0, t), n));
                    }
                }
                Ok(SampleOutcome {
                    rows: rows_pe,
                    pe_op: vec![f64::NAN; rows.len()],
                    pulse_s: times,
                    rejections,
                })
            };
            let (outcomes, stats, converged) = run_monte_carlo(cfg, rows.len(), eval)?;
            aggregate_rows(cfg, Protocol::CollectiveRabi, 0.0, outcomes, stats, converged)
        }
    }
}

/// Row specification for the collective pipelines.
pub enum CollectiveRows<'a> {
    Ramsey(&'a [f64]),
    Rabi(&'a [RabiPulse]),
}

/// Evaluates the analytic Ramsey shift over the sample stream.
pub fn run_analytic(cfg: &Config, t1_list: &[f64]) -> Result<Vec<ShiftResult>> {
    if !matches!(cfg.protocol.kind, Protocol::AnalyticRamsey) {
        return Err(Error::invalid("run_analytic requires protocol = analytic-ramsey"));
    }
    let rows = resolve_t1_rows(cfg, t1_list)?;
    let tau = cfg.protocol.dark_time_s;
    let (table, slice, rabi) = prepare(cfg)?;
    let ctx = ScanContext { cfg, table: &table, slice: &slice, rabi: &rabi, basis: None };
    let n = cfg.atoms.count;
    let mc = &cfg.mc;

    let mut shifts: Vec<Vec<f64>> = vec![Vec::new(); rows.len()];
    let mut pe_ops: Vec<Vec<f64>> = vec![Vec::new(); rows.len()];
    let mut produced = 0usize;
    let mut converged = false;
    while produced < mc.max_samples {
        let batch = if produced == 0 {
            mc.min_samples
        } else {
            BATCH_SIZE.min(mc.max_samples - produced)
        };
        let fresh: Result<Vec<(Vec<f64>, Vec<f64>)>> = (produced..produced + batch)
            .into_par_iter()
            .map(|i| -> Result<(Vec<f64>, Vec<f64>)> {
                let (tables, _) = ctx.tables_for(i as u64)?;
                let (omega_bar, xbar, cbar) = tables.collective_params();
                let mut s_row = Vec::with_capacity(rows.len());
                let mut p_row = Vec::with_capacity(rows.len());
                for &t1 in &rows {
                    s_row.push(analytic_ramsey_shift(omega_bar, xbar, cbar, n, t1, tau));
                    p_row.push(
                        (1.0 - (2.0 * std::f64::consts::PI * omega_bar * t1).cos()) / 2.0,
                    );
                }
                Ok((s_row, p_row))
            })
            .collect();
        for (s_row, p_row) in fresh? {
            for (r, (s, p)) in s_row.into_iter().zip(p_row).enumerate() {
                shifts[r].push(s);
                pe_ops[r].push(p);
            }
        }
        produced += batch;
        if shifts.iter().all(|s| standard_error(s) < mc.target_stderr_hz) {
            converged = true;
            break;
        }
    }

    Ok(rows
        .iter()
        .enumerate()
        .map(|(r, &t1)| ShiftResult {
            protocol: Protocol::AnalyticRamsey,
            n_atoms: n,
            t_z_uk: cfg.atoms.temperature_z_uk,
            t_r_uk: cfg.atoms.temperature_r_uk,
            pulse_s: t1,
            dark_s: tau,
            shift_hz: mean(&shifts[r]),
            shift_stderr_hz: standard_error(&shifts[r]),
            pe_op: mean(&pe_ops[r]),
            n_samples: produced,
            converged,
            grid_warning: false,
        })
        .collect())
}

/// Thermal mean Rabi frequency of the configured drive, in Hz.
pub fn thermal_mean_rabi_hz(cfg: &Config) -> Result<f64> {
    let (mean, _) = crate::sampler::thermal_rabi_moments(
        &cfg.trap,
        &cfg.atoms,
        &cfg.constants,
        cfg.protocol.bare_rabi_hz,
    )?;
    if !(mean > 0.0) {
        return Err(Error::invalid("thermal mean Rabi frequency vanished"));
    }
    Ok(mean)
}

/// First-pulse duration that puts the mean thermal atom at excitation pe.
pub fn t1_for_excitation(pe: f64, omega_ref_hz: f64) -> Result<f64> {
    if !(pe > 0.0 && pe < 1.0) {
        return Err(Error::invalid(format!(
            "target excitation {pe} is outside (0, 1)"
        )));
    }
    let theta = (1.0 - 2.0 * pe).acos();
    Ok(theta / (2.0 * std::f64::consts::PI * omega_ref_hz))
}

/// Evenly spaced excitation targets mapped to first-pulse durations.
pub fn excitation_scan_t1(cfg: &Config, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::invalid("a scan needs at least one row"));
    }
    let omega_ref = thermal_mean_rabi_hz(cfg)?;
    (1..=points)
        .map(|k| t1_for_excitation(k as f64 / (points as f64 + 1.0), omega_ref))
        .collect()
}

fn resolve_t1_rows(cfg: &Config, t1_list: &[f64]) -> Result<Vec<f64>> {
    if t1_list.is_empty() {
        match cfg.protocol.t1_s {
            Some(t1) => Ok(vec![t1]),
            None => Err(Error::invalid("protocol.t1 is required when no scan rows are given")),
        }
    } else {
        if t1_list.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::invalid("first-pulse durations must be positive"));
        }
        Ok(t1_list.to_vec())
    }
}

fn resolve_rabi_rows(cfg: &Config, pulses: &[RabiPulse]) -> Result<Vec<RabiPulse>> {
    if pulses.is_empty() {
        match cfg.protocol.pulse_time_s {
            Some(t) => Ok(vec![RabiPulse::Seconds(t)]),
            None => Ok(vec![RabiPulse::PiFraction(1.0)]),
        }
    } else {
        for p in pulses {
            let v = match *p {
                RabiPulse::Seconds(s) => s,
                RabiPulse::PiFraction(f) => f,
            };
            if !(v > 0.0) {
                return Err(Error::invalid("drive durations must be positive"));
            }
        }
        Ok(pulses.to_vec())
    }
}

//! Calibration of excited-state scattering parameters against measured
//! density shifts.
//!
//! The fit re-simulates the Ramsey pipeline at each candidate (b_ee, b_eg)
//! with a frozen seed and a fixed sample count, so the objective is a
//! deterministic function of the parameters and ordinary Nelder-Mead
//! minimization applies despite the Monte-Carlo interior.

use crate::config::{Config, Protocol};
use crate::error::{Error, Result};
use crate::spectroscopy::run_ramsey;
use std::collections::HashMap;

/// One measured operating point.
#[derive(Debug, Clone, Copy)]
pub struct DataPoint {
    /// Operating excitation fraction the shift was measured at.
    pub pe: f64,
    /// Measured density shift in Hz.
    pub shift_hz: f64,
    /// One-sigma uncertainty in Hz; non-positive means unweighted.
    pub sigma_hz: f64,
}

/// Measured shift-versus-excitation dataset.
#[derive(Debug, Clone)]
pub struct ShiftDataset {
    pub points: Vec<DataPoint>,
    /// Atom number of the experiment the data came from.
    pub n_experiment: usize,
}

/// Rescales a simulated shift to a different atom number using the
/// pair-count proportionality (n - 1).
pub fn rescale_shift(shift_hz: f64, n_sim: usize, n_exp: usize) -> f64 {
    shift_hz * (n_exp as f64 - 1.0) / (n_sim as f64 - 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Starting point (b_ee, b_eg) in Bohr radii.
    pub initial: (f64, f64),
    /// Initial simplex steps in Bohr radii.
    pub step: (f64, f64),
    /// Box bounds (low, high) for each parameter.
    pub bounds: ((f64, f64), (f64, f64)),
    /// Samples per objective evaluation (common random numbers).
    pub fit_samples: usize,
    pub max_evaluations: usize,
    /// Simplex size below which the fit stops, in Bohr radii.
    pub x_tolerance: f64,
    /// Relative objective spread below which the fit stops.
    pub f_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            initial: (160.0, 180.0),
            step: (8.0, 8.0),
            bounds: ((40.0, 400.0), (40.0, 400.0)),
            fit_samples: 100,
            max_evaluations: 120,
            x_tolerance: 0.05,
            f_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub b_ee_a0: f64,
    pub b_eg_a0: f64,
    /// Weighted residual sum of squares at the optimum.
    pub rss: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Simulated shifts at the optimum, rescaled to the experiment's atom
    /// number, one per data point.
    pub simulated_shifts_hz: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// First-pulse durations that put the mean thermal atom at the measured
/// excitation fractions.
fn pulse_rows(cfg: &Config, data: &ShiftDataset) -> Result<Vec<f64>> {
    let omega_ref = crate::spectroscopy::thermal_mean_rabi_hz(cfg)?;
    data.points
        .iter()
        .map(|p| crate::spectroscopy::t1_for_excitation(p.pe, omega_ref))
        .collect()
}

/// Weighted residual sum of squares for one candidate parameter pair,
/// together with the rescaled simulated shifts.
pub fn fit_objective(
    cfg: &Config,
    data: &ShiftDataset,
    t1_rows: &[f64],
    b_ee_a0: f64,
    b_eg_a0: f64,
    fit_samples: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut trial = cfg.clone();
    trial.atoms.b_ee_a0 = b_ee_a0;
    trial.atoms.b_eg_a0 = b_eg_a0;
    trial.mc.min_samples = fit_samples;
    trial.mc.max_samples = fit_samples;
    trial.mc.target_stderr_hz = f64::MIN_POSITIVE;
    trial.validate()?;
    let runs = run_ramsey(&trial, t1_rows)?;
    let mut rss = 0.0;
    let mut sims = Vec::with_capacity(runs.len());
    for (run, point) in runs.iter().zip(&data.points) {
        let sim = rescale_shift(run.shift.shift_hz, trial.atoms.count, data.n_experiment);
        let sigma = if point.sigma_hz > 0.0 { point.sigma_hz } else { 1.0 };
        let r = (sim - point.shift_hz) / sigma;
        rss += r * r;
        sims.push(sim);
    }
    Ok((rss, sims))
}

/// Fits (b_ee, b_eg) to a measured shift dataset by Nelder-Mead on the
/// common-random-number objective.
pub fn fit_scattering_lengths(
    cfg: &Config,
    data: &ShiftDataset,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !matches!(cfg.protocol.kind, Protocol::Ramsey) {
        return Err(Error::Fit("calibration requires protocol = ramsey".into()));
    }
    if data.points.len() < 2 {
        return Err(Error::Fit(
            "at least two data points are required to fit two scattering parameters".into(),
        ));
    }
    if data.n_experiment < 2 {
        return Err(Error::Fit("the experimental atom number must be at least 2".into()));
    }
    if opts.step.0 == 0.0 || opts.step.1 == 0.0 {
        return Err(Error::Fit("initial simplex steps must be nonzero".into()));
    }
    let t1_rows = pulse_rows(cfg, data)?;

    let mut cache: HashMap<(u64, u64), f64> = HashMap::new();
    let evaluations = std::cell::Cell::new(0usize);
    let ((lo0, hi0), (lo1, hi1)) = opts.bounds;
    let mut eval = |x: [f64; 2]| -> Result<f64> {
        if x[0] < lo0 || x[0] > hi0 || x[1] < lo1 || x[1] > hi1 {
            return Ok(f64::INFINITY);
        }
        let key = (x[0].to_bits(), x[1].to_bits());
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        evaluations.set(evaluations.get() + 1);
        let (rss, _) = fit_objective(cfg, data, &t1_rows, x[0], x[1], opts.fit_samples)?;
        cache.insert(key, rss);
        Ok(rss)
    };

    let mut simplex = [
        [opts.initial.0, opts.initial.1],
        [opts.initial.0 + opts.step.0, opts.initial.1],
        [opts.initial.0, opts.initial.1 + opts.step.1],
    ];
    let mut values = [eval(simplex[0])?, eval(simplex[1])?, eval(simplex[2])?];
    let spread = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !spread.is_finite() && values.iter().all(|v| !v.is_finite()) {
        return Err(Error::Fit("the initial simplex lies outside the parameter bounds".into()));
    }
    if spread.abs() < 1e-12 * values[0].abs().max(1.0) {
        return Err(Error::Fit(
            "objective is flat near the initial guess; the data cannot constrain the parameters"
                .into(),
        ));
    }

    let mut converged = false;
    while evaluations.get() < opts.max_evaluations {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, mid, worst) = (order[0], order[1], order[2]);

        let size = (0..2)
            .map(|d| {
                (simplex[best][d] - simplex[mid][d])
                    .abs()
                    .max((simplex[best][d] - simplex[worst][d]).abs())
            })
            .fold(0.0f64, f64::max);
        let fspread = (values[worst] - values[best]).abs();
        if size < opts.x_tolerance && fspread < opts.f_tolerance * (1.0 + values[best].abs()) {
            converged = true;
            break;
        }

        let centroid = [
            0.5 * (simplex[best][0] + simplex[mid][0]),
            0.5 * (simplex[best][1] + simplex[mid][1]),
        ];
        let reflect = [
            centroid[0] + (centroid[0] - simplex[worst][0]),
            centroid[1] + (centroid[1] - simplex[worst][1]),
        ];
        let f_reflect = eval(reflect)?;
        if f_reflect < values[best] {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - simplex[worst][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[worst][1]),
            ];
            let f_expand = eval(expand)?;
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[mid] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract = [
                centroid[0] + 0.5 * (simplex[worst][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[worst][1] - centroid[1]),
            ];
            let f_contract = eval(contract)?;
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                for v in [mid, worst] {
                    simplex[v] = [
                        0.5 * (simplex[v][0] + simplex[best][0]),
                        0.5 * (simplex[v][1] + simplex[best][1]),
                    ];
                    values[v] = eval(simplex[v])?;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let best = simplex[order[0]];
    let (rss, sims) =
        fit_objective(cfg, data, &t1_rows, best[0], best[1], opts.fit_samples)?;
    let residuals = sims
        .iter()
        .zip(&data.points)
        .map(|(s, p)| s - p.shift_hz)
        .collect();
    Ok(FitResult {
        b_ee_a0: best[0],
        b_eg_a0: best[1],
        rss,
        evaluations: evaluations.get(),
        converged,
        simulated_shifts_hz: sims,
        residuals,
    })
}

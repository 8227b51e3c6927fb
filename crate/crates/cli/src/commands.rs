//! Argument schema, dispatch, and subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use mbsed_core::calibration::{self, DataPoint, FitOptions, ShiftDataset};
use mbsed_core::config::{Config, Protocol};
use mbsed_core::couplings::{build_coupling_tables, RabiModel};
use mbsed_core::error::{Error, Result};
use mbsed_core::overlap::SliceOverlaps;
use mbsed_core::sampler::{self, MotionalState};
use mbsed_core::spectroscopy::{self, CollectiveRows, RabiPulse, RunOutput, ShiftResult};
use mbsed_core::util::linspace;

use crate::output::{self, Manifest};
use crate::recipes;
use crate::svg::{self, Series};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "MBSED_SEED";

#[derive(Parser)]
#[command(name = "mbsed", version, about = "Collisional density-shift simulator for lattice clocks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Thermal Rabi-frequency statistics over a temperature grid.
    SampleStats(SampleStatsArgs),
    /// Pairwise coupling constants for an explicit list of motional modes.
    CouplingsDump(CouplingsDumpArgs),
    /// Ramsey density-shift scan over first-pulse durations.
    Ramsey(ScanArgs),
    /// Rabi density-shift scan over drive durations.
    Rabi(RabiArgs),
    /// Collective-approximation run for the configured protocol.
    Collective(CollectiveArgs),
    /// Closed-form Ramsey shift over the sampled ensemble stream.
    Analytic(ScanArgs),
    /// Scattering-length calibration against a measured dataset.
    Fit(FitArgs),
    /// Reduced-size reproduction of a published figure.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Master seed override; beats the MBSED_SEED environment variable,
    /// which beats the config value.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap; the default uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Render SVG plots next to the CSV outputs.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args)]
pub struct SampleStatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Lowest grid temperature in microkelvin.
    #[arg(long = "grid-min-uk", default_value_t = 1.0)]
    pub grid_min_uk: f64,
    /// Highest grid temperature in microkelvin.
    #[arg(long = "grid-max-uk", default_value_t = 5.0)]
    pub grid_max_uk: f64,
    /// Grid points per temperature axis.
    #[arg(long = "grid-points", default_value_t = 9)]
    pub grid_points: usize,
    /// Sampled ensembles per grid point.
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
}

#[derive(Args)]
pub struct CouplingsDumpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Motional mode as comma-separated indices nx,ny,nz; repeat per atom.
    #[arg(long = "mode", value_name = "NX,NY,NZ", action = ArgAction::Append, required = true, value_parser = parse_mode)]
    pub modes: Vec<MotionalState>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scan this many first-pulse durations spanning the excitation axis.
    #[arg(long = "t1-scan", value_name = "ROWS", conflicts_with = "t1_s")]
    pub t1_scan: Option<usize>,
    /// Explicit first-pulse duration in seconds; repeatable.
    #[arg(long = "t1-s", value_name = "SECONDS", action = ArgAction::Append)]
    pub t1_s: Vec<f64>,
}

#[derive(Args)]
pub struct RabiArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scan this many drive durations as even fractions of the pi time.
    #[arg(long = "pulse-scan", value_name = "ROWS", conflicts_with_all = ["pulse_s", "pi_fraction"])]
    pub pulse_scan: Option<usize>,
    /// Explicit drive duration in seconds; repeatable.
    #[arg(long = "pulse-s", value_name = "SECONDS", action = ArgAction::Append)]
    pub pulse_s: Vec<f64>,
    /// Drive duration as a fraction of the mean pi time; repeatable.
    #[arg(long = "pi-fraction", value_name = "FRACTION", action = ArgAction::Append)]
    pub pi_fraction: Vec<f64>,
}

#[derive(Args)]
pub struct CollectiveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scan this many first-pulse durations (collective-ramsey only).
    #[arg(long = "t1-scan", value_name = "ROWS", conflicts_with = "t1_s")]
    pub t1_scan: Option<usize>,
    /// Explicit first-pulse duration in seconds; repeatable.
    #[arg(long = "t1-s", value_name = "SECONDS", action = ArgAction::Append)]
    pub t1_s: Vec<f64>,
    /// Scan this many drive durations (collective-rabi only).
    #[arg(long = "pulse-scan", value_name = "ROWS", conflicts_with_all = ["pulse_s", "pi_fraction"])]
    pub pulse_scan: Option<usize>,
    /// Explicit drive duration in seconds; repeatable.
    #[arg(long = "pulse-s", value_name = "SECONDS", action = ArgAction::Append)]
    pub pulse_s: Vec<f64>,
    /// Drive duration as a fraction of the mean pi time; repeatable.
    #[arg(long = "pi-fraction", value_name = "FRACTION", action = ArgAction::Append)]
    pub pi_fraction: Vec<f64>,
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV of measured points pe,shift_hz[,sigma_hz]; a header row is allowed.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Atom number of the experiment behind the dataset.
    #[arg(long = "n-experiment")]
    pub n_experiment: usize,
    /// Starting point b_ee,b_eg in Bohr radii; defaults to the config values.
    #[arg(long, value_parser = parse_pair)]
    pub initial: Option<(f64, f64)>,
    /// Initial simplex step for each parameter in Bohr radii.
    #[arg(long, value_parser = parse_pair)]
    pub step: Option<(f64, f64)>,
    /// Search box as b_ee_lo,b_ee_hi,b_eg_lo,b_eg_hi in Bohr radii.
    #[arg(long, value_parser = parse_bounds)]
    pub bounds: Option<((f64, f64), (f64, f64))>,
    /// Monte-Carlo samples per objective evaluation.
    #[arg(long = "fit-samples")]
    pub fit_samples: Option<usize>,
    /// Evaluation budget for the simplex search.
    #[arg(long = "max-evals")]
    pub max_evals: Option<usize>,
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// Figure identifier: fig1, fig4, fig5, fig6, fig7, fig9, fig10 or fig11.
    #[arg(value_name = "FIGURE")]
    pub figure: String,
    /// Output directory; defaults to runs/<figure>.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed override; beats MBSED_SEED, which beats the recipe value.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap; the default uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::SampleStats(a) => sample_stats(&a),
        Command::CouplingsDump(a) => couplings_dump(&a),
        Command::Ramsey(a) => ramsey(&a),
        Command::Rabi(a) => rabi(&a),
        Command::Collective(a) => collective(&a),
        Command::Analytic(a) => analytic(&a),
        Command::Fit(a) => fit(&a),
        Command::Reproduce(a) => recipes::reproduce(&a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("warning: some rows did not reach the requested precision");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Eigensolver(_) | Error::Dimension(_) => 3,
                _ => 1,
            }
        }
    }
}

/// Caps the global worker pool when requested.
pub fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::invalid("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::invalid(format!("thread pool setup failed: {e}")))
}

/// Applies the seed precedence: flag, then environment, then config.
pub fn apply_seed(cfg: &mut Config, flag: Option<u64>) -> Result<()> {
    if let Some(seed) = flag {
        cfg.mc.master_seed = seed;
    } else if let Ok(raw) = std::env::var(SEED_ENV) {
        cfg.mc.master_seed = raw.trim().parse::<u64>().map_err(|_| {
            Error::invalid(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`"))
        })?;
    }
    Ok(())
}

fn load_config(args: &CommonArgs) -> Result<Config> {
    init_threads(args.threads)?;
    let mut cfg = Config::from_path(&args.config)?;
    apply_seed(&mut cfg, args.seed)?;
    Ok(cfg)
}

fn require_kind(cfg: &Config, expected: Protocol, subcommand: &str) -> Result<()> {
    if cfg.protocol.kind != expected {
        return Err(Error::invalid(format!(
            "the {subcommand} subcommand needs protocol.kind = {}, got {}",
            expected.as_str(),
            cfg.protocol.kind.as_str()
        )));
    }
    Ok(())
}

fn t1_rows(cfg: &Config, scan: Option<usize>, explicit: &[f64]) -> Result<Vec<f64>> {
    match scan {
        Some(0) => Err(Error::invalid("--t1-scan needs at least one row")),
        Some(k) => spectroscopy::excitation_scan_t1(cfg, k),
        None => Ok(explicit.to_vec()),
    }
}

fn rabi_rows(scan: Option<usize>, seconds: &[f64], fractions: &[f64]) -> Result<Vec<RabiPulse>> {
    if let Some(k) = scan {
        if k == 0 {
            return Err(Error::invalid("--pulse-scan needs at least one row"));
        }
        return Ok((1..=k).map(|i| RabiPulse::PiFraction(i as f64 / k as f64)).collect());
    }
    let mut rows: Vec<RabiPulse> = seconds.iter().map(|&s| RabiPulse::Seconds(s)).collect();
    rows.extend(fractions.iter().map(|&f| RabiPulse::PiFraction(f)));
    Ok(rows)
}

fn sample_stats(args: &SampleStatsArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    if !(args.grid_min_uk > 0.0 && args.grid_max_uk >= args.grid_min_uk) {
        return Err(Error::invalid("temperature grid needs 0 < --grid-min-uk <= --grid-max-uk"));
    }
    if args.grid_points == 0 || args.draws == 0 {
        return Err(Error::invalid("--grid-points and --draws must be at least 1"));
    }
    let mut manifest = Manifest::new("sample-stats", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;

    let axis = linspace(args.grid_min_uk, args.grid_max_uk, args.grid_points);
    let mut grid = Vec::with_capacity(axis.len() * axis.len());
    for &tz in &axis {
        for &tr in &axis {
            grid.push((tz, tr));
        }
    }
    eprintln!("sample-stats: {} grid points, {} draws each", grid.len(), args.draws);
    let points = sampler::rabi_inhomogeneity_map(
        &cfg.trap,
        &cfg.atoms,
        &cfg.constants,
        cfg.protocol.bare_rabi_hz,
        &grid,
        args.draws,
        cfg.mc.master_seed,
    )?;

    let mut csv = String::from("T_z_uK,T_r_uK,mean_rabi_Hz,std_rabi_Hz,ratio\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{},{},{}", p.t_z_uk, p.t_r_uk, p.mean_rabi_hz, p.std_rabi_hz, p.ratio());
    }
    output::write_file(&args.common.out.join("sample_stats.csv"), &csv)?;
    manifest.output("sample_stats.csv");

    if args.common.svg {
        let ratios: Vec<f64> = points.iter().map(|p| p.ratio()).collect();
        let chart = svg::heatmap(
            "Relative Rabi spread",
            "radial temperature (uK)",
            "axial temperature (uK)",
            &axis,
            &axis,
            &ratios,
        );
        output::write_file(&args.common.out.join("sample_stats.svg"), &chart)?;
        manifest.output("sample_stats.svg");
    }
    println!("sample-stats: wrote {} grid points", points.len());
    manifest.write(&args.common.out)?;
    Ok(true)
}

fn couplings_dump(args: &CouplingsDumpArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    if args.modes.len() < 2 {
        return Err(Error::invalid("need at least two --mode entries"));
    }
    let mut manifest = Manifest::new("couplings-dump", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;

    let n_max = args
        .modes
        .iter()
        .map(|m| m.n_x.max(m.n_y).max(m.n_z))
        .max()
        .unwrap_or(0) as usize;
    let slice = SliceOverlaps::new(n_max)?;
    let rabi = RabiModel::new(&cfg.trap, &cfg.constants, cfg.protocol.bare_rabi_hz, n_max);
    let tables = build_coupling_tables(&args.modes, &cfg.atoms, &cfg.trap, &cfg.constants, &slice, &rabi)?;

    let tau = std::f64::consts::TAU;
    let mut pairs = String::from("i,j,g_s_rad_s,g_p_rad_s,j_rad_s,c_rad_s,x_rad_s,g_s_hz,g_p_hz,j_hz,c_hz,x_hz\n");
    for i in 0..tables.n {
        for j in (i + 1)..tables.n {
            let _ = writeln!(
                pairs,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                i,
                j,
                tables.g_s[(i, j)],
                tables.g_p[(i, j)],
                tables.j[(i, j)],
                tables.c[(i, j)],
                tables.x[(i, j)],
                tables.g_s[(i, j)] / tau,
                tables.g_p[(i, j)] / tau,
                tables.j[(i, j)] / tau,
                tables.c[(i, j)] / tau,
                tables.x[(i, j)] / tau
            );
        }
    }
    output::write_file(&args.common.out.join("couplings.csv"), &pairs)?;
    manifest.output("couplings.csv");

    let mut modes = String::from("i,n_x,n_y,n_z,rabi_hz\n");
    for (i, m) in args.modes.iter().enumerate() {
        let _ = writeln!(modes, "{},{},{},{},{}", i, m.n_x, m.n_y, m.n_z, tables.rabi_hz[i]);
    }
    output::write_file(&args.common.out.join("modes.csv"), &modes)?;
    manifest.output("modes.csv");

    println!("couplings-dump: wrote {} pairs for {} modes", tables.n * (tables.n - 1) / 2, tables.n);
    manifest.write(&args.common.out)?;
    Ok(true)
}

fn ramsey(args: &ScanArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    require_kind(&cfg, Protocol::Ramsey, "ramsey")?;
    let rows = t1_rows(&cfg, args.t1_scan, &args.t1_s)?;
    let mut manifest = Manifest::new("ramsey", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;
    eprintln!("ramsey: {} row(s), up to {} samples each", rows.len().max(1), cfg.mc.max_samples);
    let outputs = spectroscopy::run_ramsey(&cfg, &rows)?;
    finish_rows(&args.common, &outputs, manifest)
}

fn rabi(args: &RabiArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    require_kind(&cfg, Protocol::Rabi, "rabi")?;
    let rows = rabi_rows(args.pulse_scan, &args.pulse_s, &args.pi_fraction)?;
    let mut manifest = Manifest::new("rabi", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;
    eprintln!("rabi: {} row(s), up to {} samples each", rows.len().max(1), cfg.mc.max_samples);
    let outputs = spectroscopy::run_rabi(&cfg, &rows)?;
    finish_rows(&args.common, &outputs, manifest)
}

fn collective(args: &CollectiveArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    enum RowSpec {
        Ramsey(Vec<f64>),
        Rabi(Vec<RabiPulse>),
    }
    let spec = match cfg.protocol.kind {
        Protocol::CollectiveRamsey => RowSpec::Ramsey(t1_rows(&cfg, args.t1_scan, &args.t1_s)?),
        Protocol::CollectiveRabi => {
            RowSpec::Rabi(rabi_rows(args.pulse_scan, &args.pulse_s, &args.pi_fraction)?)
        }
        _ => {
            return Err(Error::invalid(
                "the collective subcommand needs protocol.kind = collective-ramsey or collective-rabi",
            ))
        }
    };
    let mut manifest = Manifest::new("collective", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;
    let outputs = match &spec {
        RowSpec::Ramsey(rows) => {
            eprintln!("collective: {} ramsey row(s)", rows.len().max(1));
            spectroscopy::run_collective(&cfg, CollectiveRows::Ramsey(rows))?
        }
        RowSpec::Rabi(rows) => {
            eprintln!("collective: {} rabi row(s)", rows.len().max(1));
            spectroscopy::run_collective(&cfg, CollectiveRows::Rabi(rows))?
        }
    };
    finish_rows(&args.common, &outputs, manifest)
}

fn analytic(args: &ScanArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    require_kind(&cfg, Protocol::AnalyticRamsey, "analytic")?;
    let rows = t1_rows(&cfg, args.t1_scan, &args.t1_s)?;
    let mut manifest = Manifest::new("analytic", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;
    eprintln!("analytic: {} row(s)", rows.len().max(1));
    let shifts = spectroscopy::run_analytic(&cfg, &rows)?;
    output::write_file(&args.common.out.join("shift.csv"), &output::shift_csv(&shifts))?;
    manifest.output("shift.csv");
    if args.common.svg {
        let chart = shift_chart(&shifts, "Analytic Ramsey shift");
        output::write_file(&args.common.out.join("shift.svg"), &chart)?;
        manifest.output("shift.svg");
    }
    print_shift_table(&shifts);
    let converged = shifts.iter().all(|r| r.converged);
    manifest.write(&args.common.out)?;
    Ok(converged)
}

fn fit(args: &FitArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    let data = read_dataset(&args.data, args.n_experiment)?;
    let defaults = FitOptions::default();
    let opts = FitOptions {
        initial: args.initial.unwrap_or((cfg.atoms.b_ee_a0, cfg.atoms.b_eg_a0)),
        step: args.step.unwrap_or(defaults.step),
        bounds: args.bounds.unwrap_or(defaults.bounds),
        fit_samples: args.fit_samples.unwrap_or(defaults.fit_samples),
        max_evaluations: args.max_evals.unwrap_or(defaults.max_evaluations),
        ..defaults
    };
    let mut manifest = Manifest::new("fit", &cfg);
    output::prepare_out_dir(&args.common.out, &cfg, &mut manifest)?;
    manifest.push("data_file", args.data.display());
    manifest.push("n_experiment", args.n_experiment);

    eprintln!(
        "fit: {} points, {} samples per evaluation, budget {}",
        data.points.len(),
        opts.fit_samples,
        opts.max_evaluations
    );
    let result = calibration::fit_scattering_lengths(&cfg, &data, &opts)?;

    let mut fit_csv = String::from("b_ee_a0,b_eg_a0,rss,evaluations,converged\n");
    let _ = writeln!(
        fit_csv,
        "{},{},{},{},{}",
        result.b_ee_a0, result.b_eg_a0, result.rss, result.evaluations, result.converged
    );
    output::write_file(&args.common.out.join("fit.csv"), &fit_csv)?;
    manifest.output("fit.csv");

    let mut points_csv = String::from("pe,shift_hz,sigma_hz,simulated_hz,residual_hz\n");
    for (i, p) in data.points.iter().enumerate() {
        let _ = writeln!(
            points_csv,
            "{},{},{},{},{}",
            p.pe, p.shift_hz, p.sigma_hz, result.simulated_shifts_hz[i], result.residuals[i]
        );
    }
    output::write_file(&args.common.out.join("fit_points.csv"), &points_csv)?;
    manifest.output("fit_points.csv");

    if args.common.svg {
        let measured: Vec<(f64, f64)> = data.points.iter().map(|p| (p.pe, p.shift_hz)).collect();
        let fitted: Vec<(f64, f64)> = data
            .points
            .iter()
            .zip(&result.simulated_shifts_hz)
            .map(|(p, &s)| (p.pe, s))
            .collect();
        let chart = svg::line_chart(
            "Scattering-length fit",
            "excitation fraction",
            "density shift (Hz)",
            &[
                Series { label: "measured".to_string(), points: measured },
                Series { label: "fitted".to_string(), points: fitted },
            ],
        );
        output::write_file(&args.common.out.join("fit.svg"), &chart)?;
        manifest.output("fit.svg");
    }

    println!("b_ee_a0 = {}", result.b_ee_a0);
    println!("b_eg_a0 = {}", result.b_eg_a0);
    println!("rss = {}", result.rss);
    println!("evaluations = {}", result.evaluations);
    println!("converged = {}", result.converged);
    manifest.write(&args.common.out)?;
    Ok(result.converged)
}

fn read_dataset(path: &std::path::Path, n_experiment: usize) -> Result<ShiftDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if points.is_empty() && cells[0].parse::<f64>().is_err() {
            continue;
        }
        if cells.len() < 2 || cells.len() > 3 {
            return Err(Error::invalid(format!(
                "{} line {}: expected pe,shift_hz[,sigma_hz]",
                path.display(),
                idx + 1
            )));
        }
        let num = |cell: &str| {
            cell.parse::<f64>().map_err(|_| {
                Error::invalid(format!("{} line {}: invalid number `{cell}`", path.display(), idx + 1))
            })
        };
        points.push(DataPoint {
            pe: num(cells[0])?,
            shift_hz: num(cells[1])?,
            sigma_hz: cells.get(2).map(|c| num(c)).transpose()?.unwrap_or(0.0),
        });
    }
    if points.is_empty() {
        return Err(Error::invalid(format!("{} holds no data rows", path.display())));
    }
    Ok(ShiftDataset { points, n_experiment })
}

fn finish_rows(common: &CommonArgs, outputs: &[RunOutput], mut manifest: Manifest) -> Result<bool> {
    for (i, out) in outputs.iter().enumerate() {
        let name = output::spectrum_name(i, outputs.len());
        output::write_file(&common.out.join(&name), &output::spectrum_csv(&out.spectrum))?;
        manifest.output(&name);
    }
    let rows: Vec<ShiftResult> = outputs.iter().map(|o| o.shift.clone()).collect();
    output::write_file(&common.out.join("shift.csv"), &output::shift_csv(&rows))?;
    manifest.output("shift.csv");

    if common.svg {
        let spectra: Vec<Series> = outputs
            .iter()
            .map(|o| Series {
                label: format!("pulse {:.4} s", o.shift.pulse_s),
                points: o
                    .spectrum
                    .detunings_hz
                    .iter()
                    .zip(&o.spectrum.pe)
                    .map(|(&d, &p)| (d, p))
                    .collect(),
            })
            .collect();
        let chart = svg::line_chart("Averaged spectra", "detuning (Hz)", "excitation fraction", &spectra);
        output::write_file(&common.out.join("spectra.svg"), &chart)?;
        manifest.output("spectra.svg");

        let chart = shift_chart(&rows, "Density shift");
        output::write_file(&common.out.join("shift.svg"), &chart)?;
        manifest.output("shift.svg");
    }

    for (i, r) in rows.iter().enumerate() {
        if r.grid_warning {
            eprintln!("warning: row {} peaked near the detuning grid edge", i + 1);
        }
    }
    print_shift_table(&rows);
    let converged = rows.iter().all(|r| r.converged);
    manifest.write(&common.out)?;
    Ok(converged)
}

fn shift_chart(rows: &[ShiftResult], title: &str) -> String {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.pe_op, r.shift_hz)).collect();
    svg::line_chart(
        title,
        "excitation fraction",
        "density shift (Hz)",
        &[Series { label: "shift".to_string(), points }],
    )
}

fn print_shift_table(rows: &[ShiftResult]) {
    println!("{}", output::shift_header(rows));
    for r in rows {
        println!("{}", output::shift_row(r));
    }
}

fn parse_mode(raw: &str) -> std::result::Result<MotionalState, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated indices nx,ny,nz".to_string());
    }
    let idx = |cell: &str| cell.parse::<u32>().map_err(|_| format!("invalid index `{cell}`"));
    Ok(MotionalState { n_x: idx(parts[0])?, n_y: idx(parts[1])?, n_z: idx(parts[2])? })
}

fn parse_pair(raw: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers".to_string());
    }
    let num = |cell: &str| cell.parse::<f64>().map_err(|_| format!("invalid number `{cell}`"));
    Ok((num(parts[0])?, num(parts[1])?))
}

fn parse_bounds(raw: &str) -> std::result::Result<((f64, f64), (f64, f64)), String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated numbers lo_ee,hi_ee,lo_eg,hi_eg".to_string());
    }
    let num = |cell: &str| cell.parse::<f64>().map_err(|_| format!("invalid number `{cell}`"));
    Ok(((num(parts[0])?, num(parts[1])?), (num(parts[2])?, num(parts[3])?)))
}

//! Reduced-size reproductions of the published figure runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mbsed_core::config::{Config, Protocol};
use mbsed_core::error::{Error, Result};
use mbsed_core::sampler;
use mbsed_core::spectroscopy::{self, CollectiveRows, RabiPulse, RunOutput};
use mbsed_core::util::linspace;

use crate::commands::{apply_seed, init_threads, ReproduceArgs};
use crate::output::{self, Manifest};
use crate::svg::{self, Series};

const FIG1: &str = include_str!("../../../configs/repro/fig1.cfg");
const FIG4: &str = include_str!("../../../configs/repro/fig4.cfg");
const FIG5: &str = include_str!("../../../configs/repro/fig5.cfg");
const FIG6: &str = include_str!("../../../configs/repro/fig6.cfg");
const FIG7: &str = include_str!("../../../configs/repro/fig7.cfg");
const FIG9: &str = include_str!("../../../configs/repro/fig9.cfg");
const FIG10: &str = include_str!("../../../configs/repro/fig10.cfg");
const FIG11: &str = include_str!("../../../configs/repro/fig11.cfg");

/// Figure identifiers the reproduce subcommand accepts.
pub const FIGURES: [&str; 8] = ["fig1", "fig4", "fig5", "fig6", "fig7", "fig9", "fig10", "fig11"];

struct Variant {
    label: String,
    cfg: Config,
    rows: Rows,
}

enum Rows {
    Ramsey(Vec<f64>),
    Rabi(Vec<RabiPulse>),
}

enum XKind {
    Excitation,
    PulseFraction,
}

/// Runs one canned figure recipe.
pub fn reproduce(args: &ReproduceArgs) -> Result<bool> {
    init_threads(args.threads)?;
    let fig = args.figure.as_str();
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(fig));
    if fig == "fig1" {
        return fig1(args, &out);
    }
    let (variants, x_kind, title, x_label) = build_variants(fig, args)?;
    execute(&out, fig, title, x_label, x_kind, variants)
}

fn recipe_config(text: &'static str, args: &ReproduceArgs) -> Result<Config> {
    let mut cfg = Config::from_str_validated(text)?;
    apply_seed(&mut cfg, args.seed)?;
    Ok(cfg)
}

fn pi_fractions(rows: usize) -> Vec<RabiPulse> {
    (1..=rows).map(|i| RabiPulse::PiFraction(i as f64 / rows as f64)).collect()
}

fn build_variants(
    fig: &str,
    args: &ReproduceArgs,
) -> Result<(Vec<Variant>, XKind, &'static str, &'static str)> {
    match fig {
        "fig4" => {
            let base = recipe_config(FIG4, args)?;
            let mut variants = Vec::new();
            for &tau in &[0.02, 0.05, 0.08, 0.12] {
                let mut cfg = base.clone();
                cfg.protocol.dark_time_s = tau;
                let rows = spectroscopy::excitation_scan_t1(&cfg, 7)?;
                variants.push(Variant {
                    label: format!("tau {:.0} ms", tau * 1e3),
                    cfg,
                    rows: Rows::Ramsey(rows),
                });
            }
            Ok((variants, XKind::Excitation, "Ramsey shift versus excitation", "excitation fraction"))
        }
        "fig5" => {
            let base = recipe_config(FIG5, args)?;
            let mut variants = Vec::new();
            for &t_uk in &[1.0, 5.0] {
                for kind in [Protocol::Ramsey, Protocol::CollectiveRamsey] {
                    let mut cfg = base.clone();
                    cfg.atoms.temperature_z_uk = t_uk;
                    cfg.atoms.temperature_r_uk = t_uk;
                    cfg.protocol.kind = kind;
                    let rows = spectroscopy::excitation_scan_t1(&cfg, 7)?;
                    let model = if kind == Protocol::Ramsey { "full" } else { "collective" };
                    variants.push(Variant {
                        label: format!("{t_uk:.0} uK {model}"),
                        cfg,
                        rows: Rows::Ramsey(rows),
                    });
                }
            }
            Ok((variants, XKind::Excitation, "Full model versus collective approximation", "excitation fraction"))
        }
        "fig6" => {
            let base = recipe_config(FIG6, args)?;
            let mut variants = Vec::new();
            for &t_uk in &[1.0, 3.0, 5.0] {
                let mut cfg = base.clone();
                cfg.atoms.temperature_z_uk = t_uk;
                cfg.atoms.temperature_r_uk = t_uk;
                let rows = spectroscopy::excitation_scan_t1(&cfg, 9)?;
                variants.push(Variant {
                    label: format!("{t_uk:.0} uK"),
                    cfg,
                    rows: Rows::Ramsey(rows),
                });
            }
            Ok((variants, XKind::Excitation, "Ramsey shift versus temperature", "excitation fraction"))
        }
        "fig7" => {
            let base = recipe_config(FIG7, args)?;
            let mut variants = Vec::new();
            for &n in &[3usize, 4, 5, 6] {
                let mut cfg = base.clone();
                cfg.atoms.count = n;
                let rows = spectroscopy::excitation_scan_t1(&cfg, 7)?;
                variants.push(Variant {
                    label: format!("{n} atoms"),
                    cfg,
                    rows: Rows::Ramsey(rows),
                });
            }
            Ok((variants, XKind::Excitation, "Ramsey shift versus atom number", "excitation fraction"))
        }
        "fig9" => {
            let base = recipe_config(FIG9, args)?;
            let mut variants = Vec::new();
            for &omega in &[0.2, 2.0, 5.0, 10.0] {
                let mut cfg = base.clone();
                cfg.protocol.bare_rabi_hz = omega;
                let half = (1.6 * omega).max(0.6);
                cfg.protocol.detuning_min_hz = -half;
                cfg.protocol.detuning_max_hz = half;
                variants.push(Variant {
                    label: format!("omega {omega} Hz"),
                    cfg,
                    rows: Rows::Rabi(pi_fractions(8)),
                });
            }
            Ok((variants, XKind::PulseFraction, "Rabi shift versus drive strength", "pulse area (fraction of pi)"))
        }
        "fig10" => {
            let base = recipe_config(FIG10, args)?;
            let mut variants = Vec::new();
            for &t_uk in &[1.0, 3.0, 5.0] {
                let mut cfg = base.clone();
                cfg.atoms.temperature_z_uk = t_uk;
                cfg.atoms.temperature_r_uk = t_uk;
                variants.push(Variant {
                    label: format!("{t_uk:.0} uK"),
                    cfg,
                    rows: Rows::Rabi(pi_fractions(8)),
                });
            }
            Ok((variants, XKind::PulseFraction, "Rabi shift versus temperature", "pulse area (fraction of pi)"))
        }
        "fig11" => {
            let base = recipe_config(FIG11, args)?;
            let mut variants = Vec::new();
            for &n in &[3usize, 4, 5, 6] {
                let mut cfg = base.clone();
                cfg.atoms.count = n;
                variants.push(Variant {
                    label: format!("{n} atoms"),
                    cfg,
                    rows: Rows::Rabi(pi_fractions(8)),
                });
            }
            Ok((variants, XKind::PulseFraction, "Rabi shift versus atom number", "pulse area (fraction of pi)"))
        }
        _ => Err(Error::invalid(format!(
            "unknown figure `{fig}` (expected one of {})",
            FIGURES.join(", ")
        ))),
    }
}

fn run_variant(cfg: &Config, rows: &Rows) -> Result<Vec<RunOutput>> {
    match (cfg.protocol.kind, rows) {
        (Protocol::Ramsey, Rows::Ramsey(t1)) => spectroscopy::run_ramsey(cfg, t1),
        (Protocol::Rabi, Rows::Rabi(pulses)) => spectroscopy::run_rabi(cfg, pulses),
        (Protocol::CollectiveRamsey, Rows::Ramsey(t1)) => {
            spectroscopy::run_collective(cfg, CollectiveRows::Ramsey(t1))
        }
        (Protocol::CollectiveRabi, Rows::Rabi(pulses)) => {
            spectroscopy::run_collective(cfg, CollectiveRows::Rabi(pulses))
        }
        _ => Err(Error::invalid("protocol and row kind mismatch in recipe")),
    }
}

fn execute(
    out: &Path,
    fig: &str,
    title: &str,
    x_label: &str,
    x_kind: XKind,
    variants: Vec<Variant>,
) -> Result<bool> {
    let mut manifest = Manifest::new(&format!("reproduce {fig}"), &variants[0].cfg);
    output::create_dir(out)?;
    let header = output::shift_header_for(&variants[0].cfg.protocol.kind);
    let mut table = format!("variant,{header}\n");
    let mut series = Vec::new();
    let mut converged = true;
    println!("variant,{header}");
    for (vi, v) in variants.iter().enumerate() {
        v.cfg.validate()?;
        eprintln!("{fig}: variant {}/{} ({})", vi + 1, variants.len(), v.label);
        let snapshot = format!("config_{:03}.cfg", vi + 1);
        output::write_file(&out.join(&snapshot), &v.cfg.to_config_string())?;
        manifest.output(&snapshot);
        let outputs = run_variant(&v.cfg, &v.rows)?;
        let mut points = Vec::new();
        for (ri, o) in outputs.iter().enumerate() {
            let x = match (&x_kind, &v.rows) {
                (XKind::Excitation, _) => o.shift.pe_op,
                (XKind::PulseFraction, Rows::Rabi(pulses)) => match pulses[ri] {
                    RabiPulse::PiFraction(f) => f,
                    RabiPulse::Seconds(s) => s,
                },
                (XKind::PulseFraction, Rows::Ramsey(_)) => o.shift.pulse_s,
            };
            points.push((x, o.shift.shift_hz));
            converged &= o.shift.converged;
            let line = format!("{},{}", v.label, output::shift_row(&o.shift));
            println!("{line}");
            table.push_str(&line);
            table.push('\n');
        }
        series.push(Series { label: v.label.clone(), points });
    }
    output::write_file(&out.join("shift.csv"), &table)?;
    manifest.output("shift.csv");
    let chart = svg::line_chart(title, x_label, "density shift (Hz)", &series);
    output::write_file(&out.join("figure.svg"), &chart)?;
    manifest.output("figure.svg");
    manifest.write(out)?;
    Ok(converged)
}

fn fig1(args: &ReproduceArgs, out: &Path) -> Result<bool> {
    let cfg = recipe_config(FIG1, args)?;
    let mut manifest = Manifest::new("reproduce fig1", &cfg);
    output::create_dir(out)?;
    output::write_file(&out.join("config_001.cfg"), &cfg.to_config_string())?;
    manifest.output("config_001.cfg");

    let axis = linspace(1.0, 5.0, 7);
    let mut grid = Vec::with_capacity(axis.len() * axis.len());
    for &tz in &axis {
        for &tr in &axis {
            grid.push((tz, tr));
        }
    }
    let draws = 1500;
    eprintln!("fig1: {} grid points, {draws} draws each", grid.len());
    let points = sampler::rabi_inhomogeneity_map(
        &cfg.trap,
        &cfg.atoms,
        &cfg.constants,
        cfg.protocol.bare_rabi_hz,
        &grid,
        draws,
        cfg.mc.master_seed,
    )?;

    let mut csv = String::from("T_z_uK,T_r_uK,mean_rabi_Hz,std_rabi_Hz,ratio\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{},{},{}", p.t_z_uk, p.t_r_uk, p.mean_rabi_hz, p.std_rabi_hz, p.ratio());
    }
    output::write_file(&out.join("sample_stats.csv"), &csv)?;
    manifest.output("sample_stats.csv");

    let ratios: Vec<f64> = points.iter().map(|p| p.ratio()).collect();
    let chart = svg::heatmap(
        "Relative Rabi spread",
        "radial temperature (uK)",
        "axial temperature (uK)",
        &axis,
        &axis,
        &ratios,
    );
    output::write_file(&out.join("figure.svg"), &chart)?;
    manifest.output("figure.svg");

    println!("fig1: wrote {} grid points", points.len());
    manifest.write(out)?;
    Ok(true)
}

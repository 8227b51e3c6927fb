//! CSV serialization, run manifests, and output-directory helpers.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mbsed_core::error::{Error, Result};
use mbsed_core::spectroscopy::{ShiftResult, Spectrum};
use mbsed_core::{Config, Protocol};

/// Shift-table header for Ramsey-like rows, where the pulse column is the
/// first-pulse duration.
pub const SHIFT_HEADER_RAMSEY: &str = "protocol,N,T_z_uK,T_r_uK,t1_s,tau_s,shift_hz,shift_stderr_hz,pe_op,n_samples,converged";

/// Shift-table header for Rabi rows, where the pulse column is the drive
/// duration.
pub const SHIFT_HEADER_RABI: &str = "protocol,N,T_z_uK,T_r_uK,t_s,tau_s,shift_hz,shift_stderr_hz,pe_op,n_samples,converged";

/// Picks the shift header matching the rows' protocol.
pub fn shift_header(rows: &[ShiftResult]) -> &'static str {
    match rows.first() {
        Some(r) => shift_header_for(&r.protocol),
        None => SHIFT_HEADER_RAMSEY,
    }
}

/// Picks the shift header matching one protocol kind.
pub fn shift_header_for(kind: &Protocol) -> &'static str {
    match kind {
        Protocol::Rabi | Protocol::CollectiveRabi => SHIFT_HEADER_RABI,
        _ => SHIFT_HEADER_RAMSEY,
    }
}

/// Formats one shift row under [`shift_header`].
pub fn shift_row(r: &ShiftResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.protocol.as_str(),
        r.n_atoms,
        r.t_z_uk,
        r.t_r_uk,
        r.pulse_s,
        r.dark_s,
        r.shift_hz,
        r.shift_stderr_hz,
        r.pe_op,
        r.n_samples,
        r.converged
    )
}

/// Serializes shift rows with the protocol-matched header.
pub fn shift_csv(rows: &[ShiftResult]) -> String {
    let mut out = String::from(shift_header(rows));
    out.push('\n');
    for r in rows {
        out.push_str(&shift_row(r));
        out.push('\n');
    }
    out
}

/// Serializes one spectrum as detuning, mean excitation, standard error.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("delta_hz,pe_mean,pe_stderr\n");
    for i in 0..s.detunings_hz.len() {
        let _ = writeln!(out, "{},{},{}", s.detunings_hz[i], s.pe[i], s.pe_stderr[i]);
    }
    out
}

/// File name for the spectrum of scan row `index` out of `total`.
pub fn spectrum_name(index: usize, total: usize) -> String {
    if total == 1 {
        "spectrum.csv".to_string()
    } else {
        format!("spectrum_{:03}.csv", index + 1)
    }
}

/// Writes a text file, naming the path in the error on failure.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
}

/// Creates a directory tree, naming the path in the error on failure.
pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::invalid(format!("cannot create {}: {e}", path.display())))
}

/// Key-value manifest written alongside every output set.
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    /// Starts a manifest for one invocation.
    pub fn new(subcommand: &str, cfg: &Config) -> Manifest {
        let mut m = Manifest { entries: Vec::new() };
        m.push("tool", concat!("mbsed ", env!("CARGO_PKG_VERSION")));
        m.push("subcommand", subcommand);
        m.push("command_line", std::env::args().collect::<Vec<_>>().join(" "));
        m.push("master_seed", cfg.mc.master_seed);
        m.push("threads", rayon::current_num_threads());
        m.push("started_unix", unix_now());
        m
    }

    /// Appends one entry.
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records one produced output file.
    pub fn output(&mut self, name: &str) {
        self.push("output", name);
    }

    /// Stamps the finish time and writes `manifest.txt` into `dir`.
    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.push("finished_unix", unix_now());
        let mut text = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(text, "{k} = {v}");
        }
        write_file(&dir.join("manifest.txt"), &text)
    }
}

/// Creates the output directory and stores the exact configuration used.
pub fn prepare_out_dir(dir: &Path, cfg: &Config, manifest: &mut Manifest) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("config_snapshot.cfg"), &cfg.to_config_string())?;
    manifest.output("config_snapshot.cfg");
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

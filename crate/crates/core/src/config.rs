//! Run configuration: physical constants, trap and atom parameters, protocol
//! selection and Monte-Carlo controls.
//!
//! Configs are stored in a flat `key = value` text format with dotted section
//! prefixes. Fields keep the units used in the file (Hz, microkelvin, Bohr
//! radii, lattice quanta); SI conversions happen in accessors so that a
//! loaded config serializes back to an identical file.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Full-space state vectors above this atom number are not representable on a
/// desk machine; larger systems require total-spin truncation.
pub const MAX_ATOMS_FULL_SPACE: usize = 14;

/// Atom count ceiling when a total-spin truncation keeps dimensions small.
pub const MAX_ATOMS_TRUNCATED: usize = 20;

/// Rabi runs re-diagonalize the driven Hamiltonian per detuning point, which
/// is practical in the full product space only up to this atom number.
pub const MAX_ATOMS_RABI_FULL: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
    /// Atomic mass (kg).
    pub atom_mass: f64,
    /// Bohr radius (m).
    pub bohr_radius: f64,
    /// Clock transition wavelength (m).
    pub clock_wavelength: f64,
}

impl Default for PhysicalConstants {
    /// CODATA constants with the mass and clock wavelength of 87Sr.
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.054_571_817e-34,
            boltzmann: 1.380_649e-23,
            atom_mass: 1.4431e-25,
            bohr_radius: 5.291_772_109_03e-11,
            clock_wavelength: 698.4e-9,
        }
    }
}

impl PhysicalConstants {
    /// Probe wavenumber k = 2 pi / lambda (1/m); always derived, never stored.
    pub fn probe_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.clock_wavelength
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Longitudinal (lattice) trap frequency nu_z (Hz).
    pub nu_z_hz: f64,
    /// Radial trap frequency nu_r (Hz).
    pub nu_r_hz: f64,
    /// Radial trap depth U_r in units of the longitudinal quantum hbar omega_z.
    pub depth_zquanta: f64,
    /// Angular misalignment between probe beam and lattice axis (rad).
    pub misalignment_rad: f64,
}

impl TrapConfig {
    pub fn omega_z(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.nu_z_hz
    }

    pub fn omega_r(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.nu_r_hz
    }

    /// Trap depth as an energy (J).
    pub fn depth_energy(&self, c: &PhysicalConstants) -> f64 {
        self.depth_zquanta * c.hbar * self.omega_z()
    }

    /// Number of bound longitudinal bands: n_z ranges over 0..band_count_z.
    pub fn band_count_z(&self) -> usize {
        self.depth_zquanta.floor() as usize
    }

    /// Number of bound radial levels: n_r = n_x + n_y ranges over 0..band_count_r.
    pub fn band_count_r(&self) -> usize {
        (self.depth_zquanta * self.nu_z_hz / self.nu_r_hz).floor() as usize
    }

    /// Inverse longitudinal oscillator length sqrt(m omega_z / hbar) (1/m).
    pub fn r_z(&self, c: &PhysicalConstants) -> f64 {
        (c.atom_mass * self.omega_z() / c.hbar).sqrt()
    }

    /// Inverse radial oscillator length sqrt(m omega_r / hbar) (1/m).
    pub fn r_r(&self, c: &PhysicalConstants) -> f64 {
        (c.atom_mass * self.omega_r() / c.hbar).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomConfig {
    /// Atoms per lattice site.
    pub count: usize,
    /// Longitudinal temperature (microkelvin).
    pub temperature_z_uk: f64,
    /// Radial temperature (microkelvin).
    pub temperature_r_uk: f64,
    /// s-wave scattering length a_eg- (Bohr radii).
    pub a_eg_minus_a0: f64,
    /// p-wave scattering lengths (Bohr radii); volumes enter as cubes.
    pub b_gg_a0: f64,
    pub b_ee_a0: f64,
    pub b_eg_a0: f64,
}

impl AtomConfig {
    pub fn t_z_kelvin(&self) -> f64 {
        self.temperature_z_uk * 1e-6
    }

    pub fn t_r_kelvin(&self) -> f64 {
        self.temperature_r_uk * 1e-6
    }

    pub fn a_eg_minus_m(&self, c: &PhysicalConstants) -> f64 {
        self.a_eg_minus_a0 * c.bohr_radius
    }

    /// Scattering volumes b^3 (m^3).
    pub fn b_gg_vol(&self, c: &PhysicalConstants) -> f64 {
        (self.b_gg_a0 * c.bohr_radius).powi(3)
    }

    pub fn b_ee_vol(&self, c: &PhysicalConstants) -> f64 {
        (self.b_ee_a0 * c.bohr_radius).powi(3)
    }

    pub fn b_eg_vol(&self, c: &PhysicalConstants) -> f64 {
        (self.b_eg_a0 * c.bohr_radius).powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Ramsey,
    Rabi,
    CollectiveRamsey,
    CollectiveRabi,
    AnalyticRamsey,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Ramsey => "ramsey",
            Protocol::Rabi => "rabi",
            Protocol::CollectiveRamsey => "collective-ramsey",
            Protocol::CollectiveRabi => "collective-rabi",
            Protocol::AnalyticRamsey => "analytic-ramsey",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s {
            "ramsey" => Some(Protocol::Ramsey),
            "rabi" => Some(Protocol::Rabi),
            "collective-ramsey" => Some(Protocol::CollectiveRamsey),
            "collective-rabi" => Some(Protocol::CollectiveRabi),
            "analytic-ramsey" => Some(Protocol::AnalyticRamsey),
            _ => None,
        }
    }

    pub fn is_collective(&self) -> bool {
        matches!(
            self,
            Protocol::CollectiveRamsey | Protocol::CollectiveRabi | Protocol::AnalyticRamsey
        )
    }

    pub fn is_ramsey_like(&self) -> bool {
        matches!(
            self,
            Protocol::Ramsey | Protocol::CollectiveRamsey | Protocol::AnalyticRamsey
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: Protocol,
    /// Bare (carrier) Rabi frequency Omega_0 (Hz).
    pub bare_rabi_hz: f64,
    /// First Ramsey pulse duration (s). Optional; scans override it.
    pub t1_s: Option<f64>,
    /// Second Ramsey pulse duration (s). Default: pi/2 pulse from the
    /// per-sample mean Rabi frequency.
    pub t2_s: Option<f64>,
    /// Ramsey dark time tau (s).
    pub dark_time_s: f64,
    /// Rabi pulse duration (s). Default: pi pulse from the per-sample mean.
    pub pulse_time_s: Option<f64>,
    pub detuning_min_hz: f64,
    pub detuning_max_hz: f64,
    pub detuning_points: usize,
    /// 0 = full product space; k >= 1 retains the top k total-spin sectors.
    pub spin_sectors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub min_samples: usize,
    pub max_samples: usize,
    /// Convergence target for the bootstrap standard error of the shift (Hz).
    pub target_stderr_hz: f64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub constants: PhysicalConstants,
    pub trap: TrapConfig,
    pub atoms: AtomConfig,
    pub protocol: ProtocolConfig,
    pub mc: McConfig,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::from_str_validated(&text)
    }

    pub fn from_str_validated(text: &str) -> Result<Config> {
        let cfg = parse_config(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes every field; reloading the result reproduces the config
    /// exactly because floats are printed shortest-roundtrip.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let c = &self.constants;
        let _ = writeln!(s, "constants.hbar_j_s = {}", c.hbar);
        let _ = writeln!(s, "constants.boltzmann_j_per_k = {}", c.boltzmann);
        let _ = writeln!(s, "constants.atom_mass_kg = {}", c.atom_mass);
        let _ = writeln!(s, "constants.bohr_radius_m = {}", c.bohr_radius);
        let _ = writeln!(s, "constants.clock_wavelength_m = {}", c.clock_wavelength);
        let t = &self.trap;
        let _ = writeln!(s, "trap.nu_z_hz = {}", t.nu_z_hz);
        let _ = writeln!(s, "trap.nu_r_hz = {}", t.nu_r_hz);
        let _ = writeln!(s, "trap.depth_zquanta = {}", t.depth_zquanta);
        let _ = writeln!(s, "trap.misalignment_rad = {}", t.misalignment_rad);
        let a = &self.atoms;
        let _ = writeln!(s, "atoms.count = {}", a.count);
        let _ = writeln!(s, "atoms.temperature_z_uk = {}", a.temperature_z_uk);
        let _ = writeln!(s, "atoms.temperature_r_uk = {}", a.temperature_r_uk);
        let _ = writeln!(s, "atoms.a_eg_minus_a0 = {}", a.a_eg_minus_a0);
        let _ = writeln!(s, "atoms.b_gg_a0 = {}", a.b_gg_a0);
        let _ = writeln!(s, "atoms.b_ee_a0 = {}", a.b_ee_a0);
        let _ = writeln!(s, "atoms.b_eg_a0 = {}", a.b_eg_a0);
        let p = &self.protocol;
        let _ = writeln!(s, "protocol.kind = {}", p.kind.as_str());
        let _ = writeln!(s, "protocol.bare_rabi_hz = {}", p.bare_rabi_hz);
        if let Some(t1) = p.t1_s {
            let _ = writeln!(s, "protocol.t1_s = {}", t1);
        }
        if let Some(t2) = p.t2_s {
            let _ = writeln!(s, "protocol.t2_s = {}", t2);
        }
        let _ = writeln!(s, "protocol.dark_time_s = {}", p.dark_time_s);
        if let Some(tp) = p.pulse_time_s {
            let _ = writeln!(s, "protocol.pulse_time_s = {}", tp);
        }
        let _ = writeln!(s, "protocol.detuning_min_hz = {}", p.detuning_min_hz);
        let _ = writeln!(s, "protocol.detuning_max_hz = {}", p.detuning_max_hz);
        let _ = writeln!(s, "protocol.detuning_points = {}", p.detuning_points);
        let _ = writeln!(s, "protocol.spin_sectors = {}", p.spin_sectors);
        let m = &self.mc;
        let _ = writeln!(s, "mc.min_samples = {}", m.min_samples);
        let _ = writeln!(s, "mc.max_samples = {}", m.max_samples);
        let _ = writeln!(s, "mc.target_stderr_hz = {}", m.target_stderr_hz);
        let _ = writeln!(s, "mc.master_seed = {}", m.master_seed);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        for (name, v) in [
            ("constants.hbar_j_s", c.hbar),
            ("constants.boltzmann_j_per_k", c.boltzmann),
            ("constants.atom_mass_kg", c.atom_mass),
            ("constants.bohr_radius_m", c.bohr_radius),
            ("constants.clock_wavelength_m", c.clock_wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} > 0")));
            }
        }

        let t = &self.trap;
        if !(t.nu_z_hz > 0.0 && t.nu_r_hz > 0.0 && t.nu_z_hz > t.nu_r_hz) {
            return Err(Error::invalid("nu_z > nu_r > 0"));
        }
        if !(t.depth_zquanta > 1.0) {
            return Err(Error::invalid(
                "trap depth must bind at least one longitudinal band (depth_zquanta > 1)",
            ));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&t.misalignment_rad) {
            return Err(Error::invalid("0 <= misalignment_rad < pi/2"));
        }

        let a = &self.atoms;
        if a.count < 2 {
            return Err(Error::invalid("n_atoms >= 2"));
        }
        let truncated = self.protocol.spin_sectors > 0;
        if truncated {
            if a.count > MAX_ATOMS_TRUNCATED {
                return Err(Error::invalid(format!(
                    "n_atoms <= {MAX_ATOMS_TRUNCATED} with spin truncation"
                )));
            }
        } else if a.count > MAX_ATOMS_FULL_SPACE {
            return Err(Error::invalid(format!(
                "n_atoms <= {MAX_ATOMS_FULL_SPACE} in the full product space; enable spin truncation for larger systems"
            )));
        }
        if !(a.temperature_z_uk > 0.0 && a.temperature_r_uk > 0.0) {
            return Err(Error::invalid("temperatures > 0"));
        }
        for (name, v) in [
            ("atoms.a_eg_minus_a0", a.a_eg_minus_a0),
            ("atoms.b_gg_a0", a.b_gg_a0),
            ("atoms.b_ee_a0", a.b_ee_a0),
            ("atoms.b_eg_a0", a.b_eg_a0),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} finite")));
            }
        }

        let p = &self.protocol;
        if !(p.bare_rabi_hz > 0.0) {
            return Err(Error::invalid("bare_rabi_hz > 0"));
        }
        if p.kind.is_ramsey_like() && !(p.dark_time_s > 0.0) {
            return Err(Error::invalid("dark_time_s > 0 for Ramsey-type protocols"));
        }
        for (name, v) in [("t1_s", p.t1_s), ("t2_s", p.t2_s), ("pulse_time_s", p.pulse_time_s)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::invalid(format!("protocol.{name} > 0")));
                }
            }
        }
        if p.kind != Protocol::AnalyticRamsey {
            if p.detuning_points < 3 {
                return Err(Error::invalid("detuning_points >= 3"));
            }
            if !(p.detuning_max_hz > p.detuning_min_hz) {
                return Err(Error::invalid("detuning_max_hz > detuning_min_hz"));
            }
        }
        if truncated && p.spin_sectors > a.count / 2 + 1 {
            return Err(Error::invalid(
                "spin_sectors <= floor(n_atoms/2) + 1 (no more sectors than exist)",
            ));
        }
        if p.kind == Protocol::Rabi && !truncated && a.count > MAX_ATOMS_RABI_FULL {
            return Err(Error::invalid(format!(
                "full-space Rabi runs are limited to n_atoms <= {MAX_ATOMS_RABI_FULL}; enable spin truncation"
            )));
        }

        let m = &self.mc;
        if m.min_samples < 30 {
            return Err(Error::invalid("min_samples >= 30"));
        }
        if m.max_samples < m.min_samples {
            return Err(Error::invalid("max_samples >= min_samples"));
        }
        if !(m.target_stderr_hz > 0.0) {
            return Err(Error::invalid("target_stderr_hz > 0"));
        }
        Ok(())
    }

    /// Detuning grid in Hz.
    pub fn detuning_grid(&self) -> Vec<f64> {
        crate::util::linspace(
            self.protocol.detuning_min_hz,
            self.protocol.detuning_max_hz,
            self.protocol.detuning_points,
        )
    }

    /// Retained-sector count mapped to the sector-basis depth parameter:
    /// k sectors keep total spin N/2 .. N/2-(k-1).
    pub fn sector_depth(&self) -> Option<usize> {
        match self.protocol.spin_sectors {
            0 => None,
            k => Some(k - 1),
        }
    }
}

fn parse_config(text: &str) -> Result<Config> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
            line: line_no,
            msg: format!("expected `key = value`, got `{raw}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                msg: format!("empty value for key `{key}`"),
            });
        }
        if map.insert(key.clone(), (line_no, value)).is_some() {
            return Err(Error::ConfigParse {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }

    type Raw = BTreeMap<String, (usize, String)>;
    fn take_f64(map: &mut Raw, key: &str) -> Result<Option<f64>> {
        match map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| Error::ConfigParse {
                line,
                msg: format!("invalid number for `{key}`: `{v}`"),
            }),
        }
    }
    fn req_f64(map: &mut Raw, key: &str) -> Result<f64> {
        take_f64(map, key)?.ok_or_else(|| Error::invalid(format!("missing required key `{key}`")))
    }
    let map = &mut map;

    let defaults = PhysicalConstants::default();
    let constants = PhysicalConstants {
        hbar: take_f64(map, "constants.hbar_j_s")?.unwrap_or(defaults.hbar),
        boltzmann: take_f64(map, "constants.boltzmann_j_per_k")?.unwrap_or(defaults.boltzmann),
        atom_mass: take_f64(map, "constants.atom_mass_kg")?.unwrap_or(defaults.atom_mass),
        bohr_radius: take_f64(map, "constants.bohr_radius_m")?.unwrap_or(defaults.bohr_radius),
        clock_wavelength: take_f64(map, "constants.clock_wavelength_m")?.unwrap_or(defaults.clock_wavelength),
    };

    let trap = TrapConfig {
        nu_z_hz: req_f64(map, "trap.nu_z_hz")?,
        nu_r_hz: req_f64(map, "trap.nu_r_hz")?,
        depth_zquanta: req_f64(map, "trap.depth_zquanta")?,
        misalignment_rad: req_f64(map, "trap.misalignment_rad")?,
    };

    let atoms = AtomConfig {
        count: req_f64(map, "atoms.count")? as usize,
        temperature_z_uk: req_f64(map, "atoms.temperature_z_uk")?,
        temperature_r_uk: req_f64(map, "atoms.temperature_r_uk")?,
        a_eg_minus_a0: req_f64(map, "atoms.a_eg_minus_a0")?,
        b_gg_a0: req_f64(map, "atoms.b_gg_a0")?,
        b_ee_a0: req_f64(map, "atoms.b_ee_a0")?,
        b_eg_a0: req_f64(map, "atoms.b_eg_a0")?,
    };

    let kind_entry = map
        .remove("protocol.kind")
        .ok_or_else(|| Error::invalid("missing required key `protocol.kind`"))?;
    let kind = Protocol::parse(&kind_entry.1).ok_or(Error::ConfigParse {
        line: kind_entry.0,
        msg: format!(
            "unknown protocol `{}` (expected ramsey, rabi, collective-ramsey, collective-rabi or analytic-ramsey)",
            kind_entry.1
        ),
    })?;

    let analytic = kind == Protocol::AnalyticRamsey;
    let protocol = ProtocolConfig {
        kind,
        bare_rabi_hz: req_f64(map, "protocol.bare_rabi_hz")?,
        t1_s: take_f64(map, "protocol.t1_s")?,
        t2_s: take_f64(map, "protocol.t2_s")?,
        dark_time_s: if kind.is_ramsey_like() {
            req_f64(map, "protocol.dark_time_s")?
        } else {
            take_f64(map, "protocol.dark_time_s")?.unwrap_or(0.0)
        },
        pulse_time_s: take_f64(map, "protocol.pulse_time_s")?,
        detuning_min_hz: if analytic { take_f64(map, "protocol.detuning_min_hz")?.unwrap_or(0.0) } else { req_f64(map, "protocol.detuning_min_hz")? },
        detuning_max_hz: if analytic { take_f64(map, "protocol.detuning_max_hz")?.unwrap_or(0.0) } else { req_f64(map, "protocol.detuning_max_hz")? },
        detuning_points: if analytic {
            take_f64(map, "protocol.detuning_points")?.unwrap_or(0.0) as usize
        } else {
            req_f64(map, "protocol.detuning_points")? as usize
        },
        spin_sectors: take_f64(map, "protocol.spin_sectors")?.unwrap_or(0.0) as usize,
    };

    let mc = McConfig {
        min_samples: req_f64(map, "mc.min_samples")? as usize,
        max_samples: req_f64(map, "mc.max_samples")? as usize,
        target_stderr_hz: req_f64(map, "mc.target_stderr_hz")?,
        master_seed: req_f64(map, "mc.master_seed")? as u64,
    };

    if let Some((line, _)) = map.values().next() {
        let key = map.keys().next().unwrap().clone();
        return Err(Error::ConfigParse {
            line: *line,
            msg: format!("unknown key `{key}`"),
        });
    }

    Ok(Config { constants, trap, atoms, protocol, mc })
}

//! Thermal Monte-Carlo sampling of lattice-site motional configurations.
//!
//! Site occupation follows a two-temperature Boltzmann distribution over the
//! bound bands of a one-dimensional optical lattice: longitudinal quantum
//! number n_z at temperature T_z, radial quantum number n_r = n_x + n_y at
//! T_r with its natural (n_r + 1)-fold degeneracy, truncated where the state
//! energy reaches the radial trap depth. Identical fermions in the same
//! internal state cannot share a motional state, so ensembles containing a
//! duplicate are redrawn wholesale ("kicked out" at the ensemble level).

use crate::config::{AtomConfig, PhysicalConstants, TrapConfig};
use crate::error::{Error, Result};
use crate::util::stream_seed;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MotionalState {
    pub n_x: u32,
    pub n_y: u32,
    pub n_z: u32,
}

impl MotionalState {
    pub fn n_r(&self) -> u32 {
        self.n_x + self.n_y
    }

    /// Total motional energy (J): hbar w_z (n_z + 1/2) + hbar w_r (n_r + 1).
    pub fn energy(&self, trap: &TrapConfig, c: &PhysicalConstants) -> f64 {
        c.hbar * trap.omega_z() * (self.n_z as f64 + 0.5)
            + c.hbar * trap.omega_r() * (self.n_r() as f64 + 1.0)
    }
}

/// Normalized occupation probabilities over bound (n_z, n_r) bands and the
/// cumulative table used for inverse-CDF draws.
pub struct PartitionTable {
    /// (n_z, n_r, probability), ordered by n_z then n_r.
    pub entries: Vec<(u32, u32, f64)>,
    cdf: Vec<f64>,
    /// Highest 1D index any emitted state can carry (sizes overlap tables).
    pub max_index: usize,
}

/// Boltzmann weight over bound bands; the radial degeneracy factor n_r + 1
/// counts the (n_x, n_y) microstates sharing one energy.
pub fn partition_table(
    trap: &TrapConfig,
    atoms: &AtomConfig,
    c: &PhysicalConstants,
) -> Result<PartitionTable> {
    let depth = trap.depth_energy(c);
    let ez = c.hbar * trap.omega_z();
    let er = c.hbar * trap.omega_r();
    let beta_z = 1.0 / (c.boltzmann * atoms.t_z_kelvin());
    let beta_r = 1.0 / (c.boltzmann * atoms.t_r_kelvin());

    let mut entries = Vec::new();
    let mut max_index = 0usize;
    let mut nz = 0u32;
    loop {
        let e_z = ez * (nz as f64 + 0.5);
        if e_z + er >= depth {
            break;
        }
        let mut nr = 0u32;
        loop {
            let e = e_z + er * (nr as f64 + 1.0);
            if e >= depth {
                break;
            }
            let w = (nr as f64 + 1.0) * (-e_z * beta_z - er * (nr as f64 + 1.0) * beta_r).exp();
            entries.push((nz, nr, w));
            nr += 1;
        }
        max_index = max_index.max(nz as usize).max(nr.saturating_sub(1) as usize);
        nz += 1;
    }
    if entries.is_empty() {
        return Err(Error::Sampler(
            "no bound motional states below the trap depth".into(),
        ));
    }

    let total: f64 = entries.iter().map(|e| e.2).sum();
    if !(total > 0.0) {
        return Err(Error::Sampler(
            "partition function underflowed; temperatures are too far below the band spacing".into(),
        ));
    }
    let mut cdf = Vec::with_capacity(entries.len());
    let mut acc = 0.0;
    for e in entries.iter_mut() {
        e.2 /= total;
        acc += e.2;
        cdf.push(acc);
    }
    *cdf.last_mut().unwrap() = 1.0;
    Ok(PartitionTable { entries, cdf, max_index })
}

impl PartitionTable {
    /// Inverse-CDF draw of one atom: band from the table, then a uniform
    /// split of n_r over its degenerate (n_x, n_y) microstates.
    pub fn sample_state(&self, rng: &mut impl Rng) -> MotionalState {
        let u: f64 = rng.gen();
        let idx = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => (i + 1).min(self.entries.len() - 1),
            Err(i) => i.min(self.entries.len() - 1),
        };
        let (n_z, n_r, _) = self.entries[idx];
        let n_x = rng.gen_range(0..=n_r);
        MotionalState { n_x, n_y: n_r - n_x, n_z }
    }

    /// Probability of one (n_z, n_r) band.
    pub fn band_probability(&self, n_z: u32, n_r: u32) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == n_z && e.1 == n_r)
            .map(|e| e.2)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SampleEnsemble {
    pub states: Vec<MotionalState>,
    pub sample_index: u64,
    /// Ensembles discarded for a Pauli collision before this one succeeded.
    pub rejections: u64,
}

/// Per-sample RNG stream; independent of thread count and batch order.
pub fn sample_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master_seed, sample_index))
}

/// Draws an N-atom ensemble, redrawing whole ensembles that contain two
/// atoms in the same motional state.
pub fn draw_ensemble(
    table: &PartitionTable,
    n_atoms: usize,
    master_seed: u64,
    sample_index: u64,
) -> Result<SampleEnsemble> {
    let mut rng = sample_rng(master_seed, sample_index);
    let mut states = Vec::with_capacity(n_atoms);
    // A thousand consecutive failed attempts means the majority of the
    // ensemble stream is being rejected; the configuration is degenerate.
    for attempt in 0..1000u64 {
        states.clear();
        let mut distinct = true;
        for _ in 0..n_atoms {
            let s = table.sample_state(&mut rng);
            if states.contains(&s) {
                distinct = false;
                break;
            }
            states.push(s);
        }
        if distinct {
            return Ok(SampleEnsemble { states, sample_index, rejections: attempt });
        }
    }
    Err(Error::Sampler(
        "Pauli rejection rate exceeded 50% over 1000 consecutive attempts; \
         too few motional states for the requested atom number"
            .into(),
    ))
}

/// One grid point of the Rabi-frequency inhomogeneity map.
#[derive(Debug, Clone, Copy)]
pub struct InhomogeneityPoint {
    pub t_z_uk: f64,
    pub t_r_uk: f64,
    pub mean_rabi_hz: f64,
    pub std_rabi_hz: f64,
}

impl InhomogeneityPoint {
    pub fn ratio(&self) -> f64 {
        self.std_rabi_hz / self.mean_rabi_hz
    }
}

/// Monte-Carlo map of the thermal mean and spread of the mode-dependent Rabi
/// frequency over a temperature grid.
pub fn rabi_inhomogeneity_map(
    trap: &TrapConfig,
    atoms: &AtomConfig,
    c: &PhysicalConstants,
    bare_rabi_hz: f64,
    grid: &[(f64, f64)],
    draws_per_point: usize,
    master_seed: u64,
) -> Result<Vec<InhomogeneityPoint>> {
    let mut out = Vec::with_capacity(grid.len());
    for (gi, &(t_z_uk, t_r_uk)) in grid.iter().enumerate() {
        let mut at = atoms.clone();
        at.temperature_z_uk = t_z_uk;
        at.temperature_r_uk = t_r_uk;
        let table = partition_table(trap, &at, c)?;
        let model = crate::couplings::RabiModel::new(trap, c, bare_rabi_hz, table.max_index);
        let mut rng = sample_rng(master_seed, 0x1AB1_0000 + gi as u64);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws_per_point {
            let s = table.sample_state(&mut rng);
            let w = model.frequency(&s);
            sum += w;
            sum_sq += w * w;
        }
        let n = draws_per_point as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        out.push(InhomogeneityPoint {
            t_z_uk,
            t_r_uk,
            mean_rabi_hz: mean,
            std_rabi_hz: var.sqrt(),
        });
    }
    Ok(out)
}

/// Exact thermal mean and standard deviation of the Rabi frequency, summed
/// over the partition table with the degenerate radial splittings averaged
/// in closed form. Serves as the reference for the Monte-Carlo map and as
/// the scan anchor that converts pulse areas to durations.
pub fn thermal_rabi_moments(
    trap: &TrapConfig,
    atoms: &AtomConfig,
    c: &PhysicalConstants,
    bare_rabi_hz: f64,
) -> Result<(f64, f64)> {
    let table = partition_table(trap, atoms, c)?;
    let model = crate::couplings::RabiModel::new(trap, c, bare_rabi_hz, table.max_index);
    // Prefix sums over the transverse Laguerre factor turn the uniform
    // average over (n_x, n_y) splittings into O(1) per band.
    let lag = model.transverse_factors();
    let mut pre1 = vec![0.0; lag.len() + 1];
    let mut pre2 = vec![0.0; lag.len() + 1];
    for (i, &l) in lag.iter().enumerate() {
        pre1[i + 1] = pre1[i] + l;
        pre2[i + 1] = pre2[i] + l * l;
    }
    let mut mean = 0.0;
    let mut second = 0.0;
    for &(n_z, n_r, prob) in &table.entries {
        let axial = model.axial_factor(n_z);
        let deg = n_r as usize + 1;
        let m1 = pre1[deg] / deg as f64;
        let m2 = pre2[deg] / deg as f64;
        mean += prob * axial * m1;
        second += prob * axial * axial * m2;
    }
    mean *= bare_rabi_hz;
    second *= bare_rabi_hz * bare_rabi_hz;
    Ok((mean, (second - mean * mean).max(0.0).sqrt()))
}

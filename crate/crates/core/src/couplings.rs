//! Interaction couplings and drive amplitudes for a sampled motional
//! configuration.
//!
//! Each ordered atom pair (i, j) carries an s-wave geometry factor G_S and a
//! p-wave factor G_P built from products of 1D mode overlaps; scattering
//! lengths and volumes then weight them into the spin-model couplings
//!
//!   J_ij = a_eg G_S + b_eg^3 G_P
//!   C_ij = (b_ee^3 - b_gg^3) G_P
//!   X_ij = (b_ee^3 - 2 b_eg^3 + b_gg^3) G_P
//!
//! all in rad/s. The probe drive acquires a mode-dependent Rabi frequency
//! through Lamb-Dicke factors along the lattice axis and, for a misaligned
//! probe, the radial x axis.

use crate::config::{AtomConfig, PhysicalConstants, TrapConfig};
use crate::error::{Error, Result};
use crate::hermite::laguerre_sequence;
use crate::overlap::SliceOverlaps;
use crate::sampler::MotionalState;
use nalgebra::DMatrix;

/// Geometry prefactors for the overlap-product couplings (SI).
#[derive(Debug, Clone, Copy)]
pub struct TrapGeometry {
    /// 4 pi hbar/m R_r^2 R_z; multiplies the s-wave overlap product (1/(m s)).
    pub pref_s: f64,
    /// 6 pi hbar/m R_r^4 R_z; multiplies the radial p-wave channel (1/(m^3 s)).
    pub pref_p_radial: f64,
    /// 6 pi hbar/m R_r^2 R_z^3; multiplies the axial p-wave channel (1/(m^3 s)).
    pub pref_p_axial: f64,
}

impl TrapGeometry {
    pub fn new(trap: &TrapConfig, c: &PhysicalConstants) -> Self {
        let r_r = trap.r_r(c);
        let r_z = trap.r_z(c);
        let hbar_m = c.hbar / c.atom_mass;
        TrapGeometry {
            pref_s: 4.0 * std::f64::consts::PI * hbar_m * r_r * r_r * r_z,
            pref_p_radial: 6.0 * std::f64::consts::PI * hbar_m * r_r.powi(4) * r_z,
            pref_p_axial: 6.0 * std::f64::consts::PI * hbar_m * r_r * r_r * r_z.powi(3),
        }
    }
}

/// Geometry factors (G_S, G_P) for one atom pair, in rad/s per unit
/// scattering length and volume respectively.
pub fn pair_couplings(
    a: &MotionalState,
    b: &MotionalState,
    geom: &TrapGeometry,
    slice: &SliceOverlaps,
) -> (f64, f64) {
    let sx = slice.s2(a.n_x as usize, b.n_x as usize);
    let sy = slice.s2(a.n_y as usize, b.n_y as usize);
    let sz = slice.s2(a.n_z as usize, b.n_z as usize);
    let px = slice.p2(a.n_x as usize, b.n_x as usize);
    let py = slice.p2(a.n_y as usize, b.n_y as usize);
    let pz = slice.p2(a.n_z as usize, b.n_z as usize);

    let s_product = sx * sy * sz;
    let p_radial = px * sy * sz + sx * py * sz;
    let p_axial = sx * sy * pz;

    (
        geom.pref_s * s_product,
        geom.pref_p_radial * p_radial + geom.pref_p_axial * p_axial,
    )
}

/// Pairwise couplings (rad/s) and per-atom Rabi frequencies (Hz) for one
/// sampled ensemble. Matrices are symmetric with zero diagonal.
#[derive(Debug, Clone)]
pub struct CouplingTables {
    pub n: usize,
    pub j: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub g_s: DMatrix<f64>,
    pub g_p: DMatrix<f64>,
    pub rabi_hz: Vec<f64>,
}

impl CouplingTables {
    /// Zero-coupling tables with a homogeneous drive; useful for limits and
    /// tests.
    pub fn free(n: usize, rabi_hz: f64) -> Self {
        CouplingTables {
            n,
            j: DMatrix::zeros(n, n),
            c: DMatrix::zeros(n, n),
            x: DMatrix::zeros(n, n),
            g_s: DMatrix::zeros(n, n),
            g_p: DMatrix::zeros(n, n),
            rabi_hz: vec![rabi_hz; n],
        }
    }

    /// Sample mean of the per-atom Rabi frequencies (Hz).
    pub fn mean_rabi_hz(&self) -> f64 {
        crate::util::mean(&self.rabi_hz)
    }

    /// Dressing field h_i = sum_j C_ij produced by expanding the symmetric
    /// C term into per-atom longitudinal fields.
    pub fn c_field(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| j != i).map(|j| self.c[(i, j)]).sum())
            .collect()
    }

    /// Pair-averaged collective parameters: mean Rabi frequency (Hz) and the
    /// averages of X and C over ordered pairs (rad/s).
    pub fn collective_params(&self) -> (f64, f64, f64) {
        let n = self.n;
        let mut xbar = 0.0;
        let mut cbar = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    xbar += self.x[(i, j)];
                    cbar += self.c[(i, j)];
                }
            }
        }
        let pairs = (n * (n - 1)) as f64;
        (self.mean_rabi_hz(), xbar / pairs, cbar / pairs)
    }
}

/// Mode-dependent Rabi frequency of the probe.
///
/// A probe tilted by the misalignment angle picks up Lamb-Dicke parameters
/// eta_z = k cos(dtheta) x0_z and eta_x = k sin(dtheta) x0_r, with x0 the
/// zero-point lengths; the y axis stays dark. Each excited mode scales the
/// carrier by exp(-eta^2/2) L_n(eta^2).
pub struct RabiModel {
    bare_hz: f64,
    axial: Vec<f64>,
    transverse: Vec<f64>,
}

impl RabiModel {
    pub fn new(trap: &TrapConfig, c: &PhysicalConstants, bare_rabi_hz: f64, n_max: usize) -> Self {
        let k = c.probe_wavenumber();
        let x0_z = (c.hbar / (2.0 * c.atom_mass * trap.omega_z())).sqrt();
        let x0_r = (c.hbar / (2.0 * c.atom_mass * trap.omega_r())).sqrt();
        let eta_z_sq = (k * trap.misalignment_rad.cos() * x0_z).powi(2);
        let eta_x_sq = (k * trap.misalignment_rad.sin() * x0_r).powi(2);

        let env_z = (-0.5 * eta_z_sq).exp();
        let env_x = (-0.5 * eta_x_sq).exp();
        let axial = laguerre_sequence(eta_z_sq, n_max)
            .into_iter()
            .map(|l| env_z * l)
            .collect();
        let transverse = laguerre_sequence(eta_x_sq, n_max)
            .into_iter()
            .map(|l| env_x * l)
            .collect();
        RabiModel { bare_hz: bare_rabi_hz, axial, transverse }
    }

    /// Dimensionless axial suppression factor for band n_z.
    pub fn axial_factor(&self, n_z: u32) -> f64 {
        self.axial[n_z as usize]
    }

    /// Dimensionless transverse factors indexed by n_x.
    pub fn transverse_factors(&self) -> &[f64] {
        &self.transverse
    }

    /// Signed Rabi frequency (Hz) of one motional state.
    pub fn frequency(&self, s: &MotionalState) -> f64 {
        self.bare_hz * self.axial[s.n_z as usize] * self.transverse[s.n_x as usize]
    }
}

/// Builds the full coupling tables for a sampled ensemble.
pub fn build_coupling_tables(
    states: &[MotionalState],
    atoms: &AtomConfig,
    trap: &TrapConfig,
    c: &PhysicalConstants,
    slice: &SliceOverlaps,
    rabi: &RabiModel,
) -> Result<CouplingTables> {
    let n = states.len();
    if n < 1 {
        return Err(Error::Dimension("coupling tables need at least one atom".into()));
    }
    let geom = TrapGeometry::new(trap, c);
    let a_eg = atoms.a_eg_minus_m(c);
    let v_eg = atoms.b_eg_vol(c);
    let v_ee = atoms.b_ee_vol(c);
    let v_gg = atoms.b_gg_vol(c);

    let mut tables = CouplingTables::free(n, 0.0);
    for i in 0..n {
        tables.rabi_hz[i] = rabi.frequency(&states[i]);
        for jdx in 0..i {
            let (g_s, g_p) = pair_couplings(&states[i], &states[jdx], &geom, slice);
            let j_val = a_eg * g_s + v_eg * g_p;
            let c_val = (v_ee - v_gg) * g_p;
            let x_val = (v_ee - 2.0 * v_eg + v_gg) * g_p;
            for (mat, v) in [
                (&mut tables.g_s, g_s),
                (&mut tables.g_p, g_p),
                (&mut tables.j, j_val),
                (&mut tables.c, c_val),
                (&mut tables.x, x_val),
            ] {
                mat[(i, jdx)] = v;
                mat[(jdx, i)] = v;
            }
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlap::{OverlapCache, S_GROUND};

    fn constants() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn trap() -> TrapConfig {
        TrapConfig { nu_z_hz: 66e3, nu_r_hz: 250.0, depth_zquanta: 5.0, misalignment_rad: 0.01 }
    }

    fn atoms() -> AtomConfig {
        AtomConfig {
            count: 3,
            temperature_z_uk: 3.0,
            temperature_r_uk: 3.0,
            a_eg_minus_a0: 68.0,
            b_gg_a0: 73.8,
            b_ee_a0: 150.19,
            b_eg_a0: 192.34,
        }
    }

    fn st(n_x: u32, n_y: u32, n_z: u32) -> MotionalState {
        MotionalState { n_x, n_y, n_z }
    }

    #[test]
    fn ground_band_pair_is_purely_axial_p_wave() {
        // Identical radial modes kill the radial Wronskians, so G_P comes
        // from the axial channel alone.
        let c = constants();
        let geom = TrapGeometry::new(&trap(), &c);
        let slice = SliceOverlaps::new(4).unwrap();
        let (g_s, g_p) = pair_couplings(&st(0, 0, 0), &st(0, 0, 1), &geom, &slice);

        let s00 = S_GROUND;
        let s01 = 0.5 * S_GROUND;
        let p01 = -2.0 * S_GROUND;
        assert!((g_s - geom.pref_s * s00 * s00 * s01).abs() / g_s.abs() < 1e-12);
        let expected_p = geom.pref_p_axial * s00 * s00 * p01;
        assert!((g_p - expected_p).abs() / expected_p.abs() < 1e-12);
        assert!(g_s > 0.0);
        assert!(g_p < 0.0);
    }

    #[test]
    fn slice_path_matches_recursion_path_for_low_bands() {
        let c = constants();
        let geom = TrapGeometry::new(&trap(), &c);
        let slice = SliceOverlaps::new(16).unwrap();
        let cache = OverlapCache::new();
        let pairs = [
            (st(0, 0, 0), st(1, 0, 0)),
            (st(2, 1, 0), st(0, 3, 1)),
            (st(5, 2, 3), st(4, 4, 2)),
            (st(10, 0, 1), st(7, 2, 0)),
        ];
        for (a, b) in pairs {
            let (g_s, g_p) = pair_couplings(&a, &b, &geom, &slice);
            let s2 = |m: u32, n: u32| cache.s(m, n, n, m).unwrap();
            let p2 = |m: u32, n: u32| cache.p(m, n, n, m).unwrap();
            let sx = s2(a.n_x, b.n_x);
            let sy = s2(a.n_y, b.n_y);
            let sz = s2(a.n_z, b.n_z);
            let g_s_ref = geom.pref_s * sx * sy * sz;
            let g_p_ref = geom.pref_p_radial * (p2(a.n_x, b.n_x) * sy * sz + sx * p2(a.n_y, b.n_y) * sz)
                + geom.pref_p_axial * sx * sy * p2(a.n_z, b.n_z);
            assert!(
                (g_s - g_s_ref).abs() <= 1e-9 * g_s_ref.abs().max(1e-30),
                "G_S {g_s} vs {g_s_ref}"
            );
            assert!(
                (g_p - g_p_ref).abs() <= 1e-9 * g_p_ref.abs().max(1e-30),
                "G_P {g_p} vs {g_p_ref}"
            );
        }
    }

    #[test]
    fn tables_are_symmetric_with_zero_diagonal() {
        let c = constants();
        let states = [st(0, 0, 0), st(3, 1, 1), st(8, 2, 0), st(1, 1, 2)];
        let slice = SliceOverlaps::new(10).unwrap();
        let rabi = RabiModel::new(&trap(), &c, 500.0, 10);
        let t = build_coupling_tables(&states, &atoms(), &trap(), &c, &slice, &rabi).unwrap();
        for m in [&t.j, &t.c, &t.x, &t.g_s, &t.g_p] {
            for i in 0..4 {
                assert_eq!(m[(i, i)], 0.0);
                for j in 0..4 {
                    assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
        }
        // The C/X ratio is fixed by scattering volumes alone, independent of
        // which pair or temperature produced them.
        let a = atoms();
        let vr = (a.b_ee_a0.powi(3) - a.b_gg_a0.powi(3))
            / (a.b_ee_a0.powi(3) - 2.0 * a.b_eg_a0.powi(3) + a.b_gg_a0.powi(3));
        for i in 0..4usize {
            for j in 0..i {
                let ratio = t.c[(i, j)] / t.x[(i, j)];
                assert!((ratio - vr).abs() < 1e-12 * vr.abs());
            }
        }
    }

    #[test]
    fn c_field_sums_rows() {
        let c = constants();
        let states = [st(0, 0, 0), st(1, 0, 0), st(0, 1, 1)];
        let slice = SliceOverlaps::new(4).unwrap();
        let rabi = RabiModel::new(&trap(), &c, 500.0, 4);
        let t = build_coupling_tables(&states, &atoms(), &trap(), &c, &slice, &rabi).unwrap();
        let h = t.c_field();
        for i in 0..3 {
            let expect: f64 = (0..3).filter(|&j| j != i).map(|j| t.c[(i, j)]).sum();
            assert_eq!(h[i], expect);
        }
    }

    #[test]
    fn rabi_envelope_decreases_at_low_band_index() {
        let c = constants();
        let model = RabiModel::new(&trap(), &c, 500.0, 10);
        let f0 = model.frequency(&st(0, 0, 0)).abs();
        let f1 = model.frequency(&st(0, 0, 1)).abs();
        let f2 = model.frequency(&st(0, 0, 2)).abs();
        assert!(f0 > f1 && f1 > f2, "{f0} {f1} {f2}");
        assert!(f0 < 500.0);
    }

    #[test]
    fn aligned_probe_ignores_radial_modes() {
        let c = constants();
        let mut tr = trap();
        tr.misalignment_rad = 0.0;
        let model = RabiModel::new(&tr, &c, 500.0, 50);
        let base = model.frequency(&st(0, 0, 1));
        for n_x in [1u32, 10, 50] {
            assert_eq!(model.frequency(&st(n_x, 0, 1)), base);
        }
    }

    #[test]
    fn interaction_scale_is_subhertz_at_thermal_conditions() {
        // Thermal radial spreading dilutes the overlaps: pair-averaged
        // couplings for a representative hot configuration sit well below
        // the drive but above numerical noise.
        let c = constants();
        let states = [st(120, 80, 0), st(90, 140, 1), st(200, 30, 0), st(60, 60, 2), st(10, 150, 1)];
        let slice = SliceOverlaps::new(256).unwrap();
        let rabi = RabiModel::new(&trap(), &c, 500.0, 256);
        let t = build_coupling_tables(&states, &atoms(), &trap(), &c, &slice, &rabi).unwrap();
        let (_, xbar, cbar) = t.collective_params();
        let xbar_hz = xbar.abs() / (2.0 * std::f64::consts::PI);
        let cbar_hz = cbar.abs() / (2.0 * std::f64::consts::PI);
        assert!(xbar_hz > 1e-4 && xbar_hz < 5.0, "xbar {xbar_hz} Hz");
        assert!(cbar_hz > 1e-5 && cbar_hz < 5.0, "cbar {cbar_hz} Hz");
    }
}

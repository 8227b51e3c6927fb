//! Time evolution of spin states by exact diagonalization.
//!
//! States are stored as split real and imaginary parts so all heavy linear
//! algebra runs on real symmetric matrices. Propagation uses the spectral
//! form V exp(-i Lambda t) V^T; pulses act as exact per-atom 2x2 rotations
//! that include the detuning.

use crate::error::{Error, Result};
use crate::hamiltonian::{DarkBlocks, HamiltonianMatrix, SpinSectorBasis, TruncatedBlock};
use nalgebra::{DMatrix, DVector};

/// Complex state vector in split representation.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub re: DVector<f64>,
    pub im: DVector<f64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector { re: DVector::zeros(dim), im: DVector::zeros(dim) }
    }

    /// All-ground product state (every atom spin-down).
    pub fn ground(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.re[0] = 1.0;
        s
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.re.norm_squared() + self.im.norm_squared()
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.re[k] * self.re[k] + self.im[k] * self.im[k]
    }

    /// Mean excited-state fraction over n atoms in the bit basis.
    pub fn excited_fraction(&self, n: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.dim() {
            acc += self.probability(k) * k.count_ones() as f64;
        }
        acc / n as f64
    }
}

/// Eigendecomposition of a real symmetric Hamiltonian, eigenvalues
/// ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        let eig = nalgebra::SymmetricEigen::try_new(matrix, f64::EPSILON, 0)
            .ok_or(Error::Eigensolver(dim))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut values = DVector::zeros(dim);
        let mut vectors = DMatrix::zeros(dim, dim);
        for (c, &e) in order.iter().enumerate() {
            values[c] = eig.eigenvalues[e];
            vectors.column_mut(c).copy_from(&eig.eigenvectors.column(e));
        }
        Ok(EigenSystem { values, vectors })
    }

    pub fn from_hamiltonian(h: &HamiltonianMatrix) -> Result<Self> {
        Self::new(h.matrix.clone())
    }

    /// Propagates a state for time t (seconds; eigenvalues in rad/s).
    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        let wr = self.vectors.tr_mul(&psi.re);
        let wi = self.vectors.tr_mul(&psi.im);
        let dim = wr.len();
        let mut pr = DVector::zeros(dim);
        let mut pi = DVector::zeros(dim);
        for m in 0..dim {
            let theta = -self.values[m] * t;
            let (s, c) = theta.sin_cos();
            pr[m] = wr[m] * c - wi[m] * s;
            pi[m] = wr[m] * s + wi[m] * c;
        }
        StateVector { re: &self.vectors * pr, im: &self.vectors * pi }
    }
}

/// Exact 2x2 propagator of one driven atom over time t, as complex rows
/// ((dd, du), (ud, uu)) in the (down, up) basis. Detuning and Rabi
/// frequency are in Hz.
pub fn pulse_matrix(rabi_hz: f64, delta_hz: f64, t: f64) -> [[(f64, f64); 2]; 2] {
    let bx = -std::f64::consts::PI * rabi_hz;
    let bz = std::f64::consts::PI * delta_hz;
    let norm = (bx * bx + bz * bz).sqrt();
    if norm == 0.0 || t == 0.0 {
        return [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]];
    }
    let theta = norm * t;
    let (s, c) = theta.sin_cos();
    let nx = bx / norm;
    let nz = bz / norm;
    // U = cos(theta) I - i sin(theta) (nx sx + nz sz) with sz = diag(1, -1)
    // on (down, up).
    [
        [(c, -nz * s), (0.0, -nx * s)],
        [(0.0, -nx * s), (c, nz * s)],
    ]
}

/// Applies simultaneous per-atom pulse rotations to a full-space state.
pub fn apply_pulse(psi: &StateVector, rabi_hz: &[f64], delta_hz: f64, t: f64) -> StateVector {
    let n = rabi_hz.len();
    let dim = psi.dim();
    debug_assert_eq!(dim, 1usize << n);
    let mut out = psi.clone();
    for (i, &omega) in rabi_hz.iter().enumerate() {
        let u = pulse_matrix(omega, delta_hz, t);
        let bit = 1usize << i;
        for k in 0..dim {
            if k & bit == 0 {
                let kd = k;
                let ku = k | bit;
                let (dr, di) = (out.re[kd], out.im[kd]);
                let (ur, ui) = (out.re[ku], out.im[ku]);
                let (a_re, a_im) = u[0][0];
                let (b_re, b_im) = u[0][1];
                let (c_re, c_im) = u[1][0];
                let (d_re, d_im) = u[1][1];
                out.re[kd] = a_re * dr - a_im * di + b_re * ur - b_im * ui;
                out.im[kd] = a_re * di + a_im * dr + b_re * ui + b_im * ur;
                out.re[ku] = c_re * dr - c_im * di + d_re * ur - d_im * ui;
                out.im[ku] = c_re * di + c_im * dr + d_re * ui + d_im * ur;
            }
        }
    }
    out
}

/// Product state reached from all-ground by one pulse, built directly from
/// per-atom spinors.
pub fn pulse_product_state(rabi_hz: &[f64], delta_hz: f64, t: f64) -> StateVector {
    let n = rabi_hz.len();
    let mut out = StateVector::ground(1 << n);
    for (i, &omega) in rabi_hz.iter().enumerate() {
        let u = pulse_matrix(omega, delta_hz, t);
        let bit = 1usize << i;
        // The state so far occupies only indices with bit i clear.
        for k in (0..1usize << n).rev() {
            if k & bit == 0 {
                let (dr, di) = (out.re[k], out.im[k]);
                let (a_re, a_im) = u[0][0];
                let (c_re, c_im) = u[1][0];
                out.re[k] = a_re * dr - a_im * di;
                out.im[k] = a_re * di + a_im * dr;
                out.re[k | bit] = c_re * dr - c_im * di;
                out.im[k | bit] = c_re * di + c_im * dr;
            }
        }
    }
    out
}

/// Mean per-atom excitation produced by a single pulse from the ground
/// state, without building the many-body state.
pub fn pulse_excitation(rabi_hz: &[f64], delta_hz: f64, t: f64) -> f64 {
    let mut acc = 0.0;
    for &omega in rabi_hz {
        let u = pulse_matrix(omega, delta_hz, t);
        let (c_re, c_im) = u[1][0];
        acc += c_re * c_re + c_im * c_im;
    }
    acc / rabi_hz.len() as f64
}

/// Eigendecomposed magnetization blocks of the dark Hamiltonian.
///
/// The blocks are detuning-independent; a detuning only adds the diagonal
/// -2 pi delta M, so one decomposition serves a whole detuning sweep.
#[derive(Debug, Clone)]
pub struct DarkEigen {
    pub n: usize,
    pub dim: usize,
    pub blocks: Vec<DarkBlockEigen>,
}

#[derive(Debug, Clone)]
pub struct DarkBlockEigen {
    pub mz_twice: i32,
    pub states: Vec<usize>,
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl DarkEigen {
    pub fn new(blocks: &DarkBlocks) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.blocks.len());
        for b in &blocks.blocks {
            let eig = EigenSystem::new(b.matrix.clone())?;
            out.push(DarkBlockEigen {
                mz_twice: b.mz_twice,
                states: b.states.clone(),
                values: eig.values,
                vectors: eig.vectors,
            });
        }
        Ok(DarkEigen { n: blocks.n, dim: 1 << blocks.n, blocks: out })
    }

    /// Evolves a full-space state for time tau at a given detuning (Hz).
    pub fn evolve(&self, psi: &StateVector, tau: f64, delta_hz: f64) -> StateVector {
        let mut out = StateVector::zeros(self.dim);
        let two_pi = 2.0 * std::f64::consts::PI;
        for b in &self.blocks {
            let bdim = b.states.len();
            let mut lr = DVector::zeros(bdim);
            let mut li = DVector::zeros(bdim);
            for (a, &k) in b.states.iter().enumerate() {
                lr[a] = psi.re[k];
                li[a] = psi.im[k];
            }
            let wr = b.vectors.tr_mul(&lr);
            let wi = b.vectors.tr_mul(&li);
            let shift = -two_pi * delta_hz * 0.5 * b.mz_twice as f64;
            let mut pr = DVector::zeros(bdim);
            let mut pi = DVector::zeros(bdim);
            for m in 0..bdim {
                let theta = -(b.values[m] + shift) * tau;
                let (s, c) = theta.sin_cos();
                pr[m] = wr[m] * c - wi[m] * s;
                pi[m] = wr[m] * s + wi[m] * c;
            }
            let or = &b.vectors * pr;
            let oi = &b.vectors * pi;
            for (a, &k) in b.states.iter().enumerate() {
                out.re[k] = or[a];
                out.im[k] = oi[a];
            }
        }
        out
    }

    /// Evolves one state across a detuning grid, reusing the spectral data.
    pub fn sweep(&self, psi: &StateVector, tau: f64, detunings_hz: &[f64]) -> Vec<StateVector> {
        detunings_hz.iter().map(|&d| self.evolve(psi, tau, d)).collect()
    }
}

/// Eigendecomposed truncated dark blocks, for sector-projected Ramsey
/// evolution. Coordinates live in the sector basis.
#[derive(Debug, Clone)]
pub struct TruncatedDarkEigen {
    pub ncols: usize,
    pub blocks: Vec<TruncatedBlockEigen>,
}

#[derive(Debug, Clone)]
pub struct TruncatedBlockEigen {
    pub mz_twice: i32,
    pub cols: Vec<usize>,
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl TruncatedDarkEigen {
    pub fn new(blocks: &[TruncatedBlock], ncols: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for b in blocks {
            let eig = EigenSystem::new(b.matrix.clone())?;
            out.push(TruncatedBlockEigen {
                mz_twice: b.mz_twice,
                cols: b.cols.clone(),
                values: eig.values,
                vectors: eig.vectors,
            });
        }
        Ok(TruncatedDarkEigen { ncols, blocks: out })
    }

    /// Evolves sector-basis coordinates for time tau at a detuning (Hz).
    pub fn evolve(&self, coords: &StateVector, tau: f64, delta_hz: f64) -> StateVector {
        let mut out = StateVector::zeros(self.ncols);
        let two_pi = 2.0 * std::f64::consts::PI;
        for b in &self.blocks {
            let bdim = b.cols.len();
            let mut lr = DVector::zeros(bdim);
            let mut li = DVector::zeros(bdim);
            for (a, &c) in b.cols.iter().enumerate() {
                lr[a] = coords.re[c];
                li[a] = coords.im[c];
            }
            let wr = b.vectors.tr_mul(&lr);
            let wi = b.vectors.tr_mul(&li);
            let shift = -two_pi * delta_hz * 0.5 * b.mz_twice as f64;
            let mut pr = DVector::zeros(bdim);
            let mut pi = DVector::zeros(bdim);
            for m in 0..bdim {
                let theta = -(b.values[m] + shift) * tau;
                let (s, c) = theta.sin_cos();
                pr[m] = wr[m] * c - wi[m] * s;
                pi[m] = wr[m] * s + wi[m] * c;
            }
            let or = &b.vectors * pr;
            let oi = &b.vectors * pi;
            for (a, &c) in b.cols.iter().enumerate() {
                out.re[c] = or[a];
                out.im[c] = oi[a];
            }
        }
        out
    }
}

/// Projects a full-space state onto sector-basis coordinates.
pub fn project_state(basis: &SpinSectorBasis, psi: &StateVector) -> StateVector {
    StateVector { re: basis.columns.tr_mul(&psi.re), im: basis.columns.tr_mul(&psi.im) }
}

/// Expands sector-basis coordinates back into the full space.
pub fn expand_state(basis: &SpinSectorBasis, coords: &StateVector) -> StateVector {
    StateVector { re: &basis.columns * &coords.re, im: &basis.columns * &coords.im }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::CouplingTables;
    use crate::hamiltonian::{build_full_hamiltonian, dark_blocks};

    fn toy_tables(n: usize) -> CouplingTables {
        let mut t = CouplingTables::free(n, 40.0);
        let mut seed = 0xfeed_u64;
        let mut next = || {
            seed = crate::util::splitmix64(&mut seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            t.rabi_hz[i] = 40.0 + 2.0 * next();
            for j in 0..i {
                for m in [&mut t.j, &mut t.c, &mut t.x] {
                    let v = next();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        t
    }

    #[test]
    fn single_spin_rabi_flopping() {
        let u = pulse_matrix(100.0, 0.0, 0.0025);
        // Resonant pulse of area pi/2: P_e = sin^2(pi Omega t) = 1/2.
        let pe = u[1][0].0.powi(2) + u[1][0].1.powi(2);
        assert!((pe - 0.5).abs() < 1e-12);
        let u = pulse_matrix(100.0, 0.0, 0.005);
        let pe = u[1][0].0.powi(2) + u[1][0].1.powi(2);
        assert!((pe - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detuned_single_spin_matches_closed_form() {
        let omega = 80.0;
        let delta = 60.0;
        let t = 0.0037;
        let u = pulse_matrix(omega, delta, t);
        let pe = u[1][0].0.powi(2) + u[1][0].1.powi(2);
        let w = std::f64::consts::PI * (omega * omega + delta * delta).sqrt();
        let expect = (omega * omega / (omega * omega + delta * delta)) * (w * t).sin().powi(2);
        assert!((pe - expect).abs() < 1e-12, "{pe} vs {expect}");
    }

    #[test]
    fn pulse_matrix_is_unitary() {
        for (o, d, t) in [(100.0, 0.0, 0.001), (5.0, 3.0, 0.21), (0.0, 2.0, 0.5), (0.0, 0.0, 1.0)] {
            let u = pulse_matrix(o, d, t);
            // Column norms and orthogonality.
            let n0 = u[0][0].0.powi(2) + u[0][0].1.powi(2) + u[1][0].0.powi(2) + u[1][0].1.powi(2);
            let n1 = u[0][1].0.powi(2) + u[0][1].1.powi(2) + u[1][1].0.powi(2) + u[1][1].1.powi(2);
            assert!((n0 - 1.0).abs() < 1e-14);
            assert!((n1 - 1.0).abs() < 1e-14);
            let dot_re = u[0][0].0 * u[0][1].0 + u[0][0].1 * u[0][1].1
                + u[1][0].0 * u[1][1].0 + u[1][0].1 * u[1][1].1;
            let dot_im = u[0][0].0 * u[0][1].1 - u[0][0].1 * u[0][1].0
                + u[1][0].0 * u[1][1].1 - u[1][0].1 * u[1][1].0;
            assert!(dot_re.abs() < 1e-14 && dot_im.abs() < 1e-14);
        }
    }

    #[test]
    fn product_state_matches_applied_pulse() {
        let rabi = [90.0, 110.0, 95.0];
        let direct = pulse_product_state(&rabi, 12.0, 0.0021);
        let applied = apply_pulse(&StateVector::ground(8), &rabi, 12.0, 0.0021);
        assert!((&direct.re - &applied.re).abs().max() < 1e-14);
        assert!((&direct.im - &applied.im).abs().max() < 1e-14);
        assert!((direct.norm_sq() - 1.0).abs() < 1e-13);
        let pe = direct.excited_fraction(3);
        assert!((pe - pulse_excitation(&rabi, 12.0, 0.0021)).abs() < 1e-13);
    }

    #[test]
    fn evolution_is_unitary_and_reversible() {
        let t = toy_tables(4);
        let h = build_full_hamiltonian(&t, 0.7, true).unwrap();
        let eig = EigenSystem::from_hamiltonian(&h).unwrap();
        let psi0 = pulse_product_state(&t.rabi_hz, 0.0, 0.004);
        let psi1 = eig.evolve(&psi0, 0.13);
        assert!((psi1.norm_sq() - 1.0).abs() < 1e-10);
        let back = eig.evolve(&psi1, -0.13);
        assert!((&back.re - &psi0.re).abs().max() < 1e-10);
        assert!((&back.im - &psi0.im).abs().max() < 1e-10);
    }

    #[test]
    fn energy_is_conserved() {
        let t = toy_tables(4);
        let h = build_full_hamiltonian(&t, 0.3, true).unwrap();
        let eig = EigenSystem::from_hamiltonian(&h).unwrap();
        let psi0 = pulse_product_state(&t.rabi_hz, 0.3, 0.003);
        let energy = |psi: &StateVector| -> f64 {
            let hr = &h.matrix * &psi.re;
            let hi = &h.matrix * &psi.im;
            psi.re.dot(&hr) + psi.im.dot(&hi)
        };
        let e0 = energy(&psi0);
        let e1 = energy(&eig.evolve(&psi0, 0.37));
        assert!((e0 - e1).abs() < 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn dark_eigen_matches_dense_evolution_across_detunings() {
        let t = toy_tables(5);
        let dark = DarkEigen::new(&dark_blocks(&t)).unwrap();
        let psi0 = pulse_product_state(&t.rabi_hz, 0.4, 0.006);
        let tau = 0.09;
        for delta in [-1.3, 0.0, 0.8] {
            let fast = dark.evolve(&psi0, tau, delta);
            let h = build_full_hamiltonian(&t, delta, false).unwrap();
            let eig = EigenSystem::from_hamiltonian(&h).unwrap();
            let slow = eig.evolve(&psi0, tau);
            assert!((&fast.re - &slow.re).abs().max() < 1e-10);
            assert!((&fast.im - &slow.im).abs().max() < 1e-10);
        }
        let swept = dark.sweep(&psi0, tau, &[-1.3, 0.0, 0.8]);
        assert_eq!(swept.len(), 3);
        let again = dark.evolve(&psi0, tau, -1.3);
        assert!((&swept[0].re - &again.re).abs().max() == 0.0);
    }

    #[test]
    fn magnetization_is_conserved_in_the_dark() {
        let t = toy_tables(4);
        let dark = DarkEigen::new(&dark_blocks(&t)).unwrap();
        let psi0 = pulse_product_state(&t.rabi_hz, 0.0, 0.0025);
        let weights = |psi: &StateVector| -> Vec<f64> {
            let mut w = vec![0.0; 5];
            for k in 0..psi.dim() {
                w[k.count_ones() as usize] += psi.probability(k);
            }
            w
        };
        let w0 = weights(&psi0);
        let w1 = weights(&dark.evolve(&psi0, 0.4, 0.9));
        for (a, b) in w0.iter().zip(&w1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_evolution_matches_full_for_symmetric_drive() {
        // Homogeneous couplings keep the dynamics inside the fully
        // symmetric sector, so depth-0 truncation is exact.
        let n = 4;
        let mut t = CouplingTables::free(n, 25.0);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    t.j[(i, j)] = 0.9;
                    t.x[(i, j)] = 0.4;
                    t.c[(i, j)] = -0.2;
                }
            }
        }
        let basis = crate::hamiltonian::spin_sector_basis(n, 0).unwrap();
        let blocks = crate::hamiltonian::truncated_dark_blocks(&t, &basis);
        let trunc = TruncatedDarkEigen::new(&blocks, basis.ncols()).unwrap();
        let dark = DarkEigen::new(&dark_blocks(&t)).unwrap();

        let psi0 = pulse_product_state(&t.rabi_hz, 0.2, 0.01);
        let tau = 0.15;
        let full = dark.evolve(&psi0, tau, 0.2);
        let coords = project_state(&basis, &psi0);
        assert!((coords.norm_sq() - 1.0).abs() < 1e-12, "state leaks out of the sector");
        let evolved = trunc.evolve(&coords, tau, 0.2);
        let expanded = expand_state(&basis, &evolved);
        assert!((&expanded.re - &full.re).abs().max() < 1e-10);
        assert!((&expanded.im - &full.im).abs().max() < 1e-10);
    }
}

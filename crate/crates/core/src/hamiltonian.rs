//! Spin-model Hamiltonians in the computational bit basis.
//!
//! Basis state k encodes atom i as bit i: set means excited (spin up). All
//! couplings enter through `CouplingTables`; detunings and Rabi frequencies
//! are in Hz while pair couplings are in rad/s, so the builders convert with
//! explicit 2 pi factors. Matrices are real symmetric throughout.

use crate::couplings::CouplingTables;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

/// Dense Hamiltonian with provenance flags used to gate block extraction.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub includes_drive: bool,
    pub delta_hz: f64,
}

/// One magnetization block of the drive-free Hamiltonian.
#[derive(Debug, Clone)]
pub struct DarkBlock {
    /// Twice the collective magnetization of the block.
    pub mz_twice: i32,
    /// Full-space basis indices spanning the block, ascending.
    pub states: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// Drive-free Hamiltonian split into magnetization blocks.
#[derive(Debug, Clone)]
pub struct DarkBlocks {
    pub n: usize,
    pub blocks: Vec<DarkBlock>,
}

fn spin_z(k: usize, i: usize) -> f64 {
    if k >> i & 1 == 1 {
        0.5
    } else {
        -0.5
    }
}

/// Full-space basis indices grouped by excitation number.
pub fn states_by_excitation(n: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n + 1];
    for k in 0..1usize << n {
        groups[k.count_ones() as usize].push(k);
    }
    groups
}

/// Diagonal element of the interaction part (no detuning), in rad/s.
fn interaction_diagonal(tables: &CouplingTables, c_field: &[f64], k: usize) -> f64 {
    let n = tables.n;
    let mut e = 0.0;
    for i in 0..n {
        let si = spin_z(k, i);
        e -= c_field[i] * si;
        for j in 0..i {
            e -= 2.0 * (tables.x[(i, j)] + tables.j[(i, j)]) * si * spin_z(k, j);
        }
    }
    e
}

/// Builds the dense Hamiltonian at a given detuning, optionally with the
/// drive term. Units of the matrix are rad/s.
pub fn build_full_hamiltonian(
    tables: &CouplingTables,
    delta_hz: f64,
    include_drive: bool,
) -> Result<HamiltonianMatrix> {
    let n = tables.n;
    if n > 24 {
        return Err(Error::Dimension(format!("full basis for n_atoms = {n} is too large")));
    }
    let dim = 1usize << n;
    let c_field = tables.c_field();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut h = DMatrix::zeros(dim, dim);

    for k in 0..dim {
        let mz = k.count_ones() as f64 - 0.5 * n as f64;
        h[(k, k)] = -two_pi * delta_hz * mz + interaction_diagonal(tables, &c_field, k);
        for i in 0..n {
            if include_drive {
                let flipped = k ^ (1 << i);
                if flipped > k {
                    let v = -std::f64::consts::PI * tables.rabi_hz[i];
                    h[(k, flipped)] += v;
                    h[(flipped, k)] += v;
                }
            }
            if k >> i & 1 == 1 {
                for j in 0..n {
                    if k >> j & 1 == 0 && j != i {
                        let swapped = k ^ (1 << i) ^ (1 << j);
                        if swapped > k {
                            let v = -tables.j[(i, j)];
                            h[(k, swapped)] += v;
                            h[(swapped, k)] += v;
                        }
                    }
                }
            }
        }
    }
    Ok(HamiltonianMatrix { matrix: h, n, includes_drive: include_drive, delta_hz })
}

/// Builds the magnetization blocks of the drive-free, zero-detuning
/// Hamiltonian directly from the coupling tables.
pub fn dark_blocks(tables: &CouplingTables) -> DarkBlocks {
    let n = tables.n;
    let c_field = tables.c_field();
    let groups = states_by_excitation(n);
    let mut blocks = Vec::with_capacity(n + 1);
    for (n_up, states) in groups.into_iter().enumerate() {
        let dim = states.len();
        let index_of: HashMap<usize, usize> =
            states.iter().enumerate().map(|(a, &k)| (k, a)).collect();
        let mut m = DMatrix::zeros(dim, dim);
        for (a, &k) in states.iter().enumerate() {
            m[(a, a)] = interaction_diagonal(tables, &c_field, k);
            for i in 0..n {
                if k >> i & 1 == 1 {
                    for j in 0..n {
                        if k >> j & 1 == 0 && j != i {
                            let swapped = k ^ (1 << i) ^ (1 << j);
                            if swapped > k {
                                let b = index_of[&swapped];
                                m[(a, b)] -= tables.j[(i, j)];
                                m[(b, a)] -= tables.j[(i, j)];
                            }
                        }
                    }
                }
            }
        }
        blocks.push(DarkBlock { mz_twice: 2 * n_up as i32 - n as i32, states, matrix: m });
    }
    DarkBlocks { n, blocks }
}

/// Applies the drive-free, zero-detuning Hamiltonian to a real vector
/// without materializing the dense matrix.
pub fn apply_dark(tables: &CouplingTables, c_field: &[f64], input: &[f64], out: &mut [f64]) {
    let n = tables.n;
    let dim = 1usize << n;
    debug_assert_eq!(input.len(), dim);
    out.fill(0.0);
    for k in 0..dim {
        let amp = input[k];
        if amp == 0.0 {
            continue;
        }
        out[k] += interaction_diagonal(tables, c_field, k) * amp;
        for i in 0..n {
            if k >> i & 1 == 1 {
                for j in 0..n {
                    if k >> j & 1 == 0 && j != i {
                        let swapped = k ^ (1 << i) ^ (1 << j);
                        out[swapped] -= tables.j[(i, j)] * amp;
                    }
                }
            }
        }
    }
}

/// Extracts magnetization blocks from a dense Hamiltonian, certifying that
/// no coupling crosses block boundaries. Requires a drive-free matrix at
/// zero detuning.
pub fn mz_blocks_from_dense(h: &HamiltonianMatrix) -> Result<DarkBlocks> {
    if h.includes_drive {
        return Err(Error::invalid(
            "magnetization blocks require a drive-free Hamiltonian: the drive couples blocks",
        ));
    }
    if h.delta_hz != 0.0 {
        return Err(Error::invalid(
            "magnetization blocks are extracted at zero detuning; apply detuning during evolution",
        ));
    }
    let dim = h.matrix.nrows();
    let scale = h.matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-14 * scale;
    for k in 0..dim {
        for l in 0..k {
            if k.count_ones() != l.count_ones() && h.matrix[(k, l)].abs() > tol {
                return Err(Error::invalid(format!(
                    "matrix element ({k}, {l}) = {} crosses magnetization blocks",
                    h.matrix[(k, l)]
                )));
            }
        }
    }
    let groups = states_by_excitation(h.n);
    let blocks = groups
        .into_iter()
        .enumerate()
        .map(|(n_up, states)| {
            let dim = states.len();
            let mut m = DMatrix::zeros(dim, dim);
            for (a, &k) in states.iter().enumerate() {
                for (b, &l) in states.iter().enumerate() {
                    m[(a, b)] = h.matrix[(k, l)];
                }
            }
            DarkBlock { mz_twice: 2 * n_up as i32 - h.n as i32, states, matrix: m }
        })
        .collect();
    Ok(DarkBlocks { n: h.n, blocks })
}

/// Orthonormal basis of the highest total-spin sectors.
///
/// Columns are full-space vectors with definite total spin and
/// magnetization, labelled by doubled quantum numbers. Depth 0 keeps only
/// the fully symmetric sector, depth m keeps spins down to n/2 - m.
#[derive(Debug, Clone)]
pub struct SpinSectorBasis {
    pub n: usize,
    pub depth: usize,
    pub columns: DMatrix<f64>,
    pub s_twice: Vec<u32>,
    pub mz_twice: Vec<i32>,
}

impl SpinSectorBasis {
    pub fn ncols(&self) -> usize {
        self.columns.ncols()
    }
}

/// Number of spin-s multiplets for n spin-1/2 atoms (doubled spin input).
pub fn multiplet_count(n: usize, s_twice: u32) -> u64 {
    let half = |k: i64| -> u64 {
        if k < 0 || k > n as i64 {
            0
        } else {
            let mut acc = 1u64;
            for t in 0..k as u64 {
                acc = acc * (n as u64 - t) / (t + 1);
            }
            acc
        }
    };
    let k = (n as i64 - s_twice as i64) / 2;
    half(k) - half(k - 1)
}

/// Builds the sector basis by diagonalizing the total-spin operator inside
/// each magnetization block.
pub fn spin_sector_basis(n: usize, depth: usize) -> Result<SpinSectorBasis> {
    if n < 1 || n > 24 {
        return Err(Error::Dimension(format!("sector basis unsupported for n_atoms = {n}")));
    }
    if 2 * depth >= n {
        return Err(Error::invalid(format!(
            "sector depth {depth} retains every spin sector of {n} atoms; use the full basis",
        )));
    }
    let dim = 1usize << n;
    let s_min_twice = n as u32 - 2 * depth as u32;
    let groups = states_by_excitation(n);

    let mut cols: Vec<(u32, i32, Vec<f64>)> = Vec::new();
    for (n_up, states) in groups.into_iter().enumerate() {
        let mz_twice = 2 * n_up as i32 - n as i32;
        let bdim = states.len();
        let index_of: HashMap<usize, usize> =
            states.iter().enumerate().map(|(a, &k)| (k, a)).collect();
        let mz = 0.5 * mz_twice as f64;
        let mut s2 = DMatrix::zeros(bdim, bdim);
        for (a, &k) in states.iter().enumerate() {
            s2[(a, a)] = 0.5 * n as f64 + mz * mz;
            for i in 0..n {
                if k >> i & 1 == 1 {
                    for j in 0..n {
                        if k >> j & 1 == 0 && j != i {
                            let swapped = k ^ (1 << i) ^ (1 << j);
                            if swapped > k {
                                let b = index_of[&swapped];
                                s2[(a, b)] += 1.0;
                                s2[(b, a)] += 1.0;
                            }
                        }
                    }
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::new(s2);
        let mut order: Vec<usize> = (0..bdim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for &e in &order {
            let lambda = eig.eigenvalues[e];
            let s = 0.5 * ((1.0 + 4.0 * lambda).sqrt() - 1.0);
            let s_twice = (2.0 * s).round();
            if (s_twice * 0.5 * (s_twice * 0.5 + 1.0) - lambda).abs() > 1e-8 {
                return Err(Error::Eigensolver(n_up));
            }
            let s_twice = s_twice as u32;
            if s_twice < s_min_twice {
                continue;
            }
            let mut col = vec![0.0; dim];
            let v = eig.eigenvectors.column(e);
            let lead = (0..bdim).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
            for (a, &k) in states.iter().enumerate() {
                col[k] = sign * v[a];
            }
            cols.push((s_twice, mz_twice, col));
        }
    }

    cols.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let ncols = cols.len();
    let mut columns = DMatrix::zeros(dim, ncols);
    let mut s_twice = Vec::with_capacity(ncols);
    let mut mz_twice = Vec::with_capacity(ncols);
    for (c, (s2v, mzv, col)) in cols.into_iter().enumerate() {
        s_twice.push(s2v);
        mz_twice.push(mzv);
        columns.column_mut(c).copy_from_slice(&col);
    }
    Ok(SpinSectorBasis { n, depth, columns, s_twice, mz_twice })
}

static BASIS_MEMO: Lazy<Mutex<HashMap<(usize, usize), Arc<SpinSectorBasis>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn basis_cache_dir() -> PathBuf {
    match std::env::var_os("MBSED_BASIS_CACHE") {
        Some(d) => PathBuf::from(d),
        None => std::env::temp_dir().join("mbsed-sector-cache"),
    }
}

const BASIS_MAGIC: &[u8; 4] = b"MBSB";

fn write_basis_file(path: &PathBuf, basis: &SpinSectorBasis) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(BASIS_MAGIC)?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&(basis.n as u64).to_le_bytes())?;
        f.write_all(&(basis.depth as u64).to_le_bytes())?;
        f.write_all(&(basis.ncols() as u64).to_le_bytes())?;
        for c in 0..basis.ncols() {
            f.write_all(&basis.s_twice[c].to_le_bytes())?;
            f.write_all(&basis.mz_twice[c].to_le_bytes())?;
        }
        for c in 0..basis.ncols() {
            for r in 0..basis.columns.nrows() {
                f.write_all(&basis.columns[(r, c)].to_le_bytes())?;
            }
        }
        f.flush()?;
    }
    std::fs::rename(&tmp, path)
}

fn read_basis_file(path: &PathBuf, n: usize, depth: usize) -> Option<SpinSectorBasis> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path).ok()?);
    let mut m4 = [0u8; 4];
    f.read_exact(&mut m4).ok()?;
    if &m4 != BASIS_MAGIC {
        return None;
    }
    let mut u4 = [0u8; 4];
    f.read_exact(&mut u4).ok()?;
    if u32::from_le_bytes(u4) != 1 {
        return None;
    }
    let mut u8b = [0u8; 8];
    f.read_exact(&mut u8b).ok()?;
    if u64::from_le_bytes(u8b) != n as u64 {
        return None;
    }
    f.read_exact(&mut u8b).ok()?;
    if u64::from_le_bytes(u8b) != depth as u64 {
        return None;
    }
    f.read_exact(&mut u8b).ok()?;
    let ncols = u64::from_le_bytes(u8b) as usize;
    let dim = 1usize << n;
    let mut s_twice = Vec::with_capacity(ncols);
    let mut mz_twice = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        f.read_exact(&mut u4).ok()?;
        s_twice.push(u32::from_le_bytes(u4));
        f.read_exact(&mut u4).ok()?;
        mz_twice.push(i32::from_le_bytes(u4));
    }
    let mut columns = DMatrix::zeros(dim, ncols);
    for c in 0..ncols {
        for r in 0..dim {
            f.read_exact(&mut u8b).ok()?;
            columns[(r, c)] = f64::from_le_bytes(u8b);
        }
    }
    Some(SpinSectorBasis { n, depth, columns, s_twice, mz_twice })
}

/// Cached sector basis: in-process memo backed by an on-disk store, so
/// repeated runs skip the block diagonalizations.
pub fn spin_sector_basis_cached(n: usize, depth: usize) -> Result<Arc<SpinSectorBasis>> {
    if let Some(b) = BASIS_MEMO.lock().unwrap().get(&(n, depth)) {
        return Ok(b.clone());
    }
    let path = basis_cache_dir().join(format!("basis_n{n}_m{depth}.bin"));
    let basis = match read_basis_file(&path, n, depth) {
        Some(b) => b,
        None => {
            let b = spin_sector_basis(n, depth)?;
            if let Err(e) = write_basis_file(&path, &b) {
                // Cache misses are not fatal; the basis is still usable.
                let _ = e;
            }
            b
        }
    };
    let arc = Arc::new(basis);
    BASIS_MEMO.lock().unwrap().insert((n, depth), arc.clone());
    Ok(arc)
}

/// Projects a dense Hamiltonian into the sector basis.
pub fn project(h: &HamiltonianMatrix, basis: &SpinSectorBasis) -> Result<DMatrix<f64>> {
    if h.matrix.nrows() != basis.columns.nrows() {
        return Err(Error::Dimension(format!(
            "cannot project a {} state space onto a {} state basis",
            h.matrix.nrows(),
            basis.columns.nrows()
        )));
    }
    Ok(basis.columns.transpose() * &h.matrix * &basis.columns)
}

/// Magnetization block of the dark Hamiltonian projected into the sector
/// basis; `cols` indexes columns of the basis.
#[derive(Debug, Clone)]
pub struct TruncatedBlock {
    pub mz_twice: i32,
    pub cols: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// Projects the drive-free Hamiltonian into the sector basis blockwise,
/// never materializing the full-space matrix.
pub fn truncated_dark_blocks(tables: &CouplingTables, basis: &SpinSectorBasis) -> Vec<TruncatedBlock> {
    let c_field = tables.c_field();
    let dim = basis.columns.nrows();
    let mut by_mz: HashMap<i32, Vec<usize>> = HashMap::new();
    for c in 0..basis.ncols() {
        by_mz.entry(basis.mz_twice[c]).or_default().push(c);
    }
    let mut keys: Vec<i32> = by_mz.keys().copied().collect();
    keys.sort();
    let mut out = Vec::with_capacity(keys.len());
    let mut column = vec![0.0; dim];
    let mut image = vec![0.0; dim];
    for mz in keys {
        let cols = by_mz.remove(&mz).unwrap();
        let bdim = cols.len();
        let mut h_cols = DMatrix::zeros(dim, bdim);
        for (a, &c) in cols.iter().enumerate() {
            for r in 0..dim {
                column[r] = basis.columns[(r, c)];
            }
            apply_dark(tables, &c_field, &column, &mut image);
            for r in 0..dim {
                h_cols[(r, a)] = image[r];
            }
        }
        let mut m = DMatrix::zeros(bdim, bdim);
        for (a, &c) in cols.iter().enumerate() {
            for b in 0..bdim {
                let mut acc = 0.0;
                for r in 0..dim {
                    acc += basis.columns[(r, c)] * h_cols[(r, b)];
                }
                m[(a, b)] = acc;
            }
        }
        // Symmetrize away the last-bit asymmetry of the two projection legs.
        for a in 0..bdim {
            for b in 0..a {
                let v = 0.5 * (m[(a, b)] + m[(b, a)]);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        out.push(TruncatedBlock { mz_twice: mz, cols, matrix: m });
    }
    out
}

/// Applies the drive term to a real vector without materializing it.
pub fn apply_drive(tables: &CouplingTables, input: &[f64], out: &mut [f64]) {
    let n = tables.n;
    let dim = 1usize << n;
    for k in 0..dim {
        let amp = input[k];
        if amp == 0.0 {
            continue;
        }
        for (i, &omega) in tables.rabi_hz.iter().enumerate() {
            out[k ^ (1 << i)] -= std::f64::consts::PI * omega * amp;
        }
    }
}

/// Projects the zero-detuning driven Hamiltonian into the sector basis.
/// Detuning is diagonal there and can be added per sweep point.
pub fn truncated_drive_matrix(tables: &CouplingTables, basis: &SpinSectorBasis) -> DMatrix<f64> {
    let c_field = tables.c_field();
    let dim = basis.columns.nrows();
    let ncols = basis.ncols();
    let mut h_cols = DMatrix::zeros(dim, ncols);
    let mut column = vec![0.0; dim];
    let mut image = vec![0.0; dim];
    for c in 0..ncols {
        for r in 0..dim {
            column[r] = basis.columns[(r, c)];
        }
        apply_dark(tables, &c_field, &column, &mut image);
        apply_drive(tables, &column, &mut image);
        for r in 0..dim {
            h_cols[(r, c)] = image[r];
        }
    }
    let mut m = basis.columns.tr_mul(&h_cols);
    for a in 0..ncols {
        for b in 0..a {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// Dense collective Hamiltonian on the symmetric ladder, dimension n + 1.
/// Row q corresponds to magnetization M = q - n/2.
pub fn collective_hamiltonian(
    n: usize,
    omega_bar_hz: f64,
    xbar_rad: f64,
    cbar_rad: f64,
    delta_hz: f64,
) -> DMatrix<f64> {
    let dim = n + 1;
    let s = 0.5 * n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut h = DMatrix::zeros(dim, dim);
    for q in 0..dim {
        let m = q as f64 - s;
        h[(q, q)] = -two_pi * delta_hz * m - xbar_rad * m * m - (n as f64 - 1.0) * cbar_rad * m;
        if q + 1 < dim {
            let elem = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            h[(q, q + 1)] = -std::f64::consts::PI * omega_bar_hz * elem;
            h[(q + 1, q)] = h[(q, q + 1)];
        }
    }
    h
}

/// Diagonal dark phases (rad/s) of the collective model, indexed like the
/// ladder basis.
pub fn collective_dark_phases(n: usize, xbar_rad: f64, cbar_rad: f64, delta_hz: f64) -> Vec<f64> {
    let s = 0.5 * n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..=n)
        .map(|q| {
            let m = q as f64 - s;
            -two_pi * delta_hz * m - xbar_rad * m * m - (n as f64 - 1.0) * cbar_rad * m
        })
        .collect()
}

/// Dense single-atom S^z embedded in the full space; verification helper.
pub fn sz_dense(n: usize, i: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |r, c| if r == c { spin_z(r, i) } else { 0.0 })
}

/// Dense single-atom S^x embedded in the full space; verification helper.
pub fn sx_dense(n: usize, i: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |r, c| if r == c ^ (1 << i) { 0.5 } else { 0.0 })
}

/// Real antisymmetric B with S^y = i B; verification helper.
pub fn sy_antisym_dense(n: usize, i: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |r, c| {
        if r == c ^ (1 << i) {
            // S^- carries up to down: row with bit clear, column with bit set.
            if c >> i & 1 == 1 {
                0.5
            } else {
                -0.5
            }
        } else {
            0.0
        }
    })
}

/// Dense total-spin operator S^2; verification helper.
pub fn s_squared_dense(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut sx = DMatrix::zeros(dim, dim);
    let mut sb = DMatrix::zeros(dim, dim);
    let mut sz = DMatrix::zeros(dim, dim);
    for i in 0..n {
        sx += sx_dense(n, i);
        sb += sy_antisym_dense(n, i);
        sz += sz_dense(n, i);
    }
    &sx * &sx - &sb * &sb + &sz * &sz
}

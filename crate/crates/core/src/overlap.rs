//! Mode-overlap factors s and p for pairs of lattice-site oscillator states.
//!
//! The four-index s overlap is the integral of four normalized oscillator
//! functions against their joint Gaussian envelope; p replaces two of the
//! pairs with Wronskian-type derivative combinations and carries the p-wave
//! channel. A downward recursion evaluates s exactly from a handful of base
//! cases; p is assembled from four s calls. Hamiltonian construction only
//! ever needs the diagonal slice (a, b, b, a), for which [`SliceOverlaps`]
//! precomputes stable quadrature tables that stay accurate to the highest
//! bound radial bands.

use crate::error::{Error, Result};
use crate::hermite::{hermite_functions, OverlapQuadrature};
use std::collections::HashMap;
use std::sync::Mutex;

/// Ceiling for single indices fed to the exact recursion; beyond this the
/// memo table grows without paying for itself and callers should use the
/// sliced quadrature path instead.
pub const INDEX_CAP: u32 = 64;

/// s(0,0,0,0) = 1/sqrt(2 pi); every base case reduces to a multiple of it.
pub const S_GROUND: f64 = 0.398_942_280_401_432_68;

/// Memoized evaluator for the four-index overlap recursion.
///
/// Keys are canonicalized by sorting (s is fully symmetric); the raise-by-two
/// rule is always inverted on the largest index, which keeps every recursion
/// coefficient at most 1/2 in magnitude.
pub struct OverlapCache {
    memo: Mutex<HashMap<[u16; 4], f64>>,
}

impl Default for OverlapCache {
    fn default() -> Self {
        Self::new()
    }
}

impl OverlapCache {
    pub fn new() -> Self {
        OverlapCache { memo: Mutex::new(HashMap::new()) }
    }

    /// Four-function overlap s(n1, n2, n3, n4).
    pub fn s(&self, n1: u32, n2: u32, n3: u32, n4: u32) -> Result<f64> {
        check_cap([n1, n2, n3, n4])?;
        let mut memo = self.memo.lock().unwrap();
        Ok(eval_s(&mut memo, canonical([n1, n2, n3, n4])))
    }

    /// Wronskian-pair overlap p(n1, n2, n3, n4), assembled from four s calls.
    ///
    /// Expanding the defining product (phi'_1 phi_2 - phi_1 phi'_2)
    /// (phi'_3 phi_4 - phi_3 phi'_4) gives signs (+, -, -, +); terms with a
    /// zero index vanish through the sqrt factor.
    pub fn p(&self, n1: u32, n2: u32, n3: u32, n4: u32) -> Result<f64> {
        check_cap([n1, n2, n3, n4])?;
        let mut memo = self.memo.lock().unwrap();
        let mut term = |sign: f64, a: u32, b: u32, c: u32, d: u32, f1: u32, f2: u32| -> f64 {
            if f1 == 0 || f2 == 0 {
                return 0.0;
            }
            sign * 2.0 * ((f1 as f64) * (f2 as f64)).sqrt()
                * eval_s(&mut memo, canonical([a, b, c, d]))
        };
        let mut acc = 0.0;
        if n1 > 0 && n3 > 0 {
            acc += term(1.0, n1 - 1, n2, n3 - 1, n4, n1, n3);
        }
        if n2 > 0 && n3 > 0 {
            acc += term(-1.0, n1, n2 - 1, n3 - 1, n4, n2, n3);
        }
        if n1 > 0 && n4 > 0 {
            acc += term(-1.0, n1 - 1, n2, n3, n4 - 1, n1, n4);
        }
        if n2 > 0 && n4 > 0 {
            acc += term(1.0, n1, n2 - 1, n3, n4 - 1, n2, n4);
        }
        Ok(acc)
    }

    /// Number of distinct canonical tuples evaluated so far.
    pub fn len(&self) -> usize {
        self.memo.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_cap(n: [u32; 4]) -> Result<()> {
    if let Some(&over) = n.iter().find(|&&v| v > INDEX_CAP) {
        return Err(Error::Overlap(format!(
            "overlap index {over} exceeds the recursion cap {INDEX_CAP}"
        )));
    }
    Ok(())
}

fn canonical(mut n: [u32; 4]) -> [u16; 4] {
    n.sort_unstable();
    [n[0] as u16, n[1] as u16, n[2] as u16, n[3] as u16]
}

/// Recursion on sorted keys a <= b <= c <= d. Lowering the total index by two
/// per step terminates in base tuples with all indices in {0, 1}.
fn eval_s(memo: &mut HashMap<[u16; 4], f64>, key: [u16; 4]) -> f64 {
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let [a, b, c, d] = key;
    let value = if d <= 1 {
        // Bases follow from direct integration; odd index sums vanish by
        // parity, and that zero is exact so downstream sums inherit it.
        match a + b + c + d {
            0 => S_GROUND,
            2 => 0.5 * S_GROUND,
            4 => 0.75 * S_GROUND,
            _ => 0.0,
        }
    } else {
        let df = d as f64;
        let mut acc = 0.0;
        if a > 0 {
            acc += 0.5 * (a as f64 / df).sqrt() * eval_s(memo, canonical_u16([a - 1, b, c, d - 1]));
        }
        if b > 0 {
            acc += 0.5 * (b as f64 / df).sqrt() * eval_s(memo, canonical_u16([a, b - 1, c, d - 1]));
        }
        if c > 0 {
            acc += 0.5 * (c as f64 / df).sqrt() * eval_s(memo, canonical_u16([a, b, c - 1, d - 1]));
        }
        acc -= 0.5 * ((df - 1.0) / df).sqrt() * eval_s(memo, canonical_u16([a, b, c, d - 2]));
        acc
    };
    memo.insert(key, value);
    value
}

fn canonical_u16(mut n: [u16; 4]) -> [u16; 4] {
    n.sort_unstable();
    n
}

/// Precomputed diagonal-slice overlaps s(a,b,b,a) and p(a,b,b,a) for all
/// 1D indices up to n_max.
///
/// These are the only overlap shapes the pair couplings need. The slice
/// integrands are sign-definite squares, so quadrature over precomputed
/// oscillator-function tables is exact and free of cancellation even at
/// radial indices in the thousands where the recursion memo would explode.
pub struct SliceOverlaps {
    n_max: usize,
    weights: Vec<f64>,
    nodes: Vec<f64>,
    /// rows[n][i] = phi_n evaluated at node i.
    rows: Vec<Vec<f64>>,
}

impl SliceOverlaps {
    pub fn new(n_max: usize) -> Result<Self> {
        let quad = OverlapQuadrature::for_max_index(n_max)?;
        let order = quad.order;
        let mut rows = vec![vec![0.0; order]; n_max + 1];
        for (i, &x) in quad.nodes.iter().enumerate() {
            let phi = hermite_functions(x, n_max);
            for (n, row) in rows.iter_mut().enumerate() {
                row[i] = phi[n];
            }
        }
        Ok(SliceOverlaps { n_max, weights: quad.weights, nodes: quad.nodes, rows })
    }

    pub fn max_index(&self) -> usize {
        self.n_max
    }

    /// s(a, b, b, a): overlap of two oscillator probability densities.
    pub fn s2(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a <= self.n_max && b <= self.n_max);
        let ra = &self.rows[a];
        let rb = &self.rows[b];
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            let prod = ra[i] * rb[i];
            acc += self.weights[i] * prod * prod;
        }
        acc
    }

    /// p(a, b, b, a) = -integral of the squared pair Wronskian; always <= 0
    /// and exactly zero for a == b.
    pub fn p2(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a <= self.n_max && b <= self.n_max);
        if a == b {
            return 0.0;
        }
        let ra = &self.rows[a];
        let rb = &self.rows[b];
        let fa = (2.0 * a as f64).sqrt();
        let fb = (2.0 * b as f64).sqrt();
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            let x = self.nodes[i];
            let da = if a == 0 { -x * ra[i] } else { fa * self.rows[a - 1][i] - x * ra[i] };
            let db = if b == 0 { -x * rb[i] } else { fb * self.rows[b - 1][i] - x * rb[i] };
            let w = da * rb[i] - ra[i] * db;
            acc -= self.weights[i] * w * w;
        }
        acc
    }
}

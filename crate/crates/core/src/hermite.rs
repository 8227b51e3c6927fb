//! Harmonic-oscillator eigenfunctions and Gauss-Hermite quadrature for the
//! lattice-site overlap integrals.
//!
//! All mode-overlap integrals reduce to integrals of products of four
//! normalized oscillator functions phi_n (possibly differentiated), whose
//! integrand is a polynomial times exp(-2 x^2). A Gauss-Hermite rule in the
//! substituted variable u = sqrt(2) x integrates such products exactly once
//! the order exceeds half the polynomial degree, so quadrature serves as an
//! exact independent reference for the closed-form recursions.

use crate::error::{Error, Result};

/// Evaluates the orthonormal oscillator functions phi_0..phi_n_max at x.
///
/// phi_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)). The recurrence runs
/// on exponent-tracked scaled values so that deep classically-forbidden
/// regions underflow to zero gracefully instead of poisoning high-n entries.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let expo_base = -0.5 * x * x;
    // Scaled recurrence on q_n = phi_n * exp(x^2/2 - ls).
    let mut ls = 0.0f64;
    let mut prev = 0.0f64;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out[0] = cur * (ls + expo_base).exp();
    for n in 0..n_max {
        let next = x * (2.0 / (n as f64 + 1.0)).sqrt() * cur
            - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            ls += 150.0 * std::f64::consts::LN_10;
        }
        out[n + 1] = cur * (ls + expo_base).exp();
    }
    out
}

/// Derivatives phi_n'(x) from already-evaluated function values.
pub fn hermite_function_derivatives(phi: &[f64], x: f64) -> Vec<f64> {
    let mut out = vec![0.0; phi.len()];
    for (n, d) in out.iter_mut().enumerate() {
        let lower = if n == 0 { 0.0 } else { (2.0 * n as f64).sqrt() * phi[n - 1] };
        *d = lower - x * phi[n];
    }
    out
}

/// Gauss-Hermite rule recast for the overlap weight exp(-2 x^2).
///
/// Nodes are roots of the order-M Hermite polynomial mapped by x = u/sqrt(2);
/// weights absorb the weight-function substitution, so integrals of
/// poly(x) exp(-2x^2) with poly degree <= 2M-1 are exact.
pub struct OverlapQuadrature {
    pub order: usize,
    /// Node positions in the oscillator coordinate x.
    pub nodes: Vec<f64>,
    /// Measure-free weights: sum w_i f(x_i) integrates any f that carries
    /// its own exp(-2x^2) decay, such as products of oscillator functions.
    pub weights: Vec<f64>,
}

impl OverlapQuadrature {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Overlap("quadrature order must be >= 1".into()));
        }
        let (u_nodes, phi_last) = hermite_roots(order)?;
        let mut nodes = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for (&u, &phi) in u_nodes.iter().zip(phi_last.iter()) {
            nodes.push(u * inv_sqrt2);
            weights.push(inv_sqrt2 / (order as f64 * phi * phi));
        }
        Ok(OverlapQuadrature { order, nodes, weights })
    }

    /// Rule sized for four-function products with 1D indices up to n_max.
    pub fn for_max_index(n_max: usize) -> Result<Self> {
        Self::new(2 * n_max + 8)
    }

    /// Defining integral of the s overlap: four oscillator functions.
    pub fn s_integral(&self, n: [usize; 4]) -> f64 {
        let top = *n.iter().max().unwrap();
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(self.weights.iter()) {
            let phi = hermite_functions(x, top);
            acc += w * phi[n[0]] * phi[n[1]] * phi[n[2]] * phi[n[3]];
        }
        acc
    }

    /// Defining integral of the p overlap: a product of two Wronskian-type
    /// factors (phi'_a phi_b - phi_a phi'_b).
    pub fn p_integral(&self, n: [usize; 4]) -> f64 {
        let top = *n.iter().max().unwrap();
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(self.weights.iter()) {
            let phi = hermite_functions(x, top);
            let dphi = hermite_function_derivatives(&phi, x);
            let w12 = dphi[n[0]] * phi[n[1]] - phi[n[0]] * dphi[n[1]];
            let w34 = dphi[n[2]] * phi[n[3]] - phi[n[2]] * dphi[n[3]];
            acc += w * w12 * w34;
        }
        acc
    }
}

/// Positive-to-negative ordered roots of H_M and the oscillator function
/// phi_{M-1} evaluated at each root (what the weight formula needs).
fn hermite_roots(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = order;
    let mut roots = vec![0.0f64; m];
    let mut phi_prev = vec![0.0f64; m];
    let half = m / 2;

    // Roots are eigenvalues of the tridiagonal recurrence (Jacobi) matrix;
    // Sturm-count bisection brackets each positive one far inside its Newton
    // basin regardless of order, and polishing finishes the job.
    for i in 0..half {
        let mut lo = 0.0f64;
        let mut hi = if i == 0 { (2.0 * m as f64 + 1.0).sqrt() } else { roots[i - 1] };
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if jacobi_count_below(m, mid) >= m - i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..200 {
            let (ratio, _, _) = scaled_hermite_pair(z, m);
            // Newton step: p_M / p_M' with p_M'(u) = sqrt(2M) p_{M-1}(u).
            let step = ratio / (2.0 * m as f64).sqrt();
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Overlap(format!(
                "Hermite root {i} of order {m} did not converge"
            )));
        }
        let (_, phi_m1, _) = scaled_hermite_pair(z, m);
        roots[i] = z;
        phi_prev[i] = phi_m1;
        roots[m - 1 - i] = -z;
        phi_prev[m - 1 - i] = if (m - 1) % 2 == 0 { phi_m1 } else { -phi_m1 };
    }

    if m % 2 == 1 {
        roots[half] = 0.0;
        let (_, phi_m1, _) = scaled_hermite_pair(0.0, m);
        phi_prev[half] = phi_m1;
    }
    Ok((roots, phi_prev))
}

/// Counts eigenvalues of the order-m Hermite Jacobi matrix below x through
/// the signs of the shifted LDL^T pivots.
fn jacobi_count_below(m: usize, x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE * (0.5 * m as f64).max(1.0);
    let mut count = 0usize;
    let mut q = 1.0f64;
    for k in 0..m {
        let e_sq = 0.5 * k as f64;
        q = -x - if k == 0 { 0.0 } else { e_sq / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Evaluates (p_M/p_{M-1}, phi_{M-1}, phi_M) at u with overflow-safe scaling,
/// where p_n is the orthonormal Hermite polynomial and phi_n the oscillator
/// function.
fn scaled_hermite_pair(u: f64, m: usize) -> (f64, f64, f64) {
    let mut ls = 0.0f64;
    let mut prev = 0.0f64;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for n in 0..m {
        let next = u * (2.0 / (n as f64 + 1.0)).sqrt() * cur
            - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            ls += 150.0 * std::f64::consts::LN_10;
        }
    }
    let expo = (ls - 0.5 * u * u).exp();
    (cur / prev, prev * expo, cur * expo)
}

/// Laguerre polynomials L_0..L_n_max evaluated at x by the standard upward
/// recurrence (stable for the small arguments used here).
pub fn laguerre_sequence(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![1.0; n_max + 1];
    if n_max == 0 {
        return out;
    }
    out[1] = 1.0 - x;
    for n in 1..n_max {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 - x) * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
    out
}

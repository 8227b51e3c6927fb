//! Small numeric helpers shared across modules.

/// SplitMix64 step; used to derive per-sample RNG seeds from a master seed.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expands (master_seed, stream_index) into a 256-bit seed.
///
/// Every Monte-Carlo sample owns an independent, reproducible RNG stream, so
/// results do not depend on thread count or batch boundaries.
pub fn stream_seed(master_seed: u64, stream_index: u64) -> [u8; 32] {
    let mut state = master_seed ^ stream_index.wrapping_mul(0xa076_1d64_78bd_642f);
    // Warm up so that near-equal inputs decorrelate.
    splitmix64(&mut state);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// Pairwise summation; the result is independent of how callers parallelize
/// work because reduction order is fixed by the slice layout.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample standard deviation.
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let devs: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    (pairwise_sum(&devs) / (n as f64 - 1.0)).sqrt()
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    sample_std(xs) / (xs.len() as f64).sqrt()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_seeds_differ_between_indices() {
        let a = stream_seed(42, 0);
        let b = stream_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, stream_seed(42, 0));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-2.0, 2.0, 5);
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn std_of_constant_sequence_is_zero() {
        assert_eq!(sample_std(&[3.0, 3.0, 3.0]), 0.0);
    }
}

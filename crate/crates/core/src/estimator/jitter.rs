//! Counter-based pseudo-random perturbations for breaking distance ties.
//!
//! Each value is a pure function of `(key, channel, time)`, so jitter does not
//! depend on evaluation order or worker count.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words.iter().fold(0x6A09_E667_F3BC_C909, |acc, &w| {
        splitmix64(acc ^ splitmix64(w))
    })
}

/// Uniform value in `[-1, 1)` for `(key, channel, time)`.
pub fn uniform_symmetric(key: u64, channel: u64, time: u64) -> f64 {
    let bits = mix(&[key, channel, time]) >> 11;
    (bits as f64) * (1.0 / (1u64 << 52) as f64) - 1.0
}

/// Adds `amplitude * sd(series) * u(key, channel, t)` to every sample.
pub fn jitter_series(series: &[f64], amplitude: f64, key: u64, channel: u64) -> Vec<f64> {
    if amplitude == 0.0 {
        return series.to_vec();
    }
    let (_, var) = crate::panel::mean_and_variance(series);
    let scale = amplitude * var.sqrt();
    series
        .iter()
        .enumerate()
        .map(|(t, v)| v + scale * uniform_symmetric(key, channel, t as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_determinism() {
        let mut sum = 0.0;
        for t in 0..10_000 {
            let u = uniform_symmetric(7, 1, t);
            assert!((-1.0..1.0).contains(&u));
            assert_eq!(u, uniform_symmetric(7, 1, t));
            sum += u;
        }
        assert!((sum / 10_000.0).abs() < 0.03);
        assert_ne!(uniform_symmetric(7, 1, 0), uniform_symmetric(7, 2, 0));
        assert_ne!(uniform_symmetric(7, 1, 0), uniform_symmetric(8, 1, 0));
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let s = vec![1.0, 2.0, 2.0];
        assert_eq!(jitter_series(&s, 0.0, 1, 1), s);
        let j = jitter_series(&s, 1e-8, 1, 1);
        assert_ne!(j[1], j[2]);
        assert!(j.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-8));
    }
}

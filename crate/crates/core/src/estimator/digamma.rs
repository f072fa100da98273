use crate::error::{Error, Result};

/// Below this argument the recurrence `psi(x) = psi(x + 1) - 1/x` is applied.
const ASYMPTOTIC_FROM: f64 = 10.0;

/// Digamma function `psi(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < ASYMPTOTIC_FROM {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic expansion with Bernoulli-number coefficients.
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    shift + x.ln() - 0.5 * inv - series
}

/// `psi(1), psi(2), ..., psi(n)` for the integer counts used by the estimator.
pub(crate) fn digamma_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(f64::NAN);
    for i in 1..=n {
        table.push(digamma_unchecked(i as f64));
    }
    table
}

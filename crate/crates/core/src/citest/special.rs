//! Digamma function.

use crate::{Error, Result};

const SHIFT_THRESHOLD: f64 = 10.0;

/// ψ(x) = d/dx ln Γ(x) for `x > 0`.
///
/// Arguments below 10 are shifted up with ψ(x) = ψ(x + 1) − 1/x, then the
/// asymptotic expansion is summed through the x⁻¹⁴ term. Absolute error is
/// around 1e-15 over the positive reals.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires a finite x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - tail
}

/// ψ(0), ψ(1), …, ψ(n) with the (undefined) ψ(0) entry stored as NaN.
pub(crate) fn digamma_table(n: usize) -> Vec<f64> {
    std::iter::once(f64::NAN)
        .chain((1..=n).map(|m| digamma_unchecked(m as f64)))
        .collect()
}

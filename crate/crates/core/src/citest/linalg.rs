//! Least-squares residuals via Householder QR.

use crate::{Error, Result};

/// Relative threshold on |R_kk| below which the design is declared rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Householder factorisation of the design `[1, z_1, …, z_p]` used to project
/// targets onto the orthogonal complement of its column space.
pub(crate) struct ResidualProjector {
    n: usize,
    /// Reflector vectors; reflector `k` acts on rows `k..n`.
    reflectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
}

impl ResidualProjector {
    /// Builds the projector for an intercept plus the given columns.
    pub fn new(n: usize, columns: &[&[f64]]) -> Result<Self> {
        let m = columns.len() + 1;
        if n < m {
            return Err(Error::InsufficientData {
                needed: m,
                available: n,
            });
        }
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
        a.push(vec![1.0; n]);
        for c in columns {
            if c.len() != n {
                return Err(Error::Argument("conditioning column length mismatch".into()));
            }
            a.push(c.to_vec());
        }
        let col_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
        let mut reflectors = Vec::with_capacity(m);
        let mut betas = Vec::with_capacity(m);
        for k in 0..m {
            let x = &a[k][k..];
            let x_norm = norm(x);
            if !(x_norm > RANK_TOLERANCE * col_norms[k].max(f64::MIN_POSITIVE)) {
                return Err(Error::Conditioning(format!(
                    "conditioning matrix is rank deficient (column {k})"
                )));
            }
            let alpha = if x[0] >= 0.0 { -x_norm } else { x_norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|e| e * e).sum();
            let beta = 2.0 / vtv;
            for col in a.iter_mut().skip(k) {
                apply(&v, beta, &mut col[k..]);
            }
            reflectors.push(v);
            betas.push(beta);
        }
        Ok(Self { n, reflectors, betas })
    }

    /// `y − Ŷ`, the residual of the least-squares fit of `y` on the design.
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n);
        let mut r = y.to_vec();
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            apply(v, beta, &mut r[k..]);
        }
        let m = self.reflectors.len();
        r[..m].iter_mut().for_each(|e| *e = 0.0);
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            apply(v, beta, &mut r[k..]);
        }
        r
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// x ← (I − β v vᵀ) x
fn apply(v: &[f64], beta: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = beta * dot;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_exact_fit_is_zero() {
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = z.iter().map(|v| 3.0 - 2.0 * v).collect();
        let p = ResidualProjector::new(10, &[&z]).unwrap();
        assert!(p.residuals(&y).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn intercept_only_centres() {
        let y = [1.0, 2.0, 6.0];
        let r = ResidualProjector::new(3, &[]).unwrap().residuals(&y);
        for (a, b) in r.iter().zip([-2.0, -1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_columns_rejected() {
        let z1: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let z2: Vec<f64> = z1.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!(matches!(
            ResidualProjector::new(8, &[&z1, &z2]),
            Err(Error::Conditioning(_))
        ));
    }
}

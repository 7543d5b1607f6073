//! Partial-correlation test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::linalg::ResidualProjector;
use super::{CITestResult, TestName};
use crate::{Error, Result};

/// Tests `x ⊥ y | z` by correlating the residuals of the least-squares fits of
/// `x` and `y` on `z` (plus an intercept).
///
/// The p-value is two-sided from Student's t with `n − |z| − 2` degrees of
/// freedom.
pub fn parcorr_test(x: &[f64], y: &[f64], z: &[&[f64]]) -> Result<CITestResult> {
    let n = x.len();
    if y.len() != n || z.iter().any(|c| c.len() != n) {
        return Err(Error::Argument("x, y and z must have equal lengths".into()));
    }
    let min_n = z.len() + 2;
    if n <= min_n {
        return Err(Error::InsufficientData {
            needed: min_n,
            available: n,
        });
    }
    let projector = ResidualProjector::new(n, z)?;
    let rx = projector.residuals(x);
    let ry = projector.residuals(y);
    let r = residual_correlation(&rx, &ry)?;
    let df = (n - min_n) as f64;
    Ok(CITestResult {
        statistic: r,
        p_value: student_t_two_sided(r, df),
        n,
        test_name: TestName::Parcorr,
    })
}

fn residual_correlation(rx: &[f64], ry: &[f64]) -> Result<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(ry) {
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Conditioning(
            "a residual vector vanishes; the variable is determined by the conditioning set".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn student_t_two_sided(r: f64, df: f64) -> f64 {
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

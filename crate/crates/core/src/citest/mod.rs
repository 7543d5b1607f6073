//! Conditional-independence tests.
//!
//! Two tests of `X ⊥ Y | Z` are provided: [`parcorr_test`] (linear, residual
//! correlation with a Student-t p-value) and [`cmi_knn_test`] (nonparametric,
//! kNN conditional mutual information with a local-permutation null).

mod cmi;
mod kdtree;
mod knn;
mod linalg;
mod parcorr;
mod special;

use serde::{Deserialize, Serialize};

use crate::Result;

pub use cmi::{cmi_knn_estimate, cmi_knn_test, CmiParams};
pub use kdtree::KdTree;
pub use knn::{neighbor_counts, NeighborCounts};
pub use parcorr::parcorr_test;
pub use special::digamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Parcorr,
    CmiKnn,
}

/// Outcome of one conditional-independence query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CITestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub test_name: TestName,
}

/// A configured conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CiTest {
    Parcorr,
    CmiKnn(CmiParams),
}

impl CiTest {
    pub fn name(&self) -> TestName {
        match self {
            CiTest::Parcorr => TestName::Parcorr,
            CiTest::CmiKnn(_) => TestName::CmiKnn,
        }
    }

    /// Smallest sample count for which a query with `z_dim` conditioning
    /// columns is defined.
    pub fn min_samples(&self, z_dim: usize) -> usize {
        match self {
            CiTest::Parcorr => z_dim + 3,
            CiTest::CmiKnn(p) => p.k + 1,
        }
    }

    /// Runs the test on univariate `x` and `y`. `seed` drives the shuffle
    /// null of the kNN test and is ignored by partial correlation.
    pub fn run(&self, x: &[f64], y: &[f64], z: &[&[f64]], seed: u64) -> Result<CITestResult> {
        match self {
            CiTest::Parcorr => parcorr_test(x, y, z),
            CiTest::CmiKnn(params) => cmi_knn_test(&[x], &[y], z, params, seed),
        }
    }
}

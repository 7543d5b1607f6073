//! Constraint-based causal discovery for multivariate time series.
//!
//! The crate is organised around the data flow of a discovery run:
//!
//! - [`panel`] ingests, aligns, resamples and standardizes sensor series and
//!   materializes lagged sample matrices.
//! - [`citest`] provides the conditional-independence tests: partial
//!   correlation and a kNN conditional-mutual-information shuffle test.
//! - [`discovery`] runs the two-stage search (parent-superset selection
//!   followed by momentary conditional independence testing, with
//!   contemporaneous links).
//! - [`graph`] holds the time-lag graph and its summary projection.
//! - [`synth`] simulates structural causal models with known ground truth and
//!   scores recovered graphs.
//! - [`cohort`] aggregates per-subject graphs into cohort-level statistics.
//!
//! Discovery relies on the usual preconditions of constraint-based methods:
//! the causal Markov condition, faithfulness, causal sufficiency and causal
//! stationarity. Synthetic panels from [`synth`] satisfy them by
//! construction; real data must be judged case by case.

pub mod citest;
pub mod cohort;
pub mod discovery;
mod error;
pub mod graph;
pub mod panel;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

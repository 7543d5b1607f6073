//! Statistical properties of simulated panels and spec round trips.

use std::collections::BTreeSet;

use causal_ts::graph::{CausalGraph, LaggedVariable, Link};
use causal_ts::synth::{ground_truth_graph, simulate, Mechanism, ScmLink, ScmSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn autocorr(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let ck: f64 = (k..n).map(|t| (x[t] - m) * (x[t - k] - m)).sum();
    ck / c0
}

fn ljung_box_p(x: &[f64], h: usize) -> f64 {
    let n = x.len() as f64;
    let q: f64 = (1..=h).map(|k| autocorr(x, k).powi(2) / (n - k as f64)).sum::<f64>() * n * (n + 2.0);
    1.0 - ChiSquared::new(h as f64).unwrap().cdf(q)
}

#[test]
fn linkless_model_emits_white_noise() {
    let spec = ScmSpec::new(3, vec![]).unwrap().with_length(1000);
    let mut passed = 0;
    let mut total = 0;
    for seed in 0..40 {
        let p = simulate(&spec, seed).unwrap();
        for v in 0..3 {
            total += 1;
            passed += usize::from(ljung_box_p(p.column(v), 20) > 0.01);
        }
    }
    assert!(passed as f64 >= 0.95 * total as f64, "{passed} of {total}");
}

#[test]
fn ar1_autocorrelation_matches_coefficient() {
    let spec = ScmSpec::new(1, vec![ScmLink::linear(0, 1, 0, 0.7)]).unwrap().with_length(2000);
    // sampling sd is about sqrt((1 - 0.49) / 2000) = 0.016 per run
    let rs: Vec<f64> = (0..40).map(|seed| autocorr(simulate(&spec, seed).unwrap().column(0), 1)).collect();
    let inside = rs.iter().filter(|r| (*r - 0.7).abs() <= 0.05).count();
    assert!(inside >= 38, "{inside} of 40 within 0.05");
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    assert!((mean - 0.7).abs() <= 0.01, "mean {mean}");
}

#[test]
fn regression_recovers_coefficients() {
    // x2_t = 0.5·x0_{t-1} − 0.4·x1_{t-2} + 0.3·x2_{t-1} + e
    let spec = ScmSpec::new(
        3,
        vec![
            ScmLink::linear(0, 1, 2, 0.5),
            ScmLink::linear(1, 2, 2, -0.4),
            ScmLink::linear(2, 1, 2, 0.3),
        ],
    )
    .unwrap()
    .with_length(2000);
    let truth = [0.5, -0.4, 0.3];
    for seed in 0..5 {
        let p = simulate(&spec, seed).unwrap();
        let rows: Vec<usize> = (2..p.len()).collect();
        let x = DMatrix::from_fn(rows.len(), 3, |r, c| {
            let t = rows[r];
            match c {
                0 => p.column(0)[t - 1],
                1 => p.column(1)[t - 2],
                _ => p.column(2)[t - 1],
            }
        });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&t| p.column(2)[t]));
        let xtx = x.transpose() * &x;
        let inv = xtx.try_inverse().unwrap();
        let beta = &inv * x.transpose() * &y;
        let resid = &y - &x * &beta;
        let sigma2 = resid.norm_squared() / (rows.len() - 3) as f64;
        for c in 0..3 {
            let se = (sigma2 * inv[(c, c)]).sqrt();
            assert!((beta[c] - truth[c]).abs() <= 3.0 * se, "seed {seed} coefficient {c}: {}", beta[c]);
        }
    }
}

#[test]
fn contemporaneous_mechanisms_apply_within_step() {
    // x1_t = x0_t² exactly when x1 has no noise of its own
    let spec = ScmSpec::new(2, vec![ScmLink::new(0, 0, 1, Mechanism::Quadratic(1.0))])
        .unwrap()
        .with_length(50)
        .with_noise(vec![
            causal_ts::synth::Noise::Gaussian { sigma: 1.0 },
            causal_ts::synth::Noise::Gaussian { sigma: 0.0 },
        ])
        .unwrap();
    let p = simulate(&spec, 3).unwrap();
    for t in 0..50 {
        assert!((p.column(1)[t] - p.column(0)[t].powi(2)).abs() < 1e-12);
    }
}

/// Directed graphs with small coefficients, lag-0 links only from lower to
/// higher index so the contemporaneous part is acyclic.
fn small_graph() -> impl Strategy<Value = CausalGraph> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(d, tau_max)| {
        let candidates: Vec<(usize, usize, usize)> = (0..d)
            .flat_map(|j| (0..=tau_max).flat_map(move |lag| (0..d).map(move |i| (i, lag, j))))
            .filter(|&(i, lag, j)| lag > 0 || i < j)
            .collect();
        let n = candidates.len();
        proptest::collection::vec(any::<bool>(), n).prop_map(move |mask| {
            let links = candidates
                .iter()
                .zip(mask)
                .filter(|(_, keep)| *keep)
                .map(|(&(i, lag, j), _)| Link::directed(LaggedVariable::new(i, lag), j, 0.0, 0.0))
                .collect();
            let names = (0..d).map(|i| format!("v{i}")).collect();
            CausalGraph::new("g", names, tau_max, 60, links).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spec_from_graph_round_trips(g in small_graph()) {
        // 0.05 per link keeps every row sum of |coefficients| below 1
        let spec = ScmSpec::from_graph(&g, Mechanism::Linear(0.05)).unwrap();
        let truth = ground_truth_graph(&spec).widened(g.tau_max()).unwrap();
        prop_assert_eq!(truth.adjacency_keys(), g.adjacency_keys());
        let parents: BTreeSet<_> = (0..g.d()).flat_map(|j| g.parents_of(j).unwrap().into_iter().map(move |p| (p, j))).collect();
        let back: BTreeSet<_> = (0..g.d()).flat_map(|j| truth.parents_of(j).unwrap().into_iter().map(move |p| (p, j))).collect();
        prop_assert_eq!(parents, back);
    }

    #[test]
    fn spec_json_round_trips(g in small_graph(), t in 20usize..200, seed in any::<u64>()) {
        let spec = ScmSpec::from_graph(&g, Mechanism::Tanh(0.05)).unwrap().with_length(t);
        let back = ScmSpec::from_json(&spec.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &spec);
        let a = simulate(&spec, seed).unwrap();
        let b = simulate(&back, seed).unwrap();
        prop_assert_eq!(a.columns(), b.columns());
    }
}

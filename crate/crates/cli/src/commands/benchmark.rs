//! `benchmark`: precision, recall and false-positive rate of discovery on
//! simulated data, one row per (battery, test, alpha, T) cell.

use std::path::PathBuf;

use causal_ts::discovery::{run_discovery, DiscoveryConfig};
use causal_ts::panel::standardize;
use causal_ts::seed;
use causal_ts::synth::{ground_truth_graph, score, simulate, RecoveryScore};
use rayon::prelude::*;

use super::{load_spec, out_dir};
use crate::config::{self, BenchmarkConfig};
use crate::error::Result;
use crate::output::{thread_pool, write_atomic};
use crate::BenchmarkArgs;

/// Replicate `r` of a battery at length `T` uses the same simulated panel for
/// every test and alpha.
pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let (mut cfg, base): (BenchmarkConfig, PathBuf) = config::load(args.common.config.as_deref())?;
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    cfg.threads = args.common.threads.or(cfg.threads);
    cfg.validate()?;
    let out = out_dir(args.common.out.as_ref(), cfg.out.as_ref(), &base)?;
    let pool = thread_pool(cfg.threads)?;

    let mut table = String::from("battery,test,alpha,t,seeds,precision,recall,fpr\n");
    for (b_idx, battery) in cfg.batteries.iter().enumerate() {
        let spec = load_spec(&battery.spec, &base)?;
        let truth = ground_truth_graph(&spec).widened(battery.tau_max)?;
        for &t in &battery.lengths {
            let spec = spec.clone().with_length(t);
            let panels = pool.install(|| {
                (0..battery.seeds)
                    .into_par_iter()
                    .map(|r| {
                        let s = seed::derive(cfg.seed, &[b_idx as u64, t as u64, r as u64]);
                        Ok(standardize(&simulate(&spec, s)?)?)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for &test in &battery.tests {
                for &alpha in &battery.alphas {
                    let config = DiscoveryConfig {
                        max_condition_dim: battery.max_condition_dim,
                        ..DiscoveryConfig::new(battery.tau_max, alpha, test.ci_test(battery.cmi))
                    };
                    let scores = pool.install(|| {
                        panels
                            .par_iter()
                            .enumerate()
                            .map(|(r, panel)| {
                                let config = config.with_seed(seed::derive(cfg.seed, &[b_idx as u64, t as u64, r as u64, 1]));
                                let found = run_discovery(panel, &config)?;
                                Ok(score(&found, &truth)?)
                            })
                            .collect::<Result<Vec<RecoveryScore>>>()
                    })?;
                    let n = scores.len() as f64;
                    let mean = |f: fn(&RecoveryScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
                    let line = format!(
                        "{},{},{},{},{},{},{},{}\n",
                        battery.name,
                        test.as_str(),
                        alpha,
                        t,
                        battery.seeds,
                        mean(|s| s.precision),
                        mean(|s| s.recall),
                        mean(RecoveryScore::false_positive_rate)
                    );
                    print!("{line}");
                    table.push_str(&line);
                }
            }
        }
    }
    write_atomic(&out.join("benchmark.csv"), table.as_bytes())?;
    Ok(())
}

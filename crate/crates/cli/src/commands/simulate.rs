//! `simulate`: seeded panels and the ground-truth graph of one model.

use std::path::PathBuf;

use causal_ts::panel::write_panel;
use causal_ts::seed;
use causal_ts::synth::{ground_truth_graph, simulate};
use rayon::prelude::*;

use super::{load_spec, out_dir};
use crate::config::{self, SimulateConfig};
use crate::error::{CliError, Result};
use crate::output::{thread_pool, write_atomic};
use crate::SimulateArgs;

/// Panel `i` is written to `{prefix}{i:03}.csv` and drawn with seed
/// `derive(seed, [i])`; the truth graph goes to `{prefix}truth.json`.
pub fn run(args: &SimulateArgs) -> Result<()> {
    let (mut cfg, base): (SimulateConfig, PathBuf) = config::load(args.common.config.as_deref())?;
    let spec_value = match &args.spec {
        Some(p) => {
            let p = std::env::current_dir().map_err(|e| CliError::io(".", e))?.join(p);
            serde_json::Value::String(p.to_string_lossy().into_owned())
        }
        None => cfg
            .spec
            .take()
            .ok_or_else(|| CliError::Usage("a model spec is required (--spec)".into()))?,
    };
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    if cfg.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let out = out_dir(args.common.out.as_ref(), cfg.out.as_ref(), &base)?;
    let pool = thread_pool(args.common.threads)?;
    let spec = load_spec(&spec_value, &base)?;

    let indices: Vec<usize> = (cfg.start_index..cfg.start_index + cfg.n).collect();
    let panels = pool.install(|| {
        indices
            .par_iter()
            .map(|&i| {
                let panel = simulate(&spec, seed::derive(cfg.seed, &[i as u64]))?;
                let mut bytes = Vec::new();
                write_panel(&panel, &mut bytes)?;
                Ok(bytes)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, bytes) in indices.iter().zip(panels) {
        write_atomic(&out.join(format!("{}{i:03}.csv", cfg.prefix)), &bytes)?;
    }
    let truth = ground_truth_graph(&spec);
    write_atomic(&out.join(format!("{}truth.json", cfg.prefix)), truth.to_json()?.as_bytes())?;
    println!(
        "simulated {} panels of length {} with {} links",
        cfg.n,
        spec.len(),
        spec.links().len()
    );
    Ok(())
}

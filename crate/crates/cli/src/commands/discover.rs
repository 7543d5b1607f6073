//! `discover`: one graph and one diagnostics file per input panel.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use causal_ts::discovery::{discover, DiscoveryConfig};
use causal_ts::panel::{load_panel, resample, standardize, with_bins_sum, LoadSchema};
use rayon::prelude::*;

use super::out_dir;
use crate::config::{self, resolve, DiscoverConfig};
use crate::error::{CliError, Result};
use crate::output::{files_with_suffix, thread_pool, write_atomic};
use crate::DiscoverArgs;

pub fn run(args: &DiscoverArgs) -> Result<()> {
    let (mut cfg, base): (DiscoverConfig, PathBuf) = config::load(args.common.config.as_deref())?;
    let mut inputs: Vec<PathBuf> = cfg.inputs.iter().map(|p| resolve(&base, p)).collect();
    if !args.inputs.is_empty() {
        inputs = args.inputs.clone();
    }
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    cfg.threads = args.common.threads.or(cfg.threads);
    cfg.tau_max = args.tau_max.or(cfg.tau_max);
    cfg.resolution_seconds = args.resolution.or(cfg.resolution_seconds);
    cfg.test = args.test.unwrap_or(cfg.test);
    cfg.alpha = args.alpha.or(cfg.alpha);

    let discovery = cfg.discovery_config()?;
    if let Some(r) = cfg.resolution_seconds {
        if r == 0 || r % cfg.input_resolution_seconds != 0 {
            return Err(CliError::Usage(format!(
                "resolution {r}s is not a positive multiple of the input resolution {}s",
                cfg.input_resolution_seconds
            )));
        }
    }
    let files = expand_inputs(&inputs)?;
    let mut stems = BTreeSet::new();
    for f in &files {
        if !stems.insert(subject_of(f)) {
            return Err(CliError::Usage(format!("duplicate subject `{}`", subject_of(f))));
        }
    }
    let out = out_dir(args.common.out.as_ref(), cfg.out.as_ref(), &base)?;
    let pool = thread_pool(cfg.threads)?;

    let schema = LoadSchema {
        timestamp_column: cfg.timestamp_column.clone(),
        ..LoadSchema::new(cfg.input_resolution_seconds).with_variables(cfg.variables.iter().cloned())
    };
    let results: Vec<Result<String>> =
        pool.install(|| files.par_iter().map(|f| subject(f, &schema, &cfg, &discovery, &out)).collect());

    let mut failed = Vec::new();
    for (file, result) in files.iter().zip(results) {
        let id = subject_of(file);
        let log = out.join(format!("{id}.error.log"));
        match result {
            Ok(line) => {
                println!("{line}");
                if log.exists() {
                    std::fs::remove_file(&log).map_err(|e| CliError::io(&log, e))?;
                }
            }
            Err(e) => {
                eprintln!("{id}\tfailed\t{e}");
                write_atomic(&log, format!("{e}\n").as_bytes())?;
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} of {} subjects failed: {}",
            failed.len(),
            files.len(),
            failed.join(", ")
        )))
    }
}

fn subject_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Files as given, directories replaced by their `*.csv` files.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(CliError::Usage("no input panels given".into()));
    }
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(files_with_suffix(p, ".csv")?);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Usage(format!("input {} does not exist", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("input directories hold no .csv files".into()));
    }
    Ok(files)
}

fn subject(
    file: &Path,
    schema: &LoadSchema,
    cfg: &DiscoverConfig,
    discovery: &DiscoveryConfig,
    out: &Path,
) -> Result<String> {
    let mut panel = load_panel(file, schema)?;
    if cfg.bins_sum {
        panel = with_bins_sum(&panel)?;
    }
    if let Some(r) = cfg.resolution_seconds {
        if r != panel.resolution_seconds() {
            panel = resample(&panel, r)?;
        }
    }
    let panel = standardize(&panel)?;
    let result = discover(&panel, discovery)?;
    let id = panel.subject_id();
    write_atomic(&out.join(format!("{id}.graph.json")), result.graph.to_json()?.as_bytes())?;
    write_atomic(
        &out.join(format!("{id}.diagnostics.json")),
        result.diagnostics.to_json()?.as_bytes(),
    )?;
    Ok(format!(
        "{id}\tok\tT={}\td={}\ttau_max={}\tresolution={}s\tlinks={}",
        panel.len(),
        panel.d(),
        result.graph.tau_max(),
        panel.resolution_seconds(),
        result.graph.links().len()
    ))
}

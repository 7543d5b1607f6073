pub mod benchmark;
pub mod cohort;
pub mod discover;
pub mod simulate;

use std::path::{Path, PathBuf};

use causal_ts::synth::ScmSpec;

use crate::config::resolve;
use crate::error::{CliError, Result};
use crate::output::read_to_string;

/// Parses a model spec given either as a path (relative to `base`) or inline.
pub(crate) fn load_spec(value: &serde_json::Value, base: &Path) -> Result<ScmSpec> {
    match value {
        serde_json::Value::String(p) => {
            let path = resolve(base, Path::new(p));
            Ok(ScmSpec::from_json(&read_to_string(&path)?)?)
        }
        serde_json::Value::Object(_) => Ok(ScmSpec::from_json(&value.to_string())?),
        _ => Err(CliError::Usage("spec must be a path or a JSON object".into())),
    }
}

/// The output directory, created if missing.
pub(crate) fn out_dir(flag: Option<&PathBuf>, config: Option<&PathBuf>, base: &Path) -> Result<PathBuf> {
    let dir = match (flag, config) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve(base, p),
        (None, None) => return Err(CliError::Usage("an output directory is required (--out)".into())),
    };
    crate::output::create_dir(&dir)?;
    Ok(dir)
}

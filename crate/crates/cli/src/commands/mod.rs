//! One function per subcommand. Each writes its outputs plus
//! `effective_config.json` under the output directory.

mod data;
mod model;
mod report;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fnirs_bnn::features::{read_features_csv, read_sidecar, write_features_csv, write_sidecar};
use fnirs_bnn::FeatureSet;

use crate::config::RunConfig;
use crate::UsageError;

pub use data::{preprocess, synth};
pub use model::{predict, train};
pub use report::{evaluate_dir, evaluate_one, trace};

pub struct Global {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

/// A volunteer's input directory and the name used for its output
/// directory (`None` when the input is a single volunteer).
pub(crate) struct Unit {
    pub name: Option<String>,
    pub dir: PathBuf,
}

impl Unit {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("all")
    }

    pub fn out_dir(&self, root: &Path) -> PathBuf {
        match &self.name {
            Some(n) => root.join(n),
            None => root.to_path_buf(),
        }
    }
}

/// `dir` itself when it holds `marker`, else its sub-directories that do,
/// in name order.
pub(crate) fn discover(dir: &Path, marker: &str) -> Result<Vec<Unit>> {
    if !dir.is_dir() {
        return Err(UsageError(format!("{} is not a directory", dir.display())).into());
    }
    if dir.join(marker).exists() {
        return Ok(vec![Unit {
            name: None,
            dir: dir.to_path_buf(),
        }]);
    }
    let mut units: Vec<Unit> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join(marker).exists())
        .map(|p| Unit {
            name: p.file_name().map(|n| n.to_string_lossy().into_owned()),
            dir: p,
        })
        .collect();
    units.sort_by(|a, b| a.name.cmp(&b.name));
    if units.is_empty() {
        return Err(UsageError(format!(
            "no {marker} in {} or in any of its sub-directories",
            dir.display()
        ))
        .into());
    }
    Ok(units)
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub(crate) fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Feature CSV plus its `.json` sidecar.
pub(crate) fn read_features(csv: &Path) -> Result<FeatureSet> {
    let sidecar = read_sidecar(&csv.with_extension("json"))?;
    Ok(read_features_csv(csv, &sidecar)?)
}

pub(crate) fn write_features(fs: &FeatureSet, csv: &Path) -> Result<()> {
    write_features_csv(fs, csv)?;
    write_sidecar(fs, &csv.with_extension("json"))?;
    Ok(())
}

//! Run configuration: one JSON document covering every stage.

use std::path::Path;

use anyhow::{Context, Result};
use fnirs_bnn::pipeline::PreprocessConfig;
use fnirs_bnn::predict::{DEFAULT_PREDICTIVE_SAMPLES, DEFAULT_THRESHOLD};
use fnirs_bnn::rng::derive_seed;
use fnirs_bnn::synth::SynthConfig;
use fnirs_bnn::{Architecture, Prior, SplitConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub n_samples: usize,
    pub threshold: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_PREDICTIVE_SAMPLES,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub n_samples: usize,
    pub n_seeds: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_seeds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// The only seed; every stage derives its own stream from it.
    pub seed: u64,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub split: SplitConfig,
    /// z-score features with training-set statistics.
    pub standardize: bool,
    /// Train one model on all volunteers instead of one per volunteer.
    pub pooled: bool,
    pub architecture: Architecture,
    pub prior: Prior,
    pub train: TrainConfig,
    pub predict: PredictConfig,
    pub trace: TraceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            synth: SynthConfig::default(),
            preprocess: PreprocessConfig::default(),
            split: SplitConfig::default(),
            standardize: true,
            pooled: false,
            architecture: Architecture::default(),
            prior: Prior::default(),
            train: TrainConfig::default(),
            predict: PredictConfig::default(),
            trace: TraceConfig::default(),
        }
    }
}

/// Independent random streams, one per stage.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Synth = 1,
    Split = 2,
    Train = 3,
    Predict = 4,
    Trace = 5,
    Baseline = 6,
}

const SEEDED_SECTIONS: [&str; 3] = ["synth", "split", "train"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {} is not valid JSON: {e}", path.display())))?;
        for section in SEEDED_SECTIONS {
            if value.get(section).and_then(|s| s.get("seed")).is_some() {
                return Err(UsageError(format!(
                    "{section}.seed: per-stage seeds are derived from the top-level `seed`; remove this key"
                ))
                .into());
            }
        }
        serde_json::from_value(value)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.preprocess.validate()?;
        self.split.validate()?;
        self.architecture.validate()?;
        self.prior.validate()?;
        self.train.validate()?;
        if self.predict.n_samples < 1 {
            return Err(UsageError("predict.n_samples: must be at least 1".into()).into());
        }
        if !(0.0..=1.0).contains(&self.predict.threshold) {
            return Err(UsageError(format!(
                "predict.threshold: must lie in [0, 1], got {}",
                self.predict.threshold
            ))
            .into());
        }
        if self.trace.n_samples < 1 || self.trace.n_seeds < 1 {
            return Err(
                UsageError("trace.n_samples and trace.n_seeds must be at least 1".into()).into(),
            );
        }
        Ok(())
    }

    pub fn stream_seed(&self, stream: Stream, index: u64) -> u64 {
        derive_seed(derive_seed(self.seed, stream as u64), index)
    }

    /// JSON written next to every command's outputs. Stage seeds are left
    /// out so the file can be fed back in with `--config`.
    pub fn effective_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        for section in SEEDED_SECTIONS {
            if let Some(obj) = value.get_mut(section).and_then(|s| s.as_object_mut()) {
                obj.remove("seed");
            }
        }
        serde_json::to_string_pretty(&value).expect("config serializes") + "\n"
    }

    pub fn write_effective(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("effective_config.json");
        std::fs::write(&path, self.effective_json())
            .with_context(|| format!("writing {}", path.display()))
    }
}

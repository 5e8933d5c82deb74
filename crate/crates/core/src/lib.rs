//! Bayesian neural network classification of fNIRS finger-tapping recordings.
//!
//! The crate covers the whole pipeline:
//!
//! ```text
//! recording (ΔHbO / ΔHbR, markers)
//!   ├─ dsp::design_bandpass + dsp::filtfilt   zero-phase Butterworth band-pass
//!   ├─ dsp::extract_epochs                    [-2, 28) s around each onset
//!   ├─ dsp::baseline_correct                  subtract mean over [-1, 0) s
//!   ├─ features::extract_features             window means → 120-dim vectors
//!   ├─ features::split / standardizer         stratified 70/30, z-scoring
//!   ├─ trainer::train                         ELBO ascent over q(w | μ, ρ)
//!   ├─ predict::posterior_predictive          Monte-Carlo predictive + uncertainty split
//!   └─ eval                                   accuracy, ROC, AUC, no-skill baseline
//! ```
//!
//! [`synth`] generates labelled recordings with a controllable effect size so
//! every stage can be exercised without the original dataset.

pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod network;
pub mod pipeline;
pub mod predict;
pub mod rng;
pub mod synth;
pub mod trainer;
pub mod vi;

pub use error::{Error, Result};
pub use features::{FeatureLayout, FeatureSet, FeatureVector, Scaling, SplitConfig};
pub use network::{Activation, Architecture};
pub use trainer::{ElboTrace, OptimizerKind, TrainConfig, TrainedModel};
pub use vi::{ElboMode, Prior, VariationalParams};

use serde::{Deserialize, Serialize};

/// The two task classes. `Lft` encodes as 0 and `Rft` as 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskLabel {
    #[serde(rename = "LFT")]
    Lft,
    #[serde(rename = "RFT")]
    Rft,
}

impl TaskLabel {
    pub const ALL: [TaskLabel; 2] = [TaskLabel::Lft, TaskLabel::Rft];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskLabel::Lft => "LFT",
            TaskLabel::Rft => "RFT",
        }
    }

    /// Class index used as the Bernoulli target.
    pub fn index(self) -> usize {
        match self {
            TaskLabel::Lft => 0,
            TaskLabel::Rft => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == TaskLabel::Rft
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(TaskLabel::Lft),
            1 => Some(TaskLabel::Rft),
            _ => None,
        }
    }
}

impl std::fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TaskLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "LFT" => Ok(TaskLabel::Lft),
            "RFT" => Ok(TaskLabel::Rft),
            other => Err(Error::InvalidData(format!(
                "unknown task label {other:?} (expected RFT or LFT)"
            ))),
        }
    }
}

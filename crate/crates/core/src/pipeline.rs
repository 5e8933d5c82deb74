//! Recording → feature-set glue shared by the command-line tool and tests.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{
    baseline_correct, design_bandpass, extract_epochs, filtfilt, FilterSpec, TimeSeries,
};
use crate::error::{Error, Result};
use crate::features::{default_windows, extract_features, FeatureLayout, FeatureSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub filter: FilterSpec,
    pub epoch_start_s: f64,
    pub epoch_end_s: f64,
    pub baseline_start_s: f64,
    pub baseline_end_s: f64,
    pub windows: Vec<(f64, f64)>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            filter: FilterSpec::default(),
            epoch_start_s: -2.0,
            epoch_end_s: 28.0,
            baseline_start_s: -1.0,
            baseline_end_s: 0.0,
            windows: default_windows(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epoch_start_s < self.epoch_end_s) {
            return Err(Error::config(
                "preprocess.epoch_end_s",
                "must exceed epoch_start_s",
            ));
        }
        if !(self.baseline_start_s < self.baseline_end_s)
            || self.baseline_start_s < self.epoch_start_s
            || self.baseline_end_s > self.epoch_end_s
        {
            return Err(Error::config(
                "preprocess.baseline_start_s",
                "baseline interval must be non-empty and inside the epoch",
            ));
        }
        if self.windows.is_empty() {
            return Err(Error::config(
                "preprocess.windows",
                "at least one window is required",
            ));
        }
        for &(a, b) in &self.windows {
            if !(a < b) || a < self.epoch_start_s || b > self.epoch_end_s {
                return Err(Error::config(
                    "preprocess.windows",
                    format!("window [{a}, {b}) must be non-empty and inside the epoch"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub features: FeatureSet,
    /// One line per skipped marker.
    pub warnings: Vec<String>,
}

/// Band-pass every channel of the continuous recording.
pub fn filter_recording(ts: &TimeSeries, spec: &FilterSpec) -> Result<TimeSeries> {
    let coeffs = design_bandpass(spec, ts.sample_rate_hz())?;
    let run = |m: &Array2<f64>| -> Result<Array2<f64>> {
        let columns: Vec<Vec<f64>> = m
            .axis_iter(Axis(1))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|col| filtfilt(&coeffs, &col.to_vec()))
            .collect::<Result<_>>()?;
        let mut out = Array2::zeros(m.dim());
        for (j, col) in columns.into_iter().enumerate() {
            out.column_mut(j).assign(&ndarray::Array1::from(col));
        }
        Ok(out)
    };
    ts.with_signals(run(ts.hbo())?, run(ts.hbr())?)
}

/// Filter, epoch, baseline-correct and extract window-mean features.
pub fn preprocess(ts: &TimeSeries, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let filtered = filter_recording(ts, &cfg.filter)?;
    let extraction = extract_epochs(&filtered, cfg.epoch_start_s, cfg.epoch_end_s)?;
    let warnings: Vec<String> = extraction.skipped.iter().map(|s| s.to_string()).collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let vectors = extraction
        .epochs
        .iter()
        .map(|e| {
            let corrected = baseline_correct(e, cfg.baseline_start_s, cfg.baseline_end_s)?;
            extract_features(&corrected, &cfg.windows)
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = FeatureLayout::new(cfg.windows.clone(), ts.n_channels());
    Ok(Preprocessed {
        features: FeatureSet::new(vectors, layout)?,
        warnings,
    })
}

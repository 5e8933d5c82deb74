//! Synthetic labelled fNIRS recordings.
//!
//! Each trial is an introductory period, a 10 s tapping period and a break.
//! Markers sit at the start of the tapping period. A right-hand (RFT) trial
//! adds `effect_size × response(t)` to the left-hemisphere HbO channels and
//! `−hbr_ratio` times that to their HbR channels; LFT mirrors this on the
//! right hemisphere. `response` is a boxcar over the task period convolved
//! with a double-gamma kernel, scaled to peak 1.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dsp::{write_markers, write_recording, Marker, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::TaskLabel;

pub const HRF_PEAK_DELAY_S: f64 = 6.0;
pub const HRF_UNDERSHOOT_DELAY_S: f64 = 16.0;
pub const HRF_UNDERSHOOT_RATIO: f64 = 1.0 / 6.0;
pub const HRF_DURATION_S: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Standard deviation of i.i.d. Gaussian noise per sample.
    pub white: f64,
    /// Amplitude of the ~0.1 Hz Mayer wave.
    pub mayer: f64,
    /// Amplitude of the ~0.3 Hz respiration component.
    pub respiration: f64,
    /// Amplitude of the ~1.1 Hz cardiac component.
    pub cardiac: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            white: 2.0,
            mayer: 1.2,
            respiration: 0.8,
            cardiac: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub intro_s: f64,
    pub task_s: f64,
    pub break_min_s: f64,
    pub break_max_s: f64,
    /// Quiet time before the first trial.
    pub lead_in_s: f64,
    /// Quiet time after the last trial's break.
    pub tail_s: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            intro_s: 2.0,
            task_s: 10.0,
            break_min_s: 17.0,
            break_max_s: 19.0,
            lead_in_s: 30.0,
            tail_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_volunteers: usize,
    pub trials_per_class: usize,
    pub sample_rate_hz: f64,
    /// Even; the first half are left hemisphere.
    pub n_channels: usize,
    pub effect_size: f64,
    pub hbr_ratio: f64,
    pub noise: NoiseConfig,
    pub timing: TimingConfig,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_volunteers: 5,
            trials_per_class: 25,
            sample_rate_hz: 10.0,
            n_channels: 20,
            effect_size: 1.0,
            hbr_ratio: 1.0 / 3.0,
            noise: NoiseConfig::default(),
            timing: TimingConfig::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad =
            |field: &str, reason: String| Err(Error::config(format!("synth.{field}"), reason));
        if self.n_volunteers < 1 {
            return bad("n_volunteers", "must be at least 1".into());
        }
        if self.trials_per_class < 1 {
            return bad("trials_per_class", "must be at least 1".into());
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(
                "sample_rate_hz",
                format!("must be positive, got {}", self.sample_rate_hz),
            );
        }
        if self.n_channels < 2 || !self.n_channels.is_multiple_of(2) {
            return bad(
                "n_channels",
                format!("must be a positive even number, got {}", self.n_channels),
            );
        }
        for (name, v) in [
            ("effect_size", self.effect_size),
            ("hbr_ratio", self.hbr_ratio),
            ("noise.white", self.noise.white),
            ("noise.mayer", self.noise.mayer),
            ("noise.respiration", self.noise.respiration),
            ("noise.cardiac", self.noise.cardiac),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, format!("must be finite and ≥ 0, got {v}"));
            }
        }
        let t = &self.timing;
        for (name, v) in [
            ("timing.intro_s", t.intro_s),
            ("timing.task_s", t.task_s),
            ("timing.break_min_s", t.break_min_s),
            ("timing.break_max_s", t.break_max_s),
            ("timing.lead_in_s", t.lead_in_s),
            ("timing.tail_s", t.tail_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if t.break_max_s < t.break_min_s {
            return bad("timing.break_max_s", "must be ≥ break_min_s".into());
        }
        Ok(())
    }
}

fn gamma_pdf(t: f64, shape: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    ((shape - 1.0) * t.ln() - t - ln_gamma(shape)).exp()
}

/// Double-gamma kernel on `[0, 30)` s, scaled to peak 1. Each lobe is a
/// unit-scale gamma density whose mode falls at its delay.
pub fn hrf_kernel(sample_rate_hz: f64) -> Result<Vec<f64>> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::config("sample_rate_hz", "must be positive"));
    }
    let n = (HRF_DURATION_S * sample_rate_hz).round() as usize;
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate_hz;
            gamma_pdf(t, HRF_PEAK_DELAY_S + 1.0)
                - HRF_UNDERSHOOT_RATIO * gamma_pdf(t, HRF_UNDERSHOOT_DELAY_S + 1.0)
        })
        .collect();
    let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw.into_iter().map(|v| v / peak).collect())
}

/// Task-period boxcar convolved with the kernel, scaled to peak 1. Index 0
/// is the task onset.
pub fn task_response(sample_rate_hz: f64, task_s: f64) -> Result<Vec<f64>> {
    let kernel = hrf_kernel(sample_rate_hz)?;
    let width = (task_s * sample_rate_hz).round() as usize;
    let n = width + kernel.len() - 1;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(kernel.len() - 1);
        let hi = i.min(width - 1);
        if lo <= hi {
            *o = (lo..=hi).map(|j| kernel[i - j]).sum();
        }
    }
    let peak = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(out.into_iter().map(|v| v / peak).collect())
}

/// Recordings for every volunteer, in volunteer order.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<TimeSeries>> {
    cfg.validate()?;
    let response = task_response(cfg.sample_rate_hz, cfg.timing.task_s)?;
    (0..cfg.n_volunteers)
        .into_par_iter()
        .map(|v| generate_volunteer(cfg, &response, derive_seed(cfg.seed, v as u64)))
        .collect()
}

fn generate_volunteer(cfg: &SynthConfig, response: &[f64], seed: u64) -> Result<TimeSeries> {
    let mut rng = rng_from_seed(seed);
    let fs = cfg.sample_rate_hz;
    let t = &cfg.timing;

    let mut labels: Vec<TaskLabel> = TaskLabel::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, cfg.trials_per_class))
        .collect();
    labels.shuffle(&mut rng);

    let mut markers = Vec::with_capacity(labels.len());
    let mut clock = t.lead_in_s;
    for &label in &labels {
        markers.push(Marker {
            onset_s: clock + t.intro_s,
            label,
        });
        let pause = if t.break_max_s > t.break_min_s {
            rng.random_range(t.break_min_s..t.break_max_s)
        } else {
            t.break_min_s
        };
        clock += t.intro_s + t.task_s + pause;
    }
    let n_samples = ((clock + t.tail_s) * fs).round() as usize;
    let n_ch = cfg.n_channels;
    let half = n_ch / 2;

    let mut hbo = Array2::<f64>::zeros((n_samples, n_ch));
    let mut hbr = Array2::<f64>::zeros((n_samples, n_ch));

    let components = [
        (cfg.noise.mayer, 0.1),
        (cfg.noise.respiration, 0.3),
        (cfg.noise.cardiac, 1.1),
    ];
    for signal in [&mut hbo, &mut hbr] {
        for ch in 0..n_ch {
            let waves: Vec<(f64, f64, f64)> = components
                .iter()
                .map(|&(amp, f)| {
                    let freq = f * rng.random_range(0.95..1.05);
                    (amp, 2.0 * PI * freq / fs, rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            for i in 0..n_samples {
                let white: f64 = StandardNormal.sample(&mut rng);
                let mut v = cfg.noise.white * white;
                for &(amp, omega, phase) in &waves {
                    v += amp * (omega * i as f64 + phase).sin();
                }
                signal[[i, ch]] = v;
            }
        }
    }

    if cfg.effect_size > 0.0 {
        for m in &markers {
            // Right-hand tapping activates the left hemisphere.
            let channels = match m.label {
                TaskLabel::Rft => 0..half,
                TaskLabel::Lft => half..n_ch,
            };
            let start = (m.onset_s * fs).round() as usize;
            for (k, r) in response.iter().enumerate() {
                let i = start + k;
                if i >= n_samples {
                    break;
                }
                let a = cfg.effect_size * r;
                for ch in channels.clone() {
                    hbo[[i, ch]] += a;
                    hbr[[i, ch]] -= cfg.hbr_ratio * a;
                }
            }
        }
    }

    TimeSeries::new(fs, hbo, hbr, markers)
}

/// Directory name of volunteer `index` (zero-based).
pub fn volunteer_dir_name(index: usize) -> String {
    format!("volunteer_{:02}", index + 1)
}

/// Write `volunteer_XX/{recording.csv, markers.csv}` under `dir`.
pub fn write_dataset(recordings: &[TimeSeries], dir: &Path) -> Result<()> {
    for (i, ts) in recordings.iter().enumerate() {
        let sub = dir.join(volunteer_dir_name(i));
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        write_recording(ts, &sub.join("recording.csv"))?;
        write_markers(ts.markers(), &sub.join("markers.csv"))?;
    }
    Ok(())
}

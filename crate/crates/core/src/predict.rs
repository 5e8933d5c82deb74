//! Monte-Carlo posterior predictive and weight traces.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::network::{forward, softplus};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trainer::TrainedModel;
use crate::vi::sample_weights;

pub const DEFAULT_PREDICTIVE_SAMPLES: usize = 1000;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub p_mean: f64,
    /// 1 (RFT) when `p_mean ≥ threshold`.
    pub label: u8,
    /// Variance of the per-draw probabilities.
    pub epistemic_var: f64,
    /// Mean Bernoulli variance `p(1 − p)` across draws.
    pub aleatoric_var: f64,
    pub total_var: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTrace {
    pub weight_index: usize,
    pub seed: u64,
    pub samples: Vec<f64>,
}

pub fn label_for(p_mean: f64, threshold: f64) -> u8 {
    u8::from(p_mean >= threshold)
}

/// Average the network output over `n_samples` weight draws from the
/// variational posterior. `x` must already be standardized.
pub fn posterior_predictive(
    model: &TrainedModel,
    x: &[f64],
    n_samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<Prediction> {
    if n_samples < 1 {
        return Err(Error::config("predict.n_samples", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(
            "predict.threshold",
            format!("must lie in [0, 1], got {threshold}"),
        ));
    }
    let arch = &model.architecture;
    if x.len() != arch.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} features, model expects {}",
            x.len(),
            arch.n_inputs()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut probs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let draw = sample_weights(&model.posterior, &mut rng);
        probs.push(forward(arch, &draw.w, x)?);
    }
    let s = n_samples as f64;
    let p_mean = probs.iter().sum::<f64>() / s;
    let aleatoric_var = probs.iter().map(|p| p * (1.0 - p)).sum::<f64>() / s;
    let epistemic_var = probs.iter().map(|p| (p - p_mean).powi(2)).sum::<f64>() / s;
    Ok(Prediction {
        p_mean,
        label: label_for(p_mean, threshold),
        epistemic_var,
        aleatoric_var,
        total_var: epistemic_var + aleatoric_var,
        n_samples,
        seed,
    })
}

/// Item `i` uses seed `derive_seed(seed, i)`, keyed by its position in `xs`.
pub fn classify_batch(
    model: &TrainedModel,
    xs: &FeatureSet,
    n_samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<Vec<Prediction>> {
    if xs.scaling != model.scaling {
        return Err(Error::DimensionMismatch(
            "feature scaling differs from the scaling stored in the model; \
             standardize with the model's statistics first"
                .into(),
        ));
    }
    xs.vectors
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            posterior_predictive(
                model,
                &v.values,
                n_samples,
                derive_seed(seed, i as u64),
                threshold,
            )
        })
        .collect()
}

/// `n_samples` independent draws of one coordinate of `q`.
pub fn weight_trace(
    model: &TrainedModel,
    weight_index: usize,
    n_samples: usize,
    seed: u64,
) -> Result<WeightTrace> {
    let n = model.posterior.len();
    if weight_index >= n {
        return Err(Error::OutOfRange(format!(
            "weight index {weight_index} (model has {n} weights)"
        )));
    }
    let mu = model.posterior.mu[weight_index];
    let sigma = softplus(model.posterior.rho[weight_index]);
    let mut rng = rng_from_seed(seed);
    let samples = (0..n_samples)
        .map(|_| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            mu + sigma * eps
        })
        .collect();
    Ok(WeightTrace {
        weight_index,
        seed,
        samples,
    })
}

pub fn write_predictions_csv(preds: &[Prediction], path: &Path) -> Result<()> {
    let mut out = String::from("item_id,p_mean,label,epistemic_var,aleatoric_var,total_var\n");
    for (i, p) in preds.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            p.p_mean, p.label, p.epistemic_var, p.aleatoric_var, p.total_var
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_trace_csv(trace: &WeightTrace, path: &Path) -> Result<()> {
    let mut out = String::from("draw_index,value\n");
    for (i, v) in trace.samples.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

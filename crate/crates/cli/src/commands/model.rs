use std::path::Path;

use anyhow::{Context, Result};
use fnirs_bnn::features::{apply_standardizer, fit_standardizer, split};
use fnirs_bnn::predict::{classify_batch, write_predictions_csv};
use fnirs_bnn::trainer::{load_model, save_model, train as fit_model};
use fnirs_bnn::{FeatureSet, SplitConfig, TrainConfig, TrainedModel};
use rayon::prelude::*;

use super::{create_dir, discover, read_features, write, write_features, Global, Unit};
use crate::config::Stream;
use crate::svg::{line_chart, Axes, Series};
use crate::UsageError;

pub fn train(g: &Global, input: &Path) -> Result<()> {
    let units = discover(input, "features.csv")?;
    let mut sets: Vec<(Unit, FeatureSet)> = units
        .into_iter()
        .map(|u| {
            let fs = read_features(&u.dir.join("features.csv"))?;
            Ok((u, fs))
        })
        .collect::<Result<_>>()?;
    if g.cfg.pooled && sets.len() > 1 {
        let pooled = FeatureSet::concat(&sets.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>())?;
        sets = vec![(
            Unit {
                name: None,
                dir: input.to_path_buf(),
            },
            pooled,
        )];
    }
    let results: Vec<Result<(f64, f64)>> = sets
        .par_iter()
        .enumerate()
        .map(|(i, (unit, fs))| train_unit(g, i as u64, unit, fs))
        .collect();
    for ((unit, _), r) in sets.iter().zip(results) {
        let (first, last) = r.with_context(|| format!("training {}", unit.label()))?;
        println!("{}: ELBO {first:.3} → {last:.3}", unit.label());
    }
    g.cfg.write_effective(&g.out)
}

fn train_unit(g: &Global, index: u64, unit: &Unit, fs: &FeatureSet) -> Result<(f64, f64)> {
    let cfg = &g.cfg;
    if fs.scaling.is_some() {
        return Err(UsageError(format!(
            "{}: features are already standardized",
            unit.dir.display()
        ))
        .into());
    }
    let split_cfg = SplitConfig {
        seed: cfg.stream_seed(Stream::Split, index),
        ..cfg.split
    };
    let (mut train_set, mut test_set) = split(fs, &split_cfg)?;
    if cfg.standardize {
        let scaling = fit_standardizer(&train_set)?;
        if !scaling.degenerate.is_empty() {
            log::warn!(
                "{}: {} constant features left unscaled",
                unit.label(),
                scaling.degenerate.len()
            );
        }
        train_set = apply_standardizer(&train_set, &scaling)?;
        test_set = apply_standardizer(&test_set, &scaling)?;
    }
    let train_cfg = TrainConfig {
        seed: cfg.stream_seed(Stream::Train, index),
        ..cfg.train.clone()
    };
    let (model, trace) = fit_model(&train_set, &cfg.architecture, &cfg.prior, &train_cfg)?;

    let dir = unit.out_dir(&g.out);
    create_dir(&dir)?;
    save_model(&model, &dir.join("model.json"))?;
    write_features(&train_set, &dir.join("train_features.csv"))?;
    write_features(&test_set, &dir.join("test_features.csv"))?;

    let mut csv = String::from("iteration,elbo\n");
    for (i, v) in trace.elbo.iter().enumerate() {
        csv.push_str(&format!("{i},{v}\n"));
    }
    write(&dir.join("elbo_trace.csv"), csv)?;
    let points: Vec<(f64, f64)> = trace
        .elbo
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64, v))
        .collect();
    let svg = line_chart(
        &Axes {
            title: "ELBO over iterations",
            x_label: "Iteration",
            y_label: "ELBO",
            x_range: None,
            y_range: None,
        },
        &[Series {
            label: "ELBO estimate",
            color: "#1f77b4",
            dashed: false,
            points: &points,
        }],
    );
    write(&dir.join("elbo.svg"), svg)?;
    Ok(trace.window_means())
}

/// Bring a feature set onto the model's scaling: raw features are
/// standardized with the model's statistics, anything else must match.
pub(crate) fn align_scaling(model: &TrainedModel, fs: FeatureSet) -> Result<FeatureSet> {
    match (&model.scaling, &fs.scaling) {
        (Some(s), None) => Ok(apply_standardizer(&fs, s)?),
        (a, b) if a == b => Ok(fs),
        _ => Err(UsageError(
            "feature scaling does not match the model's; pass raw features or the set written by train".into(),
        )
        .into()),
    }
}

pub fn predict(g: &Global, model_path: &Path, features: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let fs = align_scaling(&model, read_features(features)?)?;
    let preds = classify_batch(
        &model,
        &fs,
        g.cfg.predict.n_samples,
        g.cfg.stream_seed(Stream::Predict, 0),
        g.cfg.predict.threshold,
    )?;
    create_dir(&g.out)?;
    write_predictions_csv(&preds, &g.out.join("predictions.csv"))?;
    g.cfg.write_effective(&g.out)?;
    println!("{} predictions written to {}", preds.len(), g.out.display());
    Ok(())
}

use std::path::Path;

use anyhow::{Context, Result};
use fnirs_bnn::eval::{aggregate, evaluate, no_skill_baseline, write_roc_csv, EvalReport, Summary};
use fnirs_bnn::network::softplus;
use fnirs_bnn::predict::{classify_batch, weight_trace, write_predictions_csv};
use fnirs_bnn::trainer::load_model;
use rayon::prelude::*;
use serde::Serialize;

use super::model::align_scaling;
use super::{create_dir, discover, read_features, write, Global};
use crate::config::Stream;
use crate::svg::{histogram, line_chart, Axes, Sample, Series};

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    model: &'a EvalReport,
    predictive_samples: usize,
    threshold: f64,
    no_skill: &'a EvalReport,
}

#[derive(Serialize)]
struct VolunteerScore<'a> {
    name: &'a str,
    accuracy: f64,
    auc: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    model: Summary,
    no_skill: Summary,
    volunteers: Vec<VolunteerScore<'a>>,
}

fn evaluate_into(
    g: &Global,
    model_path: &Path,
    features: &Path,
    out: &Path,
    index: u64,
) -> Result<(EvalReport, EvalReport)> {
    let model = load_model(model_path)?;
    let fs = align_scaling(&model, read_features(features)?)?;
    let cfg = &g.cfg.predict;
    let preds = classify_batch(
        &model,
        &fs,
        cfg.n_samples,
        g.cfg.stream_seed(Stream::Predict, index),
        cfg.threshold,
    )?;
    let scores: Vec<f64> = preds.iter().map(|p| p.p_mean).collect();
    let truth: Vec<bool> = fs.vectors.iter().map(|v| v.label.is_positive()).collect();
    let report = evaluate(&scores, &truth, cfg.threshold)?;
    let baseline = no_skill_baseline(&truth, g.cfg.stream_seed(Stream::Baseline, index))?;

    create_dir(out)?;
    write_predictions_csv(&preds, &out.join("predictions.csv"))?;
    write_roc_csv(&report.roc, &out.join("roc.csv"))?;
    let file = ReportFile {
        model: &report,
        predictive_samples: cfg.n_samples,
        threshold: cfg.threshold,
        no_skill: &baseline,
    };
    write(
        &out.join("report.json"),
        serde_json::to_string_pretty(&file)? + "\n",
    )?;

    let curve: Vec<(f64, f64)> = report.roc.points.iter().map(|p| (p.fpr, p.tpr)).collect();
    let label = format!("BNN (AUC {:.3})", report.auc);
    let svg = line_chart(
        &Axes {
            title: "ROC: BNN vs no-skill",
            x_label: "False positive rate",
            y_label: "True positive rate",
            x_range: Some((0.0, 1.0)),
            y_range: Some((0.0, 1.0)),
        },
        &[
            Series {
                label: &label,
                color: "#d62728",
                dashed: false,
                points: &curve,
            },
            Series {
                label: "No skill (AUC 0.5)",
                color: "#1f77b4",
                dashed: true,
                points: &[(0.0, 0.0), (1.0, 1.0)],
            },
        ],
    );
    write(&out.join("roc.svg"), svg)?;
    Ok((report, baseline))
}

pub fn evaluate_one(g: &Global, model: &Path, features: &Path) -> Result<()> {
    let (r, b) = evaluate_into(g, model, features, &g.out, 0)?;
    println!(
        "accuracy {:.4}, AUC {:.4} (no skill: {:.4}, {:.4})",
        r.accuracy, r.auc, b.accuracy, b.auc
    );
    g.cfg.write_effective(&g.out)
}

pub fn evaluate_dir(g: &Global, input: &Path) -> Result<()> {
    let units = discover(input, "model.json")?;
    let results: Vec<Result<(EvalReport, EvalReport)>> = units
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            evaluate_into(
                g,
                &u.dir.join("model.json"),
                &u.dir.join("test_features.csv"),
                &u.out_dir(&g.out),
                i as u64,
            )
            .with_context(|| format!("evaluating {}", u.label()))
        })
        .collect();
    let mut reports = Vec::new();
    let mut baselines = Vec::new();
    for (u, r) in units.iter().zip(results) {
        let (r, b) = r?;
        println!(
            "{}: accuracy {:.4}, AUC {:.4}",
            u.label(),
            r.accuracy,
            r.auc
        );
        reports.push(r);
        baselines.push(b);
    }
    let summary = SummaryFile {
        model: aggregate(&reports)?,
        no_skill: aggregate(&baselines)?,
        volunteers: units
            .iter()
            .zip(&reports)
            .map(|(u, r)| VolunteerScore {
                name: u.label(),
                accuracy: r.accuracy,
                auc: r.auc,
            })
            .collect(),
    };
    println!(
        "mean over {}: accuracy {:.4} ± {:.4}, AUC {:.4} ± {:.4}",
        summary.model.n,
        summary.model.accuracy.mean,
        summary.model.accuracy.std,
        summary.model.auc.mean,
        summary.model.auc.std
    );
    create_dir(&g.out)?;
    write(
        &g.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    g.cfg.write_effective(&g.out)
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Serialize)]
struct TraceStats {
    seed: u64,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct TraceSummaryFile {
    weight_index: usize,
    mu: f64,
    sigma: f64,
    n_samples: usize,
    traces: Vec<TraceStats>,
}

pub fn trace(g: &Global, model_path: &Path, weight_index: usize) -> Result<()> {
    let model = load_model(model_path)?;
    let n = g.cfg.trace.n_samples;
    let traces = (0..g.cfg.trace.n_seeds as u64)
        .map(|k| weight_trace(&model, weight_index, n, g.cfg.stream_seed(Stream::Trace, k)))
        .collect::<fnirs_bnn::Result<Vec<_>>>()?;

    let mut csv = String::from("draw_index");
    for t in &traces {
        csv.push_str(&format!(",seed_{}", t.seed));
    }
    csv.push('\n');
    for i in 0..n {
        csv.push_str(&i.to_string());
        for t in &traces {
            csv.push_str(&format!(",{}", t.samples[i]));
        }
        csv.push('\n');
    }

    let labels: Vec<String> = traces.iter().map(|t| format!("seed {}", t.seed)).collect();
    let samples: Vec<Sample> = traces
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(k, (t, label))| Sample {
            label,
            color: COLORS[k % COLORS.len()],
            values: &t.samples,
        })
        .collect();
    let title = format!("Posterior samples of weight {weight_index}");
    let svg = histogram(
        &Axes {
            title: &title,
            x_label: "Weight value",
            y_label: "Density",
            x_range: None,
            y_range: None,
        },
        &samples,
        30,
    );

    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        (m, s)
    };
    let summary = TraceSummaryFile {
        weight_index,
        mu: model.posterior.mu[weight_index],
        sigma: softplus(model.posterior.rho[weight_index]),
        n_samples: n,
        traces: traces
            .iter()
            .map(|t| {
                let (mean, std) = stats(&t.samples);
                TraceStats {
                    seed: t.seed,
                    mean,
                    std,
                }
            })
            .collect(),
    };

    create_dir(&g.out)?;
    write(&g.out.join("trace.csv"), csv)?;
    write(&g.out.join("trace.svg"), svg)?;
    write(
        &g.out.join("trace_summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    g.cfg.write_effective(&g.out)?;
    println!(
        "{} traces of weight {weight_index} written to {}",
        traces.len(),
        g.out.display()
    );
    Ok(())
}

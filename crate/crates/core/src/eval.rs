//! Accuracy, confusion matrices, ROC curves and AUC.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// `[[TN, FP], [FN, TP]]`: rows are the true class, columns the predicted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn matrix(&self) -> [[usize; 2]; 2] {
        [[self.tn, self.fp], [self.fn_, self.tp]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Points ordered by decreasing threshold, starting at (0, 0) and ending
/// at (1, 1). The first threshold is a sentinel above every score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub auc: f64,
    pub roc: RocCurve,
    pub n_items: usize,
    pub n_negative: usize,
    pub n_positive: usize,
    /// Set for the random no-skill classifier.
    pub baseline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub accuracy: MeanStd,
    pub auc: MeanStd,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "{a} predictions but {b} true labels"
        )));
    }
    if a == 0 {
        return Err(Error::InsufficientData("no items to evaluate".into()));
    }
    Ok(())
}

pub fn accuracy(preds: &[bool], truth: &[bool]) -> Result<f64> {
    check_lengths(preds.len(), truth.len())?;
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn confusion(preds: &[bool], truth: &[bool]) -> Result<Confusion> {
    check_lengths(preds.len(), truth.len())?;
    let mut c = Confusion::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (t, p) {
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (true, true) => c.tp += 1,
        }
    }
    Ok(c)
}

/// Sweep the threshold over the distinct scores, highest first. An item
/// counts as positive when its score is ≥ the threshold, so tied scores
/// enter together.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    check_lengths(scores.len(), truth.len())?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidData(format!("score {i} is not finite")));
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData(
            "ROC needs both classes in the true labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let max = scores[order[0]];
    let mut points = vec![RocPoint {
        threshold: max + 1.0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

pub fn evaluate(scores: &[f64], truth: &[bool], threshold: f64) -> Result<EvalReport> {
    let preds: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let roc = roc_curve(scores, truth)?;
    let confusion = confusion(&preds, truth)?;
    Ok(EvalReport {
        accuracy: accuracy(&preds, truth)?,
        auc: auc(&roc),
        roc,
        n_items: truth.len(),
        n_negative: confusion.tn + confusion.fp,
        n_positive: confusion.fn_ + confusion.tp,
        confusion,
        baseline: false,
    })
}

/// Random classifier: each item gets a uniform score and is labelled
/// positive when the score is ≥ ½.
pub fn no_skill_baseline(truth: &[bool], seed: u64) -> Result<EvalReport> {
    let mut rng = rng_from_seed(seed);
    let scores: Vec<f64> = truth.iter().map(|_| rng.random::<f64>()).collect();
    let mut report = evaluate(&scores, truth, 0.5)?;
    report.baseline = true;
    Ok(report)
}

/// Unweighted mean and population standard deviation across reports.
pub fn aggregate(reports: &[EvalReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no reports to aggregate".into()));
    }
    let stats = |values: Vec<f64>| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    };
    Ok(Summary {
        n: reports.len(),
        accuracy: stats(reports.iter().map(|r| r.accuracy).collect()),
        auc: stats(reports.iter().map(|r| r.auc).collect()),
    })
}

pub fn write_roc_csv(curve: &RocCurve, path: &Path) -> Result<()> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

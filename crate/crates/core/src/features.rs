//! Window-mean feature extraction, standardization and train/test splits.
//!
//! Feature `(w·2 + c)·n_channels + ch` is the mean of chromophore `c`
//! (0 = HbO, 1 = HbR) on channel `ch` over window `w`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{s, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dsp::Epoch;
use crate::error::{Error, Result};
use crate::TaskLabel;

pub const CHROMOPHORES: [&str; 2] = ["HbO", "HbR"];

pub fn default_windows() -> Vec<(f64, f64)> {
    vec![(0.0, 5.0), (5.0, 10.0), (10.0, 15.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureLayout {
    /// Half-open windows in seconds relative to task onset.
    pub windows: Vec<(f64, f64)>,
    pub n_channels: usize,
    pub chromophores: Vec<String>,
}

impl FeatureLayout {
    pub fn new(windows: Vec<(f64, f64)>, n_channels: usize) -> Self {
        Self {
            windows,
            n_channels,
            chromophores: CHROMOPHORES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.windows.len() * self.chromophores.len() * self.n_channels
    }

    pub fn index(&self, window: usize, chromophore: usize, channel: usize) -> usize {
        (window * self.chromophores.len() + chromophore) * self.n_channels + channel
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub label: TaskLabel,
    pub values: Vec<f64>,
}

/// Per-feature `(mean, std)` used to z-score inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    #[serde(serialize_with = "crate::trainer::serialize_f64s")]
    pub mean: Vec<f64>,
    #[serde(serialize_with = "crate::trainer::serialize_f64s")]
    pub std: Vec<f64>,
    /// Features whose training std was below 1e-12 and was replaced by 1.
    pub degenerate: Vec<usize>,
}

impl Scaling {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub vectors: Vec<FeatureVector>,
    pub layout: FeatureLayout,
    /// Set when the values have been standardized with these statistics.
    pub scaling: Option<Scaling>,
}

impl FeatureSet {
    pub fn new(vectors: Vec<FeatureVector>, layout: FeatureLayout) -> Result<Self> {
        let width = layout.n_features();
        for (i, v) in vectors.iter().enumerate() {
            if v.values.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has {} values, layout needs {width}",
                    v.values.len()
                )));
            }
            if v.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "vector {i} has non-finite values"
                )));
            }
        }
        Ok(Self {
            vectors,
            layout,
            scaling: None,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.layout.n_features()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for v in &self.vectors {
            counts[v.label.index()] += 1;
        }
        counts
    }

    fn subset(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            layout: self.layout.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Concatenate sets sharing one layout (pooled training).
    pub fn concat(sets: &[FeatureSet]) -> Result<FeatureSet> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InsufficientData("no feature sets to pool".into()))?;
        let mut vectors = Vec::new();
        for s in sets {
            if s.layout != first.layout || s.scaling != first.scaling {
                return Err(Error::DimensionMismatch(
                    "pooled feature sets must share layout and scaling".into(),
                ));
            }
            vectors.extend(s.vectors.iter().cloned());
        }
        Ok(FeatureSet {
            vectors,
            layout: first.layout.clone(),
            scaling: first.scaling.clone(),
        })
    }
}

/// Mean of each channel/chromophore over each window of a baseline-corrected epoch.
pub fn extract_features(epoch: &Epoch, windows: &[(f64, f64)]) -> Result<FeatureVector> {
    let layout = FeatureLayout::new(windows.to_vec(), epoch.n_channels());
    let mut values = vec![0.0; layout.n_features()];
    for (w, &(start, end)) in windows.iter().enumerate() {
        let (i0, i1) = epoch.sample_range(start, end).ok_or_else(|| {
            Error::InvalidWindow(format!(
                "window [{start}, {end}) s is empty or outside the epoch [{}, {}) s",
                epoch.t_start_s, epoch.t_end_s
            ))
        })?;
        for (c, m) in [&epoch.hbo, &epoch.hbr].into_iter().enumerate() {
            let means = m
                .slice(s![i0..i1, ..])
                .mean_axis(Axis(0))
                .expect("non-empty window");
            for (ch, mean) in means.iter().enumerate() {
                values[layout.index(w, c, ch)] = *mean;
            }
        }
    }
    Ok(FeatureVector {
        label: epoch.label,
        values,
    })
}

/// Per-feature mean and population standard deviation of a training set.
pub fn fit_standardizer(train: &FeatureSet) -> Result<Scaling> {
    let n = train.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 vectors, got {n}"
        )));
    }
    let d = train.n_features();
    let mut mean = vec![0.0; d];
    for v in &train.vectors {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for v in &train.vectors {
        for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let mut degenerate = Vec::new();
    let std = var
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let sd = (s / n as f64).sqrt();
            if sd < 1e-12 {
                degenerate.push(j);
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Scaling {
        mean,
        std,
        degenerate,
    })
}

pub fn apply_standardizer(fs: &FeatureSet, scaling: &Scaling) -> Result<FeatureSet> {
    if scaling.len() != fs.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "scaling has {} features, set has {}",
            scaling.len(),
            fs.n_features()
        )));
    }
    if fs.scaling.is_some() {
        return Err(Error::InvalidData(
            "feature set is already standardized".into(),
        ));
    }
    Ok(FeatureSet {
        vectors: fs
            .vectors
            .iter()
            .map(|v| FeatureVector {
                label: v.label,
                values: scaling.apply(&v.values),
            })
            .collect(),
        layout: fs.layout.clone(),
        scaling: Some(scaling.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config(
                "split.train_fraction",
                format!("must lie in (0, 1), got {}", self.train_fraction),
            ));
        }
        Ok(())
    }
}

/// Split into train and test sets.
///
/// The total train count is `round(fraction · N)`. In stratified mode each
/// class first receives `floor(fraction · n_class)`; the remaining slots go
/// to the classes with the largest fractional remainders (LFT first on a
/// tie). Indices of each class (LFT, then RFT) are shuffled with one ChaCha8
/// stream seeded by `cfg.seed` and the first ones go to training. Both
/// outputs keep the input order.
pub fn split(fs: &FeatureSet, cfg: &SplitConfig) -> Result<(FeatureSet, FeatureSet)> {
    cfg.validate()?;
    let n = fs.len();
    if n == 0 {
        return Err(Error::InsufficientData(
            "cannot split an empty feature set".into(),
        ));
    }
    let mut rng = crate::rng::rng_from_seed(cfg.seed);
    let n_train = ((cfg.train_fraction * n as f64).round() as usize).min(n);

    let mut train_idx = Vec::with_capacity(n_train);
    if cfg.stratified {
        let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, v) in fs.vectors.iter().enumerate() {
            by_class[v.label.index()].push(i);
        }
        if let Some(c) = by_class.iter().position(Vec::is_empty) {
            return Err(Error::InsufficientData(format!(
                "stratified split needs both classes; {} has no vectors",
                TaskLabel::from_index(c).unwrap()
            )));
        }
        let quotas: Vec<f64> = by_class
            .iter()
            .map(|c| cfg.train_fraction * c.len() as f64)
            .collect();
        let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut order = [0usize, 1];
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut remaining = n_train.saturating_sub(take.iter().sum());
        for &c in order.iter().cycle().take(4) {
            if remaining == 0 {
                break;
            }
            if take[c] < by_class[c].len() {
                take[c] += 1;
                remaining -= 1;
            }
        }
        for (class, k) in by_class.iter_mut().zip(&take) {
            class.shuffle(&mut rng);
            train_idx.extend_from_slice(&class[..*k]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train_idx.extend_from_slice(&all[..n_train]);
    }
    train_idx.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((fs.subset(&train_idx), fs.subset(&test_idx)))
}

/// Column names `f001..fNNN`, zero-padded to at least three digits.
pub fn feature_columns(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("f{i:0width$}")).collect()
}

/// JSON sidecar stored next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSidecar {
    pub layout: FeatureLayout,
    pub scaling: Option<Scaling>,
    pub label_encoding: LabelEncoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEncoding {
    #[serde(rename = "LFT")]
    pub lft: u8,
    #[serde(rename = "RFT")]
    pub rft: u8,
}

impl Default for LabelEncoding {
    fn default() -> Self {
        Self { lft: 0, rft: 1 }
    }
}

pub fn write_features_csv(fs: &FeatureSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = vec!["label".to_string()];
    header.extend(feature_columns(fs.n_features()));
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for v in &fs.vectors {
        let mut line = v.label.as_str().to_string();
        for x in &v.values {
            line.push(',');
            line.push_str(&x.to_string());
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_sidecar(fs: &FeatureSet, path: &Path) -> Result<()> {
    let sidecar = FeatureSidecar {
        layout: fs.layout.clone(),
        scaling: fs.scaling.clone(),
        label_encoding: LabelEncoding::default(),
    };
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<FeatureSidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
}

/// Read a feature CSV. The layout comes from the sidecar.
pub fn read_features_csv(path: &Path, sidecar: &FeatureSidecar) -> Result<FeatureSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = sidecar.layout.n_features();
    let mut expected = vec!["label".to_string()];
    expected.extend(feature_columns(width));
    if header != expected {
        return Err(Error::malformed(
            path,
            format!("expected header label,{}..", expected[1]),
        ));
    }
    let mut vectors = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        let label = record[0]
            .parse::<TaskLabel>()
            .map_err(|e| Error::malformed(path, format!("row {}: {e}", row + 1)))?;
        let values = record
            .iter()
            .skip(1)
            .map(|raw| {
                raw.trim().parse::<f64>().map_err(|_| {
                    Error::malformed(path, format!("row {}: {raw:?} is not a number", row + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        vectors.push(FeatureVector { label, values });
    }
    let mut fs = FeatureSet::new(vectors, sidecar.layout.clone())?;
    fs.scaling = sidecar.scaling.clone();
    Ok(fs)
}

use ndarray::{s, Array2, Axis};

use super::recording::TimeSeries;
use super::sample_index;
use crate::error::{Error, Result};
use crate::TaskLabel;

/// A window of the recording around one task onset. Sample `k` sits at
/// `t_start_s + k / sample_rate_hz` relative to the onset; the window is
/// half-open, `[t_start_s, t_end_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub label: TaskLabel,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub sample_rate_hz: f64,
    pub hbo: Array2<f64>,
    pub hbr: Array2<f64>,
}

impl Epoch {
    pub fn n_samples(&self) -> usize {
        self.hbo.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.hbo.ncols()
    }

    /// Sample range covering `[start_s, end_s)` (times relative to onset).
    pub(crate) fn sample_range(&self, start_s: f64, end_s: f64) -> Option<(usize, usize)> {
        let tol = 1e-9;
        if !(start_s < end_s) || start_s < self.t_start_s - tol || end_s > self.t_end_s + tol {
            return None;
        }
        let i0 = sample_index(start_s - self.t_start_s, self.sample_rate_hz).max(0) as usize;
        let i1 = (sample_index(end_s - self.t_start_s, self.sample_rate_hz).max(0) as usize)
            .min(self.n_samples());
        (i1 > i0).then_some((i0, i1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedMarker {
    pub marker_index: usize,
    pub onset_s: f64,
    pub reason: String,
}

impl std::fmt::Display for SkippedMarker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "marker {} at {} s skipped: {}",
            self.marker_index, self.onset_s, self.reason
        )
    }
}

#[derive(Debug, Clone)]
pub struct EpochExtraction {
    pub epochs: Vec<Epoch>,
    pub skipped: Vec<SkippedMarker>,
}

/// Cut one epoch per marker. Markers whose window does not fit inside the
/// recording are skipped and reported, not treated as errors.
pub fn extract_epochs(ts: &TimeSeries, t_start_s: f64, t_end_s: f64) -> Result<EpochExtraction> {
    if !(t_start_s < t_end_s) {
        return Err(Error::InvalidInterval(format!(
            "epoch window [{t_start_s}, {t_end_s}) is empty"
        )));
    }
    let fs = ts.sample_rate_hz();
    let len = sample_index(t_end_s - t_start_s, fs);
    if len < 1 {
        return Err(Error::InvalidInterval(format!(
            "epoch window [{t_start_s}, {t_end_s}) holds no samples at {fs} Hz"
        )));
    }
    let len = len as usize;
    let n = ts.n_samples() as i64;

    let mut epochs = Vec::new();
    let mut skipped = Vec::new();
    for (i, m) in ts.markers().iter().enumerate() {
        let start = sample_index(m.onset_s + t_start_s, fs);
        let end = start + len as i64;
        if start < 0 || end > n {
            skipped.push(SkippedMarker {
                marker_index: i,
                onset_s: m.onset_s,
                reason: format!(
                    "window [{}, {}) s exceeds recording [0, {}) s",
                    m.onset_s + t_start_s,
                    m.onset_s + t_end_s,
                    ts.duration_s()
                ),
            });
            continue;
        }
        let rows = s![start as usize..end as usize, ..];
        epochs.push(Epoch {
            label: m.label,
            t_start_s,
            t_end_s,
            sample_rate_hz: fs,
            hbo: ts.hbo().slice(rows).to_owned(),
            hbr: ts.hbr().slice(rows).to_owned(),
        });
    }
    Ok(EpochExtraction { epochs, skipped })
}

/// Subtract, per channel and chromophore, the mean over `[ref_start_s, ref_end_s)`.
pub fn baseline_correct(epoch: &Epoch, ref_start_s: f64, ref_end_s: f64) -> Result<Epoch> {
    let (i0, i1) = epoch.sample_range(ref_start_s, ref_end_s).ok_or_else(|| {
        Error::InvalidInterval(format!(
            "reference interval [{ref_start_s}, {ref_end_s}) is empty or outside the epoch [{}, {})",
            epoch.t_start_s, epoch.t_end_s
        ))
    })?;
    let correct = |m: &Array2<f64>| {
        let mean = m
            .slice(s![i0..i1, ..])
            .mean_axis(Axis(0))
            .expect("non-empty interval");
        m - &mean
    };
    Ok(Epoch {
        hbo: correct(&epoch.hbo),
        hbr: correct(&epoch.hbr),
        ..epoch.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Marker;

    fn recording(seconds: f64, fs: f64, onsets: &[f64]) -> TimeSeries {
        let n = (seconds * fs) as usize;
        let hbo = Array2::from_shape_fn((n, 3), |(i, c)| i as f64 + 1000.0 * c as f64);
        let hbr = -&hbo;
        let markers = onsets
            .iter()
            .enumerate()
            .map(|(i, &onset_s)| Marker {
                onset_s,
                label: TaskLabel::from_index(i % 2).unwrap(),
            })
            .collect();
        TimeSeries::new(fs, hbo, hbr, markers).unwrap()
    }

    #[test]
    fn epochs_have_exact_length_and_alignment() {
        let ts = recording(200.0, 10.0, &[10.0, 40.03, 100.0]);
        let out = extract_epochs(&ts, -2.0, 28.0).unwrap();
        assert_eq!(out.epochs.len(), 3);
        assert!(out.skipped.is_empty());
        for e in &out.epochs {
            assert_eq!(e.n_samples(), 300);
        }
        // round((40.03 - 2) * 10) = 380
        assert_eq!(out.epochs[1].hbo[[0, 0]], 380.0);
        assert_eq!(out.epochs[1].hbo[[0, 2]], 2380.0);
        assert_eq!(out.epochs[1].hbr[[299, 0]], -679.0);
    }

    #[test]
    fn window_past_the_end_is_skipped() {
        let ts = recording(100.0, 10.0, &[10.0, 80.0]);
        let out = extract_epochs(&ts, -2.0, 28.0).unwrap();
        assert_eq!(out.epochs.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].marker_index, 1);
    }

    #[test]
    fn window_before_the_start_is_skipped() {
        let ts = recording(100.0, 10.0, &[1.0]);
        let out = extract_epochs(&ts, -2.0, 28.0).unwrap();
        assert!(out.epochs.is_empty());
        assert_eq!(out.skipped.len(), 1);
    }

    fn ramp_epoch() -> Epoch {
        let fs = 10.0;
        let hbo = Array2::from_shape_fn((300, 2), |(k, _)| -2.0 + k as f64 / fs);
        Epoch {
            label: TaskLabel::Rft,
            t_start_s: -2.0,
            t_end_s: 28.0,
            sample_rate_hz: fs,
            hbr: hbo.clone() * 2.0,
            hbo,
        }
    }

    #[test]
    fn ramp_baseline() {
        let e = ramp_epoch();
        let c = baseline_correct(&e, -1.0, 0.0).unwrap();
        // Reference samples are t = -1.0, -0.9, ..., -0.1 with mean -0.55.
        for k in 0..300 {
            let t = -2.0 + k as f64 / 10.0;
            assert!((c.hbo[[k, 0]] - (t + 0.55)).abs() < 1e-12);
            assert!((c.hbr[[k, 1]] - 2.0 * (t + 0.55)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_becomes_zero_and_correction_is_idempotent() {
        let mut e = ramp_epoch();
        e.hbo.fill(4.25);
        let c = baseline_correct(&e, -1.0, 0.0).unwrap();
        assert!(c.hbo.iter().all(|&v| v == 0.0));
        let again = baseline_correct(&c, -1.0, 0.0).unwrap();
        for (a, b) in c.hbr.iter().zip(again.hbr.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_reference_rejected() {
        let e = ramp_epoch();
        assert!(matches!(
            baseline_correct(&e, 0.0, 0.0),
            Err(Error::InvalidInterval(_))
        ));
        assert!(baseline_correct(&e, -5.0, 0.0).is_err());
    }
}

use super::butterworth::{FilterCoeffs, Section};
use crate::error::{Error, Result};

/// Odd-reflection padding length applied at each end: `3 · 2·order`.
pub fn padding_len(coeffs: &FilterCoeffs) -> usize {
    3 * 2 * coeffs.order()
}

/// Signals must be strictly longer than this.
pub fn min_signal_len(coeffs: &FilterCoeffs) -> usize {
    3 * (2 * coeffs.order() + 1)
}

/// Zero-phase filtering: forward pass, then a pass over the reversed output.
///
/// The record is extended at both ends by odd reflection about the end
/// samples, and each section starts from its steady-state response to the
/// first sample, so start-up transients stay in the padding.
pub fn filtfilt(coeffs: &FilterCoeffs, signal: &[f64]) -> Result<Vec<f64>> {
    let min = min_signal_len(coeffs);
    if signal.len() <= min {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            min,
        });
    }
    let pad = padding_len(coeffs);
    let n = signal.len();
    let first = signal[0];
    let last = signal[n - 1];

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let sections = coeffs.sections();
    let zi = steady_state(sections);

    run_cascade(sections, &zi, &mut ext);
    ext.reverse();
    run_cascade(sections, &zi, &mut ext);
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}

/// Per-section transposed direct-form II state for a unit-step input that
/// has been applied forever, scaled by the DC gain of preceding sections.
fn steady_state(sections: &[Section]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            let dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
            let z1 = dc - b0;
            let z2 = b2 - a2 * dc;
            let state = [z1 * scale, z2 * scale];
            scale *= dc;
            state
        })
        .collect()
}

fn run_cascade(sections: &[Section], zi: &[[f64; 2]], x: &mut [f64]) {
    let x0 = x[0];
    for (s, init) in sections.iter().zip(zi) {
        let [b0, b1, b2] = s.b;
        let [_, a1, a2] = s.a;
        let mut z1 = init[0] * x0;
        let mut z2 = init[1] * x0;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z1;
            z1 = b1 * input - a1 * y + z2;
            z2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{design_bandpass, FilterSpec};
    use std::f64::consts::PI;

    fn default_filter() -> FilterCoeffs {
        design_bandpass(&FilterSpec::default(), 10.0).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let y = filtfilt(&default_filter(), &vec![0.0; 1000]).unwrap();
        assert_eq!(y.len(), 1000);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short_signal_names_minimum() {
        let c = default_filter();
        let err = filtfilt(&c, &[1.0; 21]).unwrap_err();
        match err {
            Error::SignalTooShort { len, min } => {
                assert_eq!(len, 21);
                assert_eq!(min, 21);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(filtfilt(&c, &[1.0; 22]).is_ok());
    }

    #[test]
    fn constant_input_is_removed() {
        // Zero DC gain: a constant settles to zero from the first sample.
        let y = filtfilt(&default_filter(), &vec![3.0; 2000]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-9), "{:?}", &y[..5]);
    }

    #[test]
    fn filtering_is_linear() {
        let c = default_filter();
        let x1: Vec<f64> = (0..1500).map(|i| (i as f64 * 0.01).sin()).collect();
        let x2: Vec<f64> = (0..1500).map(|i| ((i * i) % 17) as f64).collect();
        let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - b).collect();
        let y1 = filtfilt(&c, &x1).unwrap();
        let y2 = filtfilt(&c, &x2).unwrap();
        let ys = filtfilt(&c, &sum).unwrap();
        for i in 0..ys.len() {
            assert!((ys[i] - (2.0 * y1[i] - y2[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn passband_sinusoid_keeps_amplitude_and_phase() {
        let c = default_filter();
        let fs = 10.0;
        let f = (0.01f64 * 0.1).sqrt();
        let n = 40_000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect();
        let y = filtfilt(&c, &x).unwrap();
        let (amp, phase) = fit_sinusoid(&y[n / 4..3 * n / 4], f, fs, n / 4);
        assert!((0.97..=1.0).contains(&amp), "amplitude {amp}");
        assert!(phase.abs() < 1e-3, "phase {phase}");
    }

    /// Least-squares amplitude and phase (relative to `sin`) of frequency
    /// `f` in `y`, where `y[0]` is sample `offset` of the record.
    fn fit_sinusoid(y: &[f64], f: f64, fs: f64, offset: usize) -> (f64, f64) {
        let mut ss = 0.0;
        let mut cc = 0.0;
        let mut sc = 0.0;
        let mut ys = 0.0;
        let mut yc = 0.0;
        for (k, &v) in y.iter().enumerate() {
            let t = 2.0 * PI * f * (k + offset) as f64 / fs;
            let (s, co) = t.sin_cos();
            ss += s * s;
            cc += co * co;
            sc += s * co;
            ys += v * s;
            yc += v * co;
        }
        let det = ss * cc - sc * sc;
        let alpha = (ys * cc - yc * sc) / det;
        let beta = (yc * ss - ys * sc) / det;
        (alpha.hypot(beta), beta.atan2(alpha))
    }
}

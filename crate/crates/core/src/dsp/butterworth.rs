//! Digital Butterworth band-pass design.
//!
//! Analog low-pass prototype → low-pass-to-band-pass transform → bilinear
//! transform, with both band edges prewarped so the digital response is
//! exactly 1/√2 at `low_hz` and `high_hz`. The design is kept in
//! zero/pole/gain form alongside the expanded transfer function: at low
//! normalized frequencies the polynomial coefficients are badly conditioned,
//! so frequency responses are evaluated from the factors and filtering runs
//! as a cascade of second-order sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSpec {
    /// Order of the analog low-pass prototype.
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            order: 3,
            low_hz: 0.01,
            high_hz: 0.1,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidSpec("order must be at least 1".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        let nyquist = sample_rate_hz / 2.0;
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < low_hz < high_hz, got low_hz={} high_hz={}",
                self.low_hz, self.high_hz
            )));
        }
        if self.high_hz >= nyquist {
            return Err(Error::InvalidSpec(format!(
                "high_hz={} is at or above the Nyquist frequency {nyquist} (fs={sample_rate_hz})",
                self.high_hz
            )));
        }
        Ok(())
    }
}

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs {
    /// Numerator, length `2·order + 1`.
    pub b: Vec<f64>,
    /// Denominator, length `2·order + 1`, `a[0] == 1`.
    pub a: Vec<f64>,
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
    pub sample_rate_hz: f64,
    sections: Vec<Section>,
}

impl FilterCoeffs {
    pub fn order(&self) -> usize {
        self.poles.len() / 2
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Complex response at `freq_hz`, evaluated from the zero/pole factors.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z = Complex64::from_polar(1.0, omega);
        let num: Complex64 = self.zeros.iter().map(|&q| z - q).product();
        let den: Complex64 = self.poles.iter().map(|&p| z - p).product();
        num / den * self.gain
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Response of the expanded polynomials `b`/`a`. Kept for cross-checks;
    /// prefer [`FilterCoeffs::response`].
    pub fn response_from_polynomials(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let zinv = Complex64::from_polar(1.0, -omega);
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * zinv + ck)
        };
        eval(&self.b) / eval(&self.a)
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// Design a Butterworth band-pass filter for the given sample rate.
pub fn design_bandpass(spec: &FilterSpec, sample_rate_hz: f64) -> Result<FilterCoeffs> {
    spec.validate(sample_rate_hz)?;
    let order = spec.order;

    // Work at a normalized sample rate of 2 so that frequencies are
    // fractions of Nyquist.
    let fs = 2.0;
    let warp = |f_hz: f64| {
        let wn = 2.0 * f_hz / sample_rate_hz;
        2.0 * fs * (PI * wn / fs).tan()
    };
    let w_low = warp(spec.low_hz);
    let w_high = warp(spec.high_hz);
    let bandwidth = w_high - w_low;
    let center = (w_low * w_high).sqrt();

    let proto = analog_prototype(order);

    // Low-pass → band-pass: each prototype pole p splits into
    // p·bw/2 ± sqrt((p·bw/2)² − w0²); the `order` prototype zeros at
    // infinity become zeros at s = 0.
    let mut analog_poles = Vec::with_capacity(2 * order);
    let mut upper = Vec::with_capacity(order);
    let mut lower = Vec::with_capacity(order);
    for p in &proto {
        let scaled = p * bandwidth / 2.0;
        let root = (scaled * scaled - center * center).sqrt();
        upper.push(scaled + root);
        lower.push(scaled - root);
    }
    analog_poles.extend(upper);
    analog_poles.extend(lower);
    let analog_zeros = vec![Complex64::new(0.0, 0.0); order];
    let analog_gain = bandwidth.powi(order as i32);

    // Bilinear transform.
    let fs2 = Complex64::new(2.0 * fs, 0.0);
    let to_digital = |s: Complex64| (fs2 + s) / (fs2 - s);
    let mut zeros: Vec<Complex64> = analog_zeros.iter().map(|&s| to_digital(s)).collect();
    let poles: Vec<Complex64> = analog_poles.iter().map(|&s| to_digital(s)).collect();
    let degree = analog_poles.len() - analog_zeros.len();
    zeros.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), degree));
    let num: Complex64 = analog_zeros.iter().map(|&s| fs2 - s).product();
    let den: Complex64 = analog_poles.iter().map(|&s| fs2 - s).product();
    let gain = analog_gain * (num / den).re;

    let b: Vec<f64> = poly(&zeros).into_iter().map(|c| c * gain).collect();
    let a = poly(&poles);
    let sections = pair_sections(&zeros, &poles, gain);

    Ok(FilterCoeffs {
        b,
        a,
        zeros,
        poles,
        gain,
        sample_rate_hz,
        sections,
    })
}

/// Poles of the unit-cutoff analog Butterworth low-pass of the given order.
fn analog_prototype(order: usize) -> Vec<Complex64> {
    let n = order as i64;
    (-n + 1..n)
        .step_by(2)
        .map(|m| -Complex64::from_polar(1.0, PI * m as f64 / (2.0 * order as f64)))
        .collect()
}

/// Real coefficients of `Π (z − rᵢ)` in descending powers.
fn poly(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Group the poles into conjugate pairs (or pairs of real poles) and give
/// every section one zero at z = 1 and one at z = −1.
fn pair_sections(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Vec<Section> {
    const IMAG_TOL: f64 = 1e-14;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IMAG_TOL).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= IMAG_TOL)
        .map(|p| p.re)
        .collect();
    complex.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    real.sort_by(f64::total_cmp);

    let mut denominators: Vec<[f64; 3]> = complex
        .iter()
        .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    for pair in real.chunks(2) {
        match *pair {
            [p, q] => denominators.push([1.0, -(p + q), p * q]),
            [p] => denominators.push([1.0, -p, 0.0]),
            _ => unreachable!(),
        }
    }

    let n_sections = denominators.len();
    let mut plus_one = zeros.iter().filter(|z| z.re > 0.0).count();
    let mut minus_one = zeros.len() - plus_one;
    let per_section = gain.abs().powf(1.0 / n_sections as f64);
    denominators
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut roots = Vec::with_capacity(2);
            if plus_one > 0 {
                roots.push(Complex64::new(1.0, 0.0));
                plus_one -= 1;
            }
            if minus_one > 0 {
                roots.push(Complex64::new(-1.0, 0.0));
                minus_one -= 1;
            }
            let mut k = per_section;
            if i == 0 && gain < 0.0 {
                k = -k;
            }
            let mut num = poly(&roots);
            num.resize(3, 0.0);
            Section {
                b: [num[0] * k, num[1] * k, num[2] * k],
                a,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(order: usize, low: f64, high: f64) -> FilterSpec {
        FilterSpec {
            order,
            low_hz: low,
            high_hz: high,
        }
    }

    #[test]
    fn rejects_cutoff_at_nyquist() {
        let err = design_bandpass(&spec(3, 0.01, 5.0), 10.0).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)), "{err}");
        assert!(design_bandpass(&spec(3, 0.01, 6.0), 10.0).is_err());
    }

    #[test]
    fn rejects_zero_order() {
        assert!(matches!(
            design_bandpass(&spec(0, 0.01, 0.1), 10.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn coefficient_lengths() {
        let c = design_bandpass(&FilterSpec::default(), 10.0).unwrap();
        assert_eq!(c.b.len(), 7);
        assert_eq!(c.a.len(), 7);
        assert_eq!(c.a[0], 1.0);
        assert_eq!(c.sections().len(), 3);
    }

    #[test]
    fn band_edges_and_stopband_zeros() {
        let c = design_bandpass(&FilterSpec::default(), 10.0).unwrap();
        let edge = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.magnitude(0.01) - edge).abs() < 1e-9);
        assert!((c.magnitude(0.1) - edge).abs() < 1e-9);
        assert!(c.magnitude(0.0) < 1e-9);
        assert!(c.magnitude(5.0) < 1e-9);
        let mid = c.magnitude((0.01f64 * 0.1).sqrt());
        assert!((0.99..=1.0 + 1e-12).contains(&mid), "{mid}");
    }

    #[test]
    fn sections_reproduce_the_transfer_function() {
        let c = design_bandpass(&spec(4, 1.0, 8.0), 100.0).unwrap();
        for f in [0.5, 1.0, 3.0, 8.0, 20.0] {
            let omega = 2.0 * PI * f / 100.0;
            let zinv = Complex64::from_polar(1.0, -omega);
            let h: Complex64 = c
                .sections()
                .iter()
                .map(|s| {
                    let n = s.b[0] + s.b[1] * zinv + s.b[2] * zinv * zinv;
                    let d = s.a[0] + s.a[1] * zinv + s.a[2] * zinv * zinv;
                    n / d
                })
                .product();
            assert!((h - c.response(f)).norm() < 1e-10, "f={f}");
        }
    }
}

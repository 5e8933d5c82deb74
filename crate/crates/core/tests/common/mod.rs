#![allow(dead_code)]

use std::f64::consts::PI;

use fnirs_bnn::TaskLabel;
use fnirs_bnn::{FeatureLayout, FeatureSet, FeatureVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares amplitude and phase (relative to `sin`) of frequency `f`
/// in `y`, where `y[0]` is sample `offset` of the record.
pub fn fit_sinusoid(y: &[f64], f: f64, fs: f64, offset: usize) -> (f64, f64) {
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        let (s, c) = (2.0 * PI * f * (k + offset) as f64 / fs).sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += v * s;
        yc += v * c;
    }
    let det = ss * cc - sc * sc;
    let alpha = (ys * cc - yc * sc) / det;
    let beta = (yc * ss - ys * sc) / det;
    (alpha.hypot(beta), beta.atan2(alpha))
}

/// Alternating RFT/LFT points from two unit Gaussians centred at `±shift`
/// on every axis. `dim` must be even (one window, two chromophores).
pub fn blobs(n: usize, dim: usize, shift: f64, seed: u64) -> FeatureSet {
    let mut r = rng(seed);
    let vectors = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 {
                TaskLabel::Rft
            } else {
                TaskLabel::Lft
            };
            let sign = if label.is_positive() { 1.0 } else { -1.0 };
            let values = (0..dim)
                .map(|_| sign * shift + r.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            FeatureVector { label, values }
        })
        .collect();
    assert!(dim.is_multiple_of(2), "blob dimension must be even");
    FeatureSet::new(vectors, FeatureLayout::new(vec![(0.0, 1.0)], dim / 2)).unwrap()
}

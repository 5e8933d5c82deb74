//! Mean-field Gaussian variational inference over network weights.
//!
//! The posterior approximation is `q(w | θ) = Π N(wᵢ | μᵢ, σᵢ²)` with
//! `σᵢ = softplus(ρᵢ)`. Draws use the reparameterization
//! `w = μ + σ ⊙ ε`, `ε ~ N(0, I)`, so the ELBO integrand is a deterministic
//! function of `(μ, ρ)` once `ε` is fixed and its gradient follows by the
//! chain rule.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::network::{self, sigmoid, softplus, Architecture};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Inverse of [`softplus`]: `ln(e^y − 1)` for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    y + (-(-y).exp()).ln_1p()
}

fn log_normal(x: f64, mean: f64, std: f64) -> f64 {
    let u = (x - mean) / std;
    -0.5 * u * u - std.ln() - HALF_LN_2PI
}

/// Isotropic Gaussian prior `N(mean, std²)` on every weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prior {
    pub mean: f64,
    pub std: f64,
}

impl Default for Prior {
    fn default() -> Self {
        Self {
            mean: 0.0,
            std: 1.0,
        }
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        if !(self.std > 0.0 && self.std.is_finite()) || !self.mean.is_finite() {
            return Err(Error::config(
                "prior",
                format!(
                    "need finite mean and std > 0, got mean={} std={}",
                    self.mean, self.std
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalParams {
    #[serde(serialize_with = "crate::trainer::serialize_f64s")]
    pub mu: Vec<f64>,
    #[serde(serialize_with = "crate::trainer::serialize_f64s")]
    pub rho: Vec<f64>,
}

impl VariationalParams {
    pub fn new(mu: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if mu.len() != rho.len() {
            return Err(Error::DimensionMismatch(format!(
                "mu has {} entries, rho has {}",
                mu.len(),
                rho.len()
            )));
        }
        if mu.iter().chain(&rho).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "variational parameters must be finite".into(),
            ));
        }
        Ok(Self { mu, rho })
    }

    /// `q = N(mean, std²)` in every coordinate.
    pub fn constant(n: usize, mean: f64, std: f64) -> Self {
        Self {
            mu: vec![mean; n],
            rho: vec![softplus_inv(std); n],
        }
    }

    /// `μ ~ N(0, mean_std²)`, `σ = sigma` everywhere.
    pub fn initialize<R: Rng + ?Sized>(n: usize, mean_std: f64, sigma: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, mean_std).expect("finite init std");
        Self {
            mu: (0..n).map(|_| normal.sample(rng)).collect(),
            rho: vec![softplus_inv(sigma); n],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| softplus(r)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.iter().chain(&self.rho).all(|v| v.is_finite())
    }
}

/// One reparameterized draw: `w = μ + softplus(ρ) ⊙ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDraw {
    pub w: Vec<f64>,
    pub eps: Vec<f64>,
}

pub fn draw_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Build the draw for a given noise vector.
pub fn weights_from_noise(params: &VariationalParams, eps: Vec<f64>) -> WeightDraw {
    let w = params
        .mu
        .iter()
        .zip(&params.rho)
        .zip(&eps)
        .map(|((m, r), e)| m + softplus(*r) * e)
        .collect();
    WeightDraw { w, eps }
}

pub fn sample_weights<R: Rng + ?Sized>(params: &VariationalParams, rng: &mut R) -> WeightDraw {
    let eps = draw_noise(params.len(), rng);
    weights_from_noise(params, eps)
}

/// `Σ log N(wᵢ | μᵢ, σᵢ²)`.
pub fn log_q(params: &VariationalParams, draw: &WeightDraw) -> f64 {
    params
        .mu
        .iter()
        .zip(&params.rho)
        .zip(&draw.w)
        .map(|((m, r), w)| log_normal(*w, *m, softplus(*r)))
        .sum()
}

/// `Σ log N(wᵢ | mean, std²)`.
pub fn log_prior(prior: &Prior, w: &[f64]) -> f64 {
    w.iter()
        .map(|&wi| log_normal(wi, prior.mean, prior.std))
        .sum()
}

/// Closed-form `KL(q ‖ prior)` for diagonal Gaussians.
pub fn kl_diag_gaussians(params: &VariationalParams, prior: &Prior) -> f64 {
    let s2 = prior.std * prior.std;
    params
        .mu
        .iter()
        .zip(&params.rho)
        .map(|(m, r)| {
            let sigma = softplus(*r);
            let d = m - prior.mean;
            (prior.std / sigma).ln() + (sigma * sigma + d * d) / (2.0 * s2) - 0.5
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElboMode {
    /// Monte-Carlo estimate of every term: log prior + log likelihood − log q.
    #[default]
    Mc,
    /// Monte-Carlo log likelihood minus the closed-form KL to the prior.
    AnalyticKl,
}

/// A model whose log-likelihood is a differentiable function of a flat
/// weight vector.
pub trait LogLikelihood: Sync {
    fn n_params(&self) -> usize;

    fn log_likelihood(&self, w: &[f64]) -> Result<f64>;

    fn log_likelihood_and_grad(&self, w: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// The network likelihood over a batch. `scale` multiplies the batch
/// log-likelihood; set it to `N / |batch|` for minibatch estimates.
#[derive(Debug, Clone, Copy)]
pub struct NetworkLikelihood<'a> {
    pub arch: &'a Architecture,
    pub data: &'a [FeatureVector],
    pub scale: f64,
}

impl<'a> NetworkLikelihood<'a> {
    pub fn new(arch: &'a Architecture, data: &'a [FeatureVector]) -> Self {
        Self {
            arch,
            data,
            scale: 1.0,
        }
    }
}

impl LogLikelihood for NetworkLikelihood<'_> {
    fn n_params(&self) -> usize {
        self.arch.n_params()
    }

    fn log_likelihood(&self, w: &[f64]) -> Result<f64> {
        Ok(self.scale * network::log_likelihood(self.arch, w, self.data)?)
    }

    fn log_likelihood_and_grad(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (ll, mut g) = network::log_likelihood_and_grad(self.arch, w, self.data)?;
        if self.scale != 1.0 {
            g.iter_mut().for_each(|v| *v *= self.scale);
        }
        Ok((self.scale * ll, g))
    }
}

/// One-parameter conjugate model: `yᵢ ~ N(w, noise_std²)` with a Gaussian
/// prior on `w`. Its evidence and ELBO are available in closed form, which
/// makes it the reference problem for checking the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeanLikelihood {
    pub observations: Vec<f64>,
    pub noise_std: f64,
}

impl GaussianMeanLikelihood {
    /// Exact posterior `N(mean, std²)` of `w`.
    pub fn posterior(&self, prior: &Prior) -> (f64, f64) {
        let n = self.observations.len() as f64;
        let noise_var = self.noise_std * self.noise_std;
        let precision = 1.0 / (prior.std * prior.std) + n / noise_var;
        let sum: f64 = self.observations.iter().sum();
        let mean = (prior.mean / (prior.std * prior.std) + sum / noise_var) / precision;
        (mean, precision.recip().sqrt())
    }

    /// `log p(D)` via `p(D) = p(D | w) p(w) / p(w | D)` at the posterior mean.
    pub fn log_evidence(&self, prior: &Prior) -> f64 {
        let (mean, std) = self.posterior(prior);
        self.value(mean) + log_normal(mean, prior.mean, prior.std) - log_normal(mean, mean, std)
    }

    /// ELBO of a one-coordinate `q`, with the expected log-likelihood in
    /// closed form.
    pub fn exact_elbo(&self, params: &VariationalParams, prior: &Prior) -> f64 {
        let mu = params.mu[0];
        let sigma = softplus(params.rho[0]);
        let noise_var = self.noise_std * self.noise_std;
        let expected_ll: f64 = self
            .observations
            .iter()
            .map(|y| {
                -0.5 * (2.0 * PI * noise_var).ln()
                    - ((y - mu).powi(2) + sigma * sigma) / (2.0 * noise_var)
            })
            .sum();
        expected_ll - kl_diag_gaussians(params, prior)
    }

    fn value(&self, w: f64) -> f64 {
        self.observations
            .iter()
            .map(|&y| log_normal(y, w, self.noise_std))
            .sum()
    }
}

impl LogLikelihood for GaussianMeanLikelihood {
    fn n_params(&self) -> usize {
        1
    }

    fn log_likelihood(&self, w: &[f64]) -> Result<f64> {
        check_len(1, w.len())?;
        Ok(self.value(w[0]))
    }

    fn log_likelihood_and_grad(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len(1, w.len())?;
        let noise_var = self.noise_std * self.noise_std;
        let g = self
            .observations
            .iter()
            .map(|y| (y - w[0]) / noise_var)
            .sum();
        Ok((self.value(w[0]), vec![g]))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "expected {expected} parameters, got {got}"
        )));
    }
    Ok(())
}

fn check_inputs<L: LogLikelihood + ?Sized>(
    params: &VariationalParams,
    lik: &L,
    n_samples: usize,
) -> Result<()> {
    if n_samples < 1 {
        return Err(Error::config("n_samples", "must be at least 1"));
    }
    check_len(lik.n_params(), params.len())
}

/// ELBO averaged over the given noise vectors (one per draw).
pub fn elbo_with_noise<L: LogLikelihood + ?Sized>(
    params: &VariationalParams,
    prior: &Prior,
    lik: &L,
    noise: &[Vec<f64>],
    mode: ElboMode,
) -> Result<f64> {
    check_inputs(params, lik, noise.len())?;
    let mut total = 0.0;
    for eps in noise {
        let draw = weights_from_noise(params, eps.clone());
        let ll = lik.log_likelihood(&draw.w)?;
        total += match mode {
            ElboMode::Mc => log_prior(prior, &draw.w) + ll - log_q(params, &draw),
            ElboMode::AnalyticKl => ll,
        };
    }
    let mut elbo = total / noise.len() as f64;
    if mode == ElboMode::AnalyticKl {
        elbo -= kl_diag_gaussians(params, prior);
    }
    Ok(elbo)
}

/// Monte-Carlo ELBO estimate from `n_samples` fresh draws.
pub fn elbo_estimate<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    params: &VariationalParams,
    prior: &Prior,
    lik: &L,
    n_samples: usize,
    mode: ElboMode,
    rng: &mut R,
) -> Result<f64> {
    check_inputs(params, lik, n_samples)?;
    let noise: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| draw_noise(params.len(), rng))
        .collect();
    elbo_with_noise(params, prior, lik, &noise, mode)
}

/// ELBO estimate together with its pathwise gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ElboGradient {
    pub elbo: f64,
    pub d_mu: Vec<f64>,
    pub d_rho: Vec<f64>,
}

/// Exact gradient of [`elbo_with_noise`] with respect to `μ` and `ρ`.
///
/// With `g = ∂/∂w` of the per-draw integrand (log likelihood, plus the log
/// prior in `Mc` mode), `∂/∂μ = g` and `∂/∂ρ = g ⊙ ε ⊙ sigmoid(ρ)`. The
/// explicit `θ`-dependence of `−log q(w(θ) | θ) = Σ log σᵢ + εᵢ²/2 + const`
/// adds `sigmoid(ρ)/σ` to `∂/∂ρ` in `Mc` mode; in `AnalyticKl` mode the
/// closed-form KL gradient is subtracted instead.
pub fn elbo_gradients_with_noise<L: LogLikelihood + ?Sized>(
    params: &VariationalParams,
    prior: &Prior,
    lik: &L,
    noise: &[Vec<f64>],
    mode: ElboMode,
) -> Result<ElboGradient> {
    check_inputs(params, lik, noise.len())?;
    let n = params.len();
    let sigma = params.sigma();
    let dsigma: Vec<f64> = params.rho.iter().map(|&r| sigmoid(r)).collect();
    let prior_var = prior.std * prior.std;

    let mut d_mu = vec![0.0; n];
    let mut d_rho = vec![0.0; n];
    let mut total = 0.0;
    for eps in noise {
        let draw = weights_from_noise(params, eps.clone());
        let (ll, mut g) = lik.log_likelihood_and_grad(&draw.w)?;
        total += match mode {
            ElboMode::Mc => {
                for (gi, wi) in g.iter_mut().zip(&draw.w) {
                    *gi -= (wi - prior.mean) / prior_var;
                }
                log_prior(prior, &draw.w) + ll - log_q(params, &draw)
            }
            ElboMode::AnalyticKl => ll,
        };
        for i in 0..n {
            d_mu[i] += g[i];
            d_rho[i] += g[i] * eps[i] * dsigma[i];
        }
    }
    let s = noise.len() as f64;
    d_mu.iter_mut().for_each(|v| *v /= s);
    d_rho.iter_mut().for_each(|v| *v /= s);
    let mut elbo = total / s;

    match mode {
        ElboMode::Mc => {
            for i in 0..n {
                d_rho[i] += dsigma[i] / sigma[i];
            }
        }
        ElboMode::AnalyticKl => {
            elbo -= kl_diag_gaussians(params, prior);
            for i in 0..n {
                d_mu[i] -= (params.mu[i] - prior.mean) / prior_var;
                d_rho[i] -= (sigma[i] / prior_var - 1.0 / sigma[i]) * dsigma[i];
            }
        }
    }
    Ok(ElboGradient { elbo, d_mu, d_rho })
}

/// Pathwise ELBO gradient from `n_samples` fresh draws.
pub fn elbo_gradients<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    params: &VariationalParams,
    prior: &Prior,
    lik: &L,
    n_samples: usize,
    mode: ElboMode,
    rng: &mut R,
) -> Result<ElboGradient> {
    check_inputs(params, lik, n_samples)?;
    let noise: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| draw_noise(params.len(), rng))
        .collect();
    elbo_gradients_with_noise(params, prior, lik, &noise, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn one(mu: f64, sigma: f64) -> VariationalParams {
        VariationalParams::constant(1, mu, sigma)
    }

    #[test]
    fn softplus_inverse() {
        for y in [1e-6, 0.05, 1.0, 3.0, 40.0] {
            assert!(
                (softplus(softplus_inv(y)) - y).abs() <= 1e-12 * y.max(1.0),
                "{y}"
            );
        }
    }

    #[test]
    fn vanishing_scale_returns_the_mean() {
        let params = VariationalParams {
            mu: vec![0.3, -1.7, 12.0],
            rho: vec![-40.0; 3],
        };
        let d = sample_weights(&params, &mut rng_from_seed(1));
        for (w, m) in d.w.iter().zip(&params.mu) {
            assert!((w - m).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let params = VariationalParams::constant(10, 0.0, 1.0);
        let a = sample_weights(&params, &mut rng_from_seed(5));
        let b = sample_weights(&params, &mut rng_from_seed(5));
        assert_eq!(a, b);
    }

    #[test]
    fn reparameterization_identity_is_exact() {
        let mut rng = rng_from_seed(2);
        let params = VariationalParams::initialize(50, 1.0, 0.3, &mut rng);
        let d = sample_weights(&params, &mut rng);
        let sigma = params.sigma();
        for i in 0..50 {
            assert_eq!(
                d.w[i].to_bits(),
                (params.mu[i] + sigma[i] * d.eps[i]).to_bits()
            );
        }
    }

    #[test]
    fn log_q_values() {
        let p = one(0.0, 1.0);
        let d = WeightDraw {
            w: vec![0.0],
            eps: vec![0.0],
        };
        assert!((log_q(&p, &d) + 0.918_939).abs() < 1e-6);

        let p = VariationalParams {
            mu: vec![1.0, -2.0],
            rho: vec![softplus_inv(0.5), softplus_inv(2.0)],
        };
        let at_mode = log_q(
            &p,
            &WeightDraw {
                w: p.mu.clone(),
                eps: vec![0.0; 2],
            },
        );
        let expect = -(0.5 * (2.0 * PI).sqrt()).ln() - (2.0 * (2.0 * PI).sqrt()).ln();
        assert!((at_mode - expect).abs() < 1e-12);

        let shifted = VariationalParams {
            mu: vec![4.0, 1.0],
            rho: p.rho.clone(),
        };
        let w = vec![1.3, -2.9];
        let a = log_q(
            &p,
            &WeightDraw {
                w: w.clone(),
                eps: vec![0.0; 2],
            },
        );
        let b = log_q(
            &shifted,
            &WeightDraw {
                w: vec![4.3, 0.1],
                eps: vec![0.0; 2],
            },
        );
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn log_prior_values() {
        let prior = Prior::default();
        let n = 641;
        assert!((log_prior(&prior, &vec![0.0; n]) + n as f64 * 0.918_939).abs() < 1e-6 * n as f64);
        assert!((log_prior(&prior, &[1.0]) + 1.418_939).abs() < 1e-6);
        let w = [0.5, -1.0, 2.0];
        let wider: Vec<f64> = w.iter().map(|v| v * 1.5).collect();
        assert!(log_prior(&prior, &wider) < log_prior(&prior, &w));
    }

    #[test]
    fn kl_values() {
        let prior = Prior::default();
        assert_eq!(kl_diag_gaussians(&one(0.0, 1.0), &prior), 0.0);
        assert!((kl_diag_gaussians(&one(1.0, 1.0), &prior) - 0.5).abs() < 1e-12);
        // q = N(0, 4): σ = 2.
        let kl = kl_diag_gaussians(&one(0.0, 2.0), &prior);
        assert!((kl - (0.5f64.ln() + 2.0 - 0.5)).abs() < 1e-12);
        assert!((kl - 0.806_853).abs() < 1e-6);
    }

    #[test]
    fn degenerate_scale_keeps_elbo_finite() {
        let params = VariationalParams {
            mu: vec![0.2, -0.1, 0.4, 0.0],
            rho: vec![-40.0; 4],
        };
        let arch = Architecture::new(vec![1, 1, 1], network::Activation::Tanh).unwrap();
        let data = [FeatureVector {
            label: crate::TaskLabel::Rft,
            values: vec![1.0],
        }];
        let lik = NetworkLikelihood::new(&arch, &data);
        let e = elbo_estimate(
            &params,
            &Prior::default(),
            &lik,
            1,
            ElboMode::Mc,
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert!(e.is_finite());
    }

    #[test]
    fn empty_data_gives_negative_kl() {
        let arch = Architecture::new(vec![2, 2, 1], network::Activation::Tanh).unwrap();
        let lik = NetworkLikelihood::new(&arch, &[]);
        let mut rng = rng_from_seed(3);
        let params = VariationalParams::initialize(arch.n_params(), 0.5, 0.2, &mut rng);
        let prior = Prior::default();
        let e = elbo_estimate(&params, &prior, &lik, 3, ElboMode::AnalyticKl, &mut rng).unwrap();
        assert!((e + kl_diag_gaussians(&params, &prior)).abs() < 1e-12);
    }

    #[test]
    fn zero_samples_rejected() {
        let lik = GaussianMeanLikelihood {
            observations: vec![1.0],
            noise_std: 1.0,
        };
        let err = elbo_estimate(
            &one(0.0, 1.0),
            &Prior::default(),
            &lik,
            0,
            ElboMode::Mc,
            &mut rng_from_seed(0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn analytic_gradient_of_data_free_problem() {
        let arch = Architecture::new(vec![2, 2, 1], network::Activation::Tanh).unwrap();
        let lik = NetworkLikelihood::new(&arch, &[]);
        let mut rng = rng_from_seed(9);
        let params = VariationalParams::initialize(arch.n_params(), 1.0, 0.5, &mut rng);
        let prior = Prior {
            mean: 0.3,
            std: 2.0,
        };
        let g = elbo_gradients(&params, &prior, &lik, 1, ElboMode::AnalyticKl, &mut rng).unwrap();
        for (d, m) in g.d_mu.iter().zip(&params.mu) {
            assert!((d + (m - prior.mean) / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_repeat_under_a_fixed_seed() {
        let lik = GaussianMeanLikelihood {
            observations: vec![0.5, 1.5],
            noise_std: 0.7,
        };
        let p = one(0.1, 0.4);
        let a = elbo_gradients(
            &p,
            &Prior::default(),
            &lik,
            4,
            ElboMode::Mc,
            &mut rng_from_seed(12),
        )
        .unwrap();
        let b = elbo_gradients(
            &p,
            &Prior::default(),
            &lik,
            4,
            ElboMode::Mc,
            &mut rng_from_seed(12),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conjugate_evidence_matches_marginal_density() {
        // y ~ N(m·1, σn² I + s² 11ᵀ): determinant lemma and Sherman–Morrison.
        let lik = GaussianMeanLikelihood {
            observations: vec![0.3, 1.1, -0.4, 0.9],
            noise_std: 0.8,
        };
        let prior = Prior {
            mean: 0.2,
            std: 1.5,
        };
        let n = lik.observations.len() as f64;
        let nv = lik.noise_std.powi(2);
        let pv = prior.std.powi(2);
        let r: Vec<f64> = lik.observations.iter().map(|y| y - prior.mean).collect();
        let sum_r: f64 = r.iter().sum();
        let sum_r2: f64 = r.iter().map(|v| v * v).sum();
        let quad = sum_r2 / nv - pv * sum_r * sum_r / (nv * (nv + n * pv));
        let logdet = n * nv.ln() + (1.0 + n * pv / nv).ln();
        let direct = -0.5 * (n * (2.0 * PI).ln() + logdet + quad);
        assert!((lik.log_evidence(&prior) - direct).abs() < 1e-12);

        let (m, s) = lik.posterior(&prior);
        let exact_q = VariationalParams::constant(1, m, s);
        assert!((lik.exact_elbo(&exact_q, &prior) - direct).abs() < 1e-12);
        assert!(lik.exact_elbo(&one(m + 0.1, s), &prior) < direct);
    }
}

//! Gaussian-convolution smoothing.
//!
//! For `U ~ N(0, I)` and `mu >= 0` the smoothed function is
//! `f_mu(x) = E f(x + mu U)`. Its gradient is the mean of the two-point
//! quotient `(f(x + mu U) - f(x)) / mu * U`, so everything here needs
//! function values only.

use crate::error::{Error, Result};
use crate::rng::Stream;

/// One standard-normal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDraw {
    values: Vec<f64>,
}

impl GaussianDraw {
    pub fn sample(dim: usize, stream: &mut Stream) -> Self {
        let mut values = vec![0.0; dim];
        stream.fill_normal(&mut values);
        Self { values }
    }

    /// A draw with prescribed values, for tests and replays.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `x + mu * u`, written into `out`.
    pub fn shift_into(&self, x: &[f64], mu: f64, out: &mut [f64]) {
        for ((o, &xi), &ui) in out.iter_mut().zip(x).zip(&self.values) {
            *o = xi + mu * ui;
        }
    }

    pub fn shifted(&self, x: &[f64], mu: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.shift_into(x, mu, &mut out);
        out
    }
}

/// Smoothing levels for the metric space (`mu_s`) and the parameter space
/// (`mu_r`), plus the scale `C` of the feasibility slack
/// `S(mu_r) = C * mu_r * sqrt(n_phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    pub mu_s: f64,
    pub mu_r: f64,
    pub slack_scale: Vec<f64>,
}

impl SmoothingConfig {
    pub fn new(mu_s: f64, mu_r: f64, slack_scale: Vec<f64>) -> Result<Self> {
        if !(mu_s >= 0.0 && mu_s.is_finite()) {
            return Err(Error::config("mu_s", "must be finite and >= 0"));
        }
        if !(mu_r >= 0.0 && mu_r.is_finite()) {
            return Err(Error::config("mu_r", "must be finite and >= 0"));
        }
        if slack_scale.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::config("slack_c", "entries must be finite and >= 0"));
        }
        Ok(Self {
            mu_s,
            mu_r,
            slack_scale,
        })
    }

    /// No smoothing and no slack.
    pub fn exact(n_constraints: usize) -> Self {
        Self {
            mu_s: 0.0,
            mu_r: 0.0,
            slack_scale: vec![0.0; n_constraints],
        }
    }

    pub fn slack(&self, n_phi: usize) -> Vec<f64> {
        let k = self.mu_r * (n_phi as f64).sqrt();
        self.slack_scale.iter().map(|&c| c * k).collect()
    }
}

/// Mean of i.i.d. samples with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0, n: 1 }
    }
}

/// Welford accumulator for a scalar sample mean.
#[derive(Debug, Clone, Default)]
pub struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean,
            se: (self.variance() / self.n.max(1) as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Both evaluations behind a scalar difference quotient, kept for reuse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiff {
    pub base: f64,
    pub perturbed: f64,
    pub mu: f64,
}

impl FiniteDiff {
    pub fn quotient(&self) -> f64 {
        (self.perturbed - self.base) / self.mu
    }
}

fn check_fd(x: &[f64], mu: f64, u: &GaussianDraw) -> Result<()> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveSmoothing);
    }
    Error::check_dim("gaussian draw", x.len(), u.dim())
}

/// Evaluates `f(x)` and `f(x + mu u)` once each.
pub fn finite_diff_eval<F>(f: F, x: &[f64], mu: f64, u: &GaussianDraw) -> Result<FiniteDiff>
where
    F: Fn(&[f64]) -> f64,
{
    check_fd(x, mu, u)?;
    let base = f(x);
    let perturbed = f(&u.shifted(x, mu));
    Ok(FiniteDiff { base, perturbed, mu })
}

/// `(f(x + mu u) - f(x)) / mu`.
pub fn finite_diff<F>(f: F, x: &[f64], mu: f64, u: &GaussianDraw) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    finite_diff_eval(f, x, mu, u).map(|d| d.quotient())
}

/// One unbiased sample of the smoothed gradient: `finite_diff(f, x, mu, u) * u`.
pub fn zo_grad_sample<F>(f: F, x: &[f64], mu: f64, u: &GaussianDraw) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let q = finite_diff(f, x, mu, u)?;
    Ok(u.values().iter().map(|&ui| q * ui).collect())
}

/// Monte Carlo estimate of `f_mu(x)` from `n` draws. With `mu == 0` this is
/// a single exact evaluation.
pub fn mc_smoothed_value<F>(f: F, x: &[f64], mu: f64, n: usize, stream: &mut Stream) -> Estimate
where
    F: Fn(&[f64]) -> f64,
{
    if mu == 0.0 {
        return Estimate::exact(f(x));
    }
    let mut acc = Running::default();
    let mut u = vec![0.0; x.len()];
    let mut shifted = vec![0.0; x.len()];
    for _ in 0..n.max(1) {
        stream.fill_normal(&mut u);
        for ((s, &xi), &ui) in shifted.iter_mut().zip(x).zip(&u) {
            *s = xi + mu * ui;
        }
        acc.push(f(&shifted));
    }
    acc.estimate()
}

/// Batched mean of `n` zeroth-order gradient samples, with per-coordinate
/// standard errors.
pub fn mc_zo_gradient<F>(f: F, x: &[f64], mu: f64, n: usize, stream: &mut Stream) -> Result<Vec<Estimate>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut acc = vec![Running::default(); x.len()];
    let base = f(x);
    for _ in 0..n.max(1) {
        let u = GaussianDraw::sample(x.len(), stream);
        check_fd(x, mu, &u)?;
        let q = (f(&u.shifted(x, mu)) - base) / mu;
        for (a, &ui) in acc.iter_mut().zip(u.values()) {
            a.push(q * ui);
        }
    }
    Ok(acc.iter().map(Running::estimate).collect())
}

/// Both evaluations of a vector-valued black box under one shared draw.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFiniteDiff {
    pub base: Vec<f64>,
    pub perturbed: Vec<f64>,
    pub mu: f64,
}

impl VectorFiniteDiff {
    pub fn quotients(&self) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.perturbed)
            .map(|(b, p)| (p - b) / self.mu)
            .collect()
    }
}

/// Componentwise difference quotients of `fv`, from exactly two calls.
pub fn vector_finite_diff<F>(fv: F, out_dim: usize, x: &[f64], mu: f64, u: &GaussianDraw) -> Result<VectorFiniteDiff>
where
    F: Fn(&[f64], &mut [f64]),
{
    check_fd(x, mu, u)?;
    let mut base = vec![0.0; out_dim];
    let mut perturbed = vec![0.0; out_dim];
    fv(x, &mut base);
    fv(&u.shifted(x, mu), &mut perturbed);
    Ok(VectorFiniteDiff { base, perturbed, mu })
}

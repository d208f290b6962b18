//! Wireless system simulators. The learner only ever sees their outputs.
//!
//! Rates are in nats. `h` is the fading *power* of each link.

use crate::error::{Error, Result};
use crate::problem::Service;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub noise: Vec<f64>,
    pub p_max: f64,
    pub weights: Vec<f64>,
}

impl ChannelParams {
    pub fn new(noise: Vec<f64>, p_max: f64, weights: Vec<f64>) -> Result<Self> {
        if noise.is_empty() {
            return Err(Error::config("system.n_users", "must be positive"));
        }
        if noise.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config("system.noise", "noise powers must be positive"));
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::config("system.p_max", "must be positive"));
        }
        if weights.len() != noise.len() {
            return Err(Error::config(
                "system.weights",
                format!("expected {} weights, got {}", noise.len(), weights.len()),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::config("system.weights", "weights must be nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::config("system.weights", format!("weights sum to {s}, not 1")));
        }
        Ok(Self { noise, p_max, weights })
    }

    /// Unit noise and equal weights.
    pub fn uniform(n_users: usize, p_max: f64) -> Self {
        Self {
            noise: vec![1.0; n_users],
            p_max,
            weights: vec![1.0 / n_users as f64; n_users],
        }
    }

    pub fn n_users(&self) -> usize {
        self.noise.len()
    }

    pub fn weighted_sum(&self, rates: &[f64]) -> f64 {
        self.weights.iter().zip(rates).map(|(w, r)| w * r).sum()
    }
}

/// Fading-power sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingSampler {
    /// I.i.d. exponential coordinates with the given rate.
    Exponential { rate: f64, dim: usize },
    /// Always returns the same vector.
    Fixed(Vec<f64>),
}

impl FadingSampler {
    /// Squared unit-variance Rayleigh fading: exponential with rate 1/2.
    pub fn rayleigh_power(dim: usize) -> Self {
        FadingSampler::Exponential { rate: 0.5, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            FadingSampler::Exponential { dim, .. } => *dim,
            FadingSampler::Fixed(h) => h.len(),
        }
    }

    pub fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) {
        match self {
            FadingSampler::Exponential { rate, .. } => {
                for v in out.iter_mut() {
                    *v = stream.exponential(*rate);
                }
            }
            FadingSampler::Fixed(h) => out.copy_from_slice(h),
        }
    }

    pub fn sample(&self, stream: &mut Stream) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(stream, &mut out);
        out
    }
}

/// `rate_i = log(1 + h_i p_i / nu_i)`.
pub fn awgn_rates(h: &[f64], p: &[f64], params: &ChannelParams) -> Vec<f64> {
    let mut out = vec![0.0; h.len()];
    awgn_rates_into(h, p, &params.noise, &mut out);
    out
}

fn awgn_rates_into(h: &[f64], p: &[f64], noise: &[f64], out: &mut [f64]) {
    for (((o, &hi), &pi), &ni) in out.iter_mut().zip(h).zip(p).zip(noise) {
        *o = (hi * pi / ni).ln_1p();
    }
}

/// `rate_i = log(1 + h_i p_i / (nu_i + sum_{j != i} h_j p_j))`.
pub fn mai_rates(h: &[f64], p: &[f64], params: &ChannelParams) -> Vec<f64> {
    let mut out = vec![0.0; h.len()];
    mai_rates_into(h, p, &params.noise, &mut out);
    out
}

fn mai_rates_into(h: &[f64], p: &[f64], noise: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut interference = 0.0;
        for (j, (&hj, &pj)) in h.iter().zip(p).enumerate() {
            if j != i {
                interference += hj * pj;
            }
        }
        *o = (h[i] * p[i] / (noise[i] + interference)).ln_1p();
    }
}

/// Appends the budget component `p_max - sum(p)` to a rate vector.
pub fn service_with_budget<F>(rates_fn: F, h: &[f64], p: &[f64], params: &ChannelParams) -> Vec<f64>
where
    F: Fn(&[f64], &[f64], &ChannelParams) -> Vec<f64>,
{
    let mut v = rates_fn(h, p, params);
    v.push(params.p_max - p.iter().sum::<f64>());
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    Awgn,
    Mai,
}

impl RateModel {
    pub fn rates(self, h: &[f64], p: &[f64], params: &ChannelParams) -> Vec<f64> {
        match self {
            RateModel::Awgn => awgn_rates(h, p, params),
            RateModel::Mai => mai_rates(h, p, params),
        }
    }
}

/// Rates followed by the budget component, as one black-box service.
#[derive(Debug, Clone)]
pub struct ChannelService {
    pub model: RateModel,
    pub params: ChannelParams,
}

impl Service for ChannelService {
    fn dim(&self) -> usize {
        self.params.n_users() + 1
    }

    fn alloc_dim(&self) -> usize {
        self.params.n_users()
    }

    fn evaluate(&self, p: &[f64], h: &[f64], out: &mut [f64]) {
        let n = self.params.n_users();
        match self.model {
            RateModel::Awgn => awgn_rates_into(h, p, &self.params.noise, &mut out[..n]),
            RateModel::Mai => mai_rates_into(h, p, &self.params.noise, &mut out[..n]),
        }
        out[n] = self.params.p_max - p.iter().sum::<f64>();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn awgn_examples() {
        let pr = ChannelParams::uniform(2, 20.0);
        assert_eq!(awgn_rates(&[0.0, 3.0], &[5.0, 0.0], &pr), vec![0.0, 0.0]);
        let r = awgn_rates(&[1.0], &[10.0], &ChannelParams::uniform(1, 20.0));
        assert!((r[0] - 11f64.ln()).abs() < 1e-15);
        assert!((r[0] - 2.3979).abs() < 1e-4);
    }

    #[test]
    fn awgn_ratio_invariance() {
        let a = ChannelParams::new(vec![0.5], 1.0, vec![1.0]).unwrap();
        let b = ChannelParams::new(vec![1.5], 1.0, vec![1.0]).unwrap();
        let ra = awgn_rates(&[2.0], &[0.7], &a)[0];
        let rb = awgn_rates(&[6.0], &[0.7], &b)[0];
        assert!((ra - rb).abs() < 1e-15);
    }

    #[test]
    fn mai_examples() {
        let pr = ChannelParams::uniform(2, 20.0);
        let r = mai_rates(&[1.0, 1.0], &[1.0, 1.0], &pr);
        for v in r {
            assert!((v - 1.5f64.ln()).abs() < 1e-15);
        }
        let single = ChannelParams::uniform(1, 20.0);
        assert_eq!(mai_rates(&[1.7], &[3.0], &single), awgn_rates(&[1.7], &[3.0], &single));
        let three = ChannelParams::uniform(3, 20.0);
        let m = mai_rates(&[1.0, 2.0, 0.5], &[0.0, 4.0, 0.0], &three);
        let a = awgn_rates(&[1.0, 2.0, 0.5], &[0.0, 4.0, 0.0], &three);
        assert_eq!(m[1], a[1]);
    }

    #[test]
    fn budget_component() {
        let pr = ChannelParams::uniform(10, 20.0);
        let h = vec![1.0; 10];
        let v = service_with_budget(awgn_rates, &h, &[2.0; 10], &pr);
        assert_eq!(v.len(), 11);
        assert_eq!(v[10], 0.0);
        assert_eq!(service_with_budget(awgn_rates, &h, &[0.0; 10], &pr)[10], 20.0);
        assert_eq!(service_with_budget(mai_rates, &h, &[1.0; 10], &pr)[10], 10.0);
    }

    #[test]
    fn channel_service_matches_free_functions() {
        let params = ChannelParams::uniform(3, 20.0);
        let h = [0.4, 2.0, 1.1];
        let p = [3.0, 5.0, 1.0];
        type RateFn = fn(&[f64], &[f64], &ChannelParams) -> Vec<f64>;
        let cases: [(RateModel, RateFn); 2] = [(RateModel::Awgn, awgn_rates), (RateModel::Mai, mai_rates)];
        for (model, f) in cases {
            let svc = ChannelService {
                model,
                params: params.clone(),
            };
            let mut out = vec![0.0; 4];
            svc.evaluate(&p, &h, &mut out);
            assert_eq!(out, service_with_budget(f, &h, &p, &params));
        }
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(vec![1.0, 1.0], 20.0, vec![0.5, 0.6]).is_err());
        assert!(ChannelParams::new(vec![0.0], 20.0, vec![1.0]).is_err());
        assert!(ChannelParams::new(vec![1.0], -1.0, vec![1.0]).is_err());
        assert!(ChannelParams::new(vec![1.0, 2.0], 20.0, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn fading_mean_is_two() {
        let s = FadingSampler::rayleigh_power(1);
        let mut st = Stream::new(42);
        let n = 1_000_000;
        let mut buf = [0.0];
        let mut sum = 0.0;
        for _ in 0..n {
            s.sample_into(&mut st, &mut buf);
            assert!(buf[0] >= 0.0);
            sum += buf[0];
        }
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
    }

    proptest! {
        #[test]
        fn interference_only_hurts(
            h in prop::collection::vec(0.0f64..10.0, 2..6),
            p in prop::collection::vec(0.0f64..20.0, 6),
        ) {
            let n = h.len();
            let params = ChannelParams::uniform(n, 20.0);
            let m = mai_rates(&h, &p[..n], &params);
            let a = awgn_rates(&h, &p[..n], &params);
            for (mi, ai) in m.iter().zip(&a) {
                prop_assert!(*mi >= 0.0);
                prop_assert!(*mi <= *ai);
            }
        }
    }
}

//! Model-aware reference policies: clairvoyant waterfilling for the AWGN
//! program, uniform allocation, and per-realization WMMSE for the MAI
//! program.

use crate::channels::{ChannelParams, FadingSampler, RateModel};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::smoothing::{Estimate, Running};

const LAMBDA_LO: f64 = 1e-8;
const LAMBDA_HI: f64 = 1e8;
const MAX_HALVINGS: usize = 200;

/// Ergodic estimates of a policy rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicEstimate {
    /// Weighted sumrate.
    pub sumrate: Estimate,
    /// Total transmit power.
    pub power: Estimate,
    pub rates: Vec<Estimate>,
}

/// Monte Carlo evaluation of `rule` under `model`.
pub fn ergodic_eval<R>(
    rule: R,
    model: RateModel,
    params: &ChannelParams,
    fading: &FadingSampler,
    mc_n: usize,
    stream: &mut Stream,
) -> ErgodicEstimate
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    let n = params.n_users();
    let mut h = vec![0.0; fading.dim()];
    let mut sum = Running::default();
    let mut pow = Running::default();
    let mut rates = vec![Running::default(); n];
    for _ in 0..mc_n.max(1) {
        fading.sample_into(stream, &mut h);
        let p = rule(&h);
        let r = model.rates(&h, &p, params);
        sum.push(params.weighted_sum(&r));
        pow.push(p.iter().sum());
        for (acc, v) in rates.iter_mut().zip(&r) {
            acc.push(*v);
        }
    }
    ErgodicEstimate {
        sumrate: sum.estimate(),
        power: pow.estimate(),
        rates: rates.iter().map(Running::estimate).collect(),
    }
}

/// `p_i = p_max / n` for every user and every fading state.
pub fn uniform_policy(params: &ChannelParams) -> Vec<f64> {
    vec![params.p_max / params.n_users() as f64; params.n_users()]
}

/// Optimal unparameterized AWGN policy.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillingSolution {
    /// Price per unit of average power; zero when the budget does not bind.
    pub lambda_star: f64,
    pub binding: bool,
    /// Per-realization power cap.
    pub cap: f64,
    pub weights: Vec<f64>,
    pub noise: Vec<f64>,
    /// Estimates on a fresh sample, independent of the bisection sample.
    pub estimate: ErgodicEstimate,
}

fn waterfill_into(lambda: f64, w: &[f64], noise: &[f64], cap: f64, h: &[f64], out: &mut [f64]) {
    for (((o, &wi), &ni), &hi) in out.iter_mut().zip(w).zip(noise).zip(h) {
        *o = if hi <= 0.0 {
            0.0
        } else if lambda <= 0.0 {
            cap
        } else {
            (wi / lambda - ni / hi).clamp(0.0, cap)
        };
    }
}

impl WaterfillingSolution {
    pub fn powers(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; h.len()];
        waterfill_into(self.lambda_star, &self.weights, &self.noise, self.cap, h, &mut out);
        out
    }
}

/// Bisection on the power price with a fixed common-random-numbers sample.
pub fn clairvoyant_awgn(
    params: &ChannelParams,
    fading: &FadingSampler,
    mc_n: usize,
    tol: f64,
    stream: &mut Stream,
) -> Result<WaterfillingSolution> {
    if mc_n < 1000 {
        return Err(Error::config("baselines.mc_samples", "need at least 1000 samples"));
    }
    if !(tol > 0.0) {
        return Err(Error::config("baselines.tol", "must be positive"));
    }
    let n = params.n_users();
    let cap = 1e3 * params.p_max;
    let sample: Vec<Vec<f64>> = (0..mc_n).map(|_| fading.sample(stream)).collect();
    let mut buf = vec![0.0; n];
    let mut mean_power = |lambda: f64| {
        let mut s = 0.0;
        for h in &sample {
            waterfill_into(lambda, &params.weights, &params.noise, cap, h, &mut buf);
            s += buf.iter().sum::<f64>();
        }
        s / mc_n as f64
    };

    let (lambda_star, binding) = if mean_power(LAMBDA_LO) <= params.p_max {
        (0.0, false)
    } else {
        let (mut lo, mut hi) = (LAMBDA_LO.ln(), LAMBDA_HI.ln());
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..MAX_HALVINGS {
            mid = 0.5 * (lo + hi);
            let e = mean_power(mid.exp());
            if (e - params.p_max).abs() <= tol {
                break;
            }
            if e > params.p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (mid.exp(), true)
    };
    let mut sol = WaterfillingSolution {
        lambda_star,
        binding,
        cap,
        weights: params.weights.clone(),
        noise: params.noise.clone(),
        estimate: ErgodicEstimate {
            sumrate: Estimate::exact(0.0),
            power: Estimate::exact(0.0),
            rates: Vec::new(),
        },
    };
    let estimate = ergodic_eval(|h| sol.powers(h), RateModel::Awgn, params, fading, mc_n, stream);
    sol.estimate = estimate;
    Ok(sol)
}

/// Output of one WMMSE solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseResult {
    /// Best iterate found.
    pub powers: Vec<f64>,
    pub sumrate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted sumrate of the initial point and of every iterate.
    pub history: Vec<f64>,
}

/// Weighted MAI sumrate of a power vector.
pub fn mai_weighted_sumrate(h: &[f64], p: &[f64], params: &ChannelParams) -> f64 {
    params.weighted_sum(&RateModel::Mai.rates(h, p, params))
}

/// Scalar weighted-MMSE iterations in the amplitude domain `v = sqrt(p)`
/// with channel amplitudes `sqrt(h)`, started from the uniform split.
pub fn wmmse_powers(h: &[f64], params: &ChannelParams, max_iters: usize, tol: f64) -> WmmseResult {
    let n = params.n_users();
    if h.iter().all(|&v| v <= 0.0) {
        return WmmseResult {
            powers: vec![0.0; n],
            sumrate: 0.0,
            iterations: 0,
            converged: true,
            history: vec![0.0],
        };
    }
    let alpha = &params.weights;
    let ha: Vec<f64> = h.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut v: Vec<f64> = uniform_policy(params).iter().map(|p| p.sqrt()).collect();
    let to_p = |v: &[f64]| v.iter().map(|a| a * a).collect::<Vec<_>>();

    let mut p = to_p(&v);
    let mut rate = mai_weighted_sumrate(h, &p, params);
    let mut history = vec![rate];
    let (mut best_p, mut best_rate) = (p.clone(), rate);
    let mut u = vec![0.0; n];
    let mut wt = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let total: f64 = h.iter().zip(&v).map(|(hj, vj)| hj * vj * vj).sum();
        for i in 0..n {
            u[i] = ha[i] * v[i] / (params.noise[i] + total);
            let e = 1.0 - u[i] * ha[i] * v[i];
            wt[i] = 1.0 / e.max(f64::MIN_POSITIVE);
        }
        let s: f64 = (0..n).map(|i| alpha[i] * wt[i] * u[i] * u[i]).sum();
        let amp = |mu: f64, out: &mut [f64]| {
            for j in 0..n {
                let num = alpha[j] * wt[j] * u[j] * ha[j];
                let den = mu + h[j] * s;
                out[j] = if num <= 0.0 || den <= 0.0 { 0.0 } else { num / den };
            }
        };
        let power = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        amp(0.0, &mut v);
        if power(&v) > params.p_max {
            let mut hi = 1.0;
            amp(hi, &mut v);
            while power(&v) > params.p_max {
                hi *= 2.0;
                amp(hi, &mut v);
            }
            let mut lo = 0.0;
            for _ in 0..MAX_HALVINGS {
                let mid = 0.5 * (lo + hi);
                amp(mid, &mut v);
                if power(&v) > params.p_max {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            amp(hi, &mut v);
        }
        p = to_p(&v);
        let next = mai_weighted_sumrate(h, &p, params);
        history.push(next);
        if next > best_rate {
            best_rate = next;
            best_p.clone_from(&p);
        }
        let change = (next - rate).abs();
        rate = next;
        if change <= tol {
            converged = true;
            break;
        }
    }
    WmmseResult {
        powers: best_p,
        sumrate: best_rate,
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_policy(&ChannelParams::uniform(10, 20.0)), vec![2.0; 10]);
        assert_eq!(uniform_policy(&ChannelParams::uniform(1, 20.0)), vec![20.0]);
        let pr = ChannelParams::uniform(10, 20.0);
        let p = uniform_policy(&pr);
        assert_eq!(pr.p_max - p.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn ergodic_eval_examples() {
        let pr = ChannelParams::uniform(4, 8.0);
        let fixed = FadingSampler::Fixed(vec![1.0; 4]);
        let mut s = Stream::new(1);
        let e = ergodic_eval(|_| uniform_policy(&pr), RateModel::Awgn, &pr, &fixed, 10, &mut s);
        assert!((e.sumrate.value - 3f64.ln()).abs() < 1e-12);
        assert_eq!(e.sumrate.se, 0.0);
        let z = ergodic_eval(|_| vec![0.0; 4], RateModel::Mai, &pr, &fixed, 10, &mut s);
        assert_eq!(z.sumrate.value, 0.0);
        assert_eq!(z.power.value, 0.0);
    }

    #[test]
    fn waterfilling_single_user() {
        let pr = ChannelParams::new(vec![1.0], 1.0, vec![1.0]).unwrap();
        let sol = clairvoyant_awgn(&pr, &FadingSampler::Fixed(vec![1.0]), 1000, 1e-9, &mut Stream::new(3)).unwrap();
        assert!(sol.binding);
        assert!((sol.powers(&[1.0])[0] - 1.0).abs() < 1e-6);
        assert!((sol.estimate.sumrate.value - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn waterfilling_symmetric_pair() {
        let pr = ChannelParams::uniform(2, 2.0);
        let sol = clairvoyant_awgn(
            &pr,
            &FadingSampler::Fixed(vec![1.0, 1.0]),
            1000,
            1e-9,
            &mut Stream::new(3),
        )
        .unwrap();
        let p = sol.powers(&[1.0, 1.0]);
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn waterfilling_meets_budget_and_beats_uniform() {
        let pr = ChannelParams::new(vec![1.0; 3], 20.0, vec![0.5, 0.3, 0.2]).unwrap();
        let fading = FadingSampler::rayleigh_power(3);
        let mut s = Stream::new(11);
        let sol = clairvoyant_awgn(&pr, &fading, 20_000, 1e-6, &mut s).unwrap();
        assert!((sol.estimate.power.value - 20.0).abs() < 5.0 * sol.estimate.power.se + 1e-6);
        let uni = ergodic_eval(|_| uniform_policy(&pr), RateModel::Awgn, &pr, &fading, 20_000, &mut s);
        assert!(sol.estimate.sumrate.value >= uni.sumrate.value);
    }

    #[test]
    fn waterfilling_rejects_small_samples() {
        let pr = ChannelParams::uniform(1, 1.0);
        assert!(clairvoyant_awgn(&pr, &FadingSampler::Fixed(vec![1.0]), 10, 1e-6, &mut Stream::new(1)).is_err());
    }

    #[test]
    fn wmmse_single_user_uses_full_budget() {
        let pr = ChannelParams::uniform(1, 20.0);
        let r = wmmse_powers(&[1.0], &pr, 100, 1e-6);
        assert!((r.powers[0] - 20.0).abs() < 1e-9);
        assert!((r.sumrate - 21f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn wmmse_zero_channel() {
        let r = wmmse_powers(&[0.0, 0.0], &ChannelParams::uniform(2, 20.0), 100, 1e-6);
        assert_eq!(r.powers, vec![0.0, 0.0]);
    }

    #[test]
    fn wmmse_strong_interference_beats_equal_split() {
        let pr = ChannelParams::uniform(2, 20.0);
        let h = [50.0, 50.0];
        let r = wmmse_powers(&h, &pr, 100, 1e-6);
        let equal = mai_weighted_sumrate(&h, &[10.0, 10.0], &pr);
        assert!(r.sumrate >= equal);
        assert!(r.powers.iter().sum::<f64>() <= 20.0 + 1e-8);
    }

    #[test]
    fn wmmse_is_monotone_and_within_budget() {
        let mut s = Stream::new(5);
        let fading = FadingSampler::rayleigh_power(5);
        for _ in 0..200 {
            let pr = ChannelParams::new(vec![1.0; 5], 20.0, s.simplex(5)).unwrap();
            let h = fading.sample(&mut s);
            let r = wmmse_powers(&h, &pr, 100, 1e-6);
            for w in r.history.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "{:?}", r.history);
            }
            assert!(r.powers.iter().sum::<f64>() <= 20.0 + 1e-8);
            assert!(r.sumrate >= mai_weighted_sumrate(&h, &uniform_policy(&pr), &pr) - 1e-10);
        }
    }
}

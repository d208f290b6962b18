//! The parameterized ergodic program and its smoothed surrogate.
//!
//! ```text
//! maximize    g0(x)
//! subject to  x <= E f(phi(H, theta), H)
//!             g(x) >= 0,  x in X,  theta in R^{n_phi}
//! ```
//!
//! The service `f` is a black box: it is only ever evaluated.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::channels::FadingSampler;
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::Stream;
use crate::smoothing::{Estimate, GaussianDraw, Running, SmoothingConfig};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Instantaneous service metrics `f(p, H)`.
pub trait Service: Send + Sync + fmt::Debug {
    /// Number of metrics.
    fn dim(&self) -> usize;
    /// Length of the allocation `p`.
    fn alloc_dim(&self) -> usize;
    fn evaluate(&self, p: &[f64], h: &[f64], out: &mut [f64]);
}

type ServiceClosure = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// A service given by a closure, for synthetic problems.
#[derive(Clone)]
pub struct FnService {
    dim: usize,
    alloc_dim: usize,
    f: ServiceClosure,
}

impl FnService {
    pub fn new<F>(dim: usize, alloc_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            alloc_dim,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnService {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnService")
            .field("dim", &self.dim)
            .field("alloc_dim", &self.alloc_dim)
            .finish_non_exhaustive()
    }
}

impl Service for FnService {
    fn dim(&self) -> usize {
        self.dim
    }

    fn alloc_dim(&self) -> usize {
        self.alloc_dim
    }

    fn evaluate(&self, p: &[f64], h: &[f64], out: &mut [f64]) {
        (self.f)(p, h, out)
    }
}

/// Scalar utility `g0` with an optional analytic gradient.
#[derive(Clone)]
pub struct Objective {
    pub value: ScalarFn,
    pub grad: Option<VectorFn>,
}

impl Objective {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            grad: None,
        }
    }

    pub fn with_grad<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// `<w, x>`, with its gradient.
    pub fn linear(w: Vec<f64>) -> Self {
        let w2 = w.clone();
        Self::new(move |x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum())
            .with_grad(move |_x: &[f64], out: &mut [f64]| out.copy_from_slice(&w2))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("analytic_grad", &self.grad.is_some())
            .finish()
    }
}

/// Vector utility `g` (`g(x) >= 0` is required) with an optional analytic
/// Jacobian, stored row-major as `dim x n_x`.
#[derive(Clone)]
pub struct Utility {
    pub dim: usize,
    pub value: VectorFn,
    pub jacobian: Option<VectorFn>,
}

impl Utility {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.value)(x, &mut out);
        out
    }
}

impl fmt::Debug for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Utility")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Box constraints on the ergodic metrics. A coordinate with equal bounds is
/// pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct XSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl XSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Error::check_dim("x-set bounds", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::config("x_set", "lower bound exceeds upper bound"));
        }
        Ok(Self { lower, upper })
    }

    /// The nonnegative orthant.
    pub fn nonnegative(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    /// Nonnegative orthant with the last coordinate pinned at 0 (the budget
    /// slot of the canonical wireless form).
    pub fn nonnegative_with_budget(n_users: usize) -> Self {
        let mut s = Self::nonnegative(n_users + 1);
        s.upper[n_users] = 0.0;
        s
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, v: &mut [f64]) {
        for ((x, &l), &u) in v.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(l, u);
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((x, l), u)| x >= l && x <= u)
    }
}

/// The parameterized program.
pub struct ErgodicProblem {
    pub objective: Objective,
    pub utility: Option<Utility>,
    pub service: Arc<dyn Service>,
    pub fading: FadingSampler,
    pub x_set: XSet,
    pub policy: Arc<dyn Policy>,
    probes: AtomicU64,
}

impl fmt::Debug for ErgodicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ErgodicProblem")
            .field("n_s", &self.n_s())
            .field("n_g", &self.n_g())
            .field("n_phi", &self.n_phi())
            .field("service", &self.service)
            .field("fading", &self.fading)
            .field("x_set", &self.x_set)
            .field("policy", &self.policy)
            .field("probes", &self.probe_count())
            .finish()
    }
}

impl ErgodicProblem {
    pub fn new(
        objective: Objective,
        service: Arc<dyn Service>,
        fading: FadingSampler,
        policy: Arc<dyn Policy>,
        x_set: XSet,
    ) -> Result<Self> {
        Error::check_dim("x-set", service.dim(), x_set.dim())?;
        Error::check_dim("policy output", service.alloc_dim(), policy.output_dim())?;
        Error::check_dim("fading", policy.input_dim(), fading.dim())?;
        Ok(Self {
            objective,
            utility: None,
            service,
            fading,
            x_set,
            policy,
            probes: AtomicU64::new(0),
        })
    }

    pub fn with_utility(mut self, utility: Utility) -> Self {
        self.utility = Some(utility).filter(|u| u.dim > 0);
        self
    }

    /// Number of ergodic metrics (length of `x`).
    pub fn n_s(&self) -> usize {
        self.service.dim()
    }

    /// Number of utility constraints.
    pub fn n_g(&self) -> usize {
        self.utility.as_ref().map_or(0, |u| u.dim)
    }

    pub fn n_phi(&self) -> usize {
        self.policy.theta_dim()
    }

    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn reset_probes(&self) {
        self.probes.store(0, Ordering::Relaxed);
    }

    /// `f(phi(h, theta), h)` without touching the probe counter. Used by
    /// offline diagnostics that stand in for the live system.
    pub fn evaluate_composed(&self, theta: &[f64], h: &[f64], out: &mut [f64]) -> Result<()> {
        Error::check_dim("service output", self.n_s(), out.len())?;
        let p = self.policy.forward(h, theta)?;
        self.service.evaluate(&p, h, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Service {
                theta_norm: theta.iter().map(|t| t * t).sum::<f64>().sqrt(),
                h: h.to_vec(),
                reason: format!("non-finite service output {out:?}"),
            })
        }
    }

    /// One probe of the live system.
    pub fn probe_service(&self, theta: &[f64], h: &[f64], out: &mut [f64]) -> Result<()> {
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.evaluate_composed(theta, h, out)
    }

    /// Monte Carlo estimate of `E f(phi(H, theta + mu U), H)` per metric.
    pub fn mean_service(&self, theta: &[f64], mu_r: f64, n: usize, stream: &mut Stream) -> Result<Vec<Estimate>> {
        let mut acc = vec![Running::default(); self.n_s()];
        let mut h = vec![0.0; self.fading.dim()];
        let mut out = vec![0.0; self.n_s()];
        for _ in 0..n.max(1) {
            self.fading.sample_into(stream, &mut h);
            if mu_r > 0.0 {
                let u = GaussianDraw::sample(theta.len(), stream);
                self.evaluate_composed(&u.shifted(theta, mu_r), &h, &mut out)?;
            } else {
                self.evaluate_composed(theta, &h, &mut out)?;
            }
            for (a, &v) in acc.iter_mut().zip(&out) {
                a.push(v);
            }
        }
        Ok(acc.iter().map(Running::estimate).collect())
    }
}

/// The smoothed surrogate: the base program with smoothing and slack.
#[derive(Debug)]
pub struct SurrogateProblem {
    pub base: ErgodicProblem,
    pub smoothing: SmoothingConfig,
}

impl SurrogateProblem {
    pub fn new(base: ErgodicProblem, mut smoothing: SmoothingConfig) -> Result<Self> {
        if smoothing.slack_scale.len() == 1 && base.n_s() != 1 {
            smoothing.slack_scale = vec![smoothing.slack_scale[0]; base.n_s()];
        }
        if smoothing.slack_scale.len() != base.n_s() {
            return Err(Error::config(
                "smoothing.slack_c",
                format!("expected 1 or {} entries", base.n_s()),
            ));
        }
        Ok(Self { base, smoothing })
    }

    pub fn slack(&self) -> Vec<f64> {
        surrogate_slack(self)
    }
}

/// `S(mu_r) = C mu_r sqrt(n_phi)`, entrywise nonnegative.
pub fn surrogate_slack(s: &SurrogateProblem) -> Vec<f64> {
    s.smoothing.slack(s.base.n_phi())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    StrictlyFeasible,
    Feasible,
    Violated,
}

/// A constraint margin (nonnegative means satisfied) and its verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub margin: Estimate,
    pub status: Status,
}

impl ConstraintCheck {
    /// Three standard errors of tolerance; exact margins get `1e-12`.
    pub fn classify(margin: Estimate) -> Self {
        let tol = (3.0 * margin.se).max(1e-12);
        let status = if margin.value > tol {
            Status::StrictlyFeasible
        } else if margin.value >= -tol {
            Status::Feasible
        } else {
            Status::Violated
        };
        Self { margin, status }
    }

    pub fn ok(&self) -> bool {
        self.status != Status::Violated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `g(x)`.
    pub utility: Vec<ConstraintCheck>,
    /// `E f(phi(H, theta), H) - x`.
    pub service: Vec<ConstraintCheck>,
    /// `E f(phi(H, theta + mu_r U), H) - x - S(mu_r)`.
    pub smoothed_service: Vec<ConstraintCheck>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.utility.iter().chain(&self.service).all(ConstraintCheck::ok)
    }

    pub fn surrogate_feasible(&self) -> bool {
        self.utility
            .iter()
            .chain(&self.smoothed_service)
            .all(ConstraintCheck::ok)
    }
}

/// Monte Carlo feasibility of `(x, theta)` for both the parameterized program
/// and its surrogate.
pub fn feasibility_report(
    s: &SurrogateProblem,
    x: &[f64],
    theta: &[f64],
    mc_samples: usize,
    stream: &mut Stream,
) -> Result<FeasibilityReport> {
    let base = &s.base;
    Error::check_dim("x", base.n_s(), x.len())?;
    Error::check_dim("theta", base.n_phi(), theta.len())?;
    let utility = match &base.utility {
        Some(u) => u
            .eval(x)
            .into_iter()
            .map(|v| ConstraintCheck::classify(Estimate::exact(v)))
            .collect(),
        None => Vec::new(),
    };
    let shift = |est: Vec<Estimate>, sub: &dyn Fn(usize) -> f64| -> Vec<ConstraintCheck> {
        est.into_iter()
            .enumerate()
            .map(|(i, e)| {
                ConstraintCheck::classify(Estimate {
                    value: e.value - sub(i),
                    ..e
                })
            })
            .collect()
    };
    let plain = base.mean_service(theta, 0.0, mc_samples, stream)?;
    let service = shift(plain, &|i| x[i]);
    let slack = s.slack();
    let smoothed_est = base.mean_service(theta, s.smoothing.mu_r, mc_samples, stream)?;
    let smoothed_service = shift(smoothed_est, &|i| x[i] + slack[i]);
    Ok(FeasibilityReport {
        utility,
        service,
        smoothed_service,
    })
}

//! Model-free randomized primal-dual learning.
//!
//! Each iteration draws `U_S`, `U_R` and one fading state `H`, then
//!
//! ```text
//! x'   = Proj_X( x + g_x o ( (D0 + <Dg, l_S>) U_S - l_R ) )
//! th'  = th + g_th o <Df, l_R> U_R
//! l_S' = ( l_S - g_lS o g(x' + mu_S U_S) )_+
//! l_R' = ( l_R - g_lR o ( f(phi(H, th' + mu_R U_R), H) - x' - S ) )_+
//! ```
//!
//! where `D0`, `Dg`, `Df` are two-point difference quotients. `Df` probes the
//! system at `th` and `th + mu_R U_R`, and the dual step probes once more,
//! all under the same `H`: three probes per iteration. With `mu_S = 0` the
//! x-step uses the analytic gradient of `g0` and Jacobian of `g` instead.

use crate::error::{Error, Result};
use crate::problem::SurrogateProblem;
use crate::rng::Stream;
use crate::smoothing::{finite_diff_eval, vector_finite_diff, GaussianDraw};
use crate::trace::{IterRecord, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct PdState {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_r: Vec<f64>,
    pub iter: u64,
}

impl PdState {
    pub fn new(x: Vec<f64>, theta: Vec<f64>, lambda_s: Vec<f64>, lambda_r: Vec<f64>) -> Self {
        Self {
            x,
            theta,
            lambda_s,
            lambda_r,
            iter: 0,
        }
    }

    fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(&self.theta)
            .chain(&self.lambda_s)
            .chain(&self.lambda_r)
            .all(|v| v.is_finite())
    }

    fn snapshot(&self) -> String {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        format!(
            "x = {:?}, |theta| = {:e}, lambda_s = {:?}, lambda_r = {:?}",
            self.x,
            norm(&self.theta),
            self.lambda_s,
            self.lambda_r
        )
    }
}

/// How a base step size evolves with the iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// `gamma_n = gamma_0 * tau / (tau + n)`.
    Harmonic {
        tau: f64,
    },
}

/// Step-size vectors; a length-1 vector is broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_r: Vec<f64>,
    pub schedule: Schedule,
}

impl StepSizes {
    pub fn constant(x: Vec<f64>, theta: Vec<f64>, lambda_s: Vec<f64>, lambda_r: Vec<f64>) -> Result<Self> {
        let s = Self {
            x,
            theta,
            lambda_s,
            lambda_r,
            schedule: Schedule::Constant,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn zero() -> Self {
        Self {
            x: vec![0.0],
            theta: vec![0.0],
            lambda_s: vec![0.0],
            lambda_r: vec![0.0],
            schedule: Schedule::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("steps.x", &self.x),
            ("steps.theta", &self.theta),
            ("steps.lambda_s", &self.lambda_s),
            ("steps.lambda_r", &self.lambda_r),
        ] {
            if v.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(Error::config(name, "step sizes must be finite and >= 0"));
            }
        }
        if let Schedule::Harmonic { tau } = self.schedule {
            if !(tau > 0.0) {
                return Err(Error::config("steps.tau", "must be positive"));
            }
        }
        Ok(())
    }

    fn scale(&self, n: u64) -> f64 {
        match self.schedule {
            Schedule::Constant => 1.0,
            Schedule::Harmonic { tau } => tau / (tau + n as f64),
        }
    }
}

#[inline]
fn pick(v: &[f64], i: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v.get(i).copied().unwrap_or(0.0)
    }
}

/// Entrywise clamp onto `[lower, upper]`.
pub fn project_box(v: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lower)
        .zip(upper)
        .map(|((x, &l), &u)| x.clamp(l, u))
        .collect()
}

/// `max(v, 0)` entrywise.
pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// The random inputs of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    /// Absent when `mu_S = 0`.
    pub u_s: Option<GaussianDraw>,
    pub u_r: GaussianDraw,
    pub h: Vec<f64>,
}

/// Independent streams for the three sources of randomness.
#[derive(Debug, Clone)]
pub struct NoiseStreams {
    pub gaussian_s: Stream,
    pub gaussian_r: Stream,
    pub fading: Stream,
}

impl NoiseStreams {
    pub fn from_seeds(gaussian_s: u64, gaussian_r: u64, fading: u64) -> Self {
        Self {
            gaussian_s: Stream::new(gaussian_s),
            gaussian_r: Stream::new(gaussian_r),
            fading: Stream::new(fading),
        }
    }

    pub fn draw(&mut self, prob: &SurrogateProblem) -> Draws {
        let base = &prob.base;
        let u_s = (prob.smoothing.mu_s > 0.0).then(|| GaussianDraw::sample(base.n_s(), &mut self.gaussian_s));
        let u_r = GaussianDraw::sample(base.n_phi(), &mut self.gaussian_r);
        let h = base.fading.sample(&mut self.fading);
        Draws { u_s, u_r, h }
    }
}

/// One iteration with fresh draws.
pub fn step(
    state: &PdState,
    prob: &SurrogateProblem,
    steps: &StepSizes,
    noise: &mut NoiseStreams,
) -> Result<(PdState, IterRecord)> {
    let draws = noise.draw(prob);
    step_with_draws(state, prob, steps, &draws)
}

/// One iteration with the given draws.
pub fn step_with_draws(
    state: &PdState,
    prob: &SurrogateProblem,
    steps: &StepSizes,
    draws: &Draws,
) -> Result<(PdState, IterRecord)> {
    let base = &prob.base;
    let (m, ng, nphi) = (base.n_s(), base.n_g(), base.n_phi());
    let (mu_s, mu_r) = (prob.smoothing.mu_s, prob.smoothing.mu_r);
    Error::check_dim("x", m, state.x.len())?;
    Error::check_dim("theta", nphi, state.theta.len())?;
    Error::check_dim("lambda_s", ng, state.lambda_s.len())?;
    Error::check_dim("lambda_r", m, state.lambda_r.len())?;
    Error::check_dim("u_r", nphi, draws.u_r.dim())?;
    if !(mu_r > 0.0) {
        return Err(Error::NonPositiveSmoothing);
    }
    let n = state.iter;
    let scale = steps.scale(n);
    let slack = prob.slack();

    // x-direction
    let objective_now;
    let mut dir = vec![0.0; m];
    if mu_s > 0.0 {
        let u_s = draws.u_s.as_ref().ok_or(Error::NonPositiveSmoothing)?;
        Error::check_dim("u_s", m, u_s.dim())?;
        let d0 = finite_diff_eval(|x| base.objective.eval(x), &state.x, mu_s, u_s)?;
        objective_now = d0.base;
        let mut coef = d0.quotient();
        if let Some(u) = &base.utility {
            let dg = vector_finite_diff(|x, out| (u.value)(x, out), ng, &state.x, mu_s, u_s)?;
            coef += dg
                .quotients()
                .iter()
                .zip(&state.lambda_s)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        for ((d, &ui), &lr) in dir.iter_mut().zip(u_s.values()).zip(&state.lambda_r) {
            *d = coef * ui - lr;
        }
    } else {
        objective_now = base.objective.eval(&state.x);
        let grad = base
            .objective
            .grad
            .as_ref()
            .ok_or(Error::MissingGradient("objective gradient"))?;
        grad(&state.x, &mut dir);
        if let Some(u) = &base.utility {
            let jac = u.jacobian.as_ref().ok_or(Error::MissingGradient("utility Jacobian"))?;
            let mut j = vec![0.0; ng * m];
            jac(&state.x, &mut j);
            for (k, &ls) in state.lambda_s.iter().enumerate() {
                for (d, &jk) in dir.iter_mut().zip(&j[k * m..(k + 1) * m]) {
                    *d += jk * ls;
                }
            }
        }
        for (d, &lr) in dir.iter_mut().zip(&state.lambda_r) {
            *d -= lr;
        }
    }

    // two probes under one fading draw
    let mut f0 = vec![0.0; m];
    let mut f1 = vec![0.0; m];
    base.probe_service(&state.theta, &draws.h, &mut f0)?;
    base.probe_service(&draws.u_r.shifted(&state.theta, mu_r), &draws.h, &mut f1)?;
    let coef_r: f64 = f0
        .iter()
        .zip(&f1)
        .zip(&state.lambda_r)
        .map(|((a, b), l)| l * (b - a) / mu_r)
        .sum();

    // primal updates
    let mut x_next: Vec<f64> = state
        .x
        .iter()
        .zip(&dir)
        .enumerate()
        .map(|(i, (x, d))| x + scale * pick(&steps.x, i) * d)
        .collect();
    base.x_set.project(&mut x_next);
    let theta_next: Vec<f64> = state
        .theta
        .iter()
        .zip(draws.u_r.values())
        .enumerate()
        .map(|(i, (t, u))| t + scale * pick(&steps.theta, i) * coef_r * u)
        .collect();

    // dual updates: one more probe, same H
    let lambda_s_next = match &base.utility {
        Some(u) => {
            let at = match &draws.u_s {
                Some(us) if mu_s > 0.0 => us.shifted(&x_next, mu_s),
                _ => x_next.clone(),
            };
            let g = u.eval(&at);
            state
                .lambda_s
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (l, gi))| (l - scale * pick(&steps.lambda_s, i) * gi).max(0.0))
                .collect()
        }
        None => Vec::new(),
    };
    let mut f2 = vec![0.0; m];
    base.probe_service(&draws.u_r.shifted(&theta_next, mu_r), &draws.h, &mut f2)?;
    let lambda_r_next: Vec<f64> = (0..m)
        .map(|i| {
            let grad = f2[i] - x_next[i] - slack[i];
            (state.lambda_r[i] - scale * pick(&steps.lambda_r, i) * grad).max(0.0)
        })
        .collect();

    let next = PdState {
        x: x_next,
        theta: theta_next,
        lambda_s: lambda_s_next,
        lambda_r: lambda_r_next,
        iter: n + 1,
    };
    if !next.is_finite() {
        return Err(Error::NumericalAbort {
            iter: n,
            detail: format!("non-finite iterate; previous state: {}", state.snapshot()),
        });
    }
    let record = IterRecord {
        iter: n,
        objective: objective_now,
        inst_utility: base.objective.eval(&f0),
        violation: (0..m).map(|i| state.x[i] + slack[i] - f0[i]).collect(),
        service: f0,
        lambda_s: next.lambda_s.clone(),
        lambda_r: next.lambda_r.clone(),
        probes: base.probe_count(),
    };
    Ok((next, record))
}

/// Everything needed to start a run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub init: PdState,
    pub steps: StepSizes,
    pub n_iters: u64,
    pub window: usize,
    /// Keep every record (`1`) or every k-th one.
    pub record_every: u64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub state: PdState,
}

/// A run that stopped early; `trace` holds everything up to the failure.
#[derive(Debug)]
pub struct RunAborted {
    pub error: Error,
    pub trace: RunTrace,
    pub state: PdState,
}

/// Runs `spec.n_iters` sequential iterations.
pub fn run(
    prob: &SurrogateProblem,
    spec: &RunSpec,
    noise: &mut NoiseStreams,
) -> std::result::Result<RunOutput, Box<RunAborted>> {
    let mut trace = RunTrace::new(prob.base.n_s(), prob.base.n_g(), spec.window);
    let mut state = spec.init.clone();
    let every = spec.record_every.max(1);
    for _ in 0..spec.n_iters {
        match step(&state, prob, &spec.steps, noise) {
            Ok((next, rec)) => {
                if rec.iter % every == 0 {
                    trace.push(rec);
                }
                state = next;
            }
            Err(error) => {
                let error = match error {
                    e @ Error::NumericalAbort { .. } => e,
                    other => Error::NumericalAbort {
                        iter: state.iter,
                        detail: other.to_string(),
                    },
                };
                return Err(Box::new(RunAborted { error, trace, state }));
            }
        }
    }
    Ok(RunOutput { trace, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::FadingSampler;
    use crate::policy::ClampPolicy;
    use crate::problem::{ErgodicProblem, FnService, Objective, Utility, XSet};
    use crate::smoothing::SmoothingConfig;
    use std::sync::Arc;

    /// `g0(x) = x`, `f(p, H) = p`, `phi(theta) = theta`, `x in [0, cap]`.
    fn linear_toy(cap: f64, smoothing: SmoothingConfig) -> SurrogateProblem {
        let base = ErgodicProblem::new(
            Objective::linear(vec![1.0]),
            Arc::new(FnService::new(1, 1, |p, _h, out| out[0] = p[0])),
            FadingSampler::Fixed(vec![1.0]),
            Arc::new(ClampPolicy::identity(1, 1)),
            XSet::new(vec![0.0], vec![cap]).unwrap(),
        )
        .unwrap();
        SurrogateProblem::new(base, smoothing).unwrap()
    }

    #[test]
    fn projections() {
        assert_eq!(project_box(&[0.5, 1.0], &[0.0, 0.0], &[1.0, 2.0]), vec![0.5, 1.0]);
        assert_eq!(project_box(&[-0.5, 3.0], &[0.0, 0.0], &[1.0, 2.0]), vec![0.0, 2.0]);
        let once = project_box(&[-4.0, 0.3, 9.0], &[-1.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert_eq!(project_box(&once, &[-1.0, 0.0, 0.0], &[1.0, 1.0, 1.0]), once);
        assert_eq!(positive_part(&[-1.0, 2.0]), vec![0.0, 2.0]);
    }

    /// Hand-executed iteration of the linear toy with `mu_S > 0`.
    #[test]
    fn hand_step_oracle() {
        let (mu_s, mu_r, c) = (0.1, 0.01, 0.5);
        let prob = linear_toy(20.0, SmoothingConfig::new(mu_s, mu_r, vec![c]).unwrap());
        let steps = StepSizes::constant(vec![0.001], vec![0.0008], vec![0.0], vec![0.008]).unwrap();
        let (us, ur) = (0.7, -1.3);
        let draws = Draws {
            u_s: Some(GaussianDraw::from_values(vec![us])),
            u_r: GaussianDraw::from_values(vec![ur]),
            h: vec![1.0],
        };
        let s0 = PdState::new(vec![0.0], vec![0.0], vec![], vec![1.0]);
        let (s1, rec) = step_with_draws(&s0, &prob, &steps, &draws).unwrap();

        // x: D0 = ((0 + mu_s us) - 0) / mu_s = us;  dir = us * us - 1
        let x1 = (0.0f64 + 0.001 * (us * us - 1.0)).clamp(0.0, 20.0);
        // theta: Df = ((0 + mu_r ur) - 0) / mu_r = ur;  theta1 = 0.0008 * ur * ur
        let th1 = 0.0008 * 1.0 * ur * ur;
        // lambda: probe at theta1 + mu_r ur, slack = c mu_r sqrt(1)
        let f2 = th1 + mu_r * ur;
        let lam1 = (1.0 - 0.008 * (f2 - x1 - c * mu_r)).max(0.0);
        assert!((s1.x[0] - x1).abs() < 1e-12, "{} vs {x1}", s1.x[0]);
        assert!((s1.theta[0] - th1).abs() < 1e-12);
        assert!((s1.lambda_r[0] - lam1).abs() < 1e-12);
        assert_eq!(s1.iter, 1);
        assert_eq!(rec.probes, 3);
        assert_eq!(rec.objective, 0.0);
        assert!((rec.violation[0] - (0.0 + c * mu_r - 0.0)).abs() < 1e-15);
    }

    #[test]
    fn hand_step_with_analytic_gradients() {
        // two metrics, one utility g(x) = 3 - x1 - x2 with Jacobian (-1, -1)
        let base = ErgodicProblem::new(
            Objective::linear(vec![0.25, 0.75]),
            Arc::new(FnService::new(2, 2, |p, h, out| {
                out[0] = h[0] * p[0];
                out[1] = p[1];
            })),
            FadingSampler::Fixed(vec![2.0]),
            Arc::new(ClampPolicy::identity(2, 1)),
            XSet::nonnegative(2),
        )
        .unwrap()
        .with_utility(
            Utility::new(1, |x, out| out[0] = 3.0 - x[0] - x[1])
                .with_jacobian(|_x, out| out.copy_from_slice(&[-1.0, -1.0])),
        );
        let prob = SurrogateProblem::new(base, SmoothingConfig::new(0.0, 1e-3, vec![0.0]).unwrap()).unwrap();
        let steps = StepSizes::constant(vec![0.1, 0.2], vec![0.05], vec![0.3], vec![0.4]).unwrap();
        let draws = Draws {
            u_s: None,
            u_r: GaussianDraw::from_values(vec![1.0, -2.0]),
            h: vec![2.0],
        };
        let s0 = PdState::new(vec![1.0, 0.5], vec![0.2, 0.4], vec![0.5], vec![1.0, 2.0]);
        let (s1, _) = step_with_draws(&s0, &prob, &steps, &draws).unwrap();

        let dir: [f64; 2] = [0.25 - 0.5 - 1.0, 0.75 - 0.5 - 2.0];
        let x1: [f64; 2] = [(1.0 + 0.1 * dir[0]).max(0.0), (0.5 + 0.2 * dir[1]).max(0.0)];
        // Df = (2 * 1, -2) ; <Df, lambda_r> = 2 - 4 = -2
        let coef = 1.0 * 2.0 * 1.0 + 2.0 * (-2.0);
        let th1 = [0.2 + 0.05 * coef * 1.0, 0.4 + 0.05 * coef * -2.0];
        let ls1 = (0.5f64 - 0.3 * (3.0 - x1[0] - x1[1])).max(0.0);
        let f2 = [2.0 * (th1[0] + 1e-3), th1[1] - 2e-3];
        let lr1 = [
            (1.0f64 - 0.4 * (f2[0] - x1[0])).max(0.0),
            (2.0f64 - 0.4 * (f2[1] - x1[1])).max(0.0),
        ];
        for i in 0..2 {
            assert!((s1.x[i] - x1[i]).abs() < 1e-12);
            assert!((s1.theta[i] - th1[i]).abs() < 1e-12);
            assert!((s1.lambda_r[i] - lr1[i]).abs() < 1e-12);
        }
        assert!((s1.lambda_s[0] - ls1).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_leave_state_unchanged() {
        let prob = linear_toy(5.0, SmoothingConfig::new(0.1, 0.1, vec![0.0]).unwrap());
        let mut noise = NoiseStreams::from_seeds(1, 2, 3);
        let s0 = PdState::new(vec![0.4], vec![0.3], vec![], vec![0.7]);
        let (s1, rec) = step(&s0, &prob, &StepSizes::zero(), &mut noise).unwrap();
        assert_eq!(s1.x, s0.x);
        assert_eq!(s1.theta, s0.theta);
        assert_eq!(s1.lambda_r, s0.lambda_r);
        assert_eq!(rec.probes, 3);
    }

    #[test]
    fn zero_multipliers_with_flat_objective() {
        let base = ErgodicProblem::new(
            Objective::new(|_| 2.0).with_grad(|_, out| out.fill(0.0)),
            Arc::new(FnService::new(1, 1, |p, _h, out| out[0] = p[0])),
            FadingSampler::Fixed(vec![1.0]),
            Arc::new(ClampPolicy::identity(1, 1)),
            XSet::nonnegative(1),
        )
        .unwrap();
        let prob = SurrogateProblem::new(base, SmoothingConfig::new(0.0, 0.01, vec![0.0]).unwrap()).unwrap();
        let steps = StepSizes::constant(vec![0.1], vec![0.1], vec![0.1], vec![0.1]).unwrap();
        let s0 = PdState::new(vec![1.0], vec![0.5], vec![], vec![0.0]);
        let (s1, _) = step(&s0, &prob, &steps, &mut NoiseStreams::from_seeds(4, 5, 6)).unwrap();
        assert_eq!(s1.x, s0.x);
        assert_eq!(s1.theta, s0.theta);
        // service 0.5 + mu_r u above x = 1? no: below, so lambda grows
        assert!(s1.lambda_r[0] > 0.0);
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let base = ErgodicProblem::new(
            Objective::new(|x| x[0]),
            Arc::new(FnService::new(1, 1, |p, _h, out| out[0] = p[0])),
            FadingSampler::Fixed(vec![1.0]),
            Arc::new(ClampPolicy::identity(1, 1)),
            XSet::nonnegative(1),
        )
        .unwrap();
        let prob = SurrogateProblem::new(base, SmoothingConfig::new(0.0, 0.01, vec![0.0]).unwrap()).unwrap();
        let s0 = PdState::new(vec![1.0], vec![0.5], vec![], vec![0.0]);
        let r = step(&s0, &prob, &StepSizes::zero(), &mut NoiseStreams::from_seeds(1, 1, 1));
        assert!(matches!(r, Err(Error::MissingGradient(_))));
    }

    #[test]
    fn zero_mu_r_is_rejected() {
        let prob = linear_toy(1.0, SmoothingConfig::exact(1));
        let s0 = PdState::new(vec![0.0], vec![0.0], vec![], vec![1.0]);
        let r = step(&s0, &prob, &StepSizes::zero(), &mut NoiseStreams::from_seeds(1, 1, 1));
        assert!(matches!(r, Err(Error::NonPositiveSmoothing)));
    }

    #[test]
    fn divergence_aborts_with_partial_trace() {
        let base = ErgodicProblem::new(
            Objective::linear(vec![1.0]),
            Arc::new(FnService::new(1, 1, |p, _h, out| out[0] = p[0].exp())),
            FadingSampler::Fixed(vec![1.0]),
            Arc::new(ClampPolicy::identity(1, 1)),
            XSet::nonnegative(1),
        )
        .unwrap();
        let prob = SurrogateProblem::new(base, SmoothingConfig::new(0.0, 1e-3, vec![0.0]).unwrap()).unwrap();
        let spec = RunSpec {
            init: PdState::new(vec![0.0], vec![0.0], vec![], vec![1.0]),
            steps: StepSizes::constant(vec![0.0], vec![50.0], vec![0.0], vec![0.0]).unwrap(),
            n_iters: 10_000,
            window: 10,
            record_every: 1,
        };
        let err = run(&prob, &spec, &mut NoiseStreams::from_seeds(1, 2, 3)).unwrap_err();
        assert!(matches!(err.error, Error::NumericalAbort { .. }));
        assert_eq!(err.trace.len() as u64, err.state.iter);
        assert!(err.state.iter < 10_000);
    }

    #[test]
    fn single_iteration_run_equals_step() {
        let prob = linear_toy(5.0, SmoothingConfig::new(0.0, 1e-4, vec![0.0]).unwrap());
        let init = PdState::new(vec![1.0], vec![0.0], vec![], vec![1.0]);
        let steps = StepSizes::constant(vec![0.001], vec![0.0008], vec![0.0], vec![0.008]).unwrap();
        let spec = RunSpec {
            init: init.clone(),
            steps: steps.clone(),
            n_iters: 1,
            window: 1,
            record_every: 1,
        };
        let out = run(&prob, &spec, &mut NoiseStreams::from_seeds(7, 8, 9)).unwrap();
        prob.base.reset_probes();
        let (s1, rec) = step(&init, &prob, &steps, &mut NoiseStreams::from_seeds(7, 8, 9)).unwrap();
        assert_eq!(out.state, s1);
        assert_eq!(out.trace.records, vec![rec]);
    }

    #[test]
    fn harmonic_schedule_decays() {
        let s = StepSizes {
            schedule: Schedule::Harmonic { tau: 10.0 },
            ..StepSizes::zero()
        };
        assert_eq!(s.scale(0), 1.0);
        assert_eq!(s.scale(10), 0.5);
        assert!(StepSizes::constant(vec![-1.0], vec![0.0], vec![0.0], vec![0.0]).is_err());
    }
}

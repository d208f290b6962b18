use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, ScheduleKind};
use super::figures::{emit_figure_data, Figure};
use super::seeds::{seed_everything, SubSeeds};
use crate::baselines::{clairvoyant_awgn, ergodic_eval, uniform_policy, wmmse_powers};
use crate::channels::{ChannelParams, ChannelService, FadingSampler, RateModel};
use crate::duality_diag::{
    check_sandwich, gap_sweep, tent_grids, AffineFixture, GapSweep, QuadraticFixture, SandwichDomain, SandwichReport,
    TentToy,
};
use crate::error::{Error, Result};
use crate::policy::{init_theta, ClampPolicy, DnnPolicy, Policy, Structure};
use crate::primal_dual::{run, NoiseStreams, PdState, RunSpec, Schedule, StepSizes};
use crate::problem::{ErgodicProblem, FnService, Objective, SurrogateProblem, XSet};
use crate::rng::Stream;
use crate::smoothing::{Estimate, SmoothingConfig};
use crate::trace::{tail_mean, RunTrace};

/// Share of final iterations used by the summary statistics.
pub const TAIL: f64 = 0.1;

/// A problem, its starting point and the channel it runs on.
#[derive(Debug)]
pub struct Built {
    pub prob: SurrogateProblem,
    pub spec: RunSpec,
    pub channel: Option<(RateModel, ChannelParams)>,
    pub policy: Arc<dyn Policy>,
    pub seeds: SubSeeds,
}

fn broadcast(v: &[f64], n: usize) -> Vec<f64> {
    if v.len() == 1 {
        vec![v[0]; n]
    } else {
        v.to_vec()
    }
}

/// Builds the learning problem for `awgn`, `mai` and `toy` configs.
pub fn build(cfg: &ExperimentConfig) -> Result<Built> {
    cfg.validate()?;
    let seeds = seed_everything(cfg.seed);
    let sm = &cfg.smoothing;
    let smoothing = SmoothingConfig::new(sm.mu_s, sm.mu_r, sm.slack_c.clone())?;
    let schedule = match cfg.steps.schedule {
        ScheduleKind::Constant => Schedule::Constant,
        ScheduleKind::Harmonic => Schedule::Harmonic { tau: cfg.steps.tau },
    };
    let (base, channel, policy, x0, lambda_r_steps) = match cfg.experiment {
        ExperimentKind::Awgn | ExperimentKind::Mai => {
            let s = &cfg.system;
            let n = s.n_users;
            let weights = match &s.weights {
                Some(w) => w.clone(),
                None => Stream::new(seeds.weights).simplex(n),
            };
            let params = ChannelParams::new(broadcast(&s.noise, n), s.p_max, weights)?;
            let model = if cfg.experiment == ExperimentKind::Awgn {
                RateModel::Awgn
            } else {
                RateModel::Mai
            };
            let policy: Arc<dyn Policy> = Arc::new(match cfg.policy.structure {
                Structure::PerUser => DnnPolicy::per_user(n, &cfg.policy.hidden, s.p_max)?,
                Structure::Joint => DnnPolicy::joint(n, &cfg.policy.hidden, s.p_max)?,
            });
            let mut w = params.weights.clone();
            w.push(0.0);
            let base = ErgodicProblem::new(
                Objective::linear(w),
                Arc::new(ChannelService {
                    model,
                    params: params.clone(),
                }),
                FadingSampler::Exponential {
                    rate: s.fading_rate,
                    dim: n,
                },
                policy.clone(),
                XSet::nonnegative_with_budget(n),
            )?;
            let mut x0 = vec![cfg.init.x; n];
            x0.push(0.0);
            let mut lr = broadcast(&cfg.steps.lambda_r, n);
            lr.push(cfg.steps.lambda_budget);
            (base, Some((model, params)), policy, x0, lr)
        }
        ExperimentKind::Toy => {
            let policy: Arc<dyn Policy> = Arc::new(ClampPolicy::new(vec![0.0], vec![1.0], 1));
            let base = ErgodicProblem::new(
                Objective::linear(vec![1.0]),
                Arc::new(FnService::new(1, 1, |p, h, out| out[0] = h[0] * p[0])),
                FadingSampler::Fixed(vec![1.0]),
                policy.clone(),
                XSet::nonnegative(1),
            )?;
            (base, None, policy, vec![cfg.init.x], cfg.steps.lambda_r[..1].to_vec())
        }
        ExperimentKind::Diag => return Err(Error::config("experiment", "diag runs have no learning problem")),
    };
    let prob = SurrogateProblem::new(base, smoothing)?;
    let n_s = prob.base.n_s();
    let theta0 = init_theta(prob.base.n_phi(), cfg.policy.init, &mut Stream::new(seeds.init));
    let steps = StepSizes {
        x: cfg.steps.x.clone(),
        theta: cfg.steps.theta.clone(),
        lambda_s: cfg.steps.lambda_s.clone(),
        lambda_r: lambda_r_steps,
        schedule,
    };
    steps.validate()?;
    let spec = RunSpec {
        init: PdState::new(x0, theta0, Vec::new(), vec![cfg.init.lambda; n_s]),
        steps,
        n_iters: cfg.n_iters,
        window: cfg.window,
        record_every: cfg.record_every,
    };
    Ok(Built {
        prob,
        spec,
        channel,
        policy,
        seeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub value: f64,
    pub se: f64,
}

impl From<Estimate> for Stat {
    fn from(e: Estimate) -> Self {
        Self {
            value: e.value,
            se: e.se,
        }
    }
}

/// Model-aware references, all evaluated on the same fading sample.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BaselineReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clairvoyant: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clairvoyant_power: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clairvoyant_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmmse: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmmse_unconverged: Option<usize>,
}

pub fn compute_baselines(cfg: &ExperimentConfig, built: &Built) -> Result<BaselineReport> {
    let Some((model, params)) = &built.channel else {
        return Ok(BaselineReport::default());
    };
    let b = &cfg.baselines;
    let fading = &built.prob.base.fading;
    let stream = || Stream::new(built.seeds.baseline_mc);
    let mut report = BaselineReport {
        uniform: Some(
            ergodic_eval(
                |_| uniform_policy(params),
                *model,
                params,
                fading,
                b.mc_samples,
                &mut stream(),
            )
            .sumrate
            .into(),
        ),
        ..Default::default()
    };
    match model {
        RateModel::Awgn => {
            let sol = clairvoyant_awgn(params, fading, b.mc_samples, b.tol, &mut stream())?;
            report.clairvoyant = Some(sol.estimate.sumrate.into());
            report.clairvoyant_power = Some(sol.estimate.power.into());
            report.clairvoyant_lambda = Some(sol.lambda_star);
        }
        RateModel::Mai => {
            let unconverged = std::cell::Cell::new(0usize);
            let e = ergodic_eval(
                |h| {
                    let r = wmmse_powers(h, params, b.wmmse_iters, b.wmmse_tol);
                    if !r.converged {
                        unconverged.set(unconverged.get() + 1);
                    }
                    r.powers
                },
                *model,
                params,
                fading,
                b.wmmse_samples,
                &mut stream(),
            );
            report.wmmse = Some(e.sumrate.into());
            report.wmmse_unconverged = Some(unconverged.get());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnedReport {
    /// Mean instantaneous utility over the final iterations.
    pub utility_tail: f64,
    /// Moving-average utility at the last iteration.
    pub utility_final: f64,
    /// Moving average of `g0(x)` at the last iteration.
    pub objective_final: f64,
    /// Mean ergodic violation per constraint over the final iterations.
    pub violation_tail: Vec<f64>,
    /// Frozen final policy evaluated on fresh fading.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_eval: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_power: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagSummary {
    pub sandwich_affine_ok: bool,
    pub sandwich_affine_worst: f64,
    pub sandwich_quadratic_ok: bool,
    pub sandwich_quadratic_worst: f64,
    pub gap_mus: Vec<f64>,
    pub gap_no_slack: Vec<f64>,
    pub gap_bracket_ok: bool,
    pub gap_r_squared: f64,
    pub gap_slope: f64,
    pub slack_c: f64,
    pub gap_with_slack: Vec<f64>,
    pub slack_gap_ok: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub n_iters: u64,
    pub completed: u64,
    pub probes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learned: Option<LearnedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag: Option<DiagSummary>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary is always representable")
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub trace: Option<RunTrace>,
    pub summary: Summary,
    /// Set when the run stopped early; the trace is partial.
    pub abort: Option<Error>,
    pub diag: Option<DiagOutcome>,
}

fn learned_report(trace: &RunTrace, built: &Built, theta: &[f64], cfg: &ExperimentConfig) -> Result<LearnedReport> {
    let erg = trace.ergodic_utility();
    let x_erg = crate::trace::ergodic_average(&trace.objective(), trace.window);
    let (policy_eval, policy_power) = match &built.channel {
        Some((model, params)) => {
            let policy = built.policy.clone();
            let e = ergodic_eval(
                |h| policy.forward(h, theta).unwrap_or_else(|_| vec![0.0; params.n_users()]),
                *model,
                params,
                &built.prob.base.fading,
                cfg.baselines.eval_samples,
                &mut Stream::new(built.seeds.baseline_mc),
            );
            (Some(e.sumrate.into()), Some(e.power.into()))
        }
        None => (None, None),
    };
    Ok(LearnedReport {
        utility_tail: tail_mean(&trace.inst_utility(), TAIL),
        utility_final: erg.last().copied().unwrap_or(f64::NAN),
        objective_final: x_erg.last().copied().unwrap_or(f64::NAN),
        violation_tail: (0..trace.n_s)
            .map(|i| tail_mean(&trace.ergodic_violation(i), TAIL))
            .collect(),
        policy_eval,
        policy_power,
    })
}

/// Runs one experiment and, when `out` is given, writes `trace.csv`,
/// `summary.toml`, `config.toml` and the figure files there.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    if cfg.experiment == ExperimentKind::Diag {
        return run_diag(cfg, out);
    }
    let built = build(cfg)?;
    let mut noise = NoiseStreams::from_seeds(built.seeds.gaussian_s, built.seeds.gaussian_r, built.seeds.fading);
    let (trace, state, abort) = match run(&built.prob, &built.spec, &mut noise) {
        Ok(o) => (o.trace, o.state, None),
        Err(a) => {
            let a = *a;
            (a.trace, a.state, Some(a.error))
        }
    };
    let learned = if trace.is_empty() {
        None
    } else {
        Some(learned_report(&trace, &built, &state.theta, cfg)?)
    };
    let baselines = if built.channel.is_some() {
        Some(compute_baselines(cfg, &built)?)
    } else {
        None
    };
    let summary = Summary {
        experiment: cfg.experiment,
        seed: cfg.seed,
        n_iters: cfg.n_iters,
        completed: state.iter,
        probes: built.prob.base.probe_count(),
        abort: abort.as_ref().map(|e| e.to_string()),
        weights: built
            .channel
            .as_ref()
            .map(|(_, p)| p.weights.clone())
            .unwrap_or_default(),
        learned,
        baselines,
        diag: None,
        config: cfg.clone(),
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trace.csv"), trace.to_csv())?;
        let has_budget = built.channel.is_some();
        for fig in Figure::ALL {
            if fig == Figure::PowerViolation && !has_budget {
                continue;
            }
            let csv = emit_figure_data(&trace, fig, has_budget, cfg.figure_every)?;
            fs::write(dir.join(format!("fig_{}.csv", fig.name())), csv)?;
        }
        write_summary(dir, &summary)?;
    }
    Ok(Outcome {
        trace: Some(trace),
        summary,
        abort,
        diag: None,
    })
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    fs::write(dir.join("summary.toml"), summary.to_toml())?;
    fs::write(dir.join("config.toml"), summary.config.to_toml())?;
    Ok(())
}

/// Baselines alone, without a learning run.
pub fn run_baselines(cfg: &ExperimentConfig) -> Result<BaselineReport> {
    match cfg.experiment {
        ExperimentKind::Awgn | ExperimentKind::Mai => compute_baselines(cfg, &build(cfg)?),
        _ => Err(Error::config("experiment", "baselines exist for awgn and mai only")),
    }
}

/// Runs `k` replicates with seeds `cfg.seed + i` on separate threads, each
/// writing to `out/seed-<seed>`.
pub fn run_replicates(cfg: &ExperimentConfig, k: usize, out: Option<&Path>) -> Vec<Result<Outcome>> {
    let jobs: Vec<(ExperimentConfig, Option<PathBuf>)> = (0..k as u64)
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i);
            let dir = out.map(|d| d.join(format!("seed-{}", c.seed)));
            (c, dir)
        })
        .collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(c, dir)| s.spawn(move || run_experiment(c, dir.as_deref())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replicate thread panicked"))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct DiagOutcome {
    pub affine: SandwichReport,
    pub quadratic: SandwichReport,
    pub no_slack: GapSweep,
    pub with_slack: GapSweep,
    pub slack_c: f64,
}

/// Closed-form fixtures used by the sandwich check.
pub fn diag_fixtures(seed: u64, mu_max: f64) -> (AffineFixture, QuadraticFixture) {
    let mut r = Stream::new(seed);
    let affine = AffineFixture::random(3, 2, 4, &mut r);
    let quad = QuadraticFixture::new(
        1.0,
        vec![0.2, -0.1, 0.0],
        0.5,
        vec![1.0, 2.0],
        vec![1.0, -2.0, 0.5],
        vec![0.0; 4],
        vec![0.5, 1.0, 0.0],
        1.0,
        mu_max,
    )
    .expect("consistent fixture");
    (affine, quad)
}

fn run_diag(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let d = &cfg.diag;
    let seeds = seed_everything(cfg.seed);
    let smoothing = SmoothingConfig::new(d.sandwich_mu_s, d.sandwich_mu_r, vec![cfg.smoothing.slack_c[0]])?;
    let (affine, quad) = diag_fixtures(seeds.init, d.sandwich_mu_s.max(d.sandwich_mu_r));
    let domain = SandwichDomain {
        x: (-1.0, 1.0),
        theta: (-1.0, 1.0),
        lambda_max: d.lambda_max,
    };
    let mut rng = Stream::new(seeds.gaussian_r);
    let affine_rep = check_sandwich(&affine, &smoothing, domain, d.sandwich_points, &mut rng);
    let quad_rep = check_sandwich(&quad, &smoothing, domain, d.sandwich_points, &mut rng);
    let (lg, inner) = tent_grids();
    let toy = TentToy::default();
    let no_slack = gap_sweep(&toy, &d.mus, 0.0, &lg, &inner, d.grid_tol, &mut rng)?;
    let with_slack = gap_sweep(&toy, &d.mus, d.slack_c, &lg, &inner, d.grid_tol, &mut rng)?;
    let warnings = no_slack
        .reports
        .iter()
        .chain(&with_slack.reports)
        .filter_map(|r| r.warning.clone())
        .chain(no_slack.plain.warning.clone())
        .collect();
    let diag = DiagSummary {
        sandwich_affine_ok: affine_rep.ok,
        sandwich_affine_worst: affine_rep.worst_margin,
        sandwich_quadratic_ok: quad_rep.ok,
        sandwich_quadratic_worst: quad_rep.worst_margin,
        gap_mus: d.mus.clone(),
        gap_no_slack: no_slack.reports.iter().map(|r| r.gap()).collect(),
        gap_bracket_ok: no_slack.reports.iter().chain(&with_slack.reports).all(|r| r.bracket_ok),
        gap_r_squared: no_slack.r_squared,
        gap_slope: no_slack.slope,
        slack_c: d.slack_c,
        gap_with_slack: with_slack.reports.iter().map(|r| r.gap()).collect(),
        slack_gap_ok: with_slack.reports.iter().all(|r| r.gap() <= r.grid_tol),
        warnings,
    };
    let summary = Summary {
        experiment: cfg.experiment,
        seed: cfg.seed,
        n_iters: 0,
        completed: 0,
        probes: 0,
        abort: None,
        weights: Vec::new(),
        learned: None,
        baselines: None,
        diag: Some(diag),
        config: cfg.clone(),
    };
    let outcome = DiagOutcome {
        affine: affine_rep,
        quadratic: quad_rep,
        no_slack,
        with_slack,
        slack_c: d.slack_c,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("diag_gaps.csv"), gaps_csv(&outcome))?;
        write_summary(dir, &summary)?;
    }
    Ok(Outcome {
        trace: None,
        summary,
        abort: None,
        diag: Some(outcome),
    })
}

/// One row per `(slack, mu)` of both gap sweeps.
pub fn gaps_csv(d: &DiagOutcome) -> String {
    let mut s = String::from("slack_c,mu,d_mu_star,d_star,gap,gamma_l,gamma_r,lambda_mu_star,bracket_ok\n");
    for (c, sweep) in [(0.0, &d.no_slack), (d.slack_c, &d.with_slack)] {
        for r in &sweep.reports {
            let lam = r.lambda_mu_star.1.first().copied().unwrap_or(f64::NAN);
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c,
                r.mu,
                r.d_mu_star,
                r.d_star,
                r.gap(),
                r.gamma_l,
                r.gamma_r,
                lam,
                r.bracket_ok
            ));
        }
    }
    s
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{InitScheme, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Power allocation over parallel AWGN channels.
    Awgn,
    /// Power allocation over a multiple-access interference channel.
    Mai,
    /// Scalar problem with known optimum 1.
    Toy,
    /// Duality diagnostics on closed-form fixtures.
    Diag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n_users: usize,
    pub p_max: f64,
    /// One entry per user, or a single entry for all.
    pub noise: Vec<f64>,
    /// Drawn uniformly on the simplex from the seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Rate of the exponential fading power.
    pub fading_rate: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_users: 10,
            p_max: 20.0,
            noise: vec![1.0],
            weights: None,
            fading_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub structure: Structure,
    pub hidden: Vec<usize>,
    pub init: InitScheme,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            structure: Structure::PerUser,
            hidden: vec![8, 4],
            init: InitScheme::Zeros,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda_s: Vec<f64>,
    /// Rate multipliers: one entry per user or a single entry.
    pub lambda_r: Vec<f64>,
    /// Power-budget multiplier.
    pub lambda_budget: f64,
    pub schedule: ScheduleKind,
    pub tau: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            x: vec![0.001],
            theta: vec![0.0008],
            lambda_s: vec![0.0],
            lambda_r: vec![0.008],
            lambda_budget: 0.0001,
            schedule: ScheduleKind::Constant,
            tau: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingSection {
    pub mu_s: f64,
    pub mu_r: f64,
    pub slack_c: Vec<f64>,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        Self {
            mu_s: 0.0,
            mu_r: 1e-9,
            slack_c: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub x: f64,
    pub lambda: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { x: 1.0, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub mc_samples: usize,
    pub tol: f64,
    pub wmmse_iters: usize,
    pub wmmse_tol: f64,
    pub wmmse_samples: usize,
    /// Fading draws used to evaluate the final learned policy.
    pub eval_samples: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            tol: 1e-6,
            wmmse_iters: 100,
            wmmse_tol: 1e-6,
            wmmse_samples: 20_000,
            eval_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagConfig {
    pub mus: Vec<f64>,
    /// Slack scale of the second gap sweep; the first uses zero slack.
    pub slack_c: f64,
    pub sandwich_points: usize,
    pub sandwich_mu_s: f64,
    pub sandwich_mu_r: f64,
    pub lambda_max: f64,
    pub grid_tol: f64,
}

impl Default for DiagConfig {
    fn default() -> Self {
        Self {
            mus: vec![0.1, 0.01, 0.001],
            slack_c: 1.0,
            sandwich_points: 1000,
            sandwich_mu_s: 0.1,
            sandwich_mu_r: 0.05,
            lambda_max: 3.0,
            grid_tol: 1e-3,
        }
    }
}

/// Everything that defines a run. Serializes to and from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iters")]
    pub n_iters: u64,
    /// Moving-average window of the ergodic columns.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_one")]
    pub record_every: u64,
    /// Row stride of the figure files.
    #[serde(default = "default_figure_every")]
    pub figure_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub steps: StepConfig,
    #[serde(default)]
    pub smoothing: SmoothingSection,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default)]
    pub diag: DiagConfig,
}

fn default_iters() -> u64 {
    100_000
}

fn default_window() -> usize {
    2000
}

fn default_one() -> u64 {
    1
}

fn default_figure_every() -> u64 {
    10
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, reason))
    }
}

fn nonneg(v: &[f64]) -> bool {
    v.iter().all(|x| *x >= 0.0 && x.is_finite())
}

impl ExperimentConfig {
    /// Reference setting for each experiment kind.
    pub fn reference(kind: ExperimentKind) -> Self {
        let mut c = Self {
            experiment: kind,
            seed: 0,
            n_iters: default_iters(),
            window: default_window(),
            record_every: 1,
            figure_every: default_figure_every(),
            output: None,
            system: SystemConfig::default(),
            policy: PolicyConfig::default(),
            steps: StepConfig::default(),
            smoothing: SmoothingSection::default(),
            init: InitConfig::default(),
            baselines: BaselineConfig::default(),
            diag: DiagConfig::default(),
        };
        match kind {
            ExperimentKind::Awgn | ExperimentKind::Diag => {}
            ExperimentKind::Mai => {
                c.n_iters = 300_000;
                c.system.n_users = 5;
                c.policy = PolicyConfig {
                    structure: Structure::Joint,
                    hidden: vec![32, 16],
                    init: InitScheme::Zeros,
                };
                c.steps.x = vec![0.0008];
                c.steps.theta = vec![0.0005];
                c.steps.lambda_r = vec![0.005];
                c.init.x = 0.0;
            }
            ExperimentKind::Toy => {
                c.system.n_users = 1;
                c.init.x = 0.0;
            }
        }
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("toml", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks ranges and lengths; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let n = s.n_users;
        check(self.n_iters >= 1, "n_iters", "must be at least 1")?;
        check(self.window >= 1, "window", "must be at least 1")?;
        check(self.record_every >= 1, "record_every", "must be at least 1")?;
        check(self.figure_every >= 1, "figure_every", "must be at least 1")?;
        check(n >= 1, "system.n_users", "must be at least 1")?;
        check(s.p_max > 0.0 && s.p_max.is_finite(), "system.p_max", "must be positive")?;
        check(
            s.noise.len() == 1 || s.noise.len() == n,
            "system.noise",
            "needs 1 or n_users entries",
        )?;
        check(
            s.noise.iter().all(|v| *v > 0.0 && v.is_finite()),
            "system.noise",
            "must be positive",
        )?;
        if let Some(w) = &s.weights {
            check(w.len() == n, "system.weights", "needs n_users entries")?;
            check(nonneg(w), "system.weights", "must be nonnegative")?;
            let sum: f64 = w.iter().sum();
            check((sum - 1.0).abs() <= 1e-12, "system.weights", "must sum to 1")?;
        }
        check(
            s.fading_rate > 0.0 && s.fading_rate.is_finite(),
            "system.fading_rate",
            "must be positive",
        )?;
        check(
            !self.policy.hidden.contains(&0),
            "policy.hidden",
            "layer widths must be positive",
        )?;

        let st = &self.steps;
        let n_s = match self.experiment {
            ExperimentKind::Toy => 1,
            _ => n + 1,
        };
        check(
            st.x.len() == 1 || st.x.len() == n_s,
            "steps.x",
            "needs 1 or N_S entries",
        )?;
        check(nonneg(&st.x), "steps.x", "must be finite and >= 0")?;
        check(
            nonneg(&st.theta) && !st.theta.is_empty(),
            "steps.theta",
            "must be non-empty, finite and >= 0",
        )?;
        check(
            nonneg(&st.lambda_s) && !st.lambda_s.is_empty(),
            "steps.lambda_s",
            "must be non-empty, finite and >= 0",
        )?;
        check(
            st.lambda_r.len() == 1 || st.lambda_r.len() == n,
            "steps.lambda_r",
            "needs 1 or n_users entries",
        )?;
        check(nonneg(&st.lambda_r), "steps.lambda_r", "must be finite and >= 0")?;
        check(
            st.lambda_budget >= 0.0 && st.lambda_budget.is_finite(),
            "steps.lambda_budget",
            "must be >= 0",
        )?;
        check(st.tau > 0.0 && st.tau.is_finite(), "steps.tau", "must be positive")?;

        let sm = &self.smoothing;
        check(
            sm.mu_s >= 0.0 && sm.mu_s.is_finite(),
            "smoothing.mu_s",
            "must be finite and >= 0",
        )?;
        check(
            sm.mu_r >= 0.0 && sm.mu_r.is_finite(),
            "smoothing.mu_r",
            "must be finite and >= 0",
        )?;
        if self.experiment != ExperimentKind::Diag {
            check(sm.mu_r > 0.0, "smoothing.mu_r", "must be positive for learning runs")?;
        }
        check(
            sm.slack_c.len() == 1 || sm.slack_c.len() == n_s,
            "smoothing.slack_c",
            "needs 1 or N_S entries",
        )?;
        check(nonneg(&sm.slack_c), "smoothing.slack_c", "must be finite and >= 0")?;

        check(
            self.init.x >= 0.0 && self.init.x.is_finite(),
            "init.x",
            "must be finite and >= 0",
        )?;
        check(
            self.init.lambda >= 0.0 && self.init.lambda.is_finite(),
            "init.lambda",
            "must be finite and >= 0",
        )?;

        let b = &self.baselines;
        check(b.mc_samples >= 1000, "baselines.mc_samples", "must be at least 1000")?;
        check(b.tol > 0.0, "baselines.tol", "must be positive")?;
        check(b.wmmse_iters >= 1, "baselines.wmmse_iters", "must be at least 1")?;
        check(b.wmmse_tol > 0.0, "baselines.wmmse_tol", "must be positive")?;
        check(b.wmmse_samples >= 1, "baselines.wmmse_samples", "must be at least 1")?;
        check(b.eval_samples >= 1, "baselines.eval_samples", "must be at least 1")?;

        let d = &self.diag;
        check(!d.mus.is_empty(), "diag.mus", "must be non-empty")?;
        check(
            d.mus.iter().all(|m| *m > 0.0 && m.is_finite()),
            "diag.mus",
            "must be positive",
        )?;
        check(
            d.slack_c >= 0.0 && d.slack_c.is_finite(),
            "diag.slack_c",
            "must be >= 0",
        )?;
        check(
            d.sandwich_mu_s >= 0.0 && d.sandwich_mu_r >= 0.0,
            "diag.sandwich_mu",
            "must be >= 0",
        )?;
        check(
            d.lambda_max > 0.0 && d.lambda_max.is_finite(),
            "diag.lambda_max",
            "must be positive",
        )?;
        check(d.grid_tol >= 0.0, "diag.grid_tol", "must be >= 0")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configs_validate_and_round_trip() {
        for kind in [
            ExperimentKind::Awgn,
            ExperimentKind::Mai,
            ExperimentKind::Toy,
            ExperimentKind::Diag,
        ] {
            let c = ExperimentConfig::reference(kind);
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"awgn\"\n").unwrap();
        assert_eq!(c, ExperimentConfig::reference(ExperimentKind::Awgn));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("experiment = \"awgn\"\n[system]\np_max = -1.0\n", "system.p_max"),
            (
                "experiment = \"awgn\"\n[system]\nn_users = 2\nweights = [0.2, 0.2]\n",
                "system.weights",
            ),
            ("experiment = \"mai\"\n[smoothing]\nmu_r = 0.0\n", "smoothing.mu_r"),
            ("experiment = \"awgn\"\nwindow = 0\n", "window"),
            (
                "experiment = \"awgn\"\n[steps]\nlambda_r = [0.1, 0.2]\n",
                "steps.lambda_r",
            ),
            ("experiment = \"awgn\"\nbogus = 1\n", "toml"),
            ("experiment = \"radar\"\n", "toml"),
        ];
        for (text, field) in cases {
            match ExperimentConfig::from_toml(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Objective, instantaneous and ergodic weighted sumrate.
    Sumrate,
    /// Ergodic violation of every rate constraint, with a zero line.
    RateViolation,
    /// Instantaneous and ergodic budget violation, with a zero line.
    PowerViolation,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Sumrate, Figure::RateViolation, Figure::PowerViolation];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Sumrate => "sumrate",
            Figure::RateViolation => "rate_violation",
            Figure::PowerViolation => "power_violation",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownSeries(s.to_string()))
    }
}

/// Long-format CSV `iter,series,value`, keeping every `every`-th record.
/// `has_budget` marks the last constraint as the power budget.
pub fn emit_figure_data(trace: &RunTrace, which: Figure, has_budget: bool, every: u64) -> Result<String> {
    let n_rates = if has_budget {
        trace.n_s.saturating_sub(1)
    } else {
        trace.n_s
    };
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    match which {
        Figure::Sumrate => {
            series.push(("objective".into(), trace.objective()));
            series.push(("instantaneous".into(), trace.inst_utility()));
            series.push(("ergodic".into(), trace.ergodic_utility()));
        }
        Figure::RateViolation => {
            for i in 0..n_rates {
                series.push((format!("rate_{}", i + 1), trace.ergodic_violation(i)));
            }
            series.push(("zero".into(), vec![0.0; trace.len()]));
        }
        Figure::PowerViolation => {
            if !has_budget {
                return Err(Error::UnknownSeries("power_violation".into()));
            }
            let b = trace.n_s - 1;
            series.push(("instantaneous".into(), trace.violation(b)));
            series.push(("ergodic".into(), trace.ergodic_violation(b)));
            series.push(("zero".into(), vec![0.0; trace.len()]));
        }
    }
    let every = every.max(1);
    let mut out = String::from("iter,series,value\n");
    for (k, rec) in trace.records.iter().enumerate() {
        if rec.iter % every != 0 && k + 1 != trace.len() {
            continue;
        }
        for (name, v) in &series {
            let _ = writeln!(out, "{},{},{}", rec.iter, name, v[k]);
        }
    }
    Ok(out)
}

//! Per-iteration records of a primal-dual run and their CSV form.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One iteration of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: u64,
    /// `g0(x^n)`.
    pub objective: f64,
    /// `g0` applied to the service vector probed at `theta^n`; for the
    /// wireless problems this is the instantaneous weighted sumrate.
    pub inst_utility: f64,
    /// `f(phi(H^{n+1}, theta^n), H^{n+1})`.
    pub service: Vec<f64>,
    /// `x^n + S - service`; positive entries are violations.
    pub violation: Vec<f64>,
    /// Multipliers after the update.
    pub lambda_s: Vec<f64>,
    pub lambda_r: Vec<f64>,
    /// Cumulative service probes.
    pub probes: u64,
}

/// Trailing moving average. Entries before a full window average the
/// available prefix.
pub fn ergodic_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    if window == 1 {
        return series.to_vec();
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &v) in series.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= series[i - window];
        }
        // resynchronize once per window to stop drift from the subtraction
        if i >= window && i % window == 0 {
            sum = series[i + 1 - window..=i].iter().sum();
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Mean of the final `fraction` of a series.
pub fn tail_mean(series: &[f64], fraction: f64) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let k = ((series.len() as f64 * fraction).ceil() as usize).clamp(1, series.len());
    series[series.len() - k..].iter().sum::<f64>() / k as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub n_s: usize,
    pub n_g: usize,
    pub window: usize,
    pub records: Vec<IterRecord>,
}

impl RunTrace {
    pub fn new(n_s: usize, n_g: usize, window: usize) -> Self {
        Self {
            n_s,
            n_g,
            window: window.max(1),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: IterRecord) {
        self.records.push(r);
    }

    pub fn objective(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn inst_utility(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.inst_utility).collect()
    }

    pub fn ergodic_utility(&self) -> Vec<f64> {
        ergodic_average(&self.inst_utility(), self.window)
    }

    pub fn violation(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.violation[i]).collect()
    }

    pub fn ergodic_violation(&self, i: usize) -> Vec<f64> {
        ergodic_average(&self.violation(i), self.window)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["iter", "objective", "inst_sumrate", "erg_sumrate"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((1..=self.n_s).map(|i| format!("viol_inst_{i}")));
        h.extend((1..=self.n_s).map(|i| format!("viol_erg_{i}")));
        h.extend((1..=self.n_g).map(|i| format!("lambda_s_{i}")));
        h.extend((1..=self.n_s).map(|i| format!("lambda_r_{i}")));
        h.push("probes".into());
        h
    }

    /// CSV with a header row, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut s = self.header().join(",");
        s.push('\n');
        let erg = self.ergodic_utility();
        let erg_v: Vec<Vec<f64>> = (0..self.n_s).map(|i| self.ergodic_violation(i)).collect();
        for (k, r) in self.records.iter().enumerate() {
            let _ = write!(s, "{},{},{},{}", r.iter, r.objective, r.inst_utility, erg[k]);
            for v in &r.violation {
                let _ = write!(s, ",{v}");
            }
            for col in &erg_v {
                let _ = write!(s, ",{}", col[k]);
            }
            for v in r.lambda_s.iter().chain(&r.lambda_r) {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{}", r.probes);
        }
        s
    }

    /// Parses the output of [`RunTrace::to_csv`]. Ergodic columns are
    /// recomputed from the raw ones; `window` is taken from the caller.
    pub fn from_csv(text: &str, window: usize) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::TraceParse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        let count = |prefix: &str| cols.iter().filter(|c| c.starts_with(prefix)).count();
        let n_s = count("viol_inst_");
        let n_g = count("lambda_s_");
        let mut trace = RunTrace::new(n_s, n_g, window);
        if cols != trace.header().iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::TraceParse {
                line: 1,
                reason: "unexpected header".into(),
            });
        }
        let width = cols.len();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let bad = |reason: String| Error::TraceParse { line: lineno, reason };
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(bad(format!("expected {width} fields, got {}", fields.len())));
            }
            let iter: u64 = fields[0].parse().map_err(|e| bad(format!("iter: {e}")))?;
            let probes: u64 = fields[width - 1].parse().map_err(|e| bad(format!("probes: {e}")))?;
            let nums = fields[1..width - 1]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| bad(e.to_string()))?;
            if let Some(prev) = trace.records.last() {
                if iter <= prev.iter {
                    return Err(bad("iteration index not increasing".into()));
                }
            }
            let objective = nums[0];
            let inst_utility = nums[1];
            let mut off = 3;
            let violation = nums[off..off + n_s].to_vec();
            off += 2 * n_s;
            let lambda_s = nums[off..off + n_g].to_vec();
            off += n_g;
            let lambda_r = nums[off..off + n_s].to_vec();
            trace.push(IterRecord {
                iter,
                objective,
                inst_utility,
                service: Vec::new(),
                violation,
                lambda_s,
                lambda_r,
                probes,
            });
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_examples() {
        assert_eq!(ergodic_average(&[0.0, 1.0, 0.0, 1.0], 2), vec![0.0, 0.5, 0.5, 0.5]);
        let s = [0.3, -1.7, 2.9, 0.1];
        assert_eq!(ergodic_average(&s, 1), s.to_vec());
        assert_eq!(ergodic_average(&[4.0; 50], 7), vec![4.0; 50]);
        // window longer than the series: prefix averages
        assert_eq!(ergodic_average(&[1.0, 3.0, 5.0], 10), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn moving_average_matches_direct_window_sums() {
        let s: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let w = 13;
        let m = ergodic_average(&s, w);
        for i in 0..s.len() {
            let lo = (i + 1).saturating_sub(w);
            let direct = s[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64;
            assert!((m[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_mean_uses_final_fraction() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(tail_mean(&s, 0.1), 10.0);
        assert_eq!(tail_mean(&s, 0.2), 9.5);
        assert_eq!(tail_mean(&s, 1.0), 5.5);
    }

    fn sample_trace() -> RunTrace {
        let mut t = RunTrace::new(2, 1, 2);
        for i in 0..4u64 {
            let f = i as f64;
            t.push(IterRecord {
                iter: i,
                objective: 0.5 * f,
                inst_utility: f.sin(),
                service: vec![],
                violation: vec![f - 1.0, 0.25],
                lambda_s: vec![1.0 / (1.0 + f)],
                lambda_r: vec![1.0, 0.1 * f],
                probes: 3 * (i + 1),
            });
        }
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample_trace();
        let csv = t.to_csv();
        assert!(csv.starts_with(
            "iter,objective,inst_sumrate,erg_sumrate,viol_inst_1,viol_inst_2,viol_erg_1,viol_erg_2,lambda_s_1,lambda_r_1,lambda_r_2,probes\n"
        ));
        assert!(!csv.contains('\r'));
        let back = RunTrace::from_csv(&csv, 2).unwrap();
        assert_eq!(back.records.len(), 4);
        for (a, b) in back.records.iter().zip(&t.records) {
            assert_eq!(a.objective, b.objective);
            assert_eq!(a.violation, b.violation);
            assert_eq!(a.lambda_r, b.lambda_r);
            assert_eq!(a.probes, b.probes);
        }
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(RunTrace::from_csv("", 1).is_err());
        assert!(RunTrace::from_csv("iter,foo\n", 1).is_err());
        let mut csv = sample_trace().to_csv();
        csv.push_str("9,1,2\n");
        assert!(RunTrace::from_csv(&csv, 1).is_err());
        let dup = sample_trace().to_csv().replace("\n3,", "\n2,");
        assert!(RunTrace::from_csv(&dup, 1).is_err());
    }
}

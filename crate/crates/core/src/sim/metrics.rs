//! Tracking-quality summaries computed from a simulation log.

use serde::{Deserialize, Serialize};

use super::log::{SimLog, SimRecord};

/// Error threshold used for the settling-time column (m / rad).
pub const SETTLING_TOLERANCE: f64 = 0.02;

/// Metrics over one window of the log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWindow {
    /// Per-axis root-mean-square tracking error.
    pub rmse: [f64; 4],
    /// Per-axis integral of absolute error.
    pub iae: [f64; 4],
    /// Per-axis peak absolute error.
    pub max_abs_error: [f64; 4],
    /// Per-axis control effort, sum of |tau_bar| * Ts.
    pub effort: [f64; 4],
    /// Per-axis chattering index, sum of |delta tau_bar|.
    pub chattering: [f64; 4],
    /// RMS of the x/y/z position error norm.
    pub position_rmse: f64,
    /// RMS of the full 4-axis error norm.
    pub aggregate_rmse: f64,
    pub iae_total: f64,
    pub effort_total: f64,
    pub chattering_total: f64,
    /// Peak infinity-norm of the TDE error over steps with an active
    /// estimator; absent when the estimator never ran in the window.
    pub tde_error_sup: Option<f64>,
}

impl MetricWindow {
    fn from_records(records: &[SimRecord], ts: f64) -> Self {
        let n = records.len().max(1) as f64;
        let mut rmse = [0.0f64; 4];
        let mut iae = [0.0f64; 4];
        let mut max_abs_error = [0.0f64; 4];
        let mut effort = [0.0f64; 4];
        let mut chattering = [0.0f64; 4];
        let mut position_sq = 0.0;
        let mut aggregate_sq = 0.0;
        let mut tde_error_sup: Option<f64> = None;

        for (k, r) in records.iter().enumerate() {
            for i in 0..4 {
                let e = r.error[i];
                rmse[i] += e * e;
                iae[i] += e.abs() * ts;
                max_abs_error[i] = max_abs_error[i].max(e.abs());
                effort[i] += r.tau_bar[i].abs() * ts;
                if k > 0 {
                    chattering[i] += (r.tau_bar[i] - records[k - 1].tau_bar[i]).abs();
                }
            }
            position_sq += r.error.fixed_rows::<3>(0).norm_squared();
            aggregate_sq += r.error.norm_squared();
            if r.tde_active {
                let sup = r.tde_error.amax();
                tde_error_sup = Some(tde_error_sup.map_or(sup, |cur: f64| cur.max(sup)));
            }
        }
        for value in &mut rmse {
            *value = (*value / n).sqrt();
        }
        Self {
            rmse,
            iae,
            max_abs_error,
            effort,
            chattering,
            position_rmse: (position_sq / n).sqrt(),
            aggregate_rmse: (aggregate_sq / n).sqrt(),
            iae_total: iae.iter().sum(),
            effort_total: effort.iter().sum(),
            chattering_total: chattering.iter().sum(),
            tde_error_sup,
        }
    }

    /// Flat (name, value) view used by reports and comparisons. The TDE
    /// error supremum is omitted when the estimator never ran.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let axes = ["x", "y", "z", "psi"];
        let mut out = Vec::new();
        for (name, values) in [
            ("rmse", &self.rmse),
            ("iae", &self.iae),
            ("max_abs_error", &self.max_abs_error),
            ("effort", &self.effort),
            ("chattering", &self.chattering),
        ] {
            for (axis, value) in axes.iter().zip(values.iter()) {
                out.push((format!("{name}.{axis}"), *value));
            }
        }
        out.push(("position_rmse".to_string(), self.position_rmse));
        out.push(("aggregate_rmse".to_string(), self.aggregate_rmse));
        out.push(("iae_total".to_string(), self.iae_total));
        out.push(("effort_total".to_string(), self.effort_total));
        out.push(("chattering_total".to_string(), self.chattering_total));
        if let Some(sup) = self.tde_error_sup {
            out.push(("tde_error_sup".to_string(), sup));
        }
        out
    }
}

/// Metrics over the full run and over its final half, plus run-level
/// summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub full: MetricWindow,
    pub final_half: MetricWindow,
    /// First time after which every axis error stays within
    /// [`SETTLING_TOLERANCE`]; absent when the run never settles.
    pub settling_time: Option<f64>,
    pub stable: bool,
    pub steps: usize,
}

/// Compute metrics on the uniform grid; the final-50% window is the
/// second half of the samples.
pub fn compute_metrics(log: &SimLog) -> Metrics {
    let records = &log.records;
    let half = records.len() / 2;
    let settling_time = records
        .iter()
        .rev()
        .take_while(|r| r.error.amax() <= SETTLING_TOLERANCE)
        .last()
        .map(|r| r.t);
    Metrics {
        full: MetricWindow::from_records(records, log.ts),
        final_half: MetricWindow::from_records(&records[half..], log.ts),
        settling_time,
        stable: log.is_stable(),
        steps: records.len(),
    }
}

impl Metrics {
    /// Flat key-value text report.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("stable = {}\n", self.stable));
        out.push_str(&format!("steps = {}\n", self.steps));
        match self.settling_time {
            Some(t) => out.push_str(&format!("settling_time = {t}\n")),
            None => out.push_str("settling_time = none\n"),
        }
        for (window, values) in [
            ("full", self.full.named_values()),
            ("final50", self.final_half.named_values()),
        ] {
            for (name, value) in values {
                out.push_str(&format!("{window}.{name} = {value}\n"));
            }
        }
        out
    }
}

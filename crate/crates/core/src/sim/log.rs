//! Per-step simulation records and their CSV serialization.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::Vec4;

/// Why a run stopped before its configured duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortReason {
    /// Velocity norm exceeded the divergence guard.
    Divergence,
    /// The integrator produced a non-finite state.
    NonFinite,
}

/// Diagnostic attached to an unstable run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub step: usize,
    pub t: f64,
    pub reason: AbortReason,
}

/// One step of the closed-loop log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub eta: Vec4,
    pub eta_dot: Vec4,
    pub eta_desired: Vec4,
    pub error: Vec4,
    pub error_integral: Vec4,
    pub sigma: Vec4,
    pub tau_bar: Vec4,
    pub tau_body: Vec4,
    pub p_tilde: Vec4,
    pub tde_error: Vec4,
    pub mbar: Vec4,
    pub lemma_norm: f64,
    pub disturbance: Vec4,
    pub tde_active: bool,
}

/// Full run log on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub ts: f64,
    pub records: Vec<SimRecord>,
    pub abort: Option<AbortInfo>,
}

/// Fixed CSV column order; the file format contract.
pub const CSV_COLUMNS: [&str; 42] = [
    "t",
    "eta_x",
    "eta_y",
    "eta_z",
    "eta_psi",
    "etad_x",
    "etad_y",
    "etad_z",
    "etad_psi",
    "e_x",
    "e_y",
    "e_z",
    "e_psi",
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "sigma_psi",
    "taubar_x",
    "taubar_y",
    "taubar_z",
    "taubar_psi",
    "tau_x",
    "tau_y",
    "tau_z",
    "tau_psi",
    "ptilde_x",
    "ptilde_y",
    "ptilde_z",
    "ptilde_psi",
    "eps_x",
    "eps_y",
    "eps_z",
    "eps_psi",
    "mbar_x",
    "mbar_y",
    "mbar_z",
    "mbar_psi",
    "lemma_norm",
    "d_x",
    "d_y",
    "d_z",
    "d_psi",
];

impl SimLog {
    pub fn is_stable(&self) -> bool {
        self.abort.is_none()
    }

    pub fn duration(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// Serialize the log with the fixed column order and full float
    /// precision (shortest round-trip representation).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}", r.t);
            for group in [
                &r.eta,
                &r.eta_desired,
                &r.error,
                &r.sigma,
                &r.tau_bar,
                &r.tau_body,
                &r.p_tilde,
                &r.tde_error,
                &r.mbar,
            ] {
                for i in 0..4 {
                    let _ = write!(out, ",{}", group[i]);
                }
            }
            let _ = write!(out, ",{}", r.lemma_norm);
            for i in 0..4 {
                let _ = write!(out, ",{}", r.disturbance[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(self.to_csv().as_bytes())
    }
}

//! Fixed-step closed-loop simulation of the vehicle under one of the
//! tracking controllers.
//!
//! Control and disturbance are held constant over each RK4 step
//! (zero-order hold at the controller rate), which matches the
//! discrete-time structure of the time-delay estimator where the delay is
//! a whole number of steps.

mod disturbance;
mod log;
mod metrics;
mod trajectory;

pub use disturbance::{disturbance_at, AxisDisturbance, DisturbanceSpec, DisturbanceTerm};
pub use log::{AbortInfo, AbortReason, SimLog, SimRecord, CSV_COLUMNS};
pub use metrics::{compute_metrics, MetricWindow, Metrics, SETTLING_TOLERANCE};
pub use trajectory::{
    case1_trajectory, case2_trajectory, reference_at, AxisTrajectory, SinusoidTerm, TrajectorySpec,
    Waveform,
};

use serde::{Deserialize, Serialize};

use crate::control::{
    lemma_condition, Controller, ControllerKind, ControllerOptions, Gains, TdeConfig,
};
use crate::model::{
    apply_uncertainty, earth_frame_matrices, state_derivative, AuvParams, Pose, UncertaintySpec,
};
use crate::Vec4;

/// Velocity-norm bound beyond which a run is flagged unstable and aborted.
pub const DIVERGENCE_GUARD: f64 = 1e3;

/// Everything needed to run one closed-loop simulation deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Simulated time span (s).
    pub duration: f64,
    /// Controller and integration period (s).
    pub ts: f64,
    pub initial_pose: Pose,
    pub initial_velocity: Vec4,
    /// Nominal plant parameters, as seen by the controller.
    pub params: AuvParams,
    pub trajectory: TrajectorySpec,
    pub disturbance: DisturbanceSpec,
    /// Mismatch between the nominal model and the simulated plant.
    pub uncertainty: UncertaintySpec,
    pub controller: ControllerKind,
    pub gains: Gains,
    pub tde: TdeConfig,
    pub options: ControllerOptions,
    pub seed: u64,
}

impl Scenario {
    /// Number of integration steps; the log holds `step_count() + 1`
    /// records on the exact grid `t_k = k * Ts`.
    pub fn step_count(&self) -> usize {
        ((self.duration / self.ts) + 1e-9).floor() as usize
    }

    /// Estimator delay time `L = n * Ts`.
    pub fn delay_time(&self) -> f64 {
        self.tde.delay_time(self.ts)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !crate::finite_positive(self.duration) {
            v.push(format!("sim: duration = {} must be > 0", self.duration));
        }
        if !crate::finite_positive(self.ts) {
            v.push(format!(
                "sim: ts = {} must be a positive time step",
                self.ts
            ));
        }
        if !self.initial_pose.to_vector().iter().all(|x| x.is_finite()) {
            v.push("sim: initial pose must be finite".to_string());
        }
        if !self.initial_velocity.iter().all(|x| x.is_finite()) {
            v.push("sim: initial velocity must be finite".to_string());
        }
        v.extend(self.params.validate());
        v.extend(self.gains.validate());
        v.extend(self.tde.validate());
        v.extend(self.options.validate());
        v.extend(self.uncertainty.validate());
        v
    }
}

/// Errors surfaced by the scenario runner.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    InvalidScenario(Vec<String>),
    #[error("scenarios cannot be compared:\n  {}", .0.join("\n  "))]
    MismatchedScenarios(Vec<String>),
}

/// Plant state: pose and earth-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub eta: Vec4,
    pub eta_dot: Vec4,
}

impl PlantState {
    fn advanced(&self, derivative: &PlantState, dt: f64) -> Self {
        Self {
            eta: self.eta + dt * derivative.eta,
            eta_dot: self.eta_dot + dt * derivative.eta_dot,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.eta
            .iter()
            .chain(self.eta_dot.iter())
            .all(|x| x.is_finite())
    }
}

/// Classical fourth-order Runge-Kutta step with the input held constant
/// over the step (the derivative closure captures it).
pub fn rk4_step<F>(derivative: F, state: &PlantState, ts: f64) -> PlantState
where
    F: Fn(&PlantState) -> PlantState,
{
    let k1 = derivative(state);
    let k2 = derivative(&state.advanced(&k1, 0.5 * ts));
    let k3 = derivative(&state.advanced(&k2, 0.5 * ts));
    let k4 = derivative(&state.advanced(&k3, ts));
    PlantState {
        eta: state.eta + ts / 6.0 * (k1.eta + 2.0 * k2.eta + 2.0 * k3.eta + k4.eta),
        eta_dot: state.eta_dot
            + ts / 6.0 * (k1.eta_dot + 2.0 * k2.eta_dot + 2.0 * k3.eta_dot + k4.eta_dot),
    }
}

/// Run one scenario to completion (or early abort) and return the log.
///
/// The plant integrates the uncertainty-perturbed "true" parameters while
/// the controller keeps working with the nominal ones. The logged
/// stability-monitor norm and estimation-error diagnostic are computed
/// against the true plant.
pub fn run_scenario(scenario: &Scenario) -> Result<SimLog, SimError> {
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(SimError::InvalidScenario(violations));
    }
    let true_params = apply_uncertainty(&scenario.params, &scenario.uncertainty)
        .expect("uncertainty validated above");
    let mut controller = Controller::new(
        scenario.controller,
        scenario.gains,
        scenario.tde,
        scenario.options,
        scenario.params,
        scenario.ts,
    );

    let steps = scenario.step_count();
    let mut records = Vec::with_capacity(steps + 1);
    let mut abort = None;
    let mut state = PlantState {
        eta: scenario.initial_pose.to_vector(),
        eta_dot: scenario.initial_velocity,
    };

    for k in 0..=steps {
        let t = k as f64 * scenario.ts;
        let reference = reference_at(&scenario.trajectory, t);
        let ctl = controller.step(&state.eta, &state.eta_dot, &reference);
        let d = disturbance_at(&scenario.disturbance, scenario.seed, t);

        // True plant response to the applied input, for diagnostics.
        let (_, accel_true) =
            state_derivative(&true_params, &state.eta, &state.eta_dot, &ctl.tau_bar, &d);
        let tde_error = if ctl.tde_active {
            let p_true = ctl.tau_bar.vec - ctl.nominal_force - ctl.mbar.component_mul(&accel_true);
            p_true - ctl.p_tilde
        } else {
            Vec4::zeros()
        };
        controller.state.last_tde_error = tde_error;
        let m_true = earth_frame_matrices(&true_params, &state.eta, &state.eta_dot).m;
        let (lemma_norm, _) = lemma_condition(&m_true, &ctl.mbar);

        records.push(SimRecord {
            t,
            eta: state.eta,
            eta_dot: state.eta_dot,
            eta_desired: reference.pose,
            error: ctl.error,
            error_integral: ctl.error_integral,
            sigma: ctl.sigma,
            tau_bar: ctl.tau_bar.vec,
            tau_body: ctl.tau_bar.to_body(state.eta[3]).vec,
            p_tilde: ctl.p_tilde,
            tde_error,
            mbar: ctl.mbar,
            lemma_norm,
            disturbance: d,
            tde_active: ctl.tde_active,
        });

        if k == steps {
            break;
        }
        state = rk4_step(
            |s| {
                let (eta_dot, eta_ddot) =
                    state_derivative(&true_params, &s.eta, &s.eta_dot, &ctl.tau_bar, &d);
                PlantState {
                    eta: eta_dot,
                    eta_dot: eta_ddot,
                }
            },
            &state,
            scenario.ts,
        );

        if !state.is_finite() {
            abort = Some(AbortInfo {
                step: k + 1,
                t: (k + 1) as f64 * scenario.ts,
                reason: AbortReason::NonFinite,
            });
            break;
        }
        if state.eta_dot.norm() > DIVERGENCE_GUARD {
            abort = Some(AbortInfo {
                step: k + 1,
                t: (k + 1) as f64 * scenario.ts,
                reason: AbortReason::Divergence,
            });
            break;
        }
    }

    Ok(SimLog {
        ts: scenario.ts,
        records,
        abort,
    })
}

/// Result of running two scenarios against identical references and
/// disturbance realizations.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub metrics_a: Metrics,
    pub metrics_b: Metrics,
    pub log_a: SimLog,
    pub log_b: SimLog,
}

impl Comparison {
    /// `(name, a, b, (b - a) / |a|)` rows over both metric windows.
    pub fn deltas(&self) -> Vec<(String, f64, f64, f64)> {
        let mut rows = Vec::new();
        for (window, a, b) in [
            ("full", &self.metrics_a.full, &self.metrics_b.full),
            (
                "final50",
                &self.metrics_a.final_half,
                &self.metrics_b.final_half,
            ),
        ] {
            let b_values: std::collections::HashMap<_, _> = b.named_values().into_iter().collect();
            for (name, va) in a.named_values() {
                let Some(&vb) = b_values.get(&name) else {
                    continue;
                };
                let rel = if va == vb {
                    0.0
                } else if va == 0.0 {
                    f64::INFINITY * (vb - va).signum()
                } else {
                    (vb - va) / va.abs()
                };
                rows.push((format!("{window}.{name}"), va, vb, rel));
            }
        }
        rows
    }
}

/// Run two scenarios side by side. Both must share duration, step,
/// trajectory, and disturbance realization (spec and seed).
pub fn compare(a: &Scenario, b: &Scenario) -> Result<Comparison, SimError> {
    let mut mismatches = Vec::new();
    if a.duration != b.duration {
        mismatches.push(format!(
            "duration differs: {} vs {}",
            a.duration, b.duration
        ));
    }
    if a.ts != b.ts {
        mismatches.push(format!("ts differs: {} vs {}", a.ts, b.ts));
    }
    if a.trajectory != b.trajectory {
        mismatches.push("trajectory differs".to_string());
    }
    if a.disturbance != b.disturbance {
        mismatches.push("disturbance differs".to_string());
    }
    if a.seed != b.seed {
        mismatches.push(format!("seed differs: {} vs {}", a.seed, b.seed));
    }
    if !mismatches.is_empty() {
        return Err(SimError::MismatchedScenarios(mismatches));
    }

    let (log_a, log_b) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| run_scenario(a));
        let log_b = run_scenario(b);
        (handle.join().expect("scenario thread panicked"), log_b)
    });
    let (log_a, log_b) = (log_a?, log_b?);
    Ok(Comparison {
        metrics_a: compute_metrics(&log_a),
        metrics_b: compute_metrics(&log_b),
        log_a,
        log_b,
    })
}

/// Built-in scenario `case1`: sinusoidal reference suite, delay equal to
/// the 7 ms step, fixed surrogate inertia.
pub fn case1_scenario() -> Scenario {
    Scenario {
        duration: 300.0,
        ts: 7e-3,
        initial_pose: Pose::new(0.0, 1.0, 2.0, std::f64::consts::FRAC_PI_4),
        initial_velocity: Vec4::zeros(),
        params: AuvParams::default(),
        trajectory: case1_trajectory(),
        disturbance: DisturbanceSpec::default(),
        uncertainty: UncertaintySpec::default(),
        controller: ControllerKind::BsIsmcTde,
        gains: Gains::default(),
        tde: TdeConfig::default(),
        options: ControllerOptions::default(),
        seed: 42,
    }
}

/// Built-in scenario `case2`: ramp depth/heading references, 2 ms step,
/// adaptive surrogate inertia started from deliberately small values.
pub fn case2_scenario() -> Scenario {
    Scenario {
        duration: 200.0,
        ts: 2e-3,
        initial_pose: Pose::new(0.0, 1.5, 0.0, std::f64::consts::FRAC_PI_4),
        initial_velocity: Vec4::zeros(),
        params: AuvParams::default(),
        trajectory: case2_trajectory(),
        disturbance: DisturbanceSpec::default(),
        uncertainty: UncertaintySpec::default(),
        controller: ControllerKind::BsIsmcTdeAdaptive,
        gains: Gains::default(),
        tde: TdeConfig {
            mbar0: Vec4::new(0.03, 0.03, 0.05, 0.02),
            adaptive: true,
            ..TdeConfig::default()
        },
        options: ControllerOptions::default(),
        seed: 42,
    }
}

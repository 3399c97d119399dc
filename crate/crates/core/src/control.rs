//! Trajectory-tracking control laws.
//!
//! Two laws share the same backstepping integral sliding surface
//! `sigma = e_dot + k1 e + k2 int(e)`:
//!
//! * the model-based law drives the surface with the full nominal
//!   earth-frame model, and
//! * the time-delay variant replaces the inertia with a constant diagonal
//!   surrogate `mbar` and cancels the lumped perturbation with a
//!   one-delay-old observation of forces and states.
//!
//! The surrogate inertia can also be tuned online; `adaptive_mbar_step`
//! integrates its update law, and `lemma_condition` monitors the
//! boundedness condition `||I - M(eta)^-1 mbar|| < 1` the estimator relies
//! on.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::{earth_frame_matrices, AuvParams, GeneralizedForce};
use crate::{Mat4, Vec4};

/// Controller gain set. `k1`, `k2`, `k3`, and `gamma` are diagonals of
/// positive diagonal matrices; `phi` is the boundary-layer thickness of
/// the switching function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k1: Vec4,
    pub k2: Vec4,
    pub k3: Vec4,
    pub gamma: Vec4,
    pub phi: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k1: Vec4::repeat(0.1),
            k2: Vec4::repeat(0.1),
            k3: Vec4::repeat(10.0),
            gamma: Vec4::repeat(1.0),
            phi: 0.2,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, diag) in [
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("k3", &self.k3),
            ("gamma", &self.gamma),
        ] {
            for i in 0..4 {
                if !crate::finite_positive(diag[i]) {
                    v.push(format!("gains: {}[{}] = {} must be > 0", name, i, diag[i]));
                }
            }
        }
        if !crate::finite_positive(self.phi) {
            v.push(format!("gains: phi = {} must be > 0", self.phi));
        }
        v
    }
}

/// Shape of the reaching-law switching term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switching {
    /// Boundary-layer saturation: `sgn(s)` when `|s| >= phi`, else `s`.
    /// Note the jump at `|s| = phi`; this is the literal definition.
    Sat,
    /// Pure sign function (chattering-prone, kept for comparison runs).
    Sgn,
    /// Saturation with `s / phi` inside the layer (continuous everywhere).
    SatScaled,
}

/// Behavioral options shared by both laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerOptions {
    pub switching: Switching,
    /// Anti-windup clamp on each component of the error integral.
    pub integral_limit: f64,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        Self {
            switching: Switching::Sat,
            integral_limit: 10.0,
        }
    }
}

impl ControllerOptions {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !crate::finite_positive(self.integral_limit) {
            v.push(format!(
                "gains: integral_limit = {} must be > 0",
                self.integral_limit
            ));
        }
        v
    }
}

/// Configuration of the time-delay estimator and the adaptive surrogate
/// inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdeConfig {
    /// Delay expressed in controller steps; the delay time is `n * Ts`.
    pub delay_steps: usize,
    /// Initial surrogate inertia diagonal.
    pub mbar0: Vec4,
    /// Enable the online `mbar` update.
    pub adaptive: bool,
    /// Per-axis adaptation weights.
    pub alpha: Vec4,
    /// Lower clamp keeping the update law away from its singularity.
    pub mbar_min: f64,
    /// Use `|sigma|` in the damping term of the update law instead of the
    /// literal signed `sigma`.
    pub abs_sigma_adaptation: bool,
}

impl Default for TdeConfig {
    fn default() -> Self {
        Self {
            delay_steps: 1,
            mbar0: Vec4::new(3.0, 3.0, 6.0, 1.0),
            adaptive: false,
            alpha: Vec4::repeat(0.01),
            mbar_min: 1e-3,
            abs_sigma_adaptation: false,
        }
    }
}

impl TdeConfig {
    /// Delay time `L = n * Ts` for a given controller period.
    pub fn delay_time(&self, ts: f64) -> f64 {
        self.delay_steps as f64 * ts
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.delay_steps < 1 {
            v.push("tde: delay_steps must be >= 1".to_string());
        }
        if !crate::finite_positive(self.mbar_min) {
            v.push(format!("tde: mbar_min = {} must be > 0", self.mbar_min));
        }
        for i in 0..4 {
            if !(self.mbar0[i].is_finite() && self.mbar0[i] >= self.mbar_min) {
                v.push(format!(
                    "tde: mbar0[{}] = {} must be >= mbar_min = {}",
                    i, self.mbar0[i], self.mbar_min
                ));
            }
            if !crate::finite_positive(self.alpha[i]) {
                v.push(format!("tde: alpha[{}] = {} must be > 0", i, self.alpha[i]));
            }
        }
        v
    }
}

/// Which control law a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    BsIsmc,
    BsIsmcTde,
    BsIsmcTdeAdaptive,
}

impl ControllerKind {
    pub fn uses_tde(&self) -> bool {
        matches!(self, Self::BsIsmcTde | Self::BsIsmcTdeAdaptive)
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::BsIsmcTdeAdaptive)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::BsIsmc => "bs-ismc",
            Self::BsIsmcTde => "bs-ismc-tde",
            Self::BsIsmcTdeAdaptive => "bs-ismc-tde-adaptive",
        }
    }
}

/// Desired pose, velocity, and acceleration, all provided analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub pose: Vec4,
    pub velocity: Vec4,
    pub acceleration: Vec4,
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = (angle + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if wrapped == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        wrapped
    }
}

/// Tracking error and its rate. The yaw component of the error is wrapped
/// to `(-pi, pi]`; the rate uses the raw velocities.
pub fn tracking_error(eta: &Vec4, eta_dot: &Vec4, reference: &Reference) -> (Vec4, Vec4) {
    let mut e = eta - reference.pose;
    e[3] = wrap_angle(e[3]);
    (e, eta_dot - reference.velocity)
}

/// Sliding surface `sigma = e_dot + k1 e + k2 int(e)`.
pub fn sliding_surface(e: &Vec4, e_dot: &Vec4, e_int: &Vec4, k1: &Vec4, k2: &Vec4) -> Vec4 {
    e_dot + k1.component_mul(e) + k2.component_mul(e_int)
}

/// Componentwise switching term of the reaching law.
pub fn switching_function(sigma: &Vec4, phi: f64, mode: Switching) -> Vec4 {
    Vec4::from_fn(|i, _| {
        let s = sigma[i];
        match mode {
            Switching::Sgn => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Switching::Sat => {
                if s.abs() >= phi {
                    s.signum()
                } else {
                    s
                }
            }
            Switching::SatScaled => {
                if s.abs() >= phi {
                    s.signum()
                } else {
                    s / phi
                }
            }
        }
    })
}

/// Feedback bracket shared by both laws:
/// `-k1 e_dot - (I + k2) e - k3 sigma + acc_ref - gamma * sw(sigma)`.
fn feedback_bracket(
    e: &Vec4,
    e_dot: &Vec4,
    sigma: &Vec4,
    reference: &Reference,
    gains: &Gains,
    switching: Switching,
) -> Vec4 {
    -gains.k1.component_mul(e_dot) - e - gains.k2.component_mul(e) - gains.k3.component_mul(sigma)
        + reference.acceleration
        - gains
            .gamma
            .component_mul(&switching_function(sigma, gains.phi, switching))
}

/// Nominal earth-frame bias force `N = C_n eta_dot + D_n eta_dot + g_n`.
pub fn nominal_force(nominal: &AuvParams, eta: &Vec4, eta_dot: &Vec4) -> Vec4 {
    let em = earth_frame_matrices(nominal, eta, eta_dot);
    em.c * eta_dot + em.d * eta_dot + em.g
}

/// Model-based backstepping integral sliding-mode law.
///
/// `tau_bar = N + M(eta) [-k1 e_dot - (I + k2) e - k3 sigma + acc_ref - gamma sw(sigma)]`,
/// which cancels the nominal dynamics exactly and imposes the reaching law
/// on the surface.
#[allow(clippy::too_many_arguments)]
pub fn bs_ismc_control(
    nominal: &AuvParams,
    eta: &Vec4,
    eta_dot: &Vec4,
    e: &Vec4,
    e_dot: &Vec4,
    sigma: &Vec4,
    reference: &Reference,
    gains: &Gains,
    switching: Switching,
) -> GeneralizedForce {
    let em = earth_frame_matrices(nominal, eta, eta_dot);
    let n = em.c * eta_dot + em.d * eta_dot + em.g;
    let bracket = feedback_bracket(e, e_dot, sigma, reference, gains, switching);
    GeneralizedForce::earth(n + em.m * bracket)
}

/// Delayed observations the TDE law consumes, resolved from the delay
/// buffer by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdeDelayedTerms {
    /// Applied earth-frame force at `t - L`.
    pub tau_bar: Vec4,
    /// Nominal bias force at `t - L`.
    pub nominal: Vec4,
    /// Second-difference acceleration
    /// `(eta(t) - 2 eta(t-L) + eta(t-2L)) / L^2`.
    pub accel: Vec4,
}

/// Time-delay perturbation estimate
/// `p_tilde = tau_bar(t-L) - N(t-L) - mbar * accel(t-L)`.
pub fn tde_estimate(mbar: &Vec4, delayed: &TdeDelayedTerms) -> Vec4 {
    delayed.tau_bar - delayed.nominal - mbar.component_mul(&delayed.accel)
}

/// Combined law with time-delay compensation.
///
/// With delayed terms available this computes
/// `tau_bar = tau_bar(t-L) + mbar [bracket - accel(t-L)] + N - N(t-L)`;
/// during warmup (`delayed = None`) it falls back to the model-based law
/// with `mbar` substituted for the inertia and no perturbation
/// compensation. Returns the force and the perturbation estimate used
/// (zero during warmup).
#[allow(clippy::too_many_arguments)]
pub fn bs_ismc_tde_control(
    mbar: &Vec4,
    e: &Vec4,
    e_dot: &Vec4,
    sigma: &Vec4,
    reference: &Reference,
    gains: &Gains,
    switching: Switching,
    n_now: &Vec4,
    delayed: Option<&TdeDelayedTerms>,
) -> (GeneralizedForce, Vec4) {
    let bracket = feedback_bracket(e, e_dot, sigma, reference, gains, switching);
    let p_tilde = delayed.map_or_else(Vec4::zeros, |d| tde_estimate(mbar, d));
    let tau_bar = p_tilde + n_now + mbar.component_mul(&bracket);
    (GeneralizedForce::earth(tau_bar), p_tilde)
}

/// One explicit-Euler step of the surrogate-inertia update law
/// `dmbar_ii/dt = gamma_ii |sigma_i| - alpha_i sigma_i / mbar_ii^2`,
/// clamped below at `mbar_min`.
///
/// The damping term keeps the literal signed `sigma_i` unless
/// `abs_sigma` is set.
pub fn adaptive_mbar_step(
    mbar: &Vec4,
    sigma: &Vec4,
    gamma: &Vec4,
    alpha: &Vec4,
    ts: f64,
    mbar_min: f64,
    abs_sigma: bool,
) -> Vec4 {
    Vec4::from_fn(|i, _| {
        let drive = if abs_sigma { sigma[i].abs() } else { sigma[i] };
        let rate = gamma[i] * sigma[i].abs() - alpha[i] * drive / (mbar[i] * mbar[i]);
        (mbar[i] + ts * rate).max(mbar_min)
    })
}

/// Spectral norm of `I - M(eta)^-1 mbar` and whether the estimator
/// boundedness condition (norm < 1) holds.
pub fn lemma_condition(m_eta: &Mat4, mbar: &Vec4) -> (f64, bool) {
    let m_inv = m_eta
        .try_inverse()
        .expect("earth-frame inertia matrix is invertible by construction");
    let residual = Mat4::identity() - m_inv * Mat4::from_diagonal(mbar);
    let norm = residual.svd(false, false).singular_values[0];
    (norm, norm < 1.0)
}

/// One buffered controller step: pose, applied earth-frame force, and the
/// nominal bias force at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySample {
    pub step: u64,
    pub eta: Vec4,
    pub tau_bar: Vec4,
    pub nominal: Vec4,
}

/// Ring buffer of the most recent `2n` controller steps, enough to resolve
/// the `t - L` and `t - 2L` observations the estimator needs.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    samples: VecDeque<DelaySample>,
    capacity: usize,
    next_step: u64,
}

impl DelayBuffer {
    pub fn new(delay_steps: usize) -> Self {
        let capacity = 2 * delay_steps.max(1);
        Self {
            samples: VecDeque::with_capacity(capacity + 1),
            capacity,
            next_step: 0,
        }
    }

    pub fn push(&mut self, eta: Vec4, tau_bar: Vec4, nominal: Vec4) {
        self.samples.push_back(DelaySample {
            step: self.next_step,
            eta,
            tau_bar,
            nominal,
        });
        self.next_step += 1;
        if self.samples.len() > self.capacity {
            self.samples.pop_front();
        }
    }

    /// Sample recorded exactly `steps_back` steps before the upcoming one.
    pub fn steps_back(&self, steps_back: usize) -> Option<&DelaySample> {
        if steps_back == 0 || steps_back > self.samples.len() {
            return None;
        }
        let sample = &self.samples[self.samples.len() - steps_back];
        debug_assert_eq!(sample.step, self.next_step - steps_back as u64);
        Some(sample)
    }

    /// True once both the `t - L` and `t - 2L` observations exist.
    pub fn ready(&self, delay_steps: usize) -> bool {
        self.samples.len() >= 2 * delay_steps
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Mutable controller internals carried across steps.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub error_integral: Vec4,
    pub mbar: Vec4,
    pub buffer: DelayBuffer,
    /// Previous-step error, for the trapezoidal integral update.
    pub last_error: Option<Vec4>,
    /// Latest estimation error diagnostic `p - p_tilde` (set by the
    /// simulator, which knows the true plant).
    pub last_tde_error: Vec4,
}

/// Everything the controller produced for one step.
#[derive(Debug, Clone, Copy)]
pub struct ControlStep {
    pub tau_bar: GeneralizedForce,
    pub error: Vec4,
    pub error_rate: Vec4,
    pub error_integral: Vec4,
    pub sigma: Vec4,
    pub p_tilde: Vec4,
    pub tde_active: bool,
    /// Surrogate inertia used by this step (before any adaptive update).
    pub mbar: Vec4,
    pub nominal_force: Vec4,
}

/// Stateful wrapper running one of the control laws at a fixed period.
#[derive(Debug, Clone)]
pub struct Controller {
    pub kind: ControllerKind,
    pub gains: Gains,
    pub tde: TdeConfig,
    pub options: ControllerOptions,
    pub nominal: AuvParams,
    pub state: ControllerState,
    adapt: bool,
    ts: f64,
}

impl Controller {
    pub fn new(
        kind: ControllerKind,
        gains: Gains,
        tde: TdeConfig,
        options: ControllerOptions,
        nominal: AuvParams,
        ts: f64,
    ) -> Self {
        // The adaptive kind and the tde.adaptive flag both enable the
        // update; either alone is enough.
        let adapt = kind.uses_tde() && (kind.is_adaptive() || tde.adaptive);
        Self {
            kind,
            gains,
            tde,
            options,
            nominal,
            state: ControllerState {
                error_integral: Vec4::zeros(),
                mbar: tde.mbar0,
                buffer: DelayBuffer::new(tde.delay_steps),
                last_error: None,
                last_tde_error: Vec4::zeros(),
            },
            adapt,
            ts,
        }
    }

    /// Compute the force for the current state and reference, update the
    /// error integral, the adaptive inertia, and the delay buffer.
    pub fn step(&mut self, eta: &Vec4, eta_dot: &Vec4, reference: &Reference) -> ControlStep {
        let (e, e_dot) = tracking_error(eta, eta_dot, reference);

        // Trapezoidal integral with anti-windup clamp.
        if let Some(prev) = self.state.last_error {
            let limit = self.options.integral_limit;
            self.state.error_integral = Vec4::from_fn(|i, _| {
                (self.state.error_integral[i] + 0.5 * self.ts * (prev[i] + e[i]))
                    .clamp(-limit, limit)
            });
        }
        self.state.last_error = Some(e);
        let e_int = self.state.error_integral;

        let sigma = sliding_surface(&e, &e_dot, &e_int, &self.gains.k1, &self.gains.k2);
        let mbar = self.state.mbar;

        let n_now = nominal_force(&self.nominal, eta, eta_dot);
        let (tau_bar, p_tilde, tde_active) = if self.kind.uses_tde() {
            let delayed = self.delayed_terms(eta);
            let (tau_bar, p_tilde) = bs_ismc_tde_control(
                &mbar,
                &e,
                &e_dot,
                &sigma,
                reference,
                &self.gains,
                self.options.switching,
                &n_now,
                delayed.as_ref(),
            );
            (tau_bar, p_tilde, delayed.is_some())
        } else {
            let tau_bar = bs_ismc_control(
                &self.nominal,
                eta,
                eta_dot,
                &e,
                &e_dot,
                &sigma,
                reference,
                &self.gains,
                self.options.switching,
            );
            (tau_bar, Vec4::zeros(), false)
        };

        if self.adapt {
            self.state.mbar = adaptive_mbar_step(
                &mbar,
                &sigma,
                &self.gains.gamma,
                &self.tde.alpha,
                self.ts,
                self.tde.mbar_min,
                self.tde.abs_sigma_adaptation,
            );
        }

        if self.kind.uses_tde() {
            self.state.buffer.push(*eta, tau_bar.vec, n_now);
        }

        ControlStep {
            tau_bar,
            error: e,
            error_rate: e_dot,
            error_integral: e_int,
            sigma,
            p_tilde,
            tde_active,
            mbar,
            nominal_force: n_now,
        }
    }

    fn delayed_terms(&self, eta_now: &Vec4) -> Option<TdeDelayedTerms> {
        let n = self.tde.delay_steps;
        if !self.state.buffer.ready(n) {
            return None;
        }
        let at_l = self.state.buffer.steps_back(n)?;
        let at_2l = self.state.buffer.steps_back(2 * n)?;
        let delay = self.tde.delay_time(self.ts);
        let accel = (eta_now - 2.0 * at_l.eta + at_2l.eta) / (delay * delay);
        Some(TdeDelayedTerms {
            tau_bar: at_l.tau_bar,
            nominal: at_l.nominal,
            accel,
        })
    }
}

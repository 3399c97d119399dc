//! Dynamics, controllers, and closed-loop simulation for a fully actuated
//! 4-DOF underwater vehicle (surge, sway, heave, yaw).
//!
//! The crate is organized in three layers:
//!
//! * [`model`] — the vehicle plant: body- and earth-frame equations of
//!   motion, parameter uncertainty injection, and the state derivative.
//! * [`control`] — trajectory-tracking laws: a backstepping integral
//!   sliding-mode controller, its time-delay-estimation variant, an
//!   adaptive surrogate-inertia update, and the associated stability
//!   monitor.
//! * [`sim`] — fixed-step closed-loop execution: reference and disturbance
//!   generation, RK4 integration, logging, metrics, and scenario
//!   comparison.

pub mod control;
pub mod model;
pub mod sim;

/// 4-vector over the (x, y, z, yaw) axes.
pub type Vec4 = nalgebra::Vector4<f64>;
/// 4x4 matrix over the (x, y, z, yaw) axes.
pub type Mat4 = nalgebra::Matrix4<f64>;

// Validation helpers shared by the parameter types; both reject NaN and
// infinities.
pub(crate) fn finite_positive(value: f64) -> bool {
    value.is_finite() && value > 0.0
}

pub(crate) fn finite_non_negative(value: f64) -> bool {
    value.is_finite() && value >= 0.0
}

pub use control::{
    adaptive_mbar_step, bs_ismc_control, bs_ismc_tde_control, lemma_condition, nominal_force,
    sliding_surface, switching_function, tde_estimate, tracking_error, wrap_angle, Controller,
    ControllerKind, ControllerOptions, ControllerState, DelayBuffer, DelaySample, Gains, Reference,
    Switching, TdeConfig, TdeDelayedTerms,
};
pub use model::{
    apply_uncertainty, body_frame_matrices, earth_frame_matrices, state_derivative,
    transform_matrix, transform_matrix_derivative, AuvParams, BodyMatrices, BodyVelocity,
    EarthMatrices, Frame, GeneralizedForce, ModelError, Pose, UncertaintySpec,
};
pub use sim::{
    compare, compute_metrics, disturbance_at, reference_at, rk4_step, run_scenario, AbortInfo,
    AbortReason, AxisDisturbance, AxisTrajectory, Comparison, DisturbanceSpec, DisturbanceTerm,
    MetricWindow, Metrics, PlantState, Scenario, SimError, SimLog, SimRecord, SinusoidTerm,
    TrajectorySpec, Waveform,
};

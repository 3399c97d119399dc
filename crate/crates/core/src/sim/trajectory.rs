//! Analytic reference trajectories: per-axis sums of sinusoids plus a
//! linear ramp and a constant offset, differentiated term by term.

use serde::{Deserialize, Serialize};

use crate::control::Reference;
use crate::Vec4;

/// Whether a sinusoid term is a sine or a cosine of `omega * t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    Sin,
    Cos,
}

/// One `amplitude * sin(omega t)` or `amplitude * cos(omega t)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidTerm {
    pub waveform: Waveform,
    pub amplitude: f64,
    pub omega: f64,
}

impl SinusoidTerm {
    pub fn sin(amplitude: f64, omega: f64) -> Self {
        Self {
            waveform: Waveform::Sin,
            amplitude,
            omega,
        }
    }

    pub fn cos(amplitude: f64, omega: f64) -> Self {
        Self {
            waveform: Waveform::Cos,
            amplitude,
            omega,
        }
    }

    fn evaluate(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.omega * t).sin_cos();
        let a = self.amplitude;
        let w = self.omega;
        match self.waveform {
            Waveform::Sin => (a * s, a * w * c, -a * w * w * s),
            Waveform::Cos => (a * c, -a * w * s, -a * w * w * c),
        }
    }
}

/// Reference motion of one axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisTrajectory {
    pub terms: Vec<SinusoidTerm>,
    /// Linear ramp coefficient (units per second).
    pub ramp: f64,
    pub offset: f64,
}

impl AxisTrajectory {
    pub fn constant(offset: f64) -> Self {
        Self {
            offset,
            ..Self::default()
        }
    }

    pub fn ramp(rate: f64) -> Self {
        Self {
            ramp: rate,
            ..Self::default()
        }
    }

    fn evaluate(&self, t: f64) -> (f64, f64, f64) {
        let mut pos = self.offset + self.ramp * t;
        let mut vel = self.ramp;
        let mut acc = 0.0;
        for term in &self.terms {
            let (p, v, a) = term.evaluate(t);
            pos += p;
            vel += v;
            acc += a;
        }
        (pos, vel, acc)
    }
}

/// Full four-axis reference trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub x: AxisTrajectory,
    pub y: AxisTrajectory,
    pub z: AxisTrajectory,
    pub psi: AxisTrajectory,
}

impl TrajectorySpec {
    pub fn axes(&self) -> [&AxisTrajectory; 4] {
        [&self.x, &self.y, &self.z, &self.psi]
    }
}

/// Evaluate the desired pose, velocity, and acceleration at time `t`.
pub fn reference_at(spec: &TrajectorySpec, t: f64) -> Reference {
    let mut pose = Vec4::zeros();
    let mut velocity = Vec4::zeros();
    let mut acceleration = Vec4::zeros();
    for (i, axis) in spec.axes().iter().enumerate() {
        let (p, v, a) = axis.evaluate(t);
        pose[i] = p;
        velocity[i] = v;
        acceleration[i] = a;
    }
    Reference {
        pose,
        velocity,
        acceleration,
    }
}

/// First built-in trajectory suite: slow sinusoids on every axis.
pub fn case1_trajectory() -> TrajectorySpec {
    TrajectorySpec {
        x: AxisTrajectory {
            terms: vec![SinusoidTerm::sin(4.0, 0.04)],
            ..AxisTrajectory::default()
        },
        y: AxisTrajectory {
            terms: vec![SinusoidTerm::cos(2.5, 0.02)],
            ..AxisTrajectory::default()
        },
        z: AxisTrajectory {
            terms: vec![SinusoidTerm::sin(2.0, 0.01), SinusoidTerm::cos(2.0, 0.02)],
            ..AxisTrajectory::default()
        },
        psi: AxisTrajectory {
            terms: vec![SinusoidTerm::cos(0.5, 0.01), SinusoidTerm::sin(-0.5, 0.01)],
            ..AxisTrajectory::default()
        },
    }
}

/// Second built-in trajectory suite: horizontal sinusoids with depth and
/// heading ramps.
pub fn case2_trajectory() -> TrajectorySpec {
    TrajectorySpec {
        x: AxisTrajectory {
            terms: vec![SinusoidTerm::sin(3.0, 0.04)],
            ..AxisTrajectory::default()
        },
        y: AxisTrajectory {
            terms: vec![SinusoidTerm::cos(1.5, 0.04)],
            ..AxisTrajectory::default()
        },
        z: AxisTrajectory::ramp(0.02),
        psi: AxisTrajectory::ramp(0.04),
    }
}

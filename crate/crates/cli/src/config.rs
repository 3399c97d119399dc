//! Scenario config files: sectioned TOML documents where every field is
//! optional and defaults to the built-in `case1` scenario.
//!
//! Sections: `[params]`, `[gains]`, `[tde]`, `[trajectory]`,
//! `[disturbance]`, `[uncertainty]`, `[sim]`. Unknown keys are rejected;
//! validation reports every violated invariant, not just the first.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use auvctl_core::sim::{case1_scenario, case1_trajectory, case2_trajectory};
use auvctl_core::{
    AxisDisturbance, AxisTrajectory, ControllerKind, DisturbanceSpec, Pose, Scenario, Switching,
    TrajectorySpec, UncertaintySpec, Vec4,
};

/// Config-file errors: either the document does not parse, or it parses
/// but violates invariants (all of them listed).
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

/// A diagonal gain in the file: a scalar replicated on all axes, or four
/// explicit entries.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagValue {
    Scalar(f64),
    PerAxis([f64; 4]),
}

impl DiagValue {
    fn to_vec4(self) -> Vec4 {
        match self {
            DiagValue::Scalar(v) => Vec4::repeat(v),
            DiagValue::PerAxis(v) => Vec4::from_column_slice(&v),
        }
    }

    fn from_vec4(v: &Vec4) -> Self {
        DiagValue::PerAxis([v[0], v[1], v[2], v[3]])
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ParamsSection {
    mass: Option<f64>,
    iz: Option<f64>,
    gravity_force: Option<f64>,
    buoyancy_force: Option<f64>,
    x_udot: Option<f64>,
    y_vdot: Option<f64>,
    z_wdot: Option<f64>,
    n_rdot: Option<f64>,
    x_u: Option<f64>,
    y_v: Option<f64>,
    z_w: Option<f64>,
    n_r: Option<f64>,
    x_uu: Option<f64>,
    y_vv: Option<f64>,
    z_ww: Option<f64>,
    n_rr: Option<f64>,
    stabilizing_drag_signs: Option<bool>,
    coriolis_scale: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GainsSection {
    k1: Option<DiagValue>,
    k2: Option<DiagValue>,
    k3: Option<DiagValue>,
    gamma: Option<DiagValue>,
    phi: Option<f64>,
    switching: Option<Switching>,
    integral_limit: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TdeSection {
    /// Delay in steps; `l` (seconds) may be given instead.
    n: Option<u64>,
    l: Option<f64>,
    mbar0: Option<DiagValue>,
    adaptive: Option<bool>,
    alpha: Option<DiagValue>,
    mbar_min: Option<f64>,
    adaptive_abs_sigma: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrajectorySection {
    /// `case1` or `case2`; mutually exclusive with explicit axes.
    preset: Option<String>,
    x: Option<AxisTrajectory>,
    y: Option<AxisTrajectory>,
    z: Option<AxisTrajectory>,
    psi: Option<AxisTrajectory>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DisturbanceSection {
    /// `default` or `none`; mutually exclusive with explicit axes.
    preset: Option<String>,
    x: Option<AxisDisturbance>,
    y: Option<AxisDisturbance>,
    z: Option<AxisDisturbance>,
    psi: Option<AxisDisturbance>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    duration: Option<f64>,
    ts: Option<f64>,
    x0: Option<[f64; 4]>,
    v0: Option<[f64; 4]>,
    controller: Option<ControllerKind>,
    seed: Option<u64>,
}

/// The whole document. Every field optional; defaults come from the
/// built-in `case1` scenario.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDoc {
    params: ParamsSection,
    gains: GainsSection,
    tde: TdeSection,
    trajectory: TrajectorySection,
    disturbance: DisturbanceSection,
    uncertainty: Option<UncertaintySpec>,
    sim: SimSection,
}

macro_rules! apply {
    ($target:expr, $($field:ident <- $src:expr),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $target.$field = v; })+
    };
}

/// Parse a config document and resolve it into a fully defaulted
/// [`Scenario`].
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let doc: ConfigDoc = toml::from_str(text)?;
    resolve(&doc)
}

fn resolve(doc: &ConfigDoc) -> Result<Scenario, ConfigError> {
    let mut scenario = case1_scenario();
    let mut violations = Vec::new();

    apply!(
        scenario.params,
        mass <- doc.params, iz <- doc.params,
        gravity_force <- doc.params, buoyancy_force <- doc.params,
        x_udot <- doc.params, y_vdot <- doc.params,
        z_wdot <- doc.params, n_rdot <- doc.params,
        x_u <- doc.params, y_v <- doc.params, z_w <- doc.params, n_r <- doc.params,
        x_uu <- doc.params, y_vv <- doc.params, z_ww <- doc.params, n_rr <- doc.params,
        stabilizing_drag_signs <- doc.params, coriolis_scale <- doc.params,
    );

    if let Some(v) = doc.gains.k1 {
        scenario.gains.k1 = v.to_vec4();
    }
    if let Some(v) = doc.gains.k2 {
        scenario.gains.k2 = v.to_vec4();
    }
    if let Some(v) = doc.gains.k3 {
        scenario.gains.k3 = v.to_vec4();
    }
    if let Some(v) = doc.gains.gamma {
        scenario.gains.gamma = v.to_vec4();
    }
    if let Some(v) = doc.gains.phi {
        scenario.gains.phi = v;
    }
    if let Some(v) = doc.gains.switching {
        scenario.options.switching = v;
    }
    if let Some(v) = doc.gains.integral_limit {
        scenario.options.integral_limit = v;
    }

    if let Some(v) = doc.sim.duration {
        scenario.duration = v;
    }
    if let Some(v) = doc.sim.ts {
        scenario.ts = v;
    }
    if let Some(v) = doc.sim.x0 {
        scenario.initial_pose = Pose::new(v[0], v[1], v[2], v[3]);
    }
    if let Some(v) = doc.sim.v0 {
        scenario.initial_velocity = Vec4::from_column_slice(&v);
    }
    if let Some(v) = doc.sim.controller {
        scenario.controller = v;
    }
    if let Some(v) = doc.sim.seed {
        scenario.seed = v;
    }

    if let Some(v) = doc.tde.mbar0 {
        scenario.tde.mbar0 = v.to_vec4();
    }
    if let Some(v) = doc.tde.alpha {
        scenario.tde.alpha = v.to_vec4();
    }
    if let Some(v) = doc.tde.mbar_min {
        scenario.tde.mbar_min = v;
    }
    if let Some(v) = doc.tde.adaptive {
        scenario.tde.adaptive = v;
    }
    if let Some(v) = doc.tde.adaptive_abs_sigma {
        scenario.tde.abs_sigma_adaptation = v;
    }
    if let Some(n) = doc.tde.n {
        if n == 0 {
            violations.push("tde: n must be >= 1".to_string());
        } else {
            scenario.tde.delay_steps = n as usize;
        }
    }
    if let Some(l) = doc.tde.l {
        let ratio = l / scenario.ts;
        let n_from_l = ratio.round();
        let integral = (ratio - n_from_l).abs() <= 1e-6 * ratio.abs().max(1.0);
        if !(n_from_l >= 1.0 && integral) {
            violations.push(format!(
                "tde: l = {} must be an integer multiple of sim.ts = {}",
                l, scenario.ts
            ));
        } else if doc.tde.n.is_some_and(|n| n != n_from_l as u64) {
            violations.push(format!(
                "tde: n = {} disagrees with l = {} at sim.ts = {} (implies n = {})",
                doc.tde.n.unwrap(),
                l,
                scenario.ts,
                n_from_l
            ));
        } else {
            scenario.tde.delay_steps = n_from_l as usize;
        }
    }

    // The adaptive flag promotes the plain TDE controller.
    if scenario.tde.adaptive && scenario.controller == ControllerKind::BsIsmcTde {
        scenario.controller = ControllerKind::BsIsmcTdeAdaptive;
    }
    if scenario.controller == ControllerKind::BsIsmcTdeAdaptive {
        scenario.tde.adaptive = true;
    }

    match resolve_trajectory(&doc.trajectory) {
        Ok(Some(t)) => scenario.trajectory = t,
        Ok(None) => {}
        Err(msg) => violations.push(msg),
    }
    match resolve_disturbance(&doc.disturbance) {
        Ok(Some(d)) => scenario.disturbance = d,
        Ok(None) => {}
        Err(msg) => violations.push(msg),
    }
    if let Some(u) = doc.uncertainty {
        scenario.uncertainty = u;
    }

    violations.extend(scenario.validate());
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

fn resolve_trajectory(section: &TrajectorySection) -> Result<Option<TrajectorySpec>, String> {
    let has_axes =
        section.x.is_some() || section.y.is_some() || section.z.is_some() || section.psi.is_some();
    match (&section.preset, has_axes) {
        (Some(_), true) => {
            Err("trajectory: preset and explicit axes are mutually exclusive".to_string())
        }
        (Some(name), false) => match name.as_str() {
            "case1" => Ok(Some(case1_trajectory())),
            "case2" => Ok(Some(case2_trajectory())),
            other => Err(format!(
                "trajectory: unknown preset '{other}' (expected case1 or case2)"
            )),
        },
        (None, true) => {
            // Explicit mode: unspecified axes stay at rest.
            Ok(Some(TrajectorySpec {
                x: section.x.clone().unwrap_or_default(),
                y: section.y.clone().unwrap_or_default(),
                z: section.z.clone().unwrap_or_default(),
                psi: section.psi.clone().unwrap_or_default(),
            }))
        }
        (None, false) => Ok(None),
    }
}

fn resolve_disturbance(section: &DisturbanceSection) -> Result<Option<DisturbanceSpec>, String> {
    let has_axes =
        section.x.is_some() || section.y.is_some() || section.z.is_some() || section.psi.is_some();
    match (&section.preset, has_axes) {
        (Some(_), true) => {
            Err("disturbance: preset and explicit axes are mutually exclusive".to_string())
        }
        (Some(name), false) => match name.as_str() {
            "default" => Ok(Some(DisturbanceSpec::default())),
            "none" => Ok(Some(DisturbanceSpec::none())),
            other => Err(format!(
                "disturbance: unknown preset '{other}' (expected default or none)"
            )),
        },
        (None, true) => Ok(Some(DisturbanceSpec {
            x: section.x.clone().unwrap_or_default(),
            y: section.y.clone().unwrap_or_default(),
            z: section.z.clone().unwrap_or_default(),
            psi: section.psi.clone().unwrap_or_default(),
        })),
        (None, false) => Ok(None),
    }
}

/// Serialize a resolved scenario back into a complete config document.
/// `parse_config(serialize_scenario(s))` reproduces `s` exactly.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let p = &scenario.params;
    let doc = ConfigDoc {
        params: ParamsSection {
            mass: Some(p.mass),
            iz: Some(p.iz),
            gravity_force: Some(p.gravity_force),
            buoyancy_force: Some(p.buoyancy_force),
            x_udot: Some(p.x_udot),
            y_vdot: Some(p.y_vdot),
            z_wdot: Some(p.z_wdot),
            n_rdot: Some(p.n_rdot),
            x_u: Some(p.x_u),
            y_v: Some(p.y_v),
            z_w: Some(p.z_w),
            n_r: Some(p.n_r),
            x_uu: Some(p.x_uu),
            y_vv: Some(p.y_vv),
            z_ww: Some(p.z_ww),
            n_rr: Some(p.n_rr),
            stabilizing_drag_signs: Some(p.stabilizing_drag_signs),
            coriolis_scale: Some(p.coriolis_scale),
        },
        gains: GainsSection {
            k1: Some(DiagValue::from_vec4(&scenario.gains.k1)),
            k2: Some(DiagValue::from_vec4(&scenario.gains.k2)),
            k3: Some(DiagValue::from_vec4(&scenario.gains.k3)),
            gamma: Some(DiagValue::from_vec4(&scenario.gains.gamma)),
            phi: Some(scenario.gains.phi),
            switching: Some(scenario.options.switching),
            integral_limit: Some(scenario.options.integral_limit),
        },
        tde: TdeSection {
            n: Some(scenario.tde.delay_steps as u64),
            l: None,
            mbar0: Some(DiagValue::from_vec4(&scenario.tde.mbar0)),
            adaptive: Some(scenario.tde.adaptive),
            alpha: Some(DiagValue::from_vec4(&scenario.tde.alpha)),
            mbar_min: Some(scenario.tde.mbar_min),
            adaptive_abs_sigma: Some(scenario.tde.abs_sigma_adaptation),
        },
        trajectory: TrajectorySection {
            preset: None,
            x: Some(scenario.trajectory.x.clone()),
            y: Some(scenario.trajectory.y.clone()),
            z: Some(scenario.trajectory.z.clone()),
            psi: Some(scenario.trajectory.psi.clone()),
        },
        disturbance: DisturbanceSection {
            preset: None,
            x: Some(scenario.disturbance.x.clone()),
            y: Some(scenario.disturbance.y.clone()),
            z: Some(scenario.disturbance.z.clone()),
            psi: Some(scenario.disturbance.psi.clone()),
        },
        uncertainty: Some(scenario.uncertainty),
        sim: SimSection {
            duration: Some(scenario.duration),
            ts: Some(scenario.ts),
            x0: Some(scenario.initial_pose.to_vector().into()),
            v0: Some(scenario.initial_velocity.into()),
            controller: Some(scenario.controller),
            seed: Some(scenario.seed),
        },
    };
    toml::to_string_pretty(&doc).expect("scenario serializes to TOML")
}

/// Stable digest of the fully resolved scenario: SHA-256 over its
/// canonical JSON form.
pub fn scenario_digest(scenario: &Scenario) -> String {
    let canonical = serde_json::to_vec(scenario).expect("scenario serializes to JSON");
    hex::encode(Sha256::digest(&canonical))
}

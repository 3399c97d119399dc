//! 4-DOF vehicle plant: rigid-body and hydrodynamic terms in the body
//! frame, their earth-frame transforms, and the state derivative used by
//! the simulator.
//!
//! Conventions: SI units, NED axes (z positive down), yaw positive
//! counter-clockwise about z. Pose angles are stored unconstrained;
//! wrapping happens only in the tracking-error computation.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::{Mat4, Vec4};

/// Rigid-body and hydrodynamic coefficients of the vehicle.
///
/// Coefficient signs are kept exactly as configured, even where a literal
/// value yields slightly negative damping at rest (e.g. a positive `x_u`).
/// Set `stabilizing_drag_signs` to force every drag coefficient to its
/// dissipative sign instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuvParams {
    /// Total vehicle mass (kg).
    pub mass: f64,
    /// Moment of inertia about the vertical axis (kg m^2).
    pub iz: f64,
    /// Gravity force G (N).
    pub gravity_force: f64,
    /// Buoyancy force B (N).
    pub buoyancy_force: f64,
    // Added mass (kg; kg m^2 for yaw).
    pub x_udot: f64,
    pub y_vdot: f64,
    pub z_wdot: f64,
    pub n_rdot: f64,
    // Linear drag.
    pub x_u: f64,
    pub y_v: f64,
    pub z_w: f64,
    pub n_r: f64,
    // Quadratic drag.
    pub x_uu: f64,
    pub y_vv: f64,
    pub z_ww: f64,
    pub n_rr: f64,
    /// Replace the literal drag coefficient signs with dissipative ones.
    pub stabilizing_drag_signs: bool,
    /// Multiplicative scale on the Coriolis-centripetal matrix.
    ///
    /// 1.0 for the nominal model; [`apply_uncertainty`] perturbs it, since
    /// the Coriolis entries are built from the inertia coefficients and
    /// have no independent parameters of their own.
    pub coriolis_scale: f64,
}

impl Default for AuvParams {
    fn default() -> Self {
        Self {
            mass: 54.54,
            iz: 13.587,
            gravity_force: 535.0,
            buoyancy_force: 53.4,
            x_udot: -7.6e-3,
            y_vdot: -5.5e-2,
            z_wdot: -2.4e-1,
            n_rdot: -3.4e-3,
            x_u: 2e-3,
            y_v: -1e-1,
            z_w: -3e-1,
            n_r: 3e-2,
            x_uu: 2.3e-2,
            y_vv: 5.3e-2,
            z_ww: 1.7e-1,
            n_rr: 2.9e-3,
            stabilizing_drag_signs: false,
            coriolis_scale: 1.0,
        }
    }
}

impl AuvParams {
    /// Diagonal of the body-frame inertia matrix (rigid body plus added mass).
    pub fn effective_inertia(&self) -> Vec4 {
        Vec4::new(
            self.mass - self.x_udot,
            self.mass - self.y_vdot,
            self.mass - self.z_wdot,
            self.iz - self.n_rdot,
        )
    }

    /// Net restoring force on the heave axis, `-(G - B)`.
    pub fn restoring_force(&self) -> f64 {
        -(self.gravity_force - self.buoyancy_force)
    }

    /// All violated invariants, empty when the parameter set is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !crate::finite_positive(self.mass) {
            v.push(format!("params: mass = {} must be > 0", self.mass));
        }
        if !crate::finite_positive(self.iz) {
            v.push(format!("params: iz = {} must be > 0", self.iz));
        }
        if !crate::finite_non_negative(self.gravity_force) {
            v.push(format!(
                "params: gravity_force = {} must be >= 0",
                self.gravity_force
            ));
        }
        if !crate::finite_non_negative(self.buoyancy_force) {
            v.push(format!(
                "params: buoyancy_force = {} must be >= 0",
                self.buoyancy_force
            ));
        }
        let m = self.effective_inertia();
        for (i, name) in ["m11", "m22", "m33", "m44"].iter().enumerate() {
            if !crate::finite_positive(m[i]) {
                v.push(format!(
                    "params: effective inertia {} = {} must be > 0",
                    name, m[i]
                ));
            }
        }
        if !crate::finite_positive(self.coriolis_scale) {
            v.push(format!(
                "params: coriolis_scale = {} must be > 0",
                self.coriolis_scale
            ));
        }
        v
    }

    fn drag_coefficients(&self) -> [f64; 8] {
        if self.stabilizing_drag_signs {
            [
                -self.x_u.abs(),
                -self.y_v.abs(),
                -self.z_w.abs(),
                -self.n_r.abs(),
                -self.x_uu.abs(),
                -self.y_vv.abs(),
                -self.z_ww.abs(),
                -self.n_rr.abs(),
            ]
        } else {
            [
                self.x_u, self.y_v, self.z_w, self.n_r, self.x_uu, self.y_vv, self.z_ww, self.n_rr,
            ]
        }
    }
}

/// Position-orientation vector: x, y, z (m) and yaw (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Self {
        Self { x, y, z, psi }
    }

    pub fn to_vector(self) -> Vec4 {
        Vec4::new(self.x, self.y, self.z, self.psi)
    }

    pub fn from_vector(v: &Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Body-frame velocities: surge, sway, heave (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub fn new(u: f64, v: f64, w: f64, r: f64) -> Self {
        Self { u, v, w, r }
    }

    pub fn to_vector(self) -> Vec4 {
        Vec4::new(self.u, self.v, self.w, self.r)
    }

    pub fn from_vector(v: &Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Reference frame a generalized force is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Body,
    Earth,
}

/// Generalized force/moment 4-vector tagged with its frame.
///
/// The tag must match the equation the force is used in: the plant state
/// derivative and the control laws work with earth-frame forces, the body
/// channel of the log uses `tau = J^T tau_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedForce {
    pub vec: Vec4,
    pub frame: Frame,
}

impl GeneralizedForce {
    pub fn earth(vec: Vec4) -> Self {
        Self {
            vec,
            frame: Frame::Earth,
        }
    }

    pub fn body(vec: Vec4) -> Self {
        Self {
            vec,
            frame: Frame::Body,
        }
    }

    /// Express this force in the body frame at the given yaw angle.
    pub fn to_body(&self, psi: f64) -> Self {
        match self.frame {
            Frame::Body => *self,
            // tau = J^T tau_bar
            Frame::Earth => Self::body(transform_matrix(psi).transpose() * self.vec),
        }
    }

    /// Express this force in the earth frame at the given yaw angle.
    pub fn to_earth(&self, psi: f64) -> Self {
        match self.frame {
            Frame::Earth => *self,
            // tau_bar = J^{-T} tau = J tau
            Frame::Body => Self::earth(transform_matrix(psi) * self.vec),
        }
    }
}

/// Relative scale factors applied to the plant parameters to build a
/// perturbed "true" model; the controllers keep seeing the nominal one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintySpec {
    /// Scale on the added-mass coefficients.
    pub m: f64,
    /// Scale on the Coriolis-centripetal matrix.
    pub c: f64,
    /// Scale on the drag coefficients.
    pub d: f64,
    /// Scale on the gravity/buoyancy forces.
    pub g: f64,
}

impl UncertaintySpec {
    pub fn uniform(scale: f64) -> Self {
        Self {
            m: scale,
            c: scale,
            d: scale,
            g: scale,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0 && self.c == 0.0 && self.d == 0.0 && self.g == 0.0
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [("m", self.m), ("c", self.c), ("d", self.d), ("g", self.g)] {
            if !(value > -1.0 && value < 1.0) {
                v.push(format!(
                    "uncertainty: scale {} = {} must lie in (-1, 1)",
                    name, value
                ));
            }
        }
        v
    }
}

/// Errors from model construction.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("uncertainty scale {name} = {value} outside (-1, 1)")]
    UncertaintyOutOfRange { name: &'static str, value: f64 },
}

/// Body-frame dynamics terms. `m` and `d` are diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyMatrices {
    pub m: Vec4,
    pub c: Mat4,
    pub d: Vec4,
    pub g: Vec4,
}

/// Earth-frame dynamics terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthMatrices {
    pub m: Mat4,
    pub c: Mat4,
    pub d: Mat4,
    pub g: Vec4,
}

/// Kinematic transform J between body and earth frames at yaw `psi`.
///
/// The 2x2 upper-left block rotates the horizontal plane; heave and yaw
/// pass through. J is orthogonal, so `J^-1 = J^T` and `J^-T = J`.
pub fn transform_matrix(psi: f64) -> Mat4 {
    let (s, c) = psi.sin_cos();
    Matrix4::new(
        c, -s, 0.0, 0.0, //
        s, c, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Analytic time derivative of [`transform_matrix`], `dJ/dt = (dJ/dpsi) * psi_dot`.
pub fn transform_matrix_derivative(psi: f64, psi_dot: f64) -> Mat4 {
    let (s, c) = psi.sin_cos();
    Matrix4::new(
        -s, -c, 0.0, 0.0, //
        c, -s, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    ) * psi_dot
}

/// Inertia, Coriolis, drag, and restoring terms in the body frame.
pub fn body_frame_matrices(params: &AuvParams, v: &BodyVelocity) -> BodyMatrices {
    let m = params.effective_inertia();

    // Off-diagonal surge/sway coupling into and out of the yaw axis.
    let mut c = Mat4::zeros();
    c[(0, 3)] = -m[1] * v.v;
    c[(1, 3)] = m[0] * v.u;
    c[(3, 0)] = m[1] * v.v;
    c[(3, 1)] = -m[0] * v.u;
    c *= params.coriolis_scale;

    let [x_u, y_v, z_w, n_r, x_uu, y_vv, z_ww, n_rr] = params.drag_coefficients();
    let d = Vec4::new(
        -x_u - x_uu * v.u.abs(),
        -y_v - y_vv * v.v.abs(),
        -z_w - z_ww * v.w.abs(),
        -n_r - n_rr * v.r.abs(),
    );

    let g = Vec4::new(0.0, 0.0, params.restoring_force(), 0.0);

    BodyMatrices { m, c, d, g }
}

/// Dynamics terms transformed to the earth frame at pose `eta` and
/// earth-frame velocity `eta_dot`.
///
/// `M(eta) = J M J^T` stays symmetric positive definite; the Coriolis term
/// picks up the `M J^T Jdot` correction from the moving frame, with `Jdot`
/// computed analytically from the yaw rate.
pub fn earth_frame_matrices(params: &AuvParams, eta: &Vec4, eta_dot: &Vec4) -> EarthMatrices {
    let psi = eta[3];
    let j = transform_matrix(psi);
    let j_t = j.transpose();
    let j_dot = transform_matrix_derivative(psi, eta_dot[3]);

    let v = BodyVelocity::from_vector(&(j_t * eta_dot));
    let body = body_frame_matrices(params, &v);
    let m_body = Mat4::from_diagonal(&body.m);

    EarthMatrices {
        m: j * m_body * j_t,
        c: j * (body.c - m_body * j_t * j_dot) * j_t,
        d: j * Mat4::from_diagonal(&body.d) * j_t,
        g: j * body.g,
    }
}

/// Build the "true plant" parameter set realizing the given relative
/// uncertainty: added-mass coefficients scale by `(1 + m)`, drag
/// coefficients by `(1 + d)`, gravity/buoyancy by `(1 + g)`, and the
/// Coriolis matrix by `(1 + c)`.
pub fn apply_uncertainty(
    params: &AuvParams,
    spec: &UncertaintySpec,
) -> Result<AuvParams, ModelError> {
    for (name, value) in [("m", spec.m), ("c", spec.c), ("d", spec.d), ("g", spec.g)] {
        if !(value > -1.0 && value < 1.0) {
            return Err(ModelError::UncertaintyOutOfRange { name, value });
        }
    }
    let mut p = *params;
    let sm = 1.0 + spec.m;
    p.x_udot *= sm;
    p.y_vdot *= sm;
    p.z_wdot *= sm;
    p.n_rdot *= sm;
    let sd = 1.0 + spec.d;
    p.x_u *= sd;
    p.y_v *= sd;
    p.z_w *= sd;
    p.n_r *= sd;
    p.x_uu *= sd;
    p.y_vv *= sd;
    p.z_ww *= sd;
    p.n_rr *= sd;
    let sg = 1.0 + spec.g;
    p.gravity_force *= sg;
    p.buoyancy_force *= sg;
    p.coriolis_scale *= 1.0 + spec.c;
    Ok(p)
}

/// Plant state derivative in the earth frame.
///
/// Returns `(eta_dot, eta_ddot)` with
/// `eta_ddot = M(eta)^-1 (tau_bar + d - C(eta_dot, eta) eta_dot - D(eta_dot, eta) eta_dot - g(eta))`.
/// Both the applied force and the disturbance must be earth-frame.
pub fn state_derivative(
    params: &AuvParams,
    eta: &Vec4,
    eta_dot: &Vec4,
    tau_bar: &GeneralizedForce,
    disturbance: &Vec4,
) -> (Vec4, Vec4) {
    assert_eq!(
        tau_bar.frame,
        Frame::Earth,
        "state_derivative requires an earth-frame force"
    );
    let em = earth_frame_matrices(params, eta, eta_dot);
    let rhs = tau_bar.vec + disturbance - em.c * eta_dot - em.d * eta_dot - em.g;
    let eta_ddot =
        em.m.lu()
            .solve(&rhs)
            .expect("earth-frame inertia matrix is invertible by construction");
    (*eta_dot, eta_ddot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    fn random_vec4(rng: &mut ChaCha8Rng, scale: f64) -> Vec4 {
        Vec4::new(
            uniform(rng, -scale, scale),
            uniform(rng, -scale, scale),
            uniform(rng, -scale, scale),
            uniform(rng, -scale, scale),
        )
    }

    #[test]
    fn transform_at_zero_is_identity() {
        assert_eq!(transform_matrix(0.0), Mat4::identity());
    }

    #[test]
    fn transform_at_quarter_turn() {
        let j = transform_matrix(FRAC_PI_2);
        let expected = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        assert_relative_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn transform_is_orthogonal_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let psi = uniform(&mut rng, -10.0, 10.0);
            let j = transform_matrix(psi);
            let residual = j.transpose() * j - Mat4::identity();
            assert!(residual.amax() < 1e-14, "psi = {psi}");
            assert_relative_eq!(j.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for _ in 0..100 {
            let psi = uniform(&mut rng, -5.0, 5.0);
            let psi_dot = uniform(&mut rng, -2.0, 2.0);
            let analytic = transform_matrix_derivative(psi, psi_dot);
            let numeric = (transform_matrix(psi + h * psi_dot)
                - transform_matrix(psi - h * psi_dot))
                / (2.0 * h);
            assert!((analytic - numeric).amax() < 1e-6);
        }
    }

    #[test]
    fn inertia_diagonal_matches_reference_parameters() {
        let m = AuvParams::default().effective_inertia();
        assert_relative_eq!(m[0], 54.5476, epsilon = 1e-12);
        assert_relative_eq!(m[1], 54.595, epsilon = 1e-12);
        assert_relative_eq!(m[2], 54.78, epsilon = 1e-12);
        assert_relative_eq!(m[3], 13.5904, epsilon = 1e-12);
    }

    #[test]
    fn drag_and_coriolis_at_rest() {
        let body = body_frame_matrices(
            &AuvParams::default(),
            &BodyVelocity::new(0.0, 0.0, 0.0, 0.0),
        );
        assert_eq!(body.c, Mat4::zeros());
        // Literal coefficient signs: slightly negative surge/yaw damping.
        assert_relative_eq!(body.d[0], -0.002, epsilon = 1e-15);
        assert_relative_eq!(body.d[1], 0.1, epsilon = 1e-15);
        assert_relative_eq!(body.d[2], 0.3, epsilon = 1e-15);
        assert_relative_eq!(body.d[3], -0.03, epsilon = 1e-15);
    }

    #[test]
    fn restoring_vector_matches_reference_parameters() {
        let body = body_frame_matrices(
            &AuvParams::default(),
            &BodyVelocity::new(0.0, 0.0, 0.0, 0.0),
        );
        assert_eq!(body.g, Vec4::new(0.0, 0.0, -481.6, 0.0));
    }

    #[test]
    fn coriolis_entries_at_unit_surge_sway() {
        let body = body_frame_matrices(
            &AuvParams::default(),
            &BodyVelocity::new(1.0, 1.0, 0.0, 0.0),
        );
        assert_relative_eq!(body.c[(0, 3)], -54.595, epsilon = 1e-12);
        assert_relative_eq!(body.c[(1, 3)], 54.5476, epsilon = 1e-12);
        assert_relative_eq!(body.c[(3, 0)], 54.595, epsilon = 1e-12);
        assert_relative_eq!(body.c[(3, 1)], -54.5476, epsilon = 1e-12);
    }

    #[test]
    fn coriolis_is_skew_symmetric() {
        let params = AuvParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v = BodyVelocity::from_vector(&random_vec4(&mut rng, 3.0));
            let c = body_frame_matrices(&params, &v).c;
            assert!((c + c.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn stabilizing_drag_override_is_dissipative() {
        let params = AuvParams {
            stabilizing_drag_signs: true,
            ..AuvParams::default()
        };
        let body = body_frame_matrices(&params, &BodyVelocity::new(1.0, 1.0, 1.0, 1.0));
        for i in 0..4 {
            assert!(body.d[i] > 0.0, "axis {i} damping {}", body.d[i]);
        }
    }

    #[test]
    fn earth_frame_reduces_to_body_frame_at_zero_yaw() {
        let params = AuvParams::default();
        let eta = Vec4::new(3.0, -2.0, 1.0, 0.0);
        let eta_dot = Vec4::zeros();
        let em = earth_frame_matrices(&params, &eta, &eta_dot);
        assert_relative_eq!(
            em.m,
            Mat4::from_diagonal(&params.effective_inertia()),
            epsilon = 1e-12
        );
        assert_eq!(em.c, Mat4::zeros());
    }

    #[test]
    fn earth_frame_coriolis_vanishes_at_rest() {
        let params = AuvParams::default();
        let eta = Vec4::new(0.5, 0.5, 0.5, 1.3);
        let em = earth_frame_matrices(&params, &eta, &Vec4::zeros());
        assert!(em.c.amax() < 1e-12);
    }

    #[test]
    fn earth_frame_inertia_is_symmetric_positive_definite() {
        let params = AuvParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let eta = random_vec4(&mut rng, 5.0);
            let eta_dot = random_vec4(&mut rng, 2.0);
            let m = earth_frame_matrices(&params, &eta, &eta_dot).m;
            assert!((m - m.transpose()).amax() < 1e-10);
            let sym = (m + m.transpose()) * 0.5;
            let eig = sym.symmetric_eigen().eigenvalues;
            assert!(eig.min() > 0.0, "eta = {eta:?}");
        }
    }

    #[test]
    fn zero_uncertainty_is_identity() {
        let params = AuvParams::default();
        let perturbed = apply_uncertainty(&params, &UncertaintySpec::default()).unwrap();
        assert_eq!(params, perturbed);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let eta = random_vec4(&mut rng, 4.0);
            let eta_dot = random_vec4(&mut rng, 2.0);
            let a = earth_frame_matrices(&params, &eta, &eta_dot);
            let b = earth_frame_matrices(&perturbed, &eta, &eta_dot);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uncertainty_scales_coefficient_groups() {
        let params = AuvParams::default();
        let spec = UncertaintySpec {
            m: 0.2,
            ..UncertaintySpec::default()
        };
        let p = apply_uncertainty(&params, &spec).unwrap();
        assert_relative_eq!(p.x_udot, -7.6e-3 * 1.2, epsilon = 1e-15);
        assert_relative_eq!(p.n_rdot, -3.4e-3 * 1.2, epsilon = 1e-15);
        assert!(p.effective_inertia().min() > 0.0);

        let spec = UncertaintySpec {
            g: -0.1,
            ..UncertaintySpec::default()
        };
        let p = apply_uncertainty(&params, &spec).unwrap();
        assert_relative_eq!(p.restoring_force(), -433.44, epsilon = 1e-10);
    }

    #[test]
    fn uncertainty_out_of_range_is_rejected() {
        let spec = UncertaintySpec {
            d: 1.0,
            ..UncertaintySpec::default()
        };
        assert!(apply_uncertainty(&AuvParams::default(), &spec).is_err());
        assert!(!spec.validate().is_empty());
    }

    #[test]
    fn acceleration_at_rest_is_restoring_over_heave_inertia() {
        let params = AuvParams::default();
        let eta = Vec4::new(0.0, 0.0, 0.0, 0.9);
        let (_, acc) = state_derivative(
            &params,
            &eta,
            &Vec4::zeros(),
            &GeneralizedForce::earth(Vec4::zeros()),
            &Vec4::zeros(),
        );
        let expected = Vec4::new(0.0, 0.0, 481.6 / 54.78, 0.0);
        assert_relative_eq!(acc, expected, epsilon = 1e-10);
    }

    #[test]
    fn restoring_feedforward_balances_plant() {
        let params = AuvParams::default();
        let eta = Vec4::new(1.0, 2.0, 3.0, -0.7);
        let g = earth_frame_matrices(&params, &eta, &Vec4::zeros()).g;
        let (_, acc) = state_derivative(
            &params,
            &eta,
            &Vec4::zeros(),
            &GeneralizedForce::earth(g),
            &Vec4::zeros(),
        );
        assert!(acc.amax() < 1e-12);
    }

    /// Independent oracle: evaluate the body-frame equations directly and
    /// map the result back to earth-frame acceleration.
    fn body_route_acceleration(
        params: &AuvParams,
        eta: &Vec4,
        eta_dot: &Vec4,
        tau_bar: &Vec4,
        d_earth: &Vec4,
    ) -> Vec4 {
        let psi = eta[3];
        let j = transform_matrix(psi);
        let j_t = j.transpose();
        let v = BodyVelocity::from_vector(&(j_t * eta_dot));
        let body = body_frame_matrices(params, &v);
        let tau = j_t * tau_bar;
        let d_body = j_t * d_earth;
        let vv = v.to_vector();
        let rhs = tau + d_body
            - body.c * vv
            - Vec4::from_iterator(body.d.iter().zip(vv.iter()).map(|(d, v)| d * v))
            - body.g;
        let v_dot = Vec4::from_iterator(rhs.iter().zip(body.m.iter()).map(|(r, m)| r / m));
        transform_matrix_derivative(psi, eta_dot[3]) * vv + j * v_dot
    }

    #[test]
    fn earth_and_body_routes_agree() {
        let params = AuvParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let eta = random_vec4(&mut rng, 5.0);
            let eta_dot = random_vec4(&mut rng, 2.0);
            let tau_bar = random_vec4(&mut rng, 100.0);
            let d = random_vec4(&mut rng, 5.0);
            let (_, earth) = state_derivative(
                &params,
                &eta,
                &eta_dot,
                &GeneralizedForce::earth(tau_bar),
                &d,
            );
            let body = body_route_acceleration(&params, &eta, &eta_dot, &tau_bar, &d);
            let scale = earth.norm().max(1.0);
            assert!(
                (earth - body).norm() / scale < 1e-8,
                "earth {earth:?} vs body {body:?}"
            );
        }
    }

    #[test]
    fn force_frame_tags_round_trip() {
        let f = GeneralizedForce::earth(Vec4::new(1.0, 2.0, 3.0, 4.0));
        let back = f.to_body(0.8).to_earth(0.8);
        assert_relative_eq!(f.vec, back.vec, epsilon = 1e-14);
        assert_eq!(back.frame, Frame::Earth);
        // Heave and yaw components are frame-independent.
        let b = f.to_body(PI / 3.0);
        assert_eq!(b.vec[2], 3.0);
        assert_eq!(b.vec[3], 4.0);
    }
}

//! Composite tracking error on SE(3) and the passivity-based control wrench.

use nalgebra::{Matrix3, Vector3, Vector6};

use crate::math::{hat, vee};
use crate::vehicle::{VehicleParams, VehicleState, Wrench};

use super::GainSet;

/// Reference sample with attitude and twist derivatives, everything the 6-D
/// law needs at one control instant.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    /// Reference position, inertial (m).
    pub x_r: Vector3<f64>,
    /// Reference velocity, inertial (m/s).
    pub v_r: Vector3<f64>,
    /// Reference acceleration, inertial (m/s^2).
    pub a_r: Vector3<f64>,
    /// Reference attitude (body-to-inertial).
    pub r_r: Matrix3<f64>,
    /// Reference angular velocity, reference-body frame (rad/s).
    pub omega_r: Vector3<f64>,
    /// Reference angular acceleration, reference-body frame (rad/s^2).
    pub omega_dot_r: Vector3<f64>,
}

impl ReferenceState {
    pub fn hover(x_r: Vector3<f64>) -> Self {
        Self {
            x_r,
            v_r: Vector3::zeros(),
            a_r: Vector3::zeros(),
            r_r: Matrix3::identity(),
            omega_r: Vector3::zeros(),
            omega_dot_r: Vector3::zeros(),
        }
    }
}

/// Stacked configuration/velocity errors and the composite error variable.
#[derive(Debug, Clone, Copy)]
pub struct CompositeError {
    /// [body-frame position error; attitude error (vee map)].
    pub x_tilde: Vector6<f64>,
    /// [velocity error; angular-velocity error].
    pub v_tilde: Vector6<f64>,
    /// s = v_tilde + Lambda x_tilde.
    pub s: Vector6<f64>,
}

fn stack(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

fn split(v: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]))
}

/// Tracking errors of `state` against `reference`.
///
/// The attitude error is `e_R = 1/2 (R_r^T R - R^T R_r)^vee` and the
/// angular-velocity error is `e_w = w - R^T R_r w_r`. The position error is
/// rotated into the body frame so every component of s lives in the frame
/// the forces act in.
pub fn composite_error(
    state: &VehicleState,
    reference: &ReferenceState,
    gains: &GainSet,
) -> CompositeError {
    let r = &state.r;
    let a = r.transpose() * reference.r_r; // R^T R_r
    let e_x = r.transpose() * (state.p - reference.x_r);
    let e_v = state.v - r.transpose() * reference.v_r;
    let e_rot = 0.5 * vee(&(a.transpose() - a));
    let e_w = state.omega - a * reference.omega_r;

    let x_tilde = stack(&e_x, &e_rot);
    let v_tilde = stack(&e_v, &e_w);
    let s = v_tilde + gains.lambda_mix * x_tilde;
    CompositeError { x_tilde, v_tilde, s }
}

/// Passivity-based tracking wrench.
///
/// With the shifted twist `V_s = V - s`, the law
/// `u = M dV_s + C V_s - G - K s - tau_d_hat` closes the loop as
/// `M ds + C s + K s = tau_d - tau_d_hat`, so a perfect disturbance feed
/// drives s to zero exponentially.
pub fn control_wrench(
    state: &VehicleState,
    reference: &ReferenceState,
    gains: &GainSet,
    params: &VehicleParams,
    tau_d_hat: &Wrench,
) -> Wrench {
    let r = &state.r;
    let w = &state.omega;
    let a = r.transpose() * reference.r_r;
    let err = composite_error(state, reference, gains);

    // shifted twist V_s = V - s and its analytic derivative
    let v_state = stack(&state.v, w);
    let v_s = v_state - err.s;
    let (v_sv, v_sw) = split(&v_s);

    let v_r_b = r.transpose() * reference.v_r;
    let d_v_r_b = -w.cross(&v_r_b) + r.transpose() * reference.a_r;
    let w_r_b = a * reference.omega_r;
    let d_w_r_b = -w.cross(&w_r_b) + a * reference.omega_dot_r;

    let e_x = r.transpose() * (state.p - reference.x_r);
    let e_v = state.v - v_r_b;
    let d_e_x = -w.cross(&e_x) + e_v;

    let q = a.transpose(); // R_r^T R
    let q_dot = q * hat(w) - hat(&reference.omega_r) * q;
    let d_e_rot = 0.5 * vee(&(q_dot - q_dot.transpose()));

    let d_v_s = stack(&d_v_r_b, &d_w_r_b) - gains.lambda_mix * stack(&d_e_x, &d_e_rot);
    let (d_v_sv, d_v_sw) = split(&d_v_s);

    let g_b = params.gravity_wrench(r);
    let ks = gains.k * err.s;
    let (ks_v, ks_w) = split(&ks);

    let force = params.m * d_v_sv + params.m * w.cross(&v_sv)
        - g_b.force
        - ks_v
        - tau_d_hat.force;
    let moment = params.inertia * d_v_sw + w.cross(&(params.inertia * v_sw))
        - ks_w
        - tau_d_hat.moment;
    Wrench::new(force, moment)
}

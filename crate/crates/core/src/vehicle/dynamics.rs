//! Equations of motion and the RK4 episode step.

use nalgebra::{Matrix3, Vector3};

use crate::bemt::{RotorInflow, RotorWrench};
use crate::math::{hat, orthonormalize};

use super::params::{aggregate_wrench, rotor_positions, MotorModel, VehicleParams, VehicleState, Wrench};

/// Source of per-rotor aerodynamic wrenches for the plant. The boolean flags
/// an out-of-envelope evaluation (table clamp or solver fallback).
pub trait RotorAero {
    fn rotor_wrench(&self, rotor: usize, inflow: &RotorInflow) -> (RotorWrench, bool);
}

/// No rotor aerodynamics; used for ballistic and integrator sanity tests.
pub struct NoAero;

impl RotorAero for NoAero {
    fn rotor_wrench(&self, _rotor: usize, _inflow: &RotorInflow) -> (RotorWrench, bool) {
        (RotorWrench::zero(), false)
    }
}

/// Per-step environment inputs to the integrator. Hub winds are sampled once
/// per step in the inertial frame and held across RK4 stages (the field
/// varies on length scales far above one-millisecond vehicle motion).
pub struct ForceInputs<'a> {
    pub aero: &'a dyn RotorAero,
    pub winds_inertial: [Vector3<f64>; 4],
    /// Additional body-frame wrench evaluated at each stage state (contact).
    pub extra: &'a dyn Fn(&VehicleState) -> Wrench,
}

impl<'a> ForceInputs<'a> {
    pub fn free_flight(aero: &'a dyn RotorAero, wind: Vector3<f64>) -> Self {
        static ZERO: fn(&VehicleState) -> Wrench = |_| Wrench::zero();
        Self { aero, winds_inertial: [wind; 4], extra: &ZERO }
    }
}

/// Time derivative of the rigid-body state.
#[derive(Debug, Clone)]
pub struct StateDerivative {
    pub r_dot: Matrix3<f64>,
    pub p_dot: Vector3<f64>,
    pub v_dot: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
}

/// Rigid-body acceleration under an external wrench (aero + contact); the
/// gravity wrench is applied internally from the current attitude.
pub fn dynamics_derivative(
    state: &VehicleState,
    tau_ext: &Wrench,
    params: &VehicleParams,
) -> StateDerivative {
    let g_b = params.gravity_wrench(&state.r);
    let f = tau_ext.force + g_b.force;
    let m = tau_ext.moment + g_b.moment;

    // M V_dot + C V = tau_ext + G with M = diag(mI, J),
    // C = [[m hat(w), 0], [0, hat(w) J]]
    let v_dot = f / params.m - state.omega.cross(&state.v);
    let j_omega = params.inertia * state.omega;
    let omega_dot = params
        .inertia
        .try_inverse()
        .expect("inertia invertible")
        * (m - state.omega.cross(&j_omega));

    StateDerivative {
        r_dot: state.r * hat(&state.omega),
        p_dot: state.r * state.v,
        v_dot,
        omega_dot,
    }
}

/// Exact discrete first-order motor response over `dt`, clamped to the
/// speed envelope. Unconditionally stable for any step size.
pub fn motor_step(n: f64, n_cmd: f64, motor: &MotorModel, dt: f64) -> f64 {
    let n_next = n_cmd + (n - n_cmd) * (-dt / motor.t_m).exp();
    n_next.clamp(motor.n_min, motor.n_max)
}

fn external_wrench(
    state: &VehicleState,
    n: &[f64; 4],
    inputs: &ForceInputs,
    params: &VehicleParams,
) -> (Wrench, bool) {
    let positions = rotor_positions(params);
    let mut wrenches = [RotorWrench::zero(); 4];
    let mut flagged = false;
    let r_t = state.r.transpose();
    for i in 0..4 {
        let inflow = RotorInflow {
            n: n[i],
            v_wind: r_t * inputs.winds_inertial[i],
            v_prop: state.hub_velocity(&positions[i]),
        };
        let (w, flag) = inputs.aero.rotor_wrench(i, &inflow);
        wrenches[i] = w;
        flagged |= flag;
    }
    let aero = aggregate_wrench(&wrenches, params);
    let contact = (inputs.extra)(state);
    (aero + contact, flagged)
}

/// One RK4 step of the rigid-body states with rotor speeds following the
/// exact first-order motor response to `n_cmd`. Returns the new state and
/// whether any rotor evaluation was out of envelope during the step.
pub fn integrate_step(
    state: &VehicleState,
    n_cmd: &[f64; 4],
    inputs: &ForceInputs,
    params: &VehicleParams,
    dt: f64,
) -> (VehicleState, bool) {
    debug_assert!(dt > 0.0);
    let motor = &params.motor;
    let n_at = |tau: f64| -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = motor_step(state.n[i], n_cmd[i], motor, tau);
        }
        out
    };
    let n_half = n_at(0.5 * dt);
    let n_full = n_at(dt);

    let mut flagged = false;
    let mut eval = |s: &VehicleState, n: &[f64; 4]| -> StateDerivative {
        let (tau_ext, flag) = external_wrench(s, n, inputs, params);
        flagged |= flag;
        dynamics_derivative(s, &tau_ext, params)
    };

    let advance = |s: &VehicleState, d: &StateDerivative, h: f64| VehicleState {
        r: s.r + d.r_dot * h,
        p: s.p + d.p_dot * h,
        v: s.v + d.v_dot * h,
        omega: s.omega + d.omega_dot * h,
        n: s.n,
    };

    let k1 = eval(state, &state.n);
    let s2 = advance(state, &k1, 0.5 * dt);
    let k2 = eval(&s2, &n_half);
    let s3 = advance(state, &k2, 0.5 * dt);
    let k3 = eval(&s3, &n_half);
    let s4 = advance(state, &k3, dt);
    let k4 = eval(&s4, &n_full);

    let sixth = dt / 6.0;
    let mut next = VehicleState {
        r: state.r + (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot) * sixth,
        p: state.p + (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot) * sixth,
        v: state.v + (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) * sixth,
        omega: state.omega + (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot) * sixth,
        n: n_full,
    };
    next.r = orthonormalize(&next.r);
    (next, flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> VehicleParams {
        VehicleParams::default_quad()
    }

    #[test]
    fn hover_equilibrium_has_zero_derivative() {
        let p = params();
        let state = VehicleState::at_rest(Vector3::zeros());
        // external wrench exactly cancels gravity
        let tau = Wrench::new(-p.gravity_wrench(&state.r).force, Vector3::zeros());
        let d = dynamics_derivative(&state, &tau, &p);
        assert_relative_eq!(d.v_dot, Vector3::zeros(), epsilon = 1e-15);
        assert_relative_eq!(d.omega_dot, Vector3::zeros(), epsilon = 1e-15);
        assert_relative_eq!(d.p_dot, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn pure_rotation_follows_euler_equation() {
        let p = params();
        let mut state = VehicleState::at_rest(Vector3::zeros());
        state.omega = Vector3::new(0.0, 0.0, 2.0);
        // cancel gravity so the translational row isolates the Coriolis term
        let tau = Wrench::new(-p.gravity_wrench(&state.r).force, Vector3::zeros());
        let d = dynamics_derivative(&state, &tau, &p);
        assert_relative_eq!(d.v_dot, Vector3::zeros(), epsilon = 1e-15);
        let expect = p.inertia.try_inverse().unwrap() * (-state.omega.cross(&(p.inertia * state.omega)));
        assert_relative_eq!(d.omega_dot, expect, epsilon = 1e-15);
    }

    #[test]
    fn motor_fixed_point_and_half_life() {
        let m = MotorModel::default();
        assert_eq!(motor_step(80.0, 80.0, &m, 0.01), 80.0);
        let half = motor_step(0.0, 100.0, &m, m.t_m * std::f64::consts::LN_2);
        assert_relative_eq!(half, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn motor_one_time_constant_reaches_63_percent() {
        let m = MotorModel { t_m: 0.05, ..MotorModel::default() };
        let n = motor_step(0.0, 100.0, &m, 0.05);
        assert_relative_eq!(n, 100.0 * (1.0 - (-1.0f64).exp()), epsilon = 1e-12);
    }

    #[test]
    fn motor_update_is_monotone_between_endpoints() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = MotorModel { n_min: 0.0, n_max: 1e6, ..MotorModel::default() };
        for _ in 0..200 {
            let n = rng.random_range(0.0..200.0);
            let cmd = rng.random_range(0.0..200.0);
            let dt = rng.random_range(1e-4..0.5);
            let next = motor_step(n, cmd, &m, dt);
            let (lo, hi) = if n <= cmd { (n, cmd) } else { (cmd, n) };
            assert!(next >= lo - 1e-12 && next <= hi + 1e-12);
        }
    }

    #[test]
    fn free_fall_matches_ballistic_solution() {
        let p = params();
        let mut state = VehicleState::at_rest(Vector3::new(0.0, 0.0, 10.0));
        state.v = Vector3::new(1.0, -0.5, 0.2);
        let v0 = state.velocity_inertial();
        let p0 = state.p;
        let inputs = ForceInputs::free_flight(&NoAero, Vector3::zeros());
        let dt = 1e-3;
        let steps = 1000;
        let mut s = state;
        for _ in 0..steps {
            s = integrate_step(&s, &[0.0; 4], &inputs, &p, dt).0;
        }
        let t = steps as f64 * dt;
        let expect = p0 + v0 * t + 0.5 * p.g * t * t;
        assert!((s.p - expect).norm() / expect.norm() < 1e-9, "drift {:?}", s.p - expect);
    }

    #[test]
    fn torque_free_tumbling_conserves_rotational_energy() {
        let p = params();
        let mut s = VehicleState::at_rest(Vector3::zeros());
        s.omega = Vector3::new(1.2, -0.8, 2.0);
        let e0 = 0.5 * s.omega.dot(&(p.inertia * s.omega));
        let inputs = ForceInputs::free_flight(&NoAero, Vector3::zeros());
        for _ in 0..10_000 {
            s = integrate_step(&s, &[0.0; 4], &inputs, &p, 1e-3).0;
        }
        let e1 = 0.5 * s.omega.dot(&(p.inertia * s.omega));
        assert!((e1 - e0).abs() / e0 < 1e-6, "energy drift {}", (e1 - e0) / e0);
        // attitude stays orthonormal through re-orthonormalization
        let err = (s.r.transpose() * s.r - Matrix3::identity()).norm();
        assert!(err < 1e-9, "orthonormality drift {err}");
    }

    #[test]
    fn rk4_order_on_smooth_tumble() {
        let p = params();
        let mut init = VehicleState::at_rest(Vector3::zeros());
        init.omega = Vector3::new(0.7, -1.1, 0.9);
        init.v = Vector3::new(0.5, 0.2, -0.1);
        let inputs = ForceInputs::free_flight(&NoAero, Vector3::zeros());

        let run = |dt: f64| {
            let mut s = init.clone();
            let steps = (0.5 / dt).round() as usize;
            for _ in 0..steps {
                s = integrate_step(&s, &[0.0; 4], &inputs, &p, dt).0;
            }
            s
        };
        let a = run(2e-3);
        let b = run(1e-3);
        let c = run(5e-4);
        let d1 = (a.p - b.p).norm() + (a.v - b.v).norm() + (a.omega - b.omega).norm();
        let d2 = (b.p - c.p).norm() + (b.v - c.v).norm() + (b.omega - c.omega).norm();
        let order = (d1 / d2).log2();
        assert!(order >= 3.5, "observed order {order}");
    }
}

//! Vehicle parameters, state, and body-frame wrench type.
//!
//! Frame convention, stated once: the inertial frame is z-up, the body frame
//! carries thrust along +z, and the canonical attitude `R` rotates body
//! vectors into inertial vectors. Gravity `g = (0, 0, -9.81)` is inertial and
//! maps into the body frame through `R^T`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bemt::RotorWrench;

/// Combined force (N) / moment (N m) pair, body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), moment: Vector3::zeros() }
    }

    pub fn new(force: Vector3<f64>, moment: Vector3<f64>) -> Self {
        Self { force, moment }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.moment.iter()).all(|v| v.is_finite())
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench { force: self.force + rhs.force, moment: self.moment + rhs.moment }
    }
}

/// First-order rotor speed response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorModel {
    /// Motor time constant (s).
    pub t_m: f64,
    pub n_max: f64,
    pub n_min: f64,
}

impl Default for MotorModel {
    fn default() -> Self {
        Self { t_m: 0.05, n_max: 200.0, n_min: 0.0 }
    }
}

/// Mass, inertia, geometry, and rotor layout of the quadrotor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Total mass (kg).
    pub m: f64,
    /// Body-frame inertia matrix (kg m^2).
    pub inertia: Matrix3<f64>,
    /// In-plane rotor distance from the center of mass (m).
    pub d_h: f64,
    /// Vertical rotor offset above the center of mass (m).
    pub d_v: f64,
    /// Torque coefficient relating rotor thrust to reactive yaw torque (m).
    pub c_tau_f: f64,
    /// Per-rotor spin direction, +1 CCW / -1 CW.
    pub spin_pattern: [i8; 4],
    /// Gravitational acceleration vector, inertial frame (m/s^2).
    pub g: Vector3<f64>,
    pub motor: MotorModel,
}

impl VehicleParams {
    /// The simulated quadrotor: 2.1395 kg, rotors 0.28 m out and 0.095 m up,
    /// diag(0.0820, 0.0845, 0.1377) inertia, CCW-CW-CCW-CW.
    pub fn default_quad() -> Self {
        Self {
            m: 2.1395,
            inertia: Matrix3::from_diagonal(&Vector3::new(0.0820, 0.0845, 0.1377)),
            d_h: 0.28,
            d_v: 0.095,
            c_tau_f: 8.004e-3,
            spin_pattern: [1, -1, 1, -1],
            g: Vector3::new(0.0, 0.0, -9.81),
            motor: MotorModel::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.m > 0.0) {
            return Err("mass must be positive".into());
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 {
            return Err("inertia must be symmetric".into());
        }
        if self.inertia.symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
            return Err("inertia must be positive definite".into());
        }
        if !(self.d_h > 0.0) {
            return Err("d_h must be positive".into());
        }
        Ok(())
    }

    /// Gravity wrench in the body frame for attitude `R` (body-to-inertial).
    pub fn gravity_wrench(&self, r: &Matrix3<f64>) -> Wrench {
        Wrench::new(self.m * (r.transpose() * self.g), Vector3::zeros())
    }

    /// Hover thrust per rotor (N).
    pub fn hover_thrust_per_rotor(&self) -> f64 {
        self.m * self.g.norm() / 4.0
    }
}

/// Rotor hub positions in the body frame for a cross configuration.
pub fn rotor_positions(params: &VehicleParams) -> [Vector3<f64>; 4] {
    let (d_h, d_v) = (params.d_h, params.d_v);
    [
        Vector3::new(d_h, 0.0, d_v),
        Vector3::new(0.0, d_h, d_v),
        Vector3::new(-d_h, 0.0, d_v),
        Vector3::new(0.0, -d_h, d_v),
    ]
}

/// Sum per-rotor wrenches into the body wrench: `F = sum F_i`,
/// `T = sum (r_i x F_i + T_i)`.
pub fn aggregate_wrench(rotor_wrenches: &[RotorWrench; 4], params: &VehicleParams) -> Wrench {
    let positions = rotor_positions(params);
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for (w, r) in rotor_wrenches.iter().zip(positions.iter()) {
        force += w.force;
        moment += r.cross(&w.force) + w.torque;
    }
    Wrench { force, moment }
}

/// Pose, twist, and rotor speeds of the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Attitude, body-to-inertial.
    pub r: Matrix3<f64>,
    /// Position, inertial (m).
    pub p: Vector3<f64>,
    /// Linear velocity, body frame (m/s).
    pub v: Vector3<f64>,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vector3<f64>,
    /// Rotor speeds (rev/s), nonnegative.
    pub n: [f64; 4],
}

impl VehicleState {
    pub fn at_rest(p: Vector3<f64>) -> Self {
        Self {
            r: Matrix3::identity(),
            p,
            v: Vector3::zeros(),
            omega: Vector3::zeros(),
            n: [0.0; 4],
        }
    }

    /// Inertial velocity of the vehicle.
    pub fn velocity_inertial(&self) -> Vector3<f64> {
        self.r * self.v
    }

    /// Body-frame velocity of rotor hub `i`.
    pub fn hub_velocity(&self, r_i: &Vector3<f64>) -> Vector3<f64> {
        self.v + self.omega.cross(r_i)
    }

    /// Inertial position of rotor hub `i`.
    pub fn hub_position(&self, r_i: &Vector3<f64>) -> Vector3<f64> {
        self.p + self.r * r_i
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().all(|v| v.is_finite())
            && self.p.iter().all(|v| v.is_finite())
            && self.v.iter().all(|v| v.is_finite())
            && self.omega.iter().all(|v| v.is_finite())
            && self.n.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotor_positions_cross_layout() {
        let p = VehicleParams::default_quad();
        let r = rotor_positions(&p);
        assert_eq!(r[0], Vector3::new(0.28, 0.0, 0.095));
        assert_eq!(r[1], Vector3::new(0.0, 0.28, 0.095));
        assert_eq!(r[2], Vector3::new(-0.28, 0.0, 0.095));
        assert_eq!(r[3], Vector3::new(0.0, -0.28, 0.095));
        let sum: Vector3<f64> = r.iter().sum();
        assert_relative_eq!(sum, Vector3::new(0.0, 0.0, 4.0 * 0.095), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_geometry_puts_rotors_at_origin() {
        let mut p = VehicleParams::default_quad();
        p.d_h = 0.0;
        p.d_v = 0.0;
        for r in rotor_positions(&p) {
            assert_eq!(r, Vector3::zeros());
        }
    }

    #[test]
    fn symmetric_hover_has_zero_moment() {
        let p = VehicleParams::default_quad();
        let f = 5.0;
        let make = |spin: f64| RotorWrench {
            force: Vector3::new(0.0, 0.0, f),
            torque: Vector3::new(0.0, 0.0, -spin * 0.04),
        };
        let ws = [make(1.0), make(-1.0), make(1.0), make(-1.0)];
        let total = aggregate_wrench(&ws, &p);
        assert_relative_eq!(total.force, Vector3::new(0.0, 0.0, 4.0 * f), epsilon = 1e-12);
        assert_relative_eq!(total.moment, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn single_rotor_thrust_moment_is_cross_product() {
        let p = VehicleParams::default_quad();
        let f = 2.0;
        let mut ws = [RotorWrench::zero(); 4];
        ws[0].force = Vector3::new(0.0, 0.0, f);
        let total = aggregate_wrench(&ws, &p);
        // r_1 x (0,0,f) with r_1 = (0.28, 0, 0.095): (0, -0.28 f, 0)
        assert_relative_eq!(total.moment, Vector3::new(0.0, -0.28 * f, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn uniform_lateral_force_induces_pitch_moment_via_dv() {
        let p = VehicleParams::default_quad();
        let fx = 1.5;
        let mut ws = [RotorWrench::zero(); 4];
        for w in &mut ws {
            w.force = Vector3::new(fx, 0.0, 0.0);
        }
        let total = aggregate_wrench(&ws, &p);
        // each r_i x (fx,0,0) contributes (0, d_v*fx, -r_iy*fx); y-parts sum to 4 d_v fx
        assert_relative_eq!(total.moment.y, 4.0 * 0.095 * fx, epsilon = 1e-12);
        assert_relative_eq!(total.moment.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(total.force, Vector3::new(4.0 * fx, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn aggregate_is_linear_in_each_rotor_wrench() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = VehicleParams::default_quad();
        let mut rand_wrench = || RotorWrench {
            force: Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
            torque: Vector3::new(0.0, 0.0, rng.random_range(-0.2..0.2)),
        };
        for _ in 0..20 {
            let a = [rand_wrench(), rand_wrench(), rand_wrench(), rand_wrench()];
            let b = [rand_wrench(), rand_wrench(), rand_wrench(), rand_wrench()];
            let mut sum = [RotorWrench::zero(); 4];
            for i in 0..4 {
                sum[i].force = a[i].force + b[i].force;
                sum[i].torque = a[i].torque + b[i].torque;
            }
            let wa = aggregate_wrench(&a, &p);
            let wb = aggregate_wrench(&b, &p);
            let ws = aggregate_wrench(&sum, &p);
            assert_relative_eq!(ws.force, wa.force + wb.force, epsilon = 1e-12);
            assert_relative_eq!(ws.moment, wa.moment + wb.moment, epsilon = 1e-12);
        }
    }
}

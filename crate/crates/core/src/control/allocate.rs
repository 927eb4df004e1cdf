//! Thrust/moment allocation to the four rotors and speed-command generation.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::bemt::{invert_thrust_saturating, RotorMapTable};
use crate::vehicle::VehicleParams;

/// 4x4 map from per-rotor thrusts to (F_z, M_x, M_y, M_z) in the z-up body
/// frame used throughout this crate.
pub fn allocation_matrix(params: &VehicleParams) -> Matrix4<f64> {
    let d = params.d_h;
    let c = params.c_tau_f;
    Matrix4::new(
        1.0, 1.0, 1.0, 1.0, //
        0.0, d, 0.0, -d, //
        -d, 0.0, d, 0.0, //
        -c, c, -c, c,
    )
}

/// Allocation result: per-rotor thrusts plus saturation bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct AllocationCommand {
    pub f_z: f64,
    pub moments: Vector3<f64>,
    pub f: [f64; 4],
    /// Fraction of the yaw-moment demand retained (1 = none shed).
    pub mz_scale: f64,
    /// Fraction of the roll/pitch demand retained.
    pub mxy_scale: f64,
    /// Set when any thrust was clamped at zero or a moment was shed.
    pub saturated: bool,
}

fn solve_exact(f_z: f64, m: Vector3<f64>, params: &VehicleParams) -> [f64; 4] {
    let d = params.d_h;
    let c = params.c_tau_f;
    let h = 0.25 * f_z;
    let ax = m.x / (2.0 * d);
    let ay = m.y / (2.0 * d);
    let az = m.z / (4.0 * c);
    [h - ay - az, h + ax + az, h + ay - az, h - ax + az]
}

/// Exact linear solve for per-rotor thrusts; negative thrusts are removed by
/// shedding yaw-moment demand first, then roll/pitch, preserving total
/// thrust (the moment columns are zero-sum so F_z is never affected).
pub fn allocate(f_z: f64, moments: Vector3<f64>, params: &VehicleParams) -> AllocationCommand {
    let full = solve_exact(f_z, moments, params);
    if full.iter().all(|&f| f >= 0.0) {
        return AllocationCommand {
            f_z,
            moments,
            f: full,
            mz_scale: 1.0,
            mxy_scale: 1.0,
            saturated: false,
        };
    }

    // largest gamma in [0,1] keeping f_i(gamma * M_z) >= 0
    let base = solve_exact(f_z, Vector3::new(moments.x, moments.y, 0.0), params);
    let yaw_part = solve_exact(0.0, Vector3::new(0.0, 0.0, moments.z), params);
    let mut gamma: f64 = 1.0;
    for i in 0..4 {
        if base[i] + yaw_part[i] < 0.0 && yaw_part[i] < 0.0 {
            gamma = gamma.min((-base[i] / yaw_part[i]).clamp(0.0, 1.0));
        }
    }
    if base.iter().all(|&f| f >= 0.0) {
        let m = Vector3::new(moments.x, moments.y, gamma * moments.z);
        let f = solve_exact(f_z, m, params);
        return AllocationCommand {
            f_z,
            moments,
            f: f.map(|v| v.max(0.0)),
            mz_scale: gamma,
            mxy_scale: 1.0,
            saturated: true,
        };
    }

    // roll/pitch demand alone exceeds the thrust budget: scale it too
    let hover = [0.25 * f_z; 4];
    let mxy_part = solve_exact(0.0, Vector3::new(moments.x, moments.y, 0.0), params);
    let mut beta: f64 = 1.0;
    for i in 0..4 {
        if hover[i] + mxy_part[i] < 0.0 && mxy_part[i] < 0.0 {
            beta = beta.min((-hover[i] / mxy_part[i]).clamp(0.0, 1.0));
        }
    }
    let m = Vector3::new(beta * moments.x, beta * moments.y, 0.0);
    let f = solve_exact(f_z, m, params).map(|v| v.max(0.0));
    AllocationCommand { f_z, moments, f, mz_scale: 0.0, mxy_scale: beta, saturated: true }
}

/// Verify a command against the allocation matrix: `A f == (F_z, M)`.
pub fn allocation_residual(cmd: &AllocationCommand, params: &VehicleParams) -> f64 {
    let a = allocation_matrix(params);
    let target = Vector4::new(cmd.f_z, cmd.moments.x, cmd.moments.y, cmd.moments.z);
    let got = a * Vector4::from_row_slice(&cmd.f);
    (got - target).norm()
}

/// Conventional zero-wind quadratic thrust model `f = k n^2`, least-squares
/// calibrated on the zero-wind slice of a rotor table.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticThrustMap {
    pub k: f64,
    pub n_max: f64,
}

impl QuadraticThrustMap {
    pub fn calibrate(table: &RotorMapTable) -> Self {
        let curve = table.thrust_curve(0.0, 0.0);
        let mut num = 0.0;
        let mut den = 0.0;
        for (n, t) in table.n_axis.iter().zip(&curve) {
            num += t * n * n;
            den += n.powi(4);
        }
        Self { k: num / den, n_max: table.n_max() }
    }

    pub fn forward(&self, n: f64) -> f64 {
        self.k * n * n
    }

    /// Speed command for a thrust target; true when clamped at the envelope.
    pub fn invert(&self, f_target: f64) -> (f64, bool) {
        let n = (f_target.max(0.0) / self.k).sqrt();
        if n > self.n_max {
            (self.n_max, true)
        } else {
            (n, f_target < 0.0)
        }
    }
}

/// Per-rotor inflow context for speed allocation, rotor frame.
#[derive(Debug, Clone, Copy)]
pub struct RotorContext {
    pub v_wind: Vector3<f64>,
    pub v_prop: Vector3<f64>,
}

/// Invert the thrust map per rotor under its local inflow. Returns the
/// commanded speeds and whether any rotor saturated; the lateral-force and
/// yaw mismatch left behind is delegated to the disturbance path upstream.
pub fn speed_commands(
    f: &[f64; 4],
    contexts: &[RotorContext; 4],
    n_current: &[f64; 4],
    table: &RotorMapTable,
) -> ([f64; 4], bool) {
    let mut n_cmd = [0.0; 4];
    let mut saturated = false;
    for i in 0..4 {
        let (n, sat) =
            invert_thrust_saturating(table, f[i], contexts[i].v_wind, contexts[i].v_prop, n_current[i]);
        n_cmd[i] = n;
        saturated |= sat;
    }
    (n_cmd, saturated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bemt::{build_rotor_table, AirfoilParams, BemtDiscretization, GridSpec, PropellerModel, RHO_SEA_LEVEL};
    use approx::assert_relative_eq;

    fn params() -> VehicleParams {
        VehicleParams::default_quad()
    }

    #[test]
    fn symmetric_thrust_splits_evenly() {
        let cmd = allocate(20.0, Vector3::zeros(), &params());
        for f in cmd.f {
            assert_relative_eq!(f, 5.0, epsilon = 1e-12);
        }
        assert!(!cmd.saturated);
    }

    #[test]
    fn yaw_moment_splits_by_torque_coefficient() {
        // f = (h - a, h + a, h - a, h + a) with a = M_z / (4 c_tau_f)
        let p = params();
        let m_z = 0.032;
        let cmd = allocate(20.0, Vector3::new(0.0, 0.0, m_z), &p);
        let a = m_z / (4.0 * p.c_tau_f);
        assert_relative_eq!(a, 0.9995, epsilon = 1e-4);
        assert_relative_eq!(cmd.f[0], 5.0 - a, epsilon = 1e-12);
        assert_relative_eq!(cmd.f[1], 5.0 + a, epsilon = 1e-12);
        assert_relative_eq!(cmd.f[2], 5.0 - a, epsilon = 1e-12);
        assert_relative_eq!(cmd.f[3], 5.0 + a, epsilon = 1e-12);
    }

    #[test]
    fn forward_multiply_round_trips() {
        use rand::Rng;
        use rand::SeedableRng;
        let p = params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let f_z = rng.random_range(5.0..40.0);
            let m = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.05..0.05),
            );
            let cmd = allocate(f_z, m, &p);
            if !cmd.saturated {
                assert!(allocation_residual(&cmd, &p) < 1e-12);
            }
        }
    }

    #[test]
    fn negative_thrust_sheds_yaw_first() {
        let p = params();
        // huge yaw demand at low thrust drives f negative without scaling
        let cmd = allocate(0.4, Vector3::new(0.0, 0.0, 0.2), &p);
        assert!(cmd.saturated);
        assert!(cmd.mz_scale < 1.0);
        assert_relative_eq!(cmd.mxy_scale, 1.0);
        assert!(cmd.f.iter().all(|&f| f >= 0.0));
        // total thrust is preserved
        assert_relative_eq!(cmd.f.iter().sum::<f64>(), 0.4, epsilon = 1e-9);
    }

    #[test]
    fn excessive_roll_gets_scaled() {
        let p = params();
        let cmd = allocate(1.0, Vector3::new(5.0, 0.0, 0.0), &p);
        assert!(cmd.saturated);
        assert!(cmd.mxy_scale < 1.0);
        assert!(cmd.f.iter().all(|&f| f >= 0.0));
        assert_relative_eq!(cmd.f.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_map_matches_zero_wind_hover() {
        let prop = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
        let grid = GridSpec {
            n_max: 160.0,
            n_count: 33,
            n_power: 1.5,
            w_ax_max: 6.0,
            w_ax_count: 9,
            w_lat_max: 6.0,
            w_lat_count: 5,
            w_power: 1.3,
        };
        let table = build_rotor_table(&prop, &BemtDiscretization::new(10, 12), &grid, RHO_SEA_LEVEL);
        let quad = QuadraticThrustMap::calibrate(&table);
        assert!(quad.k > 0.0);
        // round trip near the top of the range where n^2 dominates the fit
        let f = quad.forward(140.0);
        let (n, sat) = quad.invert(f);
        assert!(!sat);
        assert_relative_eq!(n, 140.0, epsilon = 1e-9);
    }
}

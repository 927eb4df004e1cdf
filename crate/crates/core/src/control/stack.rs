//! Per-episode controller: builds the attitude command from the force
//! demand, runs the 6-D tracking law, composes the three-part disturbance
//! estimate, and converts allocated thrusts to rotor-speed commands.

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::bemt::{table_lookup, RotorInflow, RotorMapTable};
use crate::learning::{input_vector_parts, ResidualNet};
use crate::math::log_so3;
use crate::vehicle::{rotor_positions, VehicleParams, Wrench};

use super::allocate::{allocate, speed_commands, QuadraticThrustMap, RotorContext};
use super::observer::{observer_step, DisturbanceEstimate};
use super::tracking::{composite_error, control_wrench, ReferenceState};
use super::{ControlError, GainSet};

/// Which compensation/allocation stack runs the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerVariant {
    /// Feedback only; conventional quadratic thrust map.
    None,
    /// Residual net trained against the zero-wind map; zero-wind allocation.
    ResidualZeroWind,
    /// Full stack: lateral BEMT prediction, BEMT residual net, adaptive
    /// observer, wind-aware speed allocation.
    BemtFull,
}

impl ControllerVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerVariant::None => "none",
            ControllerVariant::ResidualZeroWind => "residual-zero-wind",
            ControllerVariant::BemtFull => "bemt-full",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub variant: ControllerVariant,
    pub gains: GainSet,
    /// Inertial heading the body x-axis should face.
    pub yaw_heading: Vector3<f64>,
    /// Controller period (s).
    pub dt: f64,
    /// Residual-network inference runs every this many controller ticks,
    /// holding its last output in between.
    pub residual_hold: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            variant: ControllerVariant::BemtFull,
            gains: GainSet::default(),
            yaw_heading: Vector3::new(1.0, 0.0, 0.0),
            dt: 2e-3,
            residual_hold: 5,
        }
    }
}

/// Measured channels available to the controller at one tick.
#[derive(Debug, Clone)]
pub struct SensedState {
    /// Attitude (mocap), body-to-inertial.
    pub r: Matrix3<f64>,
    /// Position (mocap), inertial.
    pub p: Vector3<f64>,
    /// Fused linear velocity, body.
    pub v: Vector3<f64>,
    /// Gyro angular velocity, body.
    pub omega: Vector3<f64>,
    /// Rotor speeds (measured), rev/s.
    pub n: [f64; 4],
    /// Sensed net aerodynamic force (from the accel channel), body (N).
    pub f_sensed: Vector3<f64>,
}

/// Translational reference at one control instant; the attitude reference is
/// generated internally from the force demand.
#[derive(Debug, Clone, Copy)]
pub struct TrackingTarget {
    pub x_r: Vector3<f64>,
    pub v_r: Vector3<f64>,
    pub a_r: Vector3<f64>,
}

/// Everything the logger wants from one controller tick.
#[derive(Debug, Clone)]
pub struct ControlOutputs {
    pub n_cmd: [f64; 4],
    pub f_alloc: [f64; 4],
    pub s: Vector6<f64>,
    pub u: Wrench,
    pub f_phys: Vector3<f64>,
    pub f_res: Vector3<f64>,
    pub eps_hat: Vector3<f64>,
    pub saturated: bool,
}

/// Stateful controller for one episode.
pub struct ControllerStack {
    pub cfg: ControllerConfig,
    pub params: VehicleParams,
    /// Controller-side rotor table (coarse model, learned parameters).
    pub table: RotorMapTable,
    pub net: Option<ResidualNet>,
    pub estimate: DisturbanceEstimate,
    quad_map: QuadraticThrustMap,
    f_res_held: Vector3<f64>,
    tick: usize,
    prev_r_cmd: Option<Matrix3<f64>>,
    prev_omega_r: Vector3<f64>,
    prev_omega_dot_r: Vector3<f64>,
    pub saturation_count: usize,
}

impl ControllerStack {
    pub fn new(
        cfg: ControllerConfig,
        params: VehicleParams,
        table: RotorMapTable,
        net: Option<ResidualNet>,
    ) -> Self {
        cfg.gains.validate().expect("gains validate");
        let estimate = DisturbanceEstimate::initial(&cfg.gains);
        let quad_map = QuadraticThrustMap::calibrate(&table);
        Self {
            cfg,
            params,
            table,
            net,
            estimate,
            quad_map,
            f_res_held: Vector3::zeros(),
            tick: 0,
            prev_r_cmd: None,
            prev_omega_r: Vector3::zeros(),
            prev_omega_dot_r: Vector3::zeros(),
            saturation_count: 0,
        }
    }

    /// Nominal net aerodynamic force of the variant's model at the sensed
    /// operating point.
    fn nominal_force(&self, sensed: &SensedState, hub_winds: &[Vector3<f64>; 4]) -> Vector3<f64> {
        let positions = rotor_positions(&self.params);
        let mut f = Vector3::zeros();
        for i in 0..4 {
            let inflow = match self.cfg.variant {
                ControllerVariant::ResidualZeroWind => RotorInflow::hover(sensed.n[i]),
                _ => RotorInflow {
                    n: sensed.n[i],
                    v_wind: hub_winds[i],
                    v_prop: sensed.v + sensed.omega.cross(&positions[i]),
                },
            };
            f += table_lookup(&self.table, &inflow, self.params.spin_pattern[i]).wrench.force;
        }
        f
    }

    /// One controller tick.
    pub fn step(
        &mut self,
        sensed: &SensedState,
        hub_winds: &[Vector3<f64>; 4],
        target: &TrackingTarget,
    ) -> Result<ControlOutputs, ControlError> {
        let dt = self.cfg.dt;
        let gains = self.cfg.gains.clone();
        let state = crate::vehicle::VehicleState {
            r: sensed.r,
            p: sensed.p,
            v: sensed.v,
            omega: sensed.omega,
            n: sensed.n,
        };

        // --- three-part disturbance estimate ---
        if self.cfg.variant != ControllerVariant::None {
            let f_nominal = self.nominal_force(sensed, hub_winds);
            self.estimate.f_phys = match self.cfg.variant {
                ControllerVariant::BemtFull => Vector3::new(f_nominal.x, f_nominal.y, 0.0),
                _ => Vector3::zeros(),
            };
            if let Some(net) = &self.net {
                if self.tick % self.cfg.residual_hold.max(1) == 0 {
                    let x_phi = input_vector_parts(
                        &sensed.v,
                        &sensed.omega,
                        &crate::math::quat_from_matrix(&sensed.r),
                        &sensed.n,
                        hub_winds,
                    );
                    self.f_res_held = net.infer(&x_phi);
                }
                self.estimate.f_res = self.f_res_held;
            }
            // the translational part of s does not depend on the attitude
            // reference, so the provisional reference is exact here
            let provisional_ref = ReferenceState {
                x_r: target.x_r,
                v_r: target.v_r,
                a_r: target.a_r,
                r_r: self.prev_r_cmd.unwrap_or(sensed.r),
                omega_r: self.prev_omega_r,
                omega_dot_r: self.prev_omega_dot_r,
            };
            let err = composite_error(&state, &provisional_ref, &gains);
            let s_v = Vector3::new(err.s[0], err.s[1], err.s[2]);
            let y = sensed.f_sensed - (f_nominal + self.estimate.f_res);
            let (eps, p) =
                observer_step(&self.estimate.eps_hat, &self.estimate.p, &y, &s_v, &gains, dt)?;
            self.estimate.eps_hat = eps;
            self.estimate.p = p;
        }
        let tau_d_hat = if self.cfg.variant == ControllerVariant::None {
            Wrench::zero()
        } else {
            self.estimate.wrench()
        };

        // --- attitude command from the translational force demand ---
        // run the law once against the previous attitude reference to get
        // the force demand, then rebuild the reference so thrust tilts into
        // lateral demands (including the disturbance component)
        let prev_ref = ReferenceState {
            x_r: target.x_r,
            v_r: target.v_r,
            a_r: target.a_r,
            r_r: self.prev_r_cmd.unwrap_or_else(Matrix3::identity),
            omega_r: self.prev_omega_r,
            omega_dot_r: self.prev_omega_dot_r,
        };
        let u_trans = control_wrench(&state, &prev_ref, &gains, &self.params, &tau_d_hat);
        let f_des_inertial = sensed.r * u_trans.force;

        let z_cmd = if f_des_inertial.norm() > 1e-6 && f_des_inertial.z > 0.0 {
            f_des_inertial.normalize()
        } else {
            self.prev_r_cmd
                .map(|r| r.column(2).into_owned())
                .unwrap_or_else(|| Vector3::new(0.0, 0.0, 1.0))
        };
        let heading = self.cfg.yaw_heading;
        let mut y_cmd = z_cmd.cross(&heading);
        if y_cmd.norm() < 1e-6 {
            y_cmd = z_cmd.cross(&Vector3::new(0.0, 1.0, 0.0));
        }
        let y_cmd = y_cmd.normalize();
        let x_cmd = y_cmd.cross(&z_cmd);
        let r_cmd = Matrix3::from_columns(&[x_cmd, y_cmd, z_cmd]);

        // reference rates by filtered finite differences
        let omega_r = match self.prev_r_cmd {
            Some(prev) => log_so3(&(prev.transpose() * r_cmd)) / dt,
            None => Vector3::zeros(),
        };
        let omega_dot_raw = (omega_r - self.prev_omega_r) / dt;
        let omega_dot_r = if self.prev_r_cmd.is_some() {
            0.5 * self.prev_omega_dot_r + 0.5 * omega_dot_raw
        } else {
            Vector3::zeros()
        };

        let reference = ReferenceState {
            x_r: target.x_r,
            v_r: target.v_r,
            a_r: target.a_r,
            r_r: r_cmd,
            omega_r,
            omega_dot_r,
        };
        let err = composite_error(&state, &reference, &gains);
        let u = control_wrench(&state, &reference, &gains, &self.params, &tau_d_hat);

        self.prev_r_cmd = Some(r_cmd);
        self.prev_omega_r = omega_r;
        self.prev_omega_dot_r = omega_dot_r;

        // --- allocation and speed commands ---
        let f_z = u.force.z;
        let alloc = allocate(f_z.max(0.0), u.moment, &self.params);
        let positions = rotor_positions(&self.params);
        let contexts: [RotorContext; 4] = std::array::from_fn(|i| RotorContext {
            v_wind: hub_winds[i],
            v_prop: sensed.v + sensed.omega.cross(&positions[i]),
        });
        let (n_cmd, speed_sat) = match self.cfg.variant {
            ControllerVariant::None => {
                let mut out = [0.0; 4];
                let mut sat = false;
                for i in 0..4 {
                    let (n, s) = self.quad_map.invert(alloc.f[i]);
                    out[i] = n;
                    sat |= s;
                }
                (out, sat)
            }
            ControllerVariant::ResidualZeroWind => {
                let zero_ctx: [RotorContext; 4] = std::array::from_fn(|_| RotorContext {
                    v_wind: Vector3::zeros(),
                    v_prop: Vector3::zeros(),
                });
                speed_commands(&alloc.f, &zero_ctx, &sensed.n, &self.table)
            }
            ControllerVariant::BemtFull => {
                speed_commands(&alloc.f, &contexts, &sensed.n, &self.table)
            }
        };
        let saturated = alloc.saturated || speed_sat;
        if saturated {
            self.saturation_count += 1;
        }
        self.tick += 1;

        Ok(ControlOutputs {
            n_cmd,
            f_alloc: alloc.f,
            s: err.s,
            u,
            f_phys: self.estimate.f_phys,
            f_res: self.estimate.f_res,
            eps_hat: self.estimate.eps_hat,
            saturated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bemt::{
        build_rotor_table, AirfoilParams, BemtDiscretization, GridSpec, PropellerModel,
        RHO_SEA_LEVEL,
    };

    fn small_table() -> RotorMapTable {
        let prop = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
        let grid = GridSpec {
            n_max: 180.0,
            n_count: 33,
            n_power: 1.5,
            w_ax_max: 8.0,
            w_ax_count: 13,
            w_lat_max: 8.0,
            w_lat_count: 7,
            w_power: 1.3,
        };
        build_rotor_table(&prop, &BemtDiscretization::new(10, 12), &grid, RHO_SEA_LEVEL)
    }

    /// Hover state consistent with the table: the rotor speeds actually
    /// produce the weight, so the measured residual force is ~zero.
    fn hover_sensed(params: &VehicleParams, table: &RotorMapTable) -> SensedState {
        let f = params.hover_thrust_per_rotor();
        let n = crate::bemt::invert_thrust(table, f, Vector3::zeros(), Vector3::zeros(), 120.0)
            .expect("hover thrust within table range");
        SensedState {
            r: Matrix3::identity(),
            p: Vector3::zeros(),
            v: Vector3::zeros(),
            omega: Vector3::zeros(),
            n: [n; 4],
            f_sensed: Vector3::new(0.0, 0.0, params.m * 9.81),
        }
    }

    #[test]
    fn hover_at_target_commands_equal_speeds() {
        let params = VehicleParams::default_quad();
        let table = small_table();
        let mut stack = ControllerStack::new(
            ControllerConfig { variant: ControllerVariant::BemtFull, ..Default::default() },
            params.clone(),
            table.clone(),
            None,
        );
        let sensed = hover_sensed(&params, &table);
        let target = TrackingTarget {
            x_r: Vector3::zeros(),
            v_r: Vector3::zeros(),
            a_r: Vector3::zeros(),
        };
        let out = stack
            .step(&sensed, &[Vector3::zeros(); 4], &target)
            .unwrap();
        // equal thrust split, equal speed commands, thrust matches weight
        let f_total: f64 = out.f_alloc.iter().sum();
        assert!((f_total - params.m * 9.81).abs() < 1e-6, "f_total {f_total}");
        for i in 1..4 {
            assert!((out.n_cmd[i] - out.n_cmd[0]).abs() < 1e-9);
        }
        // plugging the command back through the table reproduces the thrust
        let lk = table_lookup(&stack.table, &RotorInflow::hover(out.n_cmd[0]), 1);
        assert!(
            (lk.wrench.force.z - out.f_alloc[0]).abs() <= 0.005 * out.f_alloc[0],
            "thrust round trip {} vs {}",
            lk.wrench.force.z,
            out.f_alloc[0]
        );
    }

    #[test]
    fn headwind_on_one_rotor_changes_only_its_command() {
        let params = VehicleParams::default_quad();
        let mut stack = ControllerStack::new(
            ControllerConfig { variant: ControllerVariant::BemtFull, ..Default::default() },
            params.clone(),
            small_table(),
            None,
        );
        let sensed = hover_sensed(&params);
        let target = TrackingTarget {
            x_r: Vector3::zeros(),
            v_r: Vector3::zeros(),
            a_r: Vector3::zeros(),
        };
        // strong axial updraft on rotor 0 only
        let winds = [
            Vector3::new(0.0, 0.0, 4.0),
            Vector3::zeros(),
            Vector3::zeros(),
            Vector3::zeros(),
        ];
        let out = stack.step(&sensed, &winds, &target).unwrap();
        assert!((out.n_cmd[1] - out.n_cmd[2]).abs() < 0.5);
        assert!(
            (out.n_cmd[0] - out.n_cmd[1]).abs() > 1.0,
            "rotor 0 command should differ: {:?}",
            out.n_cmd
        );
        // realized axial thrusts still match the allocation
        for i in 0..4 {
            let lk = table_lookup(
                &stack.table,
                &RotorInflow::new(out.n_cmd[i], winds[i], Vector3::zeros()),
                params.spin_pattern[i],
            );
            assert!(
                (lk.wrench.force.z - out.f_alloc[i]).abs() <= 0.005 * out.f_alloc[i].max(0.1),
                "rotor {i}: {} vs {}",
                lk.wrench.force.z,
                out.f_alloc[i]
            );
        }
    }

    #[test]
    fn none_variant_has_zero_estimate() {
        let params = VehicleParams::default_quad();
        let mut stack = ControllerStack::new(
            ControllerConfig { variant: ControllerVariant::None, ..Default::default() },
            params.clone(),
            small_table(),
            None,
        );
        let sensed = hover_sensed(&params);
        let target = TrackingTarget {
            x_r: Vector3::new(0.5, 0.0, 0.0),
            v_r: Vector3::zeros(),
            a_r: Vector3::zeros(),
        };
        let out = stack
            .step(&sensed, &[Vector3::new(-5.0, 0.0, 0.0); 4], &target)
            .unwrap();
        assert_eq!(out.f_phys, Vector3::zeros());
        assert_eq!(out.f_res, Vector3::zeros());
        assert_eq!(out.eps_hat, Vector3::zeros());
    }

    #[test]
    fn lateral_wind_produces_lateral_f_phys_with_zero_z() {
        let params = VehicleParams::default_quad();
        let mut stack = ControllerStack::new(
            ControllerConfig { variant: ControllerVariant::BemtFull, ..Default::default() },
            params.clone(),
            small_table(),
            None,
        );
        let sensed = hover_sensed(&params);
        let target = TrackingTarget {
            x_r: Vector3::zeros(),
            v_r: Vector3::zeros(),
            a_r: Vector3::zeros(),
        };
        let wind = Vector3::new(-6.0, 0.0, 0.0);
        let out = stack.step(&sensed, &[wind; 4], &target).unwrap();
        assert_eq!(out.f_phys.z, 0.0);
        assert!(out.f_phys.x < -0.05, "drag should align with the flow, got {:?}", out.f_phys);
        assert!(out.f_phys.y.abs() < 0.05);
    }
}

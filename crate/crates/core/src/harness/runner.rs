//! One simulated episode: 1 kHz RK4 plant against the fine rotor table, a
//! 500 Hz controller/observer, 100 Hz residual inference with zero-order
//! hold, IMU sensing, and 100 Hz record logging.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bemt::{table_lookup, RotorInflow, RotorMapTable, RotorWrench};
use crate::control::{
    ControllerConfig, ControllerStack, ControllerVariant, GainSet, SensedState, TrackingTarget,
};
use crate::env::{contact_wrench, ContactModel, ImuConfig, ImuModel, ImuTruth, WindField, WindScenario};
use crate::io::config_hash;
use crate::learning::{EpisodeData, EpisodeMeta, FlightRecord, ResidualNet};
use crate::math::quat_from_matrix;
use crate::vehicle::{
    aggregate_wrench, integrate_step, rotor_positions, ForceInputs, RotorAero, VehicleParams,
    VehicleState, Wrench,
};

use super::trajectory::TrajectorySpec;
use super::HarnessError;

/// Table-backed rotor aerodynamics for the plant.
pub struct TableAero<'a> {
    pub table: &'a RotorMapTable,
    pub spins: [i8; 4],
}

impl<'a> RotorAero for TableAero<'a> {
    fn rotor_wrench(&self, rotor: usize, inflow: &RotorInflow) -> (RotorWrench, bool) {
        let l = table_lookup(self.table, inflow, self.spins[rotor]);
        (l.wrench, l.saturated)
    }
}

/// Declarative episode description; this is the scenario JSON schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub trajectory: TrajectorySpec,
    pub wind: WindScenario,
    pub duration: f64,
    pub controller: ControllerVariant,
    pub seed: u64,
    /// IMU noise configuration; omitted = datasheet defaults.
    #[serde(default)]
    pub imu: Option<ImuConfig>,
    /// Metrics exclude this initial transient (s).
    #[serde(default = "default_transient")]
    pub transient_exclude: f64,
    /// Position error beyond which the run is flagged DIVERGED (m).
    #[serde(default = "default_diverge")]
    pub divergence_pos_err: f64,
}

fn default_transient() -> f64 {
    5.0
}

fn default_diverge() -> f64 {
    1.0
}

impl Scenario {
    /// Wind vector including the vertical component (for metadata).
    pub fn wind_vector(&self) -> [f64; 3] {
        [
            self.wind.freestream[0],
            self.wind.freestream[1],
            self.wind.freestream[2] + self.wind.vertical,
        ]
    }
}

/// Models and artifacts an episode runs against.
pub struct EpisodeArtifacts<'a> {
    pub params: &'a VehicleParams,
    /// Ground-truth rotor table (fine discretization).
    pub plant_table: &'a RotorMapTable,
    /// Controller-side rotor table (coarse discretization, learned params).
    pub ctrl_table: &'a RotorMapTable,
    pub net: Option<&'a ResidualNet>,
    pub gains: GainSet,
    pub contact: ContactModel,
}

impl<'a> EpisodeArtifacts<'a> {
    pub fn new(
        params: &'a VehicleParams,
        plant_table: &'a RotorMapTable,
        ctrl_table: &'a RotorMapTable,
        net: Option<&'a ResidualNet>,
    ) -> Self {
        Self {
            params,
            plant_table,
            ctrl_table,
            net,
            gains: GainSet::default(),
            contact: ContactModel::default(),
        }
    }

    pub fn hashes(&self) -> Vec<String> {
        let mut h = vec![
            self.plant_table.content_hash.clone(),
            self.ctrl_table.content_hash.clone(),
        ];
        if let Some(net) = self.net {
            h.push(crate::io::sha256_hex(net.to_json().as_bytes()));
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergedInfo {
    pub t: f64,
    pub reason: String,
}

/// Per-episode metrics over the post-transient window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub wind: [f64; 3],
    /// RMS position error per axis (m).
    pub rms_pos: [f64; 3],
    pub rms_pos_norm: f64,
    pub max_pos_err: f64,
    /// RMS of the composite tracking error.
    pub rms_s: f64,
    /// Contact normal-force mean/std and in-contact ratio (wall scenarios).
    pub contact_mean_normal: Option<f64>,
    pub contact_std_normal: Option<f64>,
    pub contact_ratio: Option<f64>,
    pub saturation_count: usize,
    /// RMS of || F_d_hat - F_d_true || (N).
    pub disturbance_rms_err: f64,
    pub diverged: Option<DivergedInfo>,
    pub transient_exclude: f64,
    pub config_hash: String,
    pub artifact_hashes: Vec<String>,
    /// Full resolved scenario for byte-identical re-runs.
    pub scenario_config: Scenario,
    pub record_path: Option<String>,
    pub record_sha256: Option<String>,
}

/// Simulation rates. Physics at 1 kHz, controller/observer at 500 Hz,
/// residual inference at 100 Hz (hold), records at 100 Hz.
const DT_PHYSICS: f64 = 1e-3;
const CTRL_EVERY: usize = 2;
const RECORD_EVERY: usize = 10;

struct PlantEval {
    aero: Wrench,
    contact: Wrench,
    penetration: f64,
    contact_normal: f64,
}

fn eval_plant(
    state: &VehicleState,
    winds_inertial: &[Vector3<f64>; 4],
    plant: &TableAero,
    params: &VehicleParams,
    field: &WindField,
    contact: &ContactModel,
) -> PlantEval {
    let positions = rotor_positions(params);
    let r_t = state.r.transpose();
    let mut wrenches = [RotorWrench::zero(); 4];
    for i in 0..4 {
        let inflow = RotorInflow {
            n: state.n[i],
            v_wind: r_t * winds_inertial[i],
            v_prop: state.hub_velocity(&positions[i]),
        };
        wrenches[i] = plant.rotor_wrench(i, &inflow).0;
    }
    let aero = aggregate_wrench(&wrenches, params);
    let (cw, info) = match &field.wall {
        Some(wall) => contact_wrench(state, wall, contact),
        None => (Wrench::zero(), Default::default()),
    };
    PlantEval {
        aero,
        contact: cw,
        penetration: info.penetration,
        contact_normal: info.normal_force,
    }
}

/// Run one scenario to completion (or divergence).
pub fn run_scenario(
    scenario: &Scenario,
    artifacts: &EpisodeArtifacts,
) -> Result<(EpisodeData, MetricsReport), HarnessError> {
    let params = artifacts.params;
    let traj = scenario.trajectory.build(scenario.seed);
    let field = WindField::from_scenario(&scenario.wind);
    let imu_cfg = scenario.imu.unwrap_or_default();
    let mut imu = ImuModel::new(imu_cfg, scenario.seed.wrapping_add(0x1a0));

    // start on the trajectory with matched velocity and near-hover rotors
    let t0 = traj.sample(0.0);
    let hover_f = params.hover_thrust_per_rotor();
    let (n_hover, _) = crate::bemt::invert_thrust_saturating(
        artifacts.ctrl_table,
        hover_f,
        Vector3::zeros(),
        Vector3::zeros(),
        0.6 * params.motor.n_max,
    );
    let mut state = VehicleState {
        r: Matrix3::identity(),
        p: t0.x_r,
        v: t0.v_r,
        omega: Vector3::zeros(),
        n: [n_hover; 4],
    };

    let mut stack = ControllerStack::new(
        ControllerConfig {
            variant: scenario.controller,
            gains: artifacts.gains.clone(),
            yaw_heading: Vector3::new(1.0, 0.0, 0.0),
            dt: DT_PHYSICS * CTRL_EVERY as f64,
            residual_hold: RECORD_EVERY / CTRL_EVERY,
        },
        params.clone(),
        artifacts.ctrl_table.clone(),
        artifacts.net.cloned(),
    );

    let plant = TableAero { table: artifacts.plant_table, spins: params.spin_pattern };
    let positions = rotor_positions(params);
    let steps = (scenario.duration / DT_PHYSICS).round() as usize;

    let mut rows: Vec<FlightRecord> = Vec::with_capacity(steps / RECORD_EVERY + 1);
    let mut last_out: Option<crate::control::ControlOutputs> = None;
    let mut last_sensed: Option<(crate::env::ImuSample, Vector3<f64>)> = None;
    let mut last_winds_body = [[0.0; 3]; 4];
    let mut last_disturb_truth = Vector3::zeros();
    let mut last_contact_force = Vector3::zeros();
    let mut diverged: Option<DivergedInfo> = None;

    for k in 0..steps {
        let t = k as f64 * DT_PHYSICS;
        let winds_inertial: [Vector3<f64>; 4] =
            std::array::from_fn(|i| field.wind_at(state.hub_position(&positions[i])));

        if k % CTRL_EVERY == 0 {
            let plant_now = eval_plant(&state, &winds_inertial, &plant, params, &field, &artifacts.contact);
            let a_sp = (plant_now.aero.force + plant_now.contact.force) / params.m;
            let sample = imu.sense(
                &ImuTruth { specific_force: a_sp, omega: state.omega, v: state.v },
                t,
                DT_PHYSICS * CTRL_EVERY as f64,
            );
            // net aerodynamic force reconstructed from the sensed channels
            let g_b = state.r.transpose() * params.g;
            let v_dot_sensed = sample.accel + g_b - sample.omega_sensed.cross(&sample.v_sensed);
            let f_sensed = params.m
                * (v_dot_sensed + sample.omega_sensed.cross(&sample.v_sensed) - g_b);

            let r_t = state.r.transpose();
            let hub_winds_body: [Vector3<f64>; 4] = std::array::from_fn(|i| r_t * winds_inertial[i]);
            let sensed = SensedState {
                r: state.r,
                p: state.p,
                v: sample.v_sensed,
                omega: sample.omega_sensed,
                n: state.n,
                f_sensed,
            };
            let target = traj.sample(t);
            match stack.step(&sensed, &hub_winds_body, &target) {
                Ok(out) => {
                    let commanded = Vector3::new(0.0, 0.0, out.f_alloc.iter().sum());
                    last_disturb_truth =
                        plant_now.aero.force + plant_now.contact.force - commanded;
                    last_contact_force = plant_now.contact.force;
                    last_out = Some(out);
                }
                Err(e) => {
                    diverged = Some(DivergedInfo { t, reason: format!("controller: {e}") });
                }
            }
            last_sensed = Some((sample, f_sensed));
            for (i, hw) in hub_winds_body.iter().enumerate() {
                last_winds_body[i] = [hw.x, hw.y, hw.z];
            }
            if diverged.is_some() {
                break;
            }
        }

        if k % RECORD_EVERY == 0 {
            let out = last_out.as_ref().expect("controller ran on tick 0");
            let (sample, f_sensed) = last_sensed.as_ref().expect("imu ran on tick 0");
            let _ = f_sensed;
            rows.push(FlightRecord {
                t,
                quat: quat_from_matrix(&state.r),
                p: [state.p.x, state.p.y, state.p.z],
                v: [sample.v_sensed.x, sample.v_sensed.y, sample.v_sensed.z],
                omega: [sample.omega_sensed.x, sample.omega_sensed.y, sample.omega_sensed.z],
                accel: [sample.accel.x, sample.accel.y, sample.accel.z],
                n: state.n,
                hub_winds: last_winds_body,
                n_cmd: out.n_cmd,
                f_alloc: out.f_alloc,
                s: [out.s[0], out.s[1], out.s[2], out.s[3], out.s[4], out.s[5]],
                f_phys: [out.f_phys.x, out.f_phys.y, out.f_phys.z],
                f_res: [out.f_res.x, out.f_res.y, out.f_res.z],
                eps_hat: [out.eps_hat.x, out.eps_hat.y, out.eps_hat.z],
                contact_force: [last_contact_force.x, last_contact_force.y, last_contact_force.z],
                v_truth: [state.v.x, state.v.y, state.v.z],
                omega_truth: [state.omega.x, state.omega.y, state.omega.z],
                f_disturb_truth: [
                    last_disturb_truth.x,
                    last_disturb_truth.y,
                    last_disturb_truth.z,
                ],
            });
        }

        // physics step
        let n_cmd = last_out.as_ref().expect("controller ran").n_cmd;
        let contact_model = artifacts.contact;
        let field_ref = &field;
        let extra = move |s: &VehicleState| -> Wrench {
            match &field_ref.wall {
                Some(wall) => contact_wrench(s, wall, &contact_model).0,
                None => Wrench::zero(),
            }
        };
        let inputs = ForceInputs { aero: &plant, winds_inertial, extra: &extra };
        let (next, _flag) = integrate_step(&state, &n_cmd, &inputs, params, DT_PHYSICS);
        state = next;

        // validity checks
        let t_next = (k + 1) as f64 * DT_PHYSICS;
        if !state.is_finite() {
            diverged = Some(DivergedInfo { t: t_next, reason: "non-finite state".into() });
            break;
        }
        let pos_err = (state.p - traj.sample(t_next).x_r).norm();
        if pos_err > scenario.divergence_pos_err {
            diverged = Some(DivergedInfo {
                t: t_next,
                reason: format!("position error {pos_err:.2} m"),
            });
            break;
        }
        if let Some(wall) = &field.wall {
            let (_, info) = contact_wrench(&state, wall, &artifacts.contact);
            if info.penetration >= artifacts.contact.sponge_radius {
                diverged = Some(DivergedInfo {
                    t: t_next,
                    reason: format!(
                        "sponge fully compressed ({:.3} m): rigid rod against wall",
                        info.penetration
                    ),
                });
                break;
            }
        }
    }

    let meta = EpisodeMeta {
        scenario: scenario.name.clone(),
        controller: scenario.controller.name().into(),
        seed: scenario.seed,
        wind: scenario.wind_vector(),
        duration: scenario.duration,
        record_hz: 1.0 / (DT_PHYSICS * RECORD_EVERY as f64),
        config_hash: config_hash(scenario),
        artifact_hashes: artifacts.hashes(),
        quaternion_convention: "body-to-inertial wxyz".into(),
    };
    let episode = EpisodeData { meta, rows };
    let metrics = compute_metrics(scenario, artifacts, &episode, &traj, diverged, stack.saturation_count);
    Ok((episode, metrics))
}

/// Metrics over the post-transient window; excluded samples cannot affect
/// the result because they are never accumulated.
pub fn compute_metrics(
    scenario: &Scenario,
    artifacts: &EpisodeArtifacts,
    episode: &EpisodeData,
    traj: &super::trajectory::Trajectory,
    diverged: Option<DivergedInfo>,
    saturation_count: usize,
) -> MetricsReport {
    let t_min = scenario.transient_exclude;
    let mut n = 0usize;
    let mut sum_sq = [0.0; 3];
    let mut max_err: f64 = 0.0;
    let mut sum_s = 0.0;
    let mut sum_dist_err = 0.0;
    let mut contact_n = Vec::new();
    for rec in &episode.rows {
        if rec.t < t_min {
            continue;
        }
        n += 1;
        let x_r = traj.sample(rec.t).x_r;
        let e = Vector3::from_row_slice(&rec.p) - x_r;
        for i in 0..3 {
            sum_sq[i] += e[i] * e[i];
        }
        max_err = max_err.max(e.norm());
        sum_s += rec.s.iter().map(|v| v * v).sum::<f64>();
        let est = Vector3::from_row_slice(&rec.f_phys)
            + Vector3::from_row_slice(&rec.f_res)
            + Vector3::from_row_slice(&rec.eps_hat);
        let truth = Vector3::from_row_slice(&rec.f_disturb_truth);
        sum_dist_err += (est - truth).norm_squared();
        if scenario.wind.wall {
            // body x component, rotated to the wall normal
            let r = crate::math::matrix_from_quat(&rec.quat);
            let f_inertial = r * Vector3::from_row_slice(&rec.contact_force);
            contact_n.push(f_inertial.x.max(0.0));
        }
    }
    let nf = n.max(1) as f64;
    let rms_pos = [
        (sum_sq[0] / nf).sqrt(),
        (sum_sq[1] / nf).sqrt(),
        (sum_sq[2] / nf).sqrt(),
    ];
    let (contact_mean, contact_std, contact_ratio) = if contact_n.is_empty() {
        (None, None, None)
    } else {
        let m = contact_n.iter().sum::<f64>() / contact_n.len() as f64;
        let var = contact_n.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / contact_n.len() as f64;
        let ratio = contact_n.iter().filter(|&&v| v > 0.0).count() as f64 / contact_n.len() as f64;
        (Some(m), Some(var.sqrt()), Some(ratio))
    };
    MetricsReport {
        scenario: scenario.name.clone(),
        controller: scenario.controller.name().into(),
        seed: scenario.seed,
        wind: scenario.wind_vector(),
        rms_pos,
        rms_pos_norm: (rms_pos.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        max_pos_err: max_err,
        rms_s: (sum_s / nf).sqrt(),
        contact_mean_normal: contact_mean,
        contact_std_normal: contact_std,
        contact_ratio,
        saturation_count,
        disturbance_rms_err: (sum_dist_err / nf).sqrt(),
        diverged,
        transient_exclude: t_min,
        config_hash: config_hash(scenario),
        artifact_hashes: artifacts.hashes(),
        scenario_config: scenario.clone(),
        record_path: None,
        record_sha256: None,
    }
}

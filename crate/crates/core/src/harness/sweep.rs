//! Wall-distance disturbance sweep: hover at a set of standoff distances
//! under a horizontal wind and report the time-averaged disturbance force
//! and pitch torque induced by the nonuniform near-wall flow.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bemt::{RotorInflow, RotorWrench};
use crate::control::ControllerVariant;
use crate::env::WindScenario;
use crate::learning::EpisodeData;
use crate::math::matrix_from_quat;
use crate::vehicle::{aggregate_wrench, rotor_positions, RotorAero};

use super::runner::{run_scenario, EpisodeArtifacts, Scenario, TableAero};
use super::trajectory::TrajectorySpec;
use super::HarnessError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance: f64,
    /// Time-averaged disturbance force components, body frame (N).
    pub f_x: f64,
    pub f_z: f64,
    /// Time-averaged disturbance pitch torque (N m).
    pub t_y: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub wind: [f64; 3],
    pub rows: Vec<SweepRow>,
}

/// The disturbance at a record row: plant aerodynamic wrench with the local
/// winds minus the wrench at the same state and rotor speeds in still air.
fn disturbance_at(
    rec: &crate::learning::FlightRecord,
    plant: &TableAero,
    params: &crate::vehicle::VehicleParams,
) -> (Vector3<f64>, Vector3<f64>) {
    let positions = rotor_positions(params);
    let v = Vector3::from_row_slice(&rec.v_truth);
    let w = Vector3::from_row_slice(&rec.omega_truth);
    let mut with_wind = [RotorWrench::zero(); 4];
    let mut still_air = [RotorWrench::zero(); 4];
    for i in 0..4 {
        let v_prop = v + w.cross(&positions[i]);
        let windy = RotorInflow {
            n: rec.n[i],
            v_wind: Vector3::from_row_slice(&rec.hub_winds[i]),
            v_prop,
        };
        let still = RotorInflow { n: rec.n[i], v_wind: Vector3::zeros(), v_prop };
        with_wind[i] = plant.rotor_wrench(i, &windy).0;
        still_air[i] = plant.rotor_wrench(i, &still).0;
    }
    let a = aggregate_wrench(&with_wind, params);
    let b = aggregate_wrench(&still_air, params);
    (a.force - b.force, a.moment - b.moment)
}

/// Average the wind-induced disturbance over an episode's post-transient rows.
pub fn average_disturbance(
    episode: &EpisodeData,
    artifacts: &EpisodeArtifacts,
    t_min: f64,
) -> (Vector3<f64>, Vector3<f64>, usize) {
    let plant = TableAero {
        table: artifacts.plant_table,
        spins: artifacts.params.spin_pattern,
    };
    let mut f_sum = Vector3::zeros();
    let mut m_sum = Vector3::zeros();
    let mut n = 0usize;
    for rec in &episode.rows {
        if rec.t < t_min {
            continue;
        }
        let _r = matrix_from_quat(&rec.quat);
        let (df, dm) = disturbance_at(rec, &plant, artifacts.params);
        f_sum += df;
        m_sum += dm;
        n += 1;
    }
    let nf = n.max(1) as f64;
    (f_sum / nf, m_sum / nf, n)
}

/// Hover at each wall distance under the given horizontal wind and report
/// the time-averaged (F_x, F_z, T_y) disturbance.
pub fn wall_distance_sweep(
    distances: &[f64],
    wind_x: f64,
    duration: f64,
    artifacts: &EpisodeArtifacts,
) -> Result<SweepReport, HarnessError> {
    let mut rows = Vec::new();
    for &d in distances {
        let scenario = Scenario {
            name: format!("wall-sweep-{d}"),
            trajectory: TrajectorySpec::Hover { point: [-0.5 + d, 0.0, 0.0] },
            wind: WindScenario {
                freestream: [wind_x, 0.0, 0.0],
                panel_count: 96,
                vertical: 0.0,
                wall: true,
            },
            duration,
            controller: ControllerVariant::BemtFull,
            seed: 9,
            imu: None,
            transient_exclude: 5.0_f64.min(duration * 0.5),
            divergence_pos_err: 1.0,
        };
        let (episode, metrics) = run_scenario(&scenario, artifacts)?;
        if let Some(d) = metrics.diverged {
            return Err(HarnessError::BadScenario(format!(
                "sweep hover diverged at t={:.2}: {}",
                d.t, d.reason
            )));
        }
        let (f, m, samples) = average_disturbance(&episode, artifacts, scenario.transient_exclude);
        rows.push(SweepRow { distance: d, f_x: f.x, f_z: f.z, t_y: m.y, samples });
    }
    Ok(SweepReport { wind: [wind_x, 0.0, 0.0], rows })
}

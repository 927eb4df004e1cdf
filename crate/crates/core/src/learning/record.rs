//! Time-stamped flight records: the single log-row format shared by
//! identification, training, and metrics, plus CSV serialization with an
//! embedded metadata header.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::io::fmt_f64;
use crate::math::matrix_from_quat;
use crate::vehicle::VehicleParams;

use super::LearnError;

/// One 100 Hz log row. Velocities and rates are the sensed (fused) channels;
/// truth channels ride along for oracles and metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub t: f64,
    /// Attitude quaternion, body-to-inertial, (w, x, y, z), unit norm.
    pub quat: [f64; 4],
    /// Position, inertial (m).
    pub p: [f64; 3],
    /// Sensed linear velocity, body (m/s).
    pub v: [f64; 3],
    /// Sensed angular velocity, body (rad/s).
    pub omega: [f64; 3],
    /// Sensed specific force, body (m/s^2).
    pub accel: [f64; 3],
    /// Rotor speeds (rev/s).
    pub n: [f64; 4],
    /// Local freestream wind at each rotor hub, body frame (m/s).
    pub hub_winds: [[f64; 3]; 4],
    /// Commanded rotor speeds (rev/s).
    pub n_cmd: [f64; 4],
    /// Allocated per-rotor thrusts (N).
    pub f_alloc: [f64; 4],
    /// Composite tracking error.
    pub s: [f64; 6],
    /// Disturbance-estimate components (N).
    pub f_phys: [f64; 3],
    pub f_res: [f64; 3],
    pub eps_hat: [f64; 3],
    /// Contact force, body (N).
    pub contact_force: [f64; 3],
    /// Truth channels.
    pub v_truth: [f64; 3],
    pub omega_truth: [f64; 3],
    /// True disturbance force (aero + contact minus commanded thrust), body (N).
    pub f_disturb_truth: [f64; 3],
}

/// Column order of the CSV schema. Kept explicit so the on-disk format is
/// stable against struct edits.
pub const RECORD_COLUMNS: &[&str] = &[
    "t", "qw", "qx", "qy", "qz", "px", "py", "pz", "vx", "vy", "vz", "wx", "wy", "wz", "ax", "ay",
    "az", "n1", "n2", "n3", "n4", "hw1x", "hw1y", "hw1z", "hw2x", "hw2y", "hw2z", "hw3x", "hw3y",
    "hw3z", "hw4x", "hw4y", "hw4z", "nc1", "nc2", "nc3", "nc4", "f1", "f2", "f3", "f4", "s1",
    "s2", "s3", "s4", "s5", "s6", "fpx", "fpy", "fpz", "frx", "fry", "frz", "ex", "ey", "ez",
    "cfx", "cfy", "cfz", "tvx", "tvy", "tvz", "twx", "twy", "twz", "tdx", "tdy", "tdz",
];

impl FlightRecord {
    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(RECORD_COLUMNS.len());
        row.push(self.t);
        row.extend(self.quat);
        row.extend(self.p);
        row.extend(self.v);
        row.extend(self.omega);
        row.extend(self.accel);
        row.extend(self.n);
        for hw in &self.hub_winds {
            row.extend(*hw);
        }
        row.extend(self.n_cmd);
        row.extend(self.f_alloc);
        row.extend(self.s);
        row.extend(self.f_phys);
        row.extend(self.f_res);
        row.extend(self.eps_hat);
        row.extend(self.contact_force);
        row.extend(self.v_truth);
        row.extend(self.omega_truth);
        row.extend(self.f_disturb_truth);
        row
    }

    fn from_row(row: &[f64]) -> Self {
        let mut it = row.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { (&mut it).take(k).collect() };
        let v3 = |v: Vec<f64>| [v[0], v[1], v[2]];
        let v4 = |v: Vec<f64>| [v[0], v[1], v[2], v[3]];
        let t = take(1)[0];
        let quat = v4(take(4));
        let p = v3(take(3));
        let v = v3(take(3));
        let omega = v3(take(3));
        let accel = v3(take(3));
        let n = v4(take(4));
        let mut hub_winds = [[0.0; 3]; 4];
        for hw in &mut hub_winds {
            *hw = v3(take(3));
        }
        Self {
            t,
            quat,
            p,
            v,
            omega,
            accel,
            n,
            hub_winds,
            n_cmd: v4(take(4)),
            f_alloc: v4(take(4)),
            s: {
                let s = take(6);
                [s[0], s[1], s[2], s[3], s[4], s[5]]
            },
            f_phys: v3(take(3)),
            f_res: v3(take(3)),
            eps_hat: v3(take(3)),
            contact_force: v3(take(3)),
            v_truth: v3(take(3)),
            omega_truth: v3(take(3)),
            f_disturb_truth: v3(take(3)),
        }
    }
}

/// Episode-level metadata embedded in the CSV header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    /// Freestream wind (x, y, z up) including the vertical component.
    pub wind: [f64; 3],
    pub duration: f64,
    pub record_hz: f64,
    pub config_hash: String,
    pub artifact_hashes: Vec<String>,
    /// Attitude convention reminder for downstream consumers.
    pub quaternion_convention: String,
}

/// One episode: metadata plus its record rows.
#[derive(Debug, Clone, Default)]
pub struct EpisodeData {
    pub meta: EpisodeMeta,
    pub rows: Vec<FlightRecord>,
}

impl EpisodeData {
    /// Write the episode as CSV with `#`-prefixed metadata lines.
    pub fn write_csv(&self, path: &Path) -> Result<(), LearnError> {
        let mut out = String::new();
        out.push_str(&format!(
            "# meta {}\n",
            serde_json::to_string(&self.meta).expect("meta serializes")
        ));
        out.push_str(&RECORD_COLUMNS.join(","));
        out.push('\n');
        for rec in &self.rows {
            let row = rec.to_row();
            let mut line = String::with_capacity(row.len() * 14);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_f64(*v));
            }
            out.push_str(&line);
            out.push('\n');
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, LearnError> {
        let text = std::fs::read_to_string(path)?;
        let mut meta = EpisodeMeta::default();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# meta ") {
                meta = serde_json::from_str(rest)
                    .map_err(|e| LearnError::BadDataset(format!("bad meta line: {e}")))?;
                break;
            }
            if !line.starts_with('#') {
                break;
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| LearnError::BadDataset(format!("bad float: {e}")))?;
            if vals.len() != RECORD_COLUMNS.len() {
                return Err(LearnError::BadDataset(format!(
                    "expected {} columns, got {}",
                    RECORD_COLUMNS.len(),
                    vals.len()
                )));
            }
            rows.push(FlightRecord::from_row(&vals));
        }
        if rows.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(LearnError::BadDataset("rows not strictly increasing in t".into()));
        }
        Ok(Self { meta, rows })
    }
}

/// Dataset manifest: one entry per episode file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub episodes: Vec<ManifestEntry>,
    pub config_hash: String,
    pub quaternion_convention: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub wind: [f64; 3],
    pub rows: usize,
    pub sha256: String,
}

/// Net aerodynamic force reconstructed from the sensed channels:
/// `F = m dv_sensed + m [w_sensed]x v_sensed - m R^T g`, with `dv_sensed`
/// taken from the accelerometer channel (specific force plus gravity
/// mapping) rather than by differencing the velocity estimate.
pub fn sensed_force(record: &FlightRecord, params: &VehicleParams) -> Vector3<f64> {
    let r = matrix_from_quat(&record.quat);
    let g_b = r.transpose() * params.g;
    let v = Vector3::from_row_slice(&record.v);
    let w = Vector3::from_row_slice(&record.omega);
    let a_meas = Vector3::from_row_slice(&record.accel);
    let v_dot_sensed = a_meas + g_b - w.cross(&v);
    params.m * (v_dot_sensed + w.cross(&v) - g_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_record(t: f64) -> FlightRecord {
        FlightRecord {
            t,
            quat: [1.0, 0.0, 0.0, 0.0],
            p: [0.1 * t, -0.2, 1.0],
            v: [0.5, -0.25, 0.1],
            omega: [0.0, 0.0, 0.2],
            accel: [0.0, 0.1, 9.81],
            n: [100.0, 101.0, 99.5, 100.2],
            hub_winds: [[-3.0, 0.0, 1.0]; 4],
            ..Default::default()
        }
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ep.csv");
        let ep = EpisodeData {
            meta: EpisodeMeta {
                scenario: "hover".into(),
                controller: "bemt-full".into(),
                seed: 42,
                wind: [-4.0, 0.0, -4.0],
                duration: 0.03,
                record_hz: 100.0,
                config_hash: "abc".into(),
                artifact_hashes: vec!["t1".into()],
                quaternion_convention: "body-to-inertial wxyz".into(),
            },
            rows: (0..3).map(|k| sample_record(0.01 * k as f64 + 0.01)).collect(),
        };
        ep.write_csv(&path).unwrap();
        let back = EpisodeData::read_csv(&path).unwrap();
        assert_eq!(back.meta, ep.meta);
        assert_eq!(back.rows, ep.rows);
        // a second write is byte-identical
        let path2 = dir.path().join("ep2.csv");
        ep.write_csv(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let ep = EpisodeData {
            meta: EpisodeMeta::default(),
            rows: vec![sample_record(0.02), sample_record(0.01)],
        };
        ep.write_csv(&path).unwrap();
        assert!(matches!(EpisodeData::read_csv(&path), Err(LearnError::BadDataset(_))));
    }

    #[test]
    fn hover_sensed_force_equals_thrust() {
        // noiseless stationary hover: accel reads +g up, so the sensed net
        // aerodynamic force is m * g upward (the thrust holding the vehicle)
        let params = VehicleParams::default_quad();
        let mut rec = sample_record(0.0);
        rec.v = [0.0; 3];
        rec.omega = [0.0; 3];
        rec.accel = [0.0, 0.0, 9.81];
        let f = sensed_force(&rec, &params);
        assert_relative_eq!(f, Vector3::new(0.0, 0.0, params.m * 9.81), epsilon = 1e-12);
    }

    #[test]
    fn coriolis_term_appears_in_sensed_force() {
        // pure rotation w about z with body velocity u along x:
        // the m w u term shows up on the y axis through the accel channel
        let params = VehicleParams::default_quad();
        let (w, u) = (0.8, 1.5);
        let mut rec = sample_record(0.0);
        rec.v = [u, 0.0, 0.0];
        rec.omega = [0.0, 0.0, w];
        // steady state: v_dot = 0, so specific force = w x v - g_b
        let omega = Vector3::new(0.0, 0.0, w);
        let v = Vector3::new(u, 0.0, 0.0);
        let sp = omega.cross(&v) - Vector3::new(0.0, 0.0, -9.81);
        rec.accel = [sp.x, sp.y, sp.z];
        let f = sensed_force(&rec, &params);
        assert_relative_eq!(f.y, params.m * w * u, epsilon = 1e-12);
        assert_relative_eq!(f.x, 0.0, epsilon = 1e-12);
    }
}

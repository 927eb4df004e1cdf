//! IMU measurement synthesis: turn-on bias, white-noise-driven random walk,
//! installation misalignment, and banded vibration harmonics.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math::exp_so3;

/// Noise intensities. Defaults follow the public datasheet of a tactical
/// MEMS IMU (Epson G365 class); they are fixtures, not measured values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuConfig {
    /// 1-sigma accelerometer turn-on bias per axis (m/s^2).
    pub accel_turn_on_bias: f64,
    /// 1-sigma gyro turn-on bias per axis (rad/s).
    pub gyro_turn_on_bias: f64,
    /// Accelerometer bias random-walk intensity (m/s^2 per sqrt(s)).
    pub accel_random_walk: f64,
    /// Gyro bias random-walk intensity (rad/s per sqrt(s)).
    pub gyro_random_walk: f64,
    /// 1-sigma installation misalignment (rad).
    pub misalignment: f64,
    /// Number of vibration harmonics, evenly spaced over `vib_band`.
    pub vib_harmonics: usize,
    /// Vibration band (Hz).
    pub vib_band: (f64, f64),
    /// Total accelerometer vibration RMS (m/s^2).
    pub vib_accel_rms: f64,
    /// Total gyro vibration RMS (rad/s).
    pub vib_gyro_rms: f64,
    /// Time constant of the leaky integrator turning accel noise into the
    /// fused-velocity error (s).
    pub velocity_noise_tau: f64,
}

impl Default for ImuConfig {
    fn default() -> Self {
        Self {
            accel_turn_on_bias: 0.01,
            gyro_turn_on_bias: 8.7e-4,
            accel_random_walk: 2.0e-4,
            gyro_random_walk: 1.0e-5,
            misalignment: 3.0e-3,
            vib_harmonics: 6,
            vib_band: (10.0, 15.0),
            vib_accel_rms: 0.3,
            vib_gyro_rms: 0.02,
            velocity_noise_tau: 0.5,
        }
    }
}

impl ImuConfig {
    /// All terms zeroed: measurements pass truth through exactly.
    pub fn ideal() -> Self {
        Self {
            accel_turn_on_bias: 0.0,
            gyro_turn_on_bias: 0.0,
            accel_random_walk: 0.0,
            gyro_random_walk: 0.0,
            misalignment: 0.0,
            vib_harmonics: 0,
            vib_band: (10.0, 15.0),
            vib_accel_rms: 0.0,
            vib_gyro_rms: 0.0,
            velocity_noise_tau: 0.5,
        }
    }
}

/// Ground-truth channels feeding the sensor model.
#[derive(Debug, Clone, Copy)]
pub struct ImuTruth {
    /// Specific force at the IMU, body frame (m/s^2).
    pub specific_force: Vector3<f64>,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vector3<f64>,
    /// Linear velocity, body frame (m/s).
    pub v: Vector3<f64>,
}

/// One measurement epoch.
#[derive(Debug, Clone, Copy)]
pub struct ImuSample {
    pub accel: Vector3<f64>,
    pub gyro: Vector3<f64>,
    /// Fused velocity estimate: truth plus low-passed integral of the
    /// accelerometer error.
    pub v_sensed: Vector3<f64>,
    pub omega_sensed: Vector3<f64>,
}

/// Stateful IMU instance: owns the random-walk state and is owned by a
/// single episode. Fixed seed gives a bit-identical measurement stream.
#[derive(Debug, Clone)]
pub struct ImuModel {
    pub config: ImuConfig,
    pub seed: u64,
    misalign: Matrix3<f64>,
    accel_bias: Vector3<f64>,
    gyro_bias: Vector3<f64>,
    rw_accel: Vector3<f64>,
    rw_gyro: Vector3<f64>,
    v_err_lp: Vector3<f64>,
    harmonics: Vec<Harmonic>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
struct Harmonic {
    freq: f64,
    accel_phase: [f64; 3],
    gyro_phase: [f64; 3],
}

impl ImuModel {
    pub fn new(config: ImuConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal3 = |sd: f64, rng: &mut ChaCha8Rng| {
            Vector3::new(
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            )
        };
        let accel_bias = normal3(config.accel_turn_on_bias, &mut rng);
        let gyro_bias = normal3(config.gyro_turn_on_bias, &mut rng);
        let mis_axis = normal3(1.0, &mut rng);
        let misalign = if config.misalignment > 0.0 && mis_axis.norm() > 1e-12 {
            exp_so3(&(mis_axis.normalize() * config.misalignment))
        } else {
            Matrix3::identity()
        };
        let k = config.vib_harmonics;
        let mut harmonics = Vec::with_capacity(k);
        for i in 0..k {
            let t = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.5 };
            let freq = config.vib_band.0 + t * (config.vib_band.1 - config.vib_band.0);
            let mut phases = || {
                [
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ]
            };
            harmonics.push(Harmonic { freq, accel_phase: phases(), gyro_phase: phases() });
        }
        Self {
            config,
            seed,
            misalign,
            accel_bias,
            gyro_bias,
            rw_accel: Vector3::zeros(),
            rw_gyro: Vector3::zeros(),
            v_err_lp: Vector3::zeros(),
            harmonics,
            rng,
        }
    }

    /// Pass-through instance with every noise term disabled.
    pub fn ideal() -> Self {
        Self::new(ImuConfig::ideal(), 0)
    }

    fn vibration(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let k = self.harmonics.len();
        if k == 0 {
            return (Vector3::zeros(), Vector3::zeros());
        }
        // equal amplitudes; RMS of n equal-amplitude sinusoids is A sqrt(n/2)
        let a_amp = self.config.vib_accel_rms / (k as f64 / 2.0).sqrt();
        let g_amp = self.config.vib_gyro_rms / (k as f64 / 2.0).sqrt();
        let mut a = Vector3::zeros();
        let mut g = Vector3::zeros();
        for h in &self.harmonics {
            let w = std::f64::consts::TAU * h.freq * t;
            for axis in 0..3 {
                a[axis] += a_amp * (w + h.accel_phase[axis]).sin();
                g[axis] += g_amp * (w + h.gyro_phase[axis]).sin();
            }
        }
        (a, g)
    }

    /// Advance the noise processes by `dt` and produce the measurement at
    /// time `t`.
    pub fn sense(&mut self, truth: &ImuTruth, t: f64, dt: f64) -> ImuSample {
        let mut draw3 = |sd: f64| {
            let rng = &mut self.rng;
            Vector3::new(
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            )
        };
        let sq = dt.sqrt();
        let da = draw3(self.config.accel_random_walk * sq);
        let dg = draw3(self.config.gyro_random_walk * sq);
        self.rw_accel += da;
        self.rw_gyro += dg;

        let (vib_a, vib_g) = self.vibration(t);
        let accel = self.misalign * truth.specific_force + self.accel_bias + self.rw_accel + vib_a;
        let gyro = self.misalign * truth.omega + self.gyro_bias + self.rw_gyro + vib_g;

        // leaky integral of the accel error models the fused-velocity drift
        let err = accel - truth.specific_force;
        let decay = (-dt / self.config.velocity_noise_tau).exp();
        self.v_err_lp = self.v_err_lp * decay + err * dt;

        ImuSample {
            accel,
            gyro,
            v_sensed: truth.v + self.v_err_lp,
            omega_sensed: gyro,
        }
    }
}

//! Reference trajectories: hover, the vertical figure-eight perpendicular to
//! the wall, the wall-contact circle, and randomized open-space trajectories
//! for dataset generation.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::TrackingTarget;

/// Declarative trajectory description (scenario JSON schema).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TrajectorySpec {
    Hover {
        point: [f64; 3],
    },
    /// Lissajous figure-eight in the x-z plane (perpendicular to the wall):
    /// x swings `half_width`, z swings `half_height` at twice the rate.
    FigureEight {
        center: [f64; 3],
        half_width: f64,
        half_height: f64,
        period: f64,
    },
    /// Vertical circle in a plane parallel to the wall, with the rod tip
    /// commanding `tip_interference` of sponge compression.
    CircleContact {
        center_y: f64,
        center_z: f64,
        radius: f64,
        period: f64,
        tip_interference: f64,
    },
    /// Smooth randomized 3-D trajectory in open space: per-axis sums of
    /// seeded sinusoids.
    RandomOpenSpace {
        amplitude: f64,
        harmonics: usize,
    },
}

impl TrajectorySpec {
    /// Standard figure-eight of the near-wall experiments: centered 1.5 m in
    /// front of the wall face, 1.0 m wide by 0.5 m tall, 10 s period.
    pub fn standard_figure_eight() -> Self {
        TrajectorySpec::FigureEight {
            center: [1.0, 0.0, 0.0],
            half_width: 0.5,
            half_height: 0.25,
            period: 10.0,
        }
    }

    /// Standard contact circle: radius 0.5 m, 10 s period, 0.03 m commanded
    /// sponge interference. The x-station follows from the rod and sponge
    /// geometry: wall_x + rod + sponge - interference.
    pub fn standard_contact_circle() -> Self {
        TrajectorySpec::CircleContact {
            center_y: 0.0,
            center_z: 0.0,
            radius: 0.5,
            period: 10.0,
            tip_interference: 0.03,
        }
    }

    /// Materialize the sampler (draws harmonic coefficients for the
    /// randomized profile).
    pub fn build(&self, seed: u64) -> Trajectory {
        match self {
            TrajectorySpec::RandomOpenSpace { amplitude, harmonics } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_6a64);
                let mut axes = Vec::new();
                for _ in 0..3 {
                    let mut terms = Vec::new();
                    let k = (*harmonics).max(1);
                    for _ in 0..k {
                        terms.push(Harmonic {
                            amp: amplitude / k as f64 * rng.random_range(0.5..1.5),
                            omega: std::f64::consts::TAU * rng.random_range(0.05..0.30),
                            phase: rng.random_range(0.0..std::f64::consts::TAU),
                        });
                    }
                    axes.push(terms);
                }
                Trajectory { spec: self.clone(), random_axes: Some(axes) }
            }
            _ => Trajectory { spec: self.clone(), random_axes: None },
        }
    }
}

#[derive(Debug, Clone)]
struct Harmonic {
    amp: f64,
    omega: f64,
    phase: f64,
}

/// A sampleable trajectory with analytic derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: TrajectorySpec,
    random_axes: Option<Vec<Vec<Harmonic>>>,
}

/// x-station of the contact circle given the standard rod/sponge geometry.
pub fn contact_circle_x(tip_interference: f64) -> f64 {
    // wall face -0.5, rod 0.45 along -x body, sponge radius 0.1
    -0.5 + 0.45 + 0.1 - tip_interference
}

impl Trajectory {
    pub fn sample(&self, t: f64) -> TrackingTarget {
        match &self.spec {
            TrajectorySpec::Hover { point } => TrackingTarget {
                x_r: Vector3::from_row_slice(point),
                v_r: Vector3::zeros(),
                a_r: Vector3::zeros(),
            },
            TrajectorySpec::FigureEight { center, half_width, half_height, period } => {
                let w = std::f64::consts::TAU / period;
                let c = Vector3::from_row_slice(center);
                let (s1, c1) = (w * t).sin_cos();
                let (s2, c2) = (2.0 * w * t).sin_cos();
                TrackingTarget {
                    x_r: c + Vector3::new(half_width * s1, 0.0, half_height * s2),
                    v_r: Vector3::new(half_width * w * c1, 0.0, 2.0 * half_height * w * c2),
                    a_r: Vector3::new(
                        -half_width * w * w * s1,
                        0.0,
                        -4.0 * half_height * w * w * s2,
                    ),
                }
            }
            TrajectorySpec::CircleContact { center_y, center_z, radius, period, tip_interference } => {
                let w = std::f64::consts::TAU / period;
                let x = contact_circle_x(*tip_interference);
                let (s, c) = (w * t).sin_cos();
                TrackingTarget {
                    x_r: Vector3::new(x, center_y + radius * s, center_z - radius * c),
                    v_r: Vector3::new(0.0, radius * w * c, radius * w * s),
                    a_r: Vector3::new(0.0, -radius * w * w * s, radius * w * w * c),
                }
            }
            TrajectorySpec::RandomOpenSpace { .. } => {
                let axes = self.random_axes.as_ref().expect("built trajectory");
                let mut x = Vector3::zeros();
                let mut v = Vector3::zeros();
                let mut a = Vector3::zeros();
                for (i, terms) in axes.iter().enumerate() {
                    for h in terms {
                        let (s, c) = (h.omega * t + h.phase).sin_cos();
                        // offset so the trajectory starts at the origin
                        let (s0, _) = h.phase.sin_cos();
                        x[i] += h.amp * (s - s0);
                        v[i] += h.amp * h.omega * c;
                        a[i] -= h.amp * h.omega * h.omega * s;
                    }
                }
                TrackingTarget { x_r: x, v_r: v, a_r: a }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_eight_derivatives_are_consistent() {
        let traj = TrajectorySpec::standard_figure_eight().build(0);
        let h = 1e-6;
        for &t in &[0.3, 1.7, 4.9] {
            let a = traj.sample(t - h);
            let b = traj.sample(t + h);
            let mid = traj.sample(t);
            let v_fd = (b.x_r - a.x_r) / (2.0 * h);
            let a_fd = (b.v_r - a.v_r) / (2.0 * h);
            assert!((v_fd - mid.v_r).norm() < 1e-6);
            assert!((a_fd - mid.a_r).norm() < 1e-5);
        }
    }

    #[test]
    fn random_trajectory_is_seed_deterministic_and_smooth() {
        let spec = TrajectorySpec::RandomOpenSpace { amplitude: 1.2, harmonics: 4 };
        let a = spec.build(7);
        let b = spec.build(7);
        let c = spec.build(8);
        assert_eq!(a.sample(3.3).x_r, b.sample(3.3).x_r);
        assert_ne!(a.sample(3.3).x_r, c.sample(3.3).x_r);
        assert_eq!(a.sample(0.0).x_r, Vector3::zeros());
        let h = 1e-6;
        let v_fd = (a.sample(2.0 + h).x_r - a.sample(2.0 - h).x_r) / (2.0 * h);
        assert!((v_fd - a.sample(2.0).v_r).norm() < 1e-5);
    }

    #[test]
    fn contact_circle_commands_interference() {
        let x = contact_circle_x(0.03);
        assert!((x - 0.02).abs() < 1e-12);
        let traj = TrajectorySpec::standard_contact_circle().build(0);
        let p = traj.sample(1.2);
        assert!((p.x_r.x - 0.02).abs() < 1e-12);
    }
}

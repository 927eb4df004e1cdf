//! Exogenous world models: the near-wall wind field, the wall-contact force
//! model, and IMU measurement noise.

mod contact;
mod imu;
mod wind;

pub use contact::{contact_wrench, ContactInfo, ContactModel};
pub use imu::{ImuConfig, ImuModel, ImuSample, ImuTruth};
pub use wind::{wind_at, WindField, WindScenario};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Vertical wall panel: a protruding element on a building facade, idealized
/// as infinite in height and zero thickness. The face looks along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    /// Center of the panel, inertial (m).
    pub center: Vector3<f64>,
    /// Extent along y (m).
    pub length: f64,
}

impl Default for Wall {
    fn default() -> Self {
        Self { center: Vector3::new(-0.5, 0.0, 0.0), length: 4.0 }
    }
}

impl Wall {
    /// x-coordinate of the front face plane.
    pub fn face_x(&self) -> f64 {
        self.center.x
    }

    /// Whether a y-coordinate lies within the panel footprint.
    pub fn in_footprint(&self, y: f64) -> bool {
        (y - self.center.y).abs() <= 0.5 * self.length
    }
}

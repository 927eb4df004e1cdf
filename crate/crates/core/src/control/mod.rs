//! Geometric tracking control with three-part disturbance compensation:
//! a physics-based lateral force prediction, a learned residual force, and
//! an adaptive correction from a covariance-weighted observer. Thrust and
//! moments are allocated to rotors and converted to speed commands by
//! inverting the rotor thrust map under each rotor's local inflow.

mod allocate;
mod observer;
mod stack;
mod tracking;

pub use allocate::{
    allocate, allocation_matrix, speed_commands, AllocationCommand, QuadraticThrustMap,
};
pub use observer::{observer_step, DisturbanceEstimate};
pub use stack::{
    ControlOutputs, ControllerConfig, ControllerStack, ControllerVariant, SensedState,
    TrackingTarget,
};
pub use tracking::{composite_error, control_wrench, CompositeError, ReferenceState};

use nalgebra::{Matrix3, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ControlError {
    /// An observer state left the sane numeric range; gains are
    /// misconfigured for the operating regime.
    #[error("observer state exceeded 1e6 in {what}")]
    NumericalBlowup { what: &'static str },
    #[error("gain matrix {what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },
}

/// Controller and observer gains. All matrices must be positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    /// Tracking gain on the composite error (6x6).
    pub k: Matrix6<f64>,
    /// Error-mixing gain: s = v_tilde + lambda_mix * x_tilde (6x6).
    pub lambda_mix: Matrix6<f64>,
    /// Adaptation regularization (1/s).
    pub lambda: f64,
    /// Observer process-noise gain (3x3).
    pub q: Matrix3<f64>,
    /// Observer measurement-noise gain (3x3).
    pub r: Matrix3<f64>,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            k: Matrix6::from_diagonal(&Vector6::new(8.0, 8.0, 8.0, 4.0, 4.0, 4.0)),
            lambda_mix: Matrix6::from_diagonal(&Vector6::new(2.0, 2.0, 2.0, 2.0, 2.0, 2.0)),
            lambda: 0.1,
            q: Matrix3::identity(),
            r: Matrix3::identity() * 0.01,
        }
    }
}

impl GainSet {
    /// Positive-definiteness check, run at configuration load.
    pub fn validate(&self) -> Result<(), ControlError> {
        let spd6 = |m: &Matrix6<f64>, what: &'static str| {
            let sym = 0.5 * (m + m.transpose());
            if sym.symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
                return Err(ControlError::NotPositiveDefinite { what });
            }
            Ok(())
        };
        let spd3 = |m: &Matrix3<f64>, what: &'static str| {
            let sym = 0.5 * (m + m.transpose());
            if sym.symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
                return Err(ControlError::NotPositiveDefinite { what });
            }
            Ok(())
        };
        spd6(&self.k, "K")?;
        spd6(&self.lambda_mix, "Lambda")?;
        if self.lambda <= 0.0 {
            return Err(ControlError::NotPositiveDefinite { what: "lambda" });
        }
        spd3(&self.q, "Q")?;
        spd3(&self.r, "R")
    }
}

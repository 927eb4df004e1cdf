//! Multirotor flight-dynamics workbench.
//!
//! The crate is organized around the simulation plant and the control stack
//! that runs against it:
//!
//! * [`bemt`] — blade element momentum theory rotor model, lookup tables,
//!   and thrust-map inversion for speed allocation.
//! * [`vehicle`] — rigid-body quadrotor dynamics with first-order motor lag.
//! * [`env`] — near-wall wind field (source panels), wall contact, IMU noise.
//! * [`control`] — geometric tracking control, three-part disturbance
//!   compensation, allocation, and the adaptive residual observer.
//! * [`learning`] — flight-record datasets, airfoil parameter identification,
//!   and residual-force network training/inference.
//! * [`harness`] — scenario definitions, episode runner, metrics, sweeps.
//!
//! Conventions used throughout: the inertial frame is z-up, the body frame is
//! z-up along thrust, and the canonical attitude `R` maps body vectors to
//! inertial vectors. Gravity is `(0, 0, -9.81)` in the inertial frame and
//! enters body-frame equations through `R^T`.

pub mod bemt;
pub mod control;
pub mod env;
pub mod harness;
pub mod io;
pub mod learning;
pub mod math;
pub mod vehicle;

pub use bemt::{AirfoilParams, BemtDiscretization, PropellerModel, RotorInflow, RotorMapTable, RotorWrench};
pub use control::{DisturbanceEstimate, GainSet};
pub use env::{ContactModel, ImuModel, WindField};
pub use harness::{MetricsReport, Scenario};
pub use learning::{FlightRecord, ResidualNet};
pub use vehicle::{VehicleParams, VehicleState, Wrench};

//! Rigid-body quadrotor plant: parameters, state, wrench aggregation,
//! first-order motor lag, and RK4 integration.

mod dynamics;
mod params;

pub use dynamics::{
    dynamics_derivative, integrate_step, motor_step, ForceInputs, RotorAero, StateDerivative,
};
pub use params::{aggregate_wrench, rotor_positions, MotorModel, VehicleParams, VehicleState, Wrench};

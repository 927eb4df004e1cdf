//! Wall-contact force at the rod-tip sponge: linear normal compression and
//! Coulomb friction with viscous regularization below the slip threshold.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::vehicle::{VehicleState, Wrench};

use super::Wall;

/// End-effector geometry and contact parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    /// Sponge-tip center in the body frame (m).
    pub rod_tip_body: Vector3<f64>,
    pub sponge_radius: f64,
    /// Linear spring constant (N/m).
    pub k_spring: f64,
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Viscous regularization slope below the slip threshold (N s/m).
    pub viscous_slope: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self {
            rod_tip_body: Vector3::new(-0.45, 0.0, 0.0),
            sponge_radius: 0.1,
            k_spring: 10.0,
            mu: 0.4,
            viscous_slope: 100.0,
        }
    }
}

/// Contact diagnostics for metrics and validity checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContactInfo {
    /// Sponge compression (m); 0 out of contact.
    pub penetration: f64,
    /// Normal force magnitude (N).
    pub normal_force: f64,
    /// Tangential force magnitude (N).
    pub tangential_force: f64,
    pub in_contact: bool,
}

/// Body-frame contact wrench of the sponge tip against the wall front face,
/// plus diagnostics. Forces apply at the tip and produce a moment about the
/// center of mass.
pub fn contact_wrench(
    state: &VehicleState,
    wall: &Wall,
    model: &ContactModel,
) -> (Wrench, ContactInfo) {
    let tip_inertial = state.p + state.r * model.rod_tip_body;
    if !wall.in_footprint(tip_inertial.y) {
        return (Wrench::zero(), ContactInfo::default());
    }
    let distance = tip_inertial.x - wall.face_x();
    let penetration = model.sponge_radius - distance;
    if penetration <= 0.0 {
        return (Wrench::zero(), ContactInfo::default());
    }

    let f_n_mag = model.k_spring * penetration;
    let normal_inertial = Vector3::new(f_n_mag, 0.0, 0.0);

    // tip velocity in the wall plane opposes sliding
    let tip_vel = state.r * state.hub_velocity(&model.rod_tip_body);
    let v_t = Vector3::new(0.0, tip_vel.y, tip_vel.z);
    let speed = v_t.norm();
    let tangential_inertial = if speed > 1e-12 {
        let mag = (model.mu * f_n_mag).min(model.viscous_slope * speed);
        -v_t * (mag / speed)
    } else {
        Vector3::zeros()
    };

    let force_body = state.r.transpose() * (normal_inertial + tangential_inertial);
    let moment_body = model.rod_tip_body.cross(&force_body);
    (
        Wrench::new(force_body, moment_body),
        ContactInfo {
            penetration,
            normal_force: f_n_mag,
            tangential_force: tangential_inertial.norm(),
            in_contact: true,
        },
    )
}

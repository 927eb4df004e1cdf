//! Blade element momentum theory rotor model.
//!
//! [`bemt_evaluate`] computes per-rotor aerodynamic force and axial torque
//! under arbitrary inflow. [`build_rotor_table`] precomputes the map over an
//! operating-range grid exploiting rotor axisymmetry, [`table_lookup`] queries
//! it in O(1), and [`invert_thrust`] solves the thrust-matching problem used
//! by speed allocation.

mod airfoil;
mod evaluate;
mod propeller;
mod table;

pub use airfoil::{sectional_coefficients, AirfoilParams};
pub use evaluate::{
    bemt_evaluate, bemt_evaluate_detailed, AnnulusSolution, BemtDiscretization, PreparedRotor,
    RotorInflow, RotorWrench,
};
pub use propeller::{GeometryError, PropellerModel, SpinDirection};
pub use table::{
    build_rotor_table, invert_thrust, invert_thrust_saturating, table_lookup, AuditReport,
    GridSpec, RotorMapTable, TableLookup,
};

/// Standard sea-level air density (kg/m^3), configurable at call sites.
pub const RHO_SEA_LEVEL: f64 = 1.225;

#[derive(Debug, Clone, thiserror::Error)]
pub enum BemtError {
    /// The induced-inflow root finder exceeded its iteration budget for a
    /// radial element: the operating point is outside model validity
    /// (e.g. deep vortex-ring state).
    #[error("inflow solve failed to converge on radial element {element}")]
    NonConvergence { element: usize },
    /// The interpolation-accuracy audit of a freshly built table failed.
    #[error("table grid too coarse: max relative force error {max_rel_error:.4} over {probes} probes")]
    GridTooCoarse { max_rel_error: f64, probes: usize },
    /// No rotor speed in the table achieves the requested thrust.
    #[error("thrust {target:.3} N infeasible, achievable range [{f_min:.3}, {f_max:.3}] N")]
    Infeasible { target: f64, f_min: f64, f_max: f64 },
}

//! Sectional airfoil lift/drag model parameterized by four blade-level
//! coefficients: linear lift slope, post-stall lift factor, profile-drag
//! scale, and stall-transition angle.

use serde::{Deserialize, Serialize};

/// Blade-section aerodynamic parameters shared by all rotors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirfoilParams {
    /// Linear lift-curve slope (1/rad).
    pub c_l1: f64,
    /// Post-stall lift coefficient factor (dimensionless).
    pub c_l2: f64,
    /// Profile-drag scale coefficient (dimensionless).
    pub c_d: f64,
    /// Stall-transition angle (rad).
    pub alpha0: f64,
}

/// Width of the logistic pre/post-stall blend ramp (rad).
const BLEND_WIDTH: f64 = 0.05;

impl AirfoilParams {
    pub fn new(c_l1: f64, c_l2: f64, c_d: f64, alpha0: f64) -> Self {
        let p = Self { c_l1, c_l2, c_d, alpha0 };
        p.validate().expect("invalid airfoil parameters");
        p
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_l1 > 0.0) {
            return Err(format!("c_l1 must be positive, got {}", self.c_l1));
        }
        if !(self.c_l2 >= 0.0) {
            return Err(format!("c_l2 must be nonnegative, got {}", self.c_l2));
        }
        if !(self.c_d >= 0.0) {
            return Err(format!("c_d must be nonnegative, got {}", self.c_d));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < std::f64::consts::FRAC_PI_2) {
            return Err(format!("alpha0 must lie in (0, pi/2), got {}", self.alpha0));
        }
        Ok(())
    }

    /// Simulation ground-truth parameter set.
    pub fn ground_truth() -> Self {
        Self::new(5.3, 1.7, 1.8, 0.36)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.c_l1, self.c_l2, self.c_d, self.alpha0]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self { c_l1: x[0], c_l2: x[1], c_d: x[2], alpha0: x[3] }
    }
}

/// Sectional lift and drag coefficients at angle of attack `alpha` (rad).
///
/// Pre-stall lift is linear with slope `c_l1`; past the stall-transition
/// angle the section follows a flat-plate-like `c_l2 * sin(2a)` law. The two
/// regimes are joined by a logistic ramp centered at `+-alpha0` so the curve
/// stays C1, which the inflow root-finder requires. Drag is the even
/// flat-plate law `c_d * sin^2(a)`.
pub fn sectional_coefficients(alpha: f64, airfoil: &AirfoilParams) -> (f64, f64) {
    let blend = 1.0 / (1.0 + ((alpha.abs() - airfoil.alpha0) / BLEND_WIDTH).exp());
    let c_l = blend * airfoil.c_l1 * alpha + (1.0 - blend) * airfoil.c_l2 * (2.0 * alpha).sin();
    let c_d_sec = airfoil.c_d * alpha.sin().powi(2);
    (c_l, c_d_sec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_incidence_is_zero() {
        let (cl, cd) = sectional_coefficients(0.0, &AirfoilParams::ground_truth());
        assert_eq!(cl, 0.0);
        assert_eq!(cd, 0.0);
    }

    #[test]
    fn pre_stall_linear_region() {
        // alpha well below alpha0: blend weight ~ 1, slope c_l1.
        let (cl, _) = sectional_coefficients(0.1, &AirfoilParams::ground_truth());
        assert_relative_eq!(cl, 0.53, max_relative = 0.01);
    }

    #[test]
    fn flat_plate_limit_at_90_deg() {
        let p = AirfoilParams::ground_truth();
        let (cl, cd) = sectional_coefficients(std::f64::consts::FRAC_PI_2, &p);
        assert!(cl.abs() < 1e-9, "post-stall sin(2a) vanishes at pi/2, got {cl}");
        assert_relative_eq!(cd, p.c_d, max_relative = 1e-12);
    }

    #[test]
    fn drag_even_lift_odd() {
        let p = AirfoilParams::ground_truth();
        for &a in &[0.05, 0.2, 0.36, 0.7, 1.2, 2.0] {
            let (cl_p, cd_p) = sectional_coefficients(a, &p);
            let (cl_m, cd_m) = sectional_coefficients(-a, &p);
            assert_relative_eq!(cl_p, -cl_m, epsilon = 1e-14);
            assert_relative_eq!(cd_p, cd_m, epsilon = 1e-14);
            assert!(cd_p >= 0.0);
        }
    }

    #[test]
    fn continuous_across_stall() {
        let p = AirfoilParams::ground_truth();
        let mut prev = sectional_coefficients(0.2, &p).0;
        let mut alpha = 0.2;
        while alpha < 0.6 {
            alpha += 1e-4;
            let cur = sectional_coefficients(alpha, &p).0;
            assert!((cur - prev).abs() < 5e-3, "jump at alpha={alpha}");
            prev = cur;
        }
    }
}

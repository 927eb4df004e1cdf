//! Rotor force/torque evaluation: per-annulus induced inflow solved by
//! matching blade-element thrust against momentum-theory thrust, then
//! sectional lift/drag integrated over azimuth and span.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::airfoil::sectional_coefficients;
use super::{AirfoilParams, BemtError, PropellerModel};

/// Numerical discretization and inflow-solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BemtDiscretization {
    pub radial_segments: usize,
    pub azimuthal_segments: usize,
    /// Per-annulus thrust-residual tolerance (N) for the inflow solve.
    pub inflow_tolerance: f64,
    pub max_inflow_iters: usize,
}

impl BemtDiscretization {
    pub fn new(radial_segments: usize, azimuthal_segments: usize) -> Self {
        assert!(radial_segments >= 2 && azimuthal_segments >= 4);
        Self {
            radial_segments,
            azimuthal_segments,
            inflow_tolerance: 1e-6,
            max_inflow_iters: 80,
        }
    }

    /// Controller-side model resolution (20 radial, 18 azimuthal).
    pub fn coarse() -> Self {
        Self::new(20, 18)
    }

    /// Simulation ground-truth resolution (100 radial, 90 azimuthal).
    pub fn fine() -> Self {
        Self::new(100, 90)
    }
}

/// Per-rotor operating point, expressed in the rotor frame (z along thrust).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorInflow {
    /// Rotor speed (rev/s), nonnegative.
    pub n: f64,
    /// Freestream wind velocity at the hub (m/s).
    pub v_wind: Vector3<f64>,
    /// Hub translational velocity (m/s).
    pub v_prop: Vector3<f64>,
}

impl RotorInflow {
    pub fn new(n: f64, v_wind: Vector3<f64>, v_prop: Vector3<f64>) -> Self {
        Self { n, v_wind, v_prop }
    }

    pub fn hover(n: f64) -> Self {
        Self::new(n, Vector3::zeros(), Vector3::zeros())
    }

    /// Air velocity relative to the hub: `v_wind - v_prop`.
    pub fn relative_flow(&self) -> Vector3<f64> {
        self.v_wind - self.v_prop
    }
}

/// Force (N) and torque (N m) produced by one rotor, rotor frame.
/// Lateral torque components are identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorWrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl RotorWrench {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), torque: Vector3::zeros() }
    }
}

/// Converged induced-inflow state of one radial element.
#[derive(Debug, Clone, Copy)]
pub struct AnnulusSolution {
    pub radius: f64,
    pub induced_velocity: f64,
    /// |T_BET - T_MT| at the accepted solution (N).
    pub thrust_residual: f64,
}

/// Inflow geometry of one rotor operating point, independent of the airfoil
/// parameters. Preparing this once lets parameter identification sweep the
/// airfoil vector without redoing the per-section kinematics.
pub struct PreparedRotor {
    annuli: Vec<Annulus>,
    /// sum weight per azimuth station: blade_count / azimuthal_segments
    blade_weight: f64,
    spin: f64,
    rho: f64,
    disc: BemtDiscretization,
    /// motion direction components per azimuth station (spin-signed)
    em_x: Vec<f64>,
    em_y: Vec<f64>,
}

struct Annulus {
    r: f64,
    area: f64,
    theta: f64,
    /// 0.5 * rho * chord * dr, per-blade sectional force factor
    half_rho_c_dr: f64,
    /// in-plane (tangential) relative speed per azimuth station
    u_t: Vec<f64>,
    w_z: f64,
    w_xy_sq: f64,
}

impl PreparedRotor {
    pub fn new(prop: &PropellerModel, inflow: &RotorInflow, disc: &BemtDiscretization, rho: f64) -> Self {
        let k = disc.azimuthal_segments;
        let spin = prop.spin_direction as f64;
        let omega = std::f64::consts::TAU * inflow.n;
        let w = inflow.relative_flow();

        let mut sin_psi = vec![0.0; k];
        let mut cos_psi = vec![0.0; k];
        for i in 0..k {
            let psi = std::f64::consts::TAU * (i as f64 + 0.5) / k as f64;
            sin_psi[i] = psi.sin();
            cos_psi[i] = psi.cos();
        }
        let em_x: Vec<f64> = sin_psi.iter().map(|s| -spin * s).collect();
        let em_y: Vec<f64> = cos_psi.iter().map(|c| spin * c).collect();

        let span = 1.0 - prop.root_cutoff;
        let dr_frac = span / disc.radial_segments as f64;
        let mut annuli = Vec::with_capacity(disc.radial_segments);
        for j in 0..disc.radial_segments {
            let f = prop.root_cutoff + (j as f64 + 0.5) * dr_frac;
            let r = f * prop.radius;
            let dr = dr_frac * prop.radius;
            let (theta, chord) = prop.section(f);
            let u_t = (0..k)
                .map(|i| omega * r - spin * (-w.x * sin_psi[i] + w.y * cos_psi[i]))
                .collect();
            annuli.push(Annulus {
                r,
                area: std::f64::consts::TAU * r * dr,
                theta,
                half_rho_c_dr: 0.5 * rho * chord * dr,
                u_t,
                w_z: w.z,
                w_xy_sq: w.x * w.x + w.y * w.y,
            });
        }

        Self {
            annuli,
            blade_weight: prop.blade_count as f64 / k as f64,
            spin,
            rho,
            disc: *disc,
            em_x,
            em_y,
        }
    }

    /// Blade-element thrust of one annulus at induced velocity `v_i`.
    fn bet_thrust(&self, an: &Annulus, airfoil: &AirfoilParams, v_i: f64) -> f64 {
        let u_p = v_i - an.w_z;
        let mut t = 0.0;
        for &u_t in &an.u_t {
            let w_sq = u_t * u_t + u_p * u_p;
            if w_sq < 1e-12 {
                continue;
            }
            let w_mag = w_sq.sqrt();
            let phi = u_p.atan2(u_t);
            let alpha = crate::math::wrap_angle(an.theta - phi);
            let (c_l, c_d) = sectional_coefficients(alpha, airfoil);
            let q = an.half_rho_c_dr * w_sq;
            let (cos_phi, sin_phi) = (u_t / w_mag, u_p / w_mag);
            t += q * (c_l * cos_phi - c_d * sin_phi);
        }
        self.blade_weight * t
    }

    /// Momentum-theory thrust of the annulus, signed by `v_i`.
    fn mt_thrust(&self, an: &Annulus, v_i: f64) -> f64 {
        let u = (an.w_xy_sq + (an.w_z - v_i) * (an.w_z - v_i)).sqrt();
        2.0 * self.rho * an.area * v_i * u
    }

    fn solve_annulus(&self, idx: usize, airfoil: &AirfoilParams) -> Result<AnnulusSolution, BemtError> {
        let an = &self.annuli[idx];
        let g = |v: f64| self.bet_thrust(an, airfoil, v) - self.mt_thrust(an, v);

        let t0 = self.bet_thrust(an, airfoil, 0.0);
        let v_scale = (t0.max(1e-9) / (2.0 * self.rho * an.area)).sqrt();

        let mut lo = 0.0;
        let mut hi = 2.0 * v_scale + an.w_z.abs() + 0.5;
        let mut g_lo = g(lo);
        let mut g_hi = g(hi);
        let tol = self.disc.inflow_tolerance;

        if g_lo.abs() <= tol * 1e-3 {
            return Ok(AnnulusSolution { radius: an.r, induced_velocity: lo, thrust_residual: g_lo.abs() });
        }

        // expand the bracket until the residual changes sign
        let mut step = 1.0;
        let mut expands = 0;
        while g_lo < 0.0 && expands < 12 {
            lo -= step;
            step *= 2.0;
            g_lo = g(lo);
            expands += 1;
        }
        let mut expands = 0;
        while g_hi > 0.0 && expands < 12 {
            hi = hi * 2.0 + 1.0;
            g_hi = g(hi);
            expands += 1;
        }
        if g_lo < 0.0 || g_hi > 0.0 {
            return Err(BemtError::NonConvergence { element: idx });
        }

        // Illinois false position
        let mut iters = 0;
        let (mut a, mut b, mut ga, mut gb) = (lo, hi, g_lo, g_hi);
        loop {
            let mid = if (gb - ga).abs() > 1e-300 { b - gb * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
            let mid = if mid <= a || mid >= b { 0.5 * (a + b) } else { mid };
            let gm = g(mid);
            iters += 1;
            if gm.abs() <= tol * 1e-3 || (b - a) < 1e-12 * (1.0 + mid.abs()) {
                return Ok(AnnulusSolution { radius: an.r, induced_velocity: mid, thrust_residual: gm.abs() });
            }
            if iters >= self.disc.max_inflow_iters {
                if gm.abs() <= tol {
                    return Ok(AnnulusSolution { radius: an.r, induced_velocity: mid, thrust_residual: gm.abs() });
                }
                return Err(BemtError::NonConvergence { element: idx });
            }
            // Illinois: halve the residual at the retained opposite endpoint
            // so a stale far bracket cannot stall the secant point
            if (gm > 0.0) == (ga > 0.0) {
                a = mid;
                ga = gm;
                gb *= 0.5;
            } else {
                b = mid;
                gb = gm;
                ga *= 0.5;
            }
        }
    }

    /// Blade-element and momentum-theory thrusts of one annulus at a trial
    /// induced velocity; exposed for solver diagnostics.
    pub fn annulus_residual_parts(&self, idx: usize, airfoil: &AirfoilParams, v_i: f64) -> (f64, f64) {
        let an = &self.annuli[idx];
        (self.bet_thrust(an, airfoil, v_i), self.mt_thrust(an, v_i))
    }

    /// Number of radial elements.
    pub fn annulus_count(&self) -> usize {
        self.annuli.len()
    }

    /// Integrate the rotor wrench for a given airfoil parameter set.
    pub fn evaluate(&self, airfoil: &AirfoilParams) -> Result<RotorWrench, BemtError> {
        self.evaluate_detailed(airfoil).map(|(w, _)| w)
    }

    /// As [`evaluate`](Self::evaluate) but also returns the per-annulus
    /// converged inflow states for consistency checks.
    pub fn evaluate_detailed(
        &self,
        airfoil: &AirfoilParams,
    ) -> Result<(RotorWrench, Vec<AnnulusSolution>), BemtError> {
        let mut force = Vector3::zeros();
        let mut torque_z = 0.0;
        let mut solutions = Vec::with_capacity(self.annuli.len());

        for idx in 0..self.annuli.len() {
            let sol = self.solve_annulus(idx, airfoil)?;
            let an = &self.annuli[idx];
            let u_p = sol.induced_velocity - an.w_z;
            let mut fx = 0.0;
            let mut fy = 0.0;
            let mut fz = 0.0;
            let mut tz = 0.0;
            for (k, &u_t) in an.u_t.iter().enumerate() {
                let w_sq = u_t * u_t + u_p * u_p;
                if w_sq < 1e-12 {
                    continue;
                }
                let w_mag = w_sq.sqrt();
                let phi = u_p.atan2(u_t);
                let alpha = crate::math::wrap_angle(an.theta - phi);
                let (c_l, c_d) = sectional_coefficients(alpha, airfoil);
                let q = an.half_rho_c_dr * w_sq;
                let (d_l, d_d) = (q * c_l, q * c_d);
                let (cos_phi, sin_phi) = (u_t / w_mag, u_p / w_mag);
                fz += d_l * cos_phi - d_d * sin_phi;
                let f_m = -(d_l * sin_phi + d_d * cos_phi);
                fx += f_m * self.em_x[k];
                fy += f_m * self.em_y[k];
                tz += an.r * f_m * self.spin;
            }
            force.x += self.blade_weight * fx;
            force.y += self.blade_weight * fy;
            force.z += self.blade_weight * fz;
            torque_z += self.blade_weight * tz;
            solutions.push(sol);
        }

        Ok((
            RotorWrench { force, torque: Vector3::new(0.0, 0.0, torque_z) },
            solutions,
        ))
    }
}

/// Evaluate the aerodynamic force and axial torque of one rotor.
pub fn bemt_evaluate(
    prop: &PropellerModel,
    inflow: &RotorInflow,
    disc: &BemtDiscretization,
    rho: f64,
) -> Result<RotorWrench, BemtError> {
    PreparedRotor::new(prop, inflow, disc, rho).evaluate(&prop.airfoil)
}

/// Evaluate with per-annulus inflow diagnostics.
pub fn bemt_evaluate_detailed(
    prop: &PropellerModel,
    inflow: &RotorInflow,
    disc: &BemtDiscretization,
    rho: f64,
) -> Result<(RotorWrench, Vec<AnnulusSolution>), BemtError> {
    PreparedRotor::new(prop, inflow, disc, rho).evaluate_detailed(&prop.airfoil)
}

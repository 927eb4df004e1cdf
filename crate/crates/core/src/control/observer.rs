//! Adaptive residual disturbance observer: regularized adaptation law with a
//! Riccati-style covariance update, integrated at the controller rate.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::vehicle::Wrench;

use super::{ControlError, GainSet};

/// The three-part disturbance estimate and the observer covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEstimate {
    /// Physics-based lateral nominal aerodynamic force (N).
    pub f_phys: Vector3<f64>,
    /// Learned residual force (N).
    pub f_res: Vector3<f64>,
    /// Adaptive correction (N).
    pub eps_hat: Vector3<f64>,
    /// Observer covariance, symmetric positive definite.
    pub p: Matrix3<f64>,
}

impl DisturbanceEstimate {
    /// Neutral start: zero estimate, P(0) = Q.
    pub fn initial(gains: &GainSet) -> Self {
        Self {
            f_phys: Vector3::zeros(),
            f_res: Vector3::zeros(),
            eps_hat: Vector3::zeros(),
            p: gains.q,
        }
    }

    /// Total estimated disturbance force.
    pub fn total(&self) -> Vector3<f64> {
        self.f_phys + self.f_res + self.eps_hat
    }

    /// Disturbance wrench fed to the controller; the observer operates at
    /// the force level so the moment is zero.
    pub fn wrench(&self) -> Wrench {
        Wrench::new(self.total(), Vector3::zeros())
    }
}

/// One forward-Euler step of the adaptation law and covariance update:
///
/// ```text
/// eps_dot = -lambda eps - P R^-1 (eps - y) + P s_v
/// P_dot   = -2 lambda P + Q - P R^-1 P
/// ```
///
/// `y` is the measured residual force and `s_v` the translational part of
/// the composite tracking error. P is symmetrized and eigenvalue-floored
/// after the step so it stays positive definite under any input stream.
pub fn observer_step(
    eps_hat: &Vector3<f64>,
    p: &Matrix3<f64>,
    y: &Vector3<f64>,
    s_v: &Vector3<f64>,
    gains: &GainSet,
    dt: f64,
) -> Result<(Vector3<f64>, Matrix3<f64>), ControlError> {
    debug_assert!(dt > 0.0);
    let r_inv = gains.r.try_inverse().expect("R positive definite");
    let eps_dot = -gains.lambda * eps_hat - p * r_inv * (eps_hat - y) + p * s_v;
    let p_dot = -2.0 * gains.lambda * p + gains.q - p * r_inv * p;

    let eps_next = eps_hat + eps_dot * dt;
    let p_next = p + p_dot * dt;

    // symmetrize and project onto the positive-definite cone
    let sym = 0.5 * (p_next + p_next.transpose());
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        *v = v.max(1e-9);
    }
    let p_proj = eig.eigenvectors * Matrix3::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let p_proj = 0.5 * (p_proj + p_proj.transpose());

    if eps_next.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
        return Err(ControlError::NumericalBlowup { what: "eps_hat" });
    }
    if p_proj.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
        return Err(ControlError::NumericalBlowup { what: "P" });
    }
    Ok((eps_next, p_proj))
}

/// Closed-form scalar steady state of the covariance update for isotropic
/// gains: `0 = -2 lambda P + q - P^2 / r`.
pub fn scalar_riccati_steady_state(lambda: f64, q: f64, r: f64) -> f64 {
    r * (-lambda + (lambda * lambda + q / r).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gains(lambda: f64, q: f64, r: f64) -> GainSet {
        GainSet {
            lambda,
            q: Matrix3::identity() * q,
            r: Matrix3::identity() * r,
            ..GainSet::default()
        }
    }

    #[test]
    fn matched_measurement_decays_estimate() {
        // y = eps, s = 0: eps_dot = -lambda eps
        let g = gains(2.0, 1.0, 0.01);
        let eps = Vector3::new(1.0, -0.5, 0.25);
        let dt = 1e-3;
        let (next, _) = observer_step(&eps, &g.q, &eps.clone(), &Vector3::zeros(), &g, dt).unwrap();
        assert_relative_eq!(next, eps * (1.0 - g.lambda * dt), epsilon = 1e-12);
    }

    #[test]
    fn covariance_converges_to_scalar_riccati_fixed_point() {
        let (lambda, q, r) = (1.0, 1.0, 0.01);
        let g = gains(lambda, q, r);
        let p_star = scalar_riccati_steady_state(lambda, q, r);
        // algebraic root of 0 = -2 lambda P + q - P^2/r
        assert_relative_eq!(-2.0 * lambda * p_star + q - p_star * p_star / r, 0.0, epsilon = 1e-12);
        let mut p = g.q;
        let mut eps = Vector3::zeros();
        for _ in 0..20_000 {
            let (e2, p2) =
                observer_step(&eps, &p, &Vector3::zeros(), &Vector3::zeros(), &g, 1e-3).unwrap();
            eps = e2;
            p = p2;
        }
        for i in 0..3 {
            assert_relative_eq!(p[(i, i)], p_star, max_relative = 0.01);
        }
    }

    #[test]
    fn covariance_stays_spd_under_random_inputs() {
        use rand::Rng;
        use rand::SeedableRng;
        let g = gains(0.1, 1.0, 0.01);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut eps = Vector3::zeros();
        let mut p = g.q;
        for _ in 0..100_000 {
            let y = Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            let s = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let (e2, p2) = observer_step(&eps, &p, &y, &s, &g, 2e-3).unwrap();
            eps = e2;
            p = p2;
            assert!((p - p.transpose()).norm() < 1e-12);
            assert!(p.symmetric_eigenvalues().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn constant_disturbance_recovered_on_toy_plant() {
        // 3-D double integrator with a constant unknown force; the tracking
        // loop supplies s and the measured residual feeds the observer
        let g = GainSet::default();
        let m = 2.0;
        let d_true = Vector3::new(1.5, -0.8, 0.6);
        let dt = 2e-3;
        let mut x = Vector3::zeros();
        let mut v = Vector3::zeros();
        let mut eps = Vector3::zeros();
        let mut p = g.q;
        let mut t = 0.0;
        while t < 2.0 {
            let s = v + 2.0 * x; // lambda_mix = 2 on the toy plant
            let u = -8.0 * s - eps; // K = 8 plus disturbance compensation
            let acc = (u + d_true) / m;
            // measured residual: sensed force minus modeled (u)
            let y = m * acc - u;
            let (e2, p2) = observer_step(&eps, &p, &y, &s, &g, dt).unwrap();
            eps = e2;
            p = p2;
            v += acc * dt;
            x += v * dt;
            t += dt;
        }
        let rel = (eps - d_true).norm() / d_true.norm();
        assert!(rel < 0.10, "recovered {eps:?} vs {d_true:?} (rel {rel})");
    }

    #[test]
    fn blowup_is_reported() {
        let g = gains(0.1, 1.0, 1e-12);
        let eps = Vector3::new(1e6, 0.0, 0.0);
        let y = Vector3::new(-1e9, 0.0, 0.0);
        let out = observer_step(&eps, &(Matrix3::identity() * 10.0), &y, &Vector3::zeros(), &g, 1.0);
        assert!(matches!(out, Err(ControlError::NumericalBlowup { .. })));
    }

    #[test]
    fn total_is_component_sum() {
        let e = DisturbanceEstimate {
            f_phys: Vector3::new(1.0, 0.0, 0.0),
            f_res: Vector3::new(0.0, 1.0, 0.0),
            eps_hat: Vector3::new(0.0, 0.0, 1.0),
            p: Matrix3::identity(),
        };
        assert_eq!(e.total(), Vector3::new(1.0, 1.0, 1.0));
        let w = e.wrench();
        assert_eq!(w.force, Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(w.moment, Vector3::zeros());
    }
}

//! Airfoil-parameter identification: derivative-free minimization of the
//! mismatch between the BEMT-predicted net force and the sensor-reconstructed
//! force over free-flight data.
//!
//! Each BEMT evaluation solves the per-annulus inflow problem, so the cost is
//! piecewise-smooth at best; bounded Nelder-Mead with random restarts is
//! robust to that and fast enough offline. The per-row inflow geometry is
//! independent of the airfoil vector and is prepared once.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bemt::{AirfoilParams, BemtDiscretization, PreparedRotor, PropellerModel, RotorInflow};
use crate::math::matrix_from_quat;
use crate::vehicle::{rotor_positions, VehicleParams};

use super::{sensed_force, FlightRecord, LearnError};

/// Identification settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifyConfig {
    pub disc: BemtDiscretization,
    pub rho: f64,
    /// Box bounds on (c_l1, c_l2, c_d, alpha0).
    pub bounds: [(f64, f64); 4],
    /// Rows used during the search phase (strided subsample).
    pub subsample: usize,
    /// Rows used for the final polish.
    pub polish_subsample: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            disc: BemtDiscretization::coarse(),
            rho: crate::bemt::RHO_SEA_LEVEL,
            bounds: [(1.0, 10.0), (0.0, 6.0), (0.1, 8.0), (0.1, 1.2)],
            subsample: 400,
            polish_subsample: 2000,
            restarts: 2,
            max_iters: 160,
            seed: 0,
        }
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub params: AirfoilParams,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub cost_evals: usize,
    /// Per-parameter 1-sigma confidence from the local Gauss-Newton
    /// approximation at the optimum.
    pub confidence: [f64; 4],
    pub converged: bool,
}

/// One data row with its inflow geometry prepared for repeated evaluation.
struct PreparedRow {
    rotors: Vec<PreparedRotor>,
    f_sensed: Vector3<f64>,
}

fn prepare_rows(
    rows: &[&FlightRecord],
    geometry: &PropellerModel,
    vehicle: &VehicleParams,
    disc: &BemtDiscretization,
    rho: f64,
) -> Vec<PreparedRow> {
    let positions = rotor_positions(vehicle);
    let props: Vec<PropellerModel> = vehicle
        .spin_pattern
        .iter()
        .map(|&s| {
            let mut p = geometry.clone();
            p.spin_direction = s;
            p
        })
        .collect();

    let build = |rec: &FlightRecord| -> PreparedRow {
        let _r = matrix_from_quat(&rec.quat);
        let v = Vector3::from_row_slice(&rec.v);
        let w = Vector3::from_row_slice(&rec.omega);
        let rotors = (0..4)
            .map(|i| {
                let inflow = RotorInflow {
                    n: rec.n[i],
                    v_wind: Vector3::from_row_slice(&rec.hub_winds[i]),
                    v_prop: v + w.cross(&positions[i]),
                };
                PreparedRotor::new(&props[i], &inflow, disc, rho)
            })
            .collect();
        PreparedRow { rotors, f_sensed: sensed_force(rec, vehicle) }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_iter().map(|r| build(r)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    rows.iter().map(|r| build(r)).collect()
}

/// Sum of squared force mismatches over the prepared rows. Rows whose inflow
/// solve fails for the candidate parameters are rejected with a fixed
/// penalty so the cost stays comparable across candidates.
fn cost(rows: &[PreparedRow], x: &AirfoilParams) -> f64 {
    const REJECTED_ROW_PENALTY: f64 = 1e3;
    let row_cost = |row: &PreparedRow| -> f64 {
        let mut f = Vector3::zeros();
        for r in &row.rotors {
            match r.evaluate(x) {
                Ok(w) => f += w.force,
                Err(_) => return REJECTED_ROW_PENALTY,
            }
        }
        (f - row.f_sensed).norm_squared()
    };
    #[cfg(feature = "parallel")]
    let costs: Vec<f64> = {
        use rayon::prelude::*;
        rows.par_iter().map(row_cost).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let costs: Vec<f64> = rows.iter().map(row_cost).collect();
    costs.iter().sum()
}

/// Bounded Nelder-Mead in 4 dimensions.
pub struct NelderMead {
    pub bounds: [(f64, f64); 4],
    pub max_iters: usize,
    /// Relative simplex-value spread at which to stop.
    pub tol: f64,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64; 4]) -> f64>(
        &self,
        x0: [f64; 4],
        step: [f64; 4],
        mut f: F,
    ) -> ([f64; 4], f64, usize, usize) {
        let clamp = |x: &mut [f64; 4]| {
            for i in 0..4 {
                x[i] = x[i].clamp(self.bounds[i].0, self.bounds[i].1);
            }
        };
        let mut evals = 0;
        let mut eval = |x: &[f64; 4], evals: &mut usize| {
            *evals += 1;
            f(x)
        };

        let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
        let mut x = x0;
        clamp(&mut x);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
        for i in 0..4 {
            let mut xi = x0;
            xi[i] += step[i];
            clamp(&mut xi);
            let vi = eval(&xi, &mut evals);
            simplex.push((xi, vi));
        }

        let mut iters = 0;
        while iters < self.max_iters {
            iters += 1;
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let best = simplex[0].1;
            let worst = simplex[4].1;
            if (worst - best).abs() <= self.tol * (best.abs() + 1e-12) {
                break;
            }
            // centroid of all but worst
            let mut c = [0.0; 4];
            for s in simplex.iter().take(4) {
                for i in 0..4 {
                    c[i] += s.0[i] / 4.0;
                }
            }
            let xw = simplex[4].0;
            let mut xr = [0.0; 4];
            for i in 0..4 {
                xr[i] = c[i] + (c[i] - xw[i]);
            }
            clamp(&mut xr);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let mut xe = [0.0; 4];
                for i in 0..4 {
                    xe[i] = c[i] + 2.0 * (c[i] - xw[i]);
                }
                clamp(&mut xe);
                let fe = eval(&xe, &mut evals);
                simplex[4] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[3].1 {
                simplex[4] = (xr, fr);
            } else {
                let mut xc = [0.0; 4];
                for i in 0..4 {
                    xc[i] = c[i] + 0.5 * (xw[i] - c[i]);
                }
                clamp(&mut xc);
                let fc = eval(&xc, &mut evals);
                if fc < simplex[4].1 {
                    simplex[4] = (xc, fc);
                } else {
                    // shrink toward best
                    let xb = simplex[0].0;
                    for k in 1..5 {
                        let mut xs = [0.0; 4];
                        for i in 0..4 {
                            xs[i] = xb[i] + 0.5 * (simplex[k].0[i] - xb[i]);
                        }
                        clamp(&mut xs);
                        let fs = eval(&xs, &mut evals);
                        simplex[k] = (xs, fs);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        (simplex[0].0, simplex[0].1, iters, evals)
    }
}

fn stride_sample<'a>(rows: &'a [FlightRecord], target: usize) -> Vec<&'a FlightRecord> {
    if rows.len() <= target {
        return rows.iter().collect();
    }
    let stride = rows.len() as f64 / target as f64;
    (0..target).map(|k| &rows[(k as f64 * stride) as usize]).collect()
}

/// Fit the four airfoil parameters to free-flight data.
pub fn identify_params(
    rows: &[FlightRecord],
    geometry: &PropellerModel,
    vehicle: &VehicleParams,
    init: AirfoilParams,
    cfg: &IdentifyConfig,
) -> Result<IdentificationResult, LearnError> {
    if rows.is_empty() {
        return Err(LearnError::BadDataset("no rows for identification".into()));
    }
    let search_rows = prepare_rows(&stride_sample(rows, cfg.subsample), geometry, vehicle, &cfg.disc, cfg.rho);
    let scale = search_rows.len() as f64;

    let nm = NelderMead { bounds: cfg.bounds, max_iters: cfg.max_iters, tol: 1e-8 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let x_init = init.as_array();
    let initial_cost = cost(&search_rows, &init) / scale;

    let mut starts = vec![x_init];
    for _ in 0..cfg.restarts {
        let mut x = [0.0; 4];
        for i in 0..4 {
            x[i] = rng.random_range(cfg.bounds[i].0..cfg.bounds[i].1);
        }
        starts.push(x);
    }

    let mut best = (x_init, f64::INFINITY);
    let mut total_iters = 0;
    let mut total_evals = 0;
    for (k, x0) in starts.iter().enumerate() {
        let step = std::array::from_fn(|i| {
            let span = cfg.bounds[i].1 - cfg.bounds[i].0;
            if k == 0 { 0.05 * span } else { 0.15 * span }
        });
        let (x, v, iters, evals) =
            nm.minimize(*x0, step, |x| cost(&search_rows, &AirfoilParams::from_array(*x)));
        total_iters += iters;
        total_evals += evals;
        if v < best.1 {
            best = (x, v);
        }
    }

    // polish on a larger subsample with a tight simplex
    let polish_rows = prepare_rows(
        &stride_sample(rows, cfg.polish_subsample),
        geometry,
        vehicle,
        &cfg.disc,
        cfg.rho,
    );
    let polish_scale = polish_rows.len() as f64;
    let (x_fin, cost_fin, iters_fin, evals_fin) = nm.minimize(
        best.0,
        std::array::from_fn(|i| 0.01 * (cfg.bounds[i].1 - cfg.bounds[i].0)),
        |x| cost(&polish_rows, &AirfoilParams::from_array(*x)),
    );
    total_iters += iters_fin;
    total_evals += evals_fin;

    // never return something worse than the initialization
    let init_polish_cost = cost(&polish_rows, &init);
    let (x_best, final_cost) = if init_polish_cost < cost_fin {
        (x_init, init_polish_cost)
    } else {
        (x_fin, cost_fin)
    };
    let params = AirfoilParams::from_array(x_best);

    // local Gauss-Newton confidence from a finite-difference Jacobian of the
    // net-force residuals
    let confidence = local_confidence(&polish_rows, &params, final_cost);

    let converged = total_iters < (1 + cfg.restarts) * cfg.max_iters + cfg.max_iters;
    let result = IdentificationResult {
        params,
        initial_cost,
        final_cost: final_cost / polish_scale,
        iterations: total_iters,
        cost_evals: total_evals,
        confidence,
        converged,
    };
    if !converged {
        return Err(LearnError::NotConverged { best_cost: result.final_cost });
    }
    Ok(result)
}

fn local_confidence(rows: &[PreparedRow], params: &AirfoilParams, final_cost: f64) -> [f64; 4] {
    let n_res = 3 * rows.len();
    if n_res <= 4 {
        return [f64::NAN; 4];
    }
    let residuals = |x: &AirfoilParams| -> Vec<f64> {
        rows.iter()
            .flat_map(|row| {
                let mut f = Vector3::zeros();
                for r in &row.rotors {
                    if let Ok(w) = r.evaluate(x) {
                        f += w.force;
                    }
                }
                let e = f - row.f_sensed;
                [e.x, e.y, e.z]
            })
            .collect()
    };
    let x0 = params.as_array();
    let mut jtj = nalgebra::Matrix4::<f64>::zeros();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(4);
    for i in 0..4 {
        let h = (1e-4 * x0[i].abs()).max(1e-6);
        let mut xp = x0;
        xp[i] += h;
        let mut xm = x0;
        xm[i] -= h;
        let rp = residuals(&AirfoilParams::from_array(xp));
        let rm = residuals(&AirfoilParams::from_array(xm));
        cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    for i in 0..4 {
        for j in 0..4 {
            jtj[(i, j)] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
        }
    }
    let sigma_sq = final_cost / (n_res - 4) as f64;
    match jtj.try_inverse() {
        Some(inv) => std::array::from_fn(|i| (sigma_sq * inv[(i, i)]).abs().sqrt()),
        None => [f64::NAN; 4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let nm = NelderMead { bounds: [(-5.0, 5.0); 4], max_iters: 400, tol: 1e-12 };
        let target = [1.0, -2.0, 0.5, 3.0];
        let (x, v, _, _) = nm.minimize([0.0; 4], [0.5; 4], |x| {
            x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum()
        });
        assert!(v < 1e-10, "cost {v}");
        for i in 0..4 {
            assert!((x[i] - target[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let nm = NelderMead { bounds: [(0.0, 1.0); 4], max_iters: 200, tol: 1e-10 };
        // unconstrained minimum outside the box
        let (x, _, _, _) = nm.minimize([0.5; 4], [0.2; 4], |x| {
            x.iter().map(|a| (a - 2.0) * (a - 2.0)).sum()
        });
        for v in x {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(x.iter().all(|&v| v > 0.99));
    }

    #[test]
    fn cost_is_invariant_to_row_order() {
        use crate::bemt::RHO_SEA_LEVEL;
        let vehicle = VehicleParams::default_quad();
        let geometry = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
        let disc = BemtDiscretization::new(8, 8);
        let mk = |n: f64, wx: f64| FlightRecord {
            t: 0.0,
            quat: [1.0, 0.0, 0.0, 0.0],
            n: [n, n + 1.0, n - 1.0, n],
            hub_winds: [[wx, 0.0, 0.5]; 4],
            v: [0.1, 0.0, 0.0],
            accel: [0.0, 0.0, 9.81],
            ..Default::default()
        };
        let rows: Vec<FlightRecord> = vec![mk(90.0, -2.0), mk(110.0, -3.0), mk(70.0, 0.0)];
        let mut rev = rows.clone();
        rev.reverse();
        let refs: Vec<&FlightRecord> = rows.iter().collect();
        let refs_rev: Vec<&FlightRecord> = rev.iter().collect();
        let a = cost(
            &prepare_rows(&refs, &geometry, &vehicle, &disc, RHO_SEA_LEVEL),
            &AirfoilParams::ground_truth(),
        );
        let b = cost(
            &prepare_rows(&refs_rev, &geometry, &vehicle, &disc, RHO_SEA_LEVEL),
            &AirfoilParams::ground_truth(),
        );
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

use nalgebra::{Matrix3, Vector3};
use rotorbench_core::bemt::*;
use rotorbench_core::control::*;
use rotorbench_core::env::{WindField, Wall};
use rotorbench_core::vehicle::VehicleParams;

fn main() {
    // --- wind panel strengths diagnostics ---
    let f = WindField::near_wall(Vector3::new(-10.0, 0.0, 0.0), 0.0, 96, Wall::default());
    // probe normal velocity along the front face
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..=80 {
        let y = -1.95 + 3.9 * k as f64 / 80.0;
        let w = f.wind_at(Vector3::new(-0.5 + 1e-4, y, 0.0));
        if w.x.abs() > worst.0 { worst = (w.x.abs(), y); }
        if k % 10 == 0 { println!("y={y:6.2}  wx={:9.5} wy={:9.5}", w.x, w.y); }
    }
    println!("worst |wx| {:.4} at y={:.2}", worst.0, worst.1);

    // --- controller stack hover step ---
    let prop = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
    let grid = GridSpec { n_max: 180.0, n_count: 33, n_power: 1.5, w_ax_max: 8.0, w_ax_count: 13, w_lat_max: 8.0, w_lat_count: 7, w_power: 1.3 };
    let table = build_rotor_table(&prop, &BemtDiscretization::new(10, 12), &grid, RHO_SEA_LEVEL);
    let params = VehicleParams::default_quad();
    let mut stack = ControllerStack::new(
        ControllerConfig { variant: ControllerVariant::BemtFull, ..Default::default() },
        params.clone(), table.clone(), None);
    let sensed = SensedState {
        r: Matrix3::identity(), p: Vector3::zeros(), v: Vector3::zeros(),
        omega: Vector3::zeros(), n: [100.0; 4],
        f_sensed: Vector3::new(0.0, 0.0, params.m * 9.81),
    };
    let target = TrackingTarget { x_r: Vector3::zeros(), v_r: Vector3::zeros(), a_r: Vector3::zeros() };
    let out = stack.step(&sensed, &[Vector3::zeros(); 4], &target).unwrap();
    println!("u = {:?}", out.u.force);
    println!("eps_hat = {:?}", out.eps_hat);
    println!("f_phys = {:?} f_res = {:?}", out.f_phys, out.f_res);
    println!("s = {:?}", out.s);
    println!("f_alloc = {:?}", out.f_alloc);
    let nominal = 4.0 * table_lookup(&table, &RotorInflow::hover(100.0), 1).wrench.force.z;
    println!("nominal(100)x4 = {nominal}");
}

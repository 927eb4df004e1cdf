//! Near-wall wind field: two-dimensional potential flow in the horizontal
//! plane around the wall panel, with a uniform vertical component.
//!
//! The wall is a zero-thickness plate represented by constant-strength
//! vortex panels. Strengths are solved once per freestream by a dense linear
//! solve enforcing no-penetration at the collocation points plus zero total
//! circulation; velocity queries superpose the freestream and panel
//! contributions. A vortex sheet carries no net source flux, so the panel
//! influence decays like a dipole and the far field recovers the freestream.
//! (Pure source panels cannot do this: blocking the normal flow requires a
//! net source strength whose monopole tail pollutes the far field.)

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::Wall;

/// Wind scenario file schema: `{freestream: [x,y,z], panel_count, vertical}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindScenario {
    pub freestream: [f64; 3],
    #[serde(default = "default_panel_count")]
    pub panel_count: usize,
    /// Uniform vertical wind component (m/s), positive up.
    #[serde(default)]
    pub vertical: f64,
    /// Wall present in near-wall scenarios only.
    #[serde(default)]
    pub wall: bool,
}

fn default_panel_count() -> usize {
    80
}

/// One straight constant-strength vortex panel in the x-y plane.
#[derive(Debug, Clone, Copy)]
struct Panel {
    start: Vector2<f64>,
    end: Vector2<f64>,
}

impl Panel {
    fn midpoint(&self) -> Vector2<f64> {
        0.5 * (self.start + self.end)
    }

    fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Local (tangential, normal) geometry terms at `p`: the log distance
    /// ratio and the subtended angle.
    fn panel_params(&self, p: Vector2<f64>) -> (f64, f64) {
        let r1 = (p - self.start).norm();
        let r2 = (p - self.end).norm();
        if r1 < 1e-12 || r2 < 1e-12 {
            return (0.0, std::f64::consts::PI);
        }
        let beta_num =
            (p.y - self.end.y) * (p.x - self.start.x) - (p.x - self.end.x) * (p.y - self.start.y);
        let beta_den =
            (p.x - self.end.x) * (p.x - self.start.x) + (p.y - self.end.y) * (p.y - self.start.y);
        ((r2 / r1).ln(), beta_num.atan2(beta_den))
    }

    /// Induced velocity at `p` for unit source strength per length.
    fn source_unit_velocity(&self, p: Vector2<f64>) -> Vector2<f64> {
        let d = self.end - self.start;
        let theta = d.y.atan2(d.x);
        let (sin_t, cos_t) = theta.sin_cos();
        if (p - self.midpoint()).norm() < 1e-12 {
            // half-strength jump along the left normal of the panel direction
            return 0.5 * Vector2::new(-sin_t, cos_t);
        }
        let (ln_r, beta) = self.panel_params(p);
        let u_local = -ln_r * 0.5 * std::f64::consts::FRAC_1_PI;
        let w_local = beta * 0.5 * std::f64::consts::FRAC_1_PI;
        Vector2::new(u_local * cos_t - w_local * sin_t, u_local * sin_t + w_local * cos_t)
    }

    /// Induced velocity at `p` for unit vortex strength per length: the
    /// source field rotated a quarter turn.
    fn vortex_unit_velocity(&self, p: Vector2<f64>) -> Vector2<f64> {
        let s = self.source_unit_velocity(p);
        Vector2::new(s.y, -s.x)
    }
}

/// Wind environment: uniform freestream, optional wall panel flow, and a
/// uniform vertical component. Immutable after the panel solve.
#[derive(Debug, Clone)]
pub struct WindField {
    /// Horizontal freestream (z component folded into `vertical`).
    pub freestream: Vector3<f64>,
    /// Uniform vertical wind (m/s), positive up.
    pub vertical: f64,
    pub wall: Option<Wall>,
    panels: Vec<Panel>,
    strengths: Vec<f64>,
}

impl WindField {
    /// Open-space uniform wind; no wall.
    pub fn open_space(freestream: Vector3<f64>) -> Self {
        Self {
            freestream: Vector3::new(freestream.x, freestream.y, 0.0),
            vertical: freestream.z,
            wall: None,
            panels: Vec::new(),
            strengths: Vec::new(),
        }
    }

    /// Near-wall field: solve panel strengths for the horizontal freestream.
    ///
    /// The system stacks no-penetration at every collocation point on a
    /// zero-total-circulation row and is solved in the least-squares sense;
    /// the vortex sheet for an open plate otherwise has a free circulation
    /// parameter.
    pub fn near_wall(
        freestream: Vector3<f64>,
        vertical: f64,
        panel_count: usize,
        wall: Wall,
    ) -> Self {
        let panels = build_plate_panels(&wall, panel_count.max(8));
        let n = panels.len();
        let u_inf = Vector2::new(freestream.x, freestream.y);
        // plate is vertical: outward (flow-side) normal is +x
        let normal = Vector2::new(1.0, 0.0);
        let mut a = DMatrix::zeros(n + 1, n);
        let mut b = DVector::zeros(n + 1);
        for i in 0..n {
            let pi = panels[i].midpoint();
            for j in 0..n {
                a[(i, j)] = panels[j].vortex_unit_velocity(pi).dot(&normal);
            }
            b[i] = -u_inf.dot(&normal);
        }
        for j in 0..n {
            a[(n, j)] = panels[j].length();
        }
        b[n] = 0.0;
        let q = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .expect("plate panel system solvable");
        Self {
            freestream: Vector3::new(freestream.x, freestream.y, 0.0),
            vertical: vertical + freestream.z,
            wall: Some(wall),
            panels,
            strengths: q.iter().copied().collect(),
        }
    }

    pub fn from_scenario(s: &WindScenario) -> Self {
        let f = Vector3::new(s.freestream[0], s.freestream[1], s.freestream[2]);
        if s.wall {
            Self::near_wall(f, s.vertical, s.panel_count, Wall::default())
        } else {
            let mut open = Self::open_space(f);
            open.vertical += s.vertical;
            open
        }
    }

    /// Net circulation of the sheet (solved to ~0).
    pub fn net_circulation(&self) -> f64 {
        self.panels
            .iter()
            .zip(&self.strengths)
            .map(|(p, g)| g * p.length())
            .sum()
    }

    /// Pull queries off the plate: points within the footprint band are
    /// evaluated at a small offset on their side of approach.
    fn clamp_outside(&self, p2: Vector2<f64>) -> Vector2<f64> {
        let Some(w) = &self.wall else { return p2 };
        let margin = 1e-3;
        let dx = p2.x - w.face_x();
        if dx.abs() < margin && w.in_footprint(p2.y) {
            let side = if dx >= 0.0 { 1.0 } else { -1.0 };
            return Vector2::new(w.face_x() + side * margin, p2.y);
        }
        p2
    }

    /// Inertial wind vector at an inertial position.
    pub fn wind_at(&self, point: Vector3<f64>) -> Vector3<f64> {
        let mut h = Vector2::new(self.freestream.x, self.freestream.y);
        if !self.panels.is_empty() {
            let p2 = self.clamp_outside(Vector2::new(point.x, point.y));
            for (panel, g) in self.panels.iter().zip(&self.strengths) {
                h += *g * panel.vortex_unit_velocity(p2);
            }
        }
        Vector3::new(h.x, h.y, self.vertical)
    }
}

/// Free-function form of [`WindField::wind_at`].
pub fn wind_at(field: &WindField, point: Vector3<f64>) -> Vector3<f64> {
    field.wind_at(point)
}

/// Panels along the plate with cosine clustering toward the tips, where the
/// sheet strength steepens.
fn build_plate_panels(wall: &Wall, count: usize) -> Vec<Panel> {
    let a = 0.5 * wall.length;
    let x = wall.face_x();
    let mut nodes = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let t = i as f64 / count as f64;
        nodes.push(wall.center.y - a * (std::f64::consts::PI * t).cos());
    }
    (0..count)
        .map(|i| Panel {
            start: Vector2::new(x, nodes[i]),
            end: Vector2::new(x, nodes[i + 1]),
        })
        .collect()
}

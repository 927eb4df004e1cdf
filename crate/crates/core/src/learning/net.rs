//! Residual force network: shared 26->64->32 trunk with rectified-linear
//! activations and three per-axis heads (32->32->1), every weight matrix
//! spectrally normalized so the network is Lipschitz-bounded over its
//! standardized inputs.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Input dimension: twist (6), quaternion (4), rotor speeds (4), hub winds (12).
pub const INPUT_DIM: usize = 26;
pub const TRUNK_HIDDEN: usize = 64;
pub const TRUNK_OUT: usize = 32;
pub const HEAD_HIDDEN: usize = 32;
pub const HEAD_COUNT: usize = 3;

/// Dense layer with persistent power-iteration state for its spectral norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    /// Left/right singular-vector estimates for power iteration.
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    /// Last spectral-norm estimate.
    pub sigma: f64,
}

impl Linear {
    fn new(out_dim: usize, in_dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut w = Array2::zeros((out_dim, in_dim));
        if scale > 0.0 {
            let sd = scale * (2.0 / in_dim as f64).sqrt();
            for v in w.iter_mut() {
                *v = sd * normal(rng);
            }
        }
        let mut l = Self {
            w,
            b: Array1::zeros(out_dim),
            u: Array1::from_elem(out_dim, 1.0 / (out_dim as f64).sqrt()),
            v: Array1::from_elem(in_dim, 1.0 / (in_dim as f64).sqrt()),
            sigma: 0.0,
        };
        l.power_iterate(50);
        l.project();
        l
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.dot(&self.w.t());
        out += &self.b;
        out
    }

    /// Update the spectral-norm estimate with `iters` power iterations.
    pub fn power_iterate(&mut self, iters: usize) -> f64 {
        for _ in 0..iters {
            let v_new = self.w.t().dot(&self.u);
            let n = v_new.dot(&v_new).sqrt();
            if n < 1e-300 {
                self.sigma = 0.0;
                return 0.0;
            }
            self.v = v_new / n;
            let u_new = self.w.dot(&self.v);
            let n = u_new.dot(&u_new).sqrt();
            if n < 1e-300 {
                self.sigma = 0.0;
                return 0.0;
            }
            self.u = u_new / n;
        }
        self.sigma = self.u.dot(&self.w.dot(&self.v));
        self.sigma
    }

    /// Spectral-norm projection: divide the weights down to unit norm when
    /// the current estimate exceeds one.
    pub fn project(&mut self) {
        if self.sigma > 1.0 {
            self.w.mapv_inplace(|v| v / self.sigma);
            self.sigma = 1.0;
        }
    }

    /// Accurate spectral norm (fresh power iteration to convergence).
    pub fn spectral_norm_accurate(&self) -> f64 {
        let mut u = Array1::from_elem(self.w.nrows(), 1.0 / (self.w.nrows() as f64).sqrt());
        let mut sigma = 0.0;
        for _ in 0..300 {
            let v = self.w.t().dot(&u);
            let nv = v.dot(&v).sqrt();
            if nv < 1e-300 {
                return 0.0;
            }
            let v = v / nv;
            let un = self.w.dot(&v);
            let nu = un.dot(&un).sqrt();
            if nu < 1e-300 {
                return 0.0;
            }
            u = un / nu;
            let s = u.dot(&self.w.dot(&v));
            if (s - sigma).abs() < 1e-12 {
                return s;
            }
            sigma = s;
        }
        sigma
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Per-feature standardization statistics stored with the network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).unwrap();
        let mut var = Array1::<f64>::zeros(x.ncols());
        for row in x.rows() {
            let d = &row.to_owned() - &mean;
            var += &d.mapv(|v| v * v);
        }
        var /= n;
        Self {
            mean: mean.to_vec(),
            std: var.iter().map(|v| v.sqrt().max(1e-8)).collect(),
        }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}

/// Training provenance stored with the serialized network.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NetMeta {
    pub baseline: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub train_rows: usize,
    pub final_train_loss: f64,
    pub final_val_loss: f64,
    pub final_test_loss: Option<f64>,
    /// Attitude quaternion convention of the inputs.
    pub quaternion_convention: String,
}

/// The multi-head residual force network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualNet {
    pub trunk: Vec<Linear>,
    /// Three heads, each a hidden layer plus a scalar output layer.
    pub heads: Vec<Vec<Linear>>,
    pub norm: Normalization,
    pub meta: NetMeta,
}

impl ResidualNet {
    /// Fresh network: He-initialized trunk/hidden layers (then spectrally
    /// projected), zero-initialized head output layers so the residual
    /// prediction starts at exactly zero.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunk = vec![
            Linear::new(TRUNK_HIDDEN, INPUT_DIM, 1.0, &mut rng),
            Linear::new(TRUNK_OUT, TRUNK_HIDDEN, 1.0, &mut rng),
        ];
        let heads = (0..HEAD_COUNT)
            .map(|_| {
                vec![
                    Linear::new(HEAD_HIDDEN, TRUNK_OUT, 1.0, &mut rng),
                    Linear::new(1, HEAD_HIDDEN, 0.0, &mut rng),
                ]
            })
            .collect();
        Self {
            trunk,
            heads,
            norm: Normalization::identity(INPUT_DIM),
            meta: NetMeta::default(),
        }
    }

    /// Batched forward pass on raw (unstandardized) inputs, rows = samples.
    pub fn forward(&self, x_raw: &Array2<f64>) -> Array2<f64> {
        let x = self.norm.apply(x_raw);
        let a1 = relu(&self.trunk[0].forward(&x));
        let a2 = relu(&self.trunk[1].forward(&a1));
        let mut out = Array2::zeros((x.nrows(), HEAD_COUNT));
        for (h, head) in self.heads.iter().enumerate() {
            let b1 = relu(&head[0].forward(&a2));
            let y = head[1].forward(&b1);
            out.column_mut(h).assign(&y.column(0));
        }
        out
    }

    /// Single-sample inference.
    pub fn infer(&self, x_phi: &[f64; INPUT_DIM]) -> nalgebra::Vector3<f64> {
        let x = Array2::from_shape_vec((1, INPUT_DIM), x_phi.to_vec()).unwrap();
        let y = self.forward(&x);
        nalgebra::Vector3::new(y[(0, 0)], y[(0, 1)], y[(0, 2)])
    }

    /// All weight matrices, trunk first then heads.
    pub fn layers(&self) -> Vec<&Linear> {
        let mut out: Vec<&Linear> = self.trunk.iter().collect();
        for h in &self.heads {
            out.extend(h.iter());
        }
        out
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Linear> {
        let mut out: Vec<&mut Linear> = self.trunk.iter_mut().collect();
        for h in &mut self.heads {
            out.extend(h.iter_mut());
        }
        out
    }

    /// Upper Lipschitz bound of the network over standardized inputs:
    /// the trunk norms multiply, and the per-axis head bounds combine in
    /// quadrature across the output vector.
    pub fn lipschitz_bound(&self) -> f64 {
        let trunk: f64 = self.trunk.iter().map(|l| l.spectral_norm_accurate()).product();
        let heads: f64 = self
            .heads
            .iter()
            .map(|h| {
                h.iter()
                    .map(|l| l.spectral_norm_accurate())
                    .product::<f64>()
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt();
        trunk * heads
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("net serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_inputs(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, INPUT_DIM), |_| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn zero_initialized_heads_give_zero_output() {
        let net = ResidualNet::new(1);
        let x = random_inputs(16, 2);
        let y = net.forward(&x);
        assert!(y.iter().all(|&v| v == 0.0));
        assert_eq!(net.infer(&[0.3; INPUT_DIM]), nalgebra::Vector3::zeros());
    }

    #[test]
    fn inference_is_deterministic() {
        let net = ResidualNet::new(3);
        let x = [0.7; INPUT_DIM];
        assert_eq!(net.infer(&x), net.infer(&x));
        let text = net.to_json();
        let back = ResidualNet::from_json(&text).unwrap();
        assert_eq!(net.infer(&x), back.infer(&x));
    }

    #[test]
    fn spectral_projection_bounds_every_layer() {
        let net = ResidualNet::new(4);
        for l in net.layers() {
            assert!(
                l.spectral_norm_accurate() <= 1.0 + 1e-3,
                "sigma {}",
                l.spectral_norm_accurate()
            );
        }
    }

    #[test]
    fn power_iteration_matches_direct_norm_on_small_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut l = Linear::new(4, 3, 1.0, &mut rng);
        // scale up so projection is not active
        l.w.mapv_inplace(|v| 3.0 * v);
        let sigma = l.power_iterate(200);
        // direct: sqrt of max eigenvalue of W^T W via iteration on gram matrix
        let g = l.w.t().dot(&l.w);
        let mut v = Array1::from_elem(3, 1.0);
        for _ in 0..500 {
            let nv = g.dot(&v);
            let n = nv.dot(&nv).sqrt();
            v = nv / n;
        }
        let direct = v.dot(&g.dot(&v)).sqrt();
        assert!((sigma - direct).abs() < 1e-9, "{sigma} vs {direct}");
    }

    #[test]
    fn lipschitz_bound_holds_on_random_pairs() {
        let mut net = ResidualNet::new(7);
        // give the head outputs nonzero weights for a meaningful test
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for head in &mut net.heads {
            for v in head[1].w.iter_mut() {
                *v = 0.3 * rng.random_range(-1.0..1.0);
            }
            head[1].power_iterate(100);
            head[1].project();
        }
        let bound = net.lipschitz_bound();
        assert!(bound > 0.0);
        for trial in 0..50 {
            let a = random_inputs(1, 100 + trial);
            let b = random_inputs(1, 200 + trial);
            let ya = net.forward(&a);
            let yb = net.forward(&b);
            let dy = (&ya - &yb).mapv(|v| v * v).sum().sqrt();
            // standardized-input distance (identity normalization here)
            let dx = (&a - &b).mapv(|v| v * v).sum().sqrt();
            assert!(
                dy <= bound * dx + 1e-9,
                "|dy| {dy} exceeds bound {bound} * |dx| {dx}"
            );
        }
    }

    #[test]
    fn normalization_standardizes_features() {
        let x = random_inputs(500, 5);
        let norm = Normalization::fit(&x);
        let z = norm.apply(&x);
        let m = z.mean_axis(Axis(0)).unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-10));
        for j in 0..INPUT_DIM {
            let col = z.column(j);
            let var: f64 = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
            assert!((var - 1.0).abs() < 1e-8);
        }
    }
}

//! Residual-network training: adaptive-moment gradient descent on the force
//! mismatch between the sensed aerodynamic force and a nominal model, with
//! spectral normalization applied to every weight matrix after each update.

use ndarray::{Array1, Array2, Axis};
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bemt::{table_lookup, RotorInflow, RotorMapTable};
use crate::vehicle::{rotor_positions, VehicleParams};

use super::net::{Linear, Normalization, HEAD_COUNT, INPUT_DIM};
use super::{sensed_force, EpisodeData, FlightRecord, LearnError, ResidualNet};

/// Nominal aerodynamic model whose mismatch the network learns.
pub enum NominalModel<'a> {
    /// Wind-aware learned BEMT table.
    BemtTable(&'a RotorMapTable),
    /// Zero-wind thrust map evaluated at the current rotor speeds.
    ZeroWind(&'a RotorMapTable),
}

impl<'a> NominalModel<'a> {
    pub fn name(&self) -> &'static str {
        match self {
            NominalModel::BemtTable(_) => "bemt",
            NominalModel::ZeroWind(_) => "zero-wind",
        }
    }

    /// Nominal net aerodynamic force for a record row, body frame.
    pub fn net_force(&self, rec: &FlightRecord, params: &VehicleParams) -> Vector3<f64> {
        let positions = rotor_positions(params);
        let v = Vector3::from_row_slice(&rec.v);
        let w = Vector3::from_row_slice(&rec.omega);
        let mut f = Vector3::zeros();
        for i in 0..4 {
            let spin = params.spin_pattern[i];
            let inflow = match self {
                NominalModel::BemtTable(_) => RotorInflow {
                    n: rec.n[i],
                    v_wind: Vector3::from_row_slice(&rec.hub_winds[i]),
                    v_prop: v + w.cross(&positions[i]),
                },
                NominalModel::ZeroWind(_) => RotorInflow::hover(rec.n[i]),
            };
            let table = match self {
                NominalModel::BemtTable(t) | NominalModel::ZeroWind(t) => t,
            };
            f += table_lookup(table, &inflow, spin).wrench.force;
        }
        f
    }
}

/// Residual-network input vector for one record row: twist (6), attitude
/// quaternion (4), rotor speeds (4), hub winds (12).
pub fn input_vector(rec: &FlightRecord) -> [f64; INPUT_DIM] {
    let mut x = [0.0; INPUT_DIM];
    x[..3].copy_from_slice(&rec.v);
    x[3..6].copy_from_slice(&rec.omega);
    x[6..10].copy_from_slice(&rec.quat);
    x[10..14].copy_from_slice(&rec.n);
    for (i, hw) in rec.hub_winds.iter().enumerate() {
        x[14 + 3 * i..17 + 3 * i].copy_from_slice(hw);
    }
    x
}

/// As [`input_vector`] but from live controller channels.
pub fn input_vector_parts(
    v: &Vector3<f64>,
    omega: &Vector3<f64>,
    quat: &[f64; 4],
    n: &[f64; 4],
    hub_winds: &[Vector3<f64>; 4],
) -> [f64; INPUT_DIM] {
    let mut x = [0.0; INPUT_DIM];
    x[..3].copy_from_slice(v.as_slice());
    x[3..6].copy_from_slice(omega.as_slice());
    x[6..10].copy_from_slice(quat);
    x[10..14].copy_from_slice(n);
    for (i, hw) in hub_winds.iter().enumerate() {
        x[14 + 3 * i..17 + 3 * i].copy_from_slice(hw.as_slice());
    }
    x
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of episodes held out for validation (split by episode, not
    /// by row: rows within an episode are correlated).
    pub val_fraction: f64,
    /// Keep every k-th row of each episode.
    pub subsample_stride: usize,
    /// Evaluate the external test set every this many epochs (0 = final only).
    pub test_eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 256,
            learning_rate: 5e-4,
            seed: 0,
            val_fraction: 0.1,
            subsample_stride: 1,
            test_eval_every: 0,
        }
    }
}

/// Loss traces and the final state of a training run. Losses are mean
/// squared force error per sample (N^2).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub test_losses: Vec<(usize, f64)>,
    pub final_train_loss: f64,
    pub final_val_loss: f64,
    pub final_test_loss: Option<f64>,
    pub spectral_norms: Vec<f64>,
    pub train_rows: usize,
    pub val_rows: usize,
}

/// Assemble (X, Y) arrays from episodes: inputs and residual-force targets
/// `F_sensed - F_nominal`.
pub fn assemble_arrays(
    episodes: &[EpisodeData],
    nominal: &NominalModel,
    params: &VehicleParams,
    stride: usize,
) -> (Array2<f64>, Array2<f64>) {
    let stride = stride.max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ep in episodes {
        for rec in ep.rows.iter().step_by(stride) {
            xs.push(input_vector(rec));
            let target = sensed_force(rec, params) - nominal.net_force(rec, params);
            ys.push([target.x, target.y, target.z]);
        }
    }
    let n = xs.len();
    let x = Array2::from_shape_vec((n, INPUT_DIM), xs.into_iter().flatten().collect()).unwrap();
    let y = Array2::from_shape_vec((n, HEAD_COUNT), ys.into_iter().flatten().collect()).unwrap();
    (x, y)
}

struct Adam {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

impl Adam {
    fn new(l: &Linear) -> Self {
        Self {
            m_w: Array2::zeros(l.w.raw_dim()),
            v_w: Array2::zeros(l.w.raw_dim()),
            m_b: Array1::zeros(l.b.len()),
            v_b: Array1::zeros(l.b.len()),
        }
    }

    fn step(&mut self, l: &mut Linear, gw: &Array2<f64>, gb: &Array1<f64>, lr: f64, t: usize) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let t = t as i32;
        let c1 = 1.0 - B1.powi(t);
        let c2 = 1.0 - B2.powi(t);
        self.m_w.zip_mut_with(gw, |m, &g| *m = B1 * *m + (1.0 - B1) * g);
        self.v_w.zip_mut_with(gw, |v, &g| *v = B2 * *v + (1.0 - B2) * g * g);
        ndarray::Zip::from(&mut l.w).and(&self.m_w).and(&self.v_w).for_each(|w, &m, &v| {
            *w -= lr * (m / c1) / ((v / c2).sqrt() + EPS);
        });
        self.m_b.zip_mut_with(gb, |m, &g| *m = B1 * *m + (1.0 - B1) * g);
        self.v_b.zip_mut_with(gb, |v, &g| *v = B2 * *v + (1.0 - B2) * g * g);
        ndarray::Zip::from(&mut l.b).and(&self.m_b).and(&self.v_b).for_each(|b, &m, &v| {
            *b -= lr * (m / c1) / ((v / c2).sqrt() + EPS);
        });
    }
}

/// Forward pass on standardized inputs, keeping activations for backprop.
struct ForwardCache {
    xs: Array2<f64>,
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    zh: Vec<Array2<f64>>,
    ah: Vec<Array2<f64>>,
    y_pred: Array2<f64>,
}

fn forward_cached(net: &ResidualNet, xs: &Array2<f64>) -> ForwardCache {
    let z1 = net.trunk[0].forward(xs);
    let a1 = z1.mapv(|v| v.max(0.0));
    let z2 = net.trunk[1].forward(&a1);
    let a2 = z2.mapv(|v| v.max(0.0));
    let mut zh = Vec::with_capacity(HEAD_COUNT);
    let mut ah = Vec::with_capacity(HEAD_COUNT);
    let mut y_pred = Array2::zeros((xs.nrows(), HEAD_COUNT));
    for (h, head) in net.heads.iter().enumerate() {
        let z = head[0].forward(&a2);
        let a = z.mapv(|v| v.max(0.0));
        let y = head[1].forward(&a);
        y_pred.column_mut(h).assign(&y.column(0));
        zh.push(z);
        ah.push(a);
    }
    ForwardCache { xs: xs.clone(), z1, a1, z2, a2, zh, ah, y_pred }
}

struct Gradients {
    /// Same order as `ResidualNet::layers()`.
    gw: Vec<Array2<f64>>,
    gb: Vec<Array1<f64>>,
    loss: f64,
}

fn backward(net: &ResidualNet, cache: &ForwardCache, y: &Array2<f64>) -> Gradients {
    let b = cache.xs.nrows() as f64;
    let diff = &cache.y_pred - y;
    let loss = diff.mapv(|v| v * v).sum() / b;
    let dy = diff.mapv(|v| 2.0 * v / b);

    let mut gw = vec![Array2::zeros((0, 0)); 2 + 2 * HEAD_COUNT];
    let mut gb = vec![Array1::zeros(0); 2 + 2 * HEAD_COUNT];

    let mut da2 = Array2::zeros(cache.a2.raw_dim());
    for h in 0..HEAD_COUNT {
        let head = &net.heads[h];
        let dyh = dy.column(h).insert_axis(Axis(1)).to_owned();
        // output layer of head h
        gw[2 + 2 * h + 1] = dyh.t().dot(&cache.ah[h]);
        gb[2 + 2 * h + 1] = dyh.sum_axis(Axis(0));
        let dah = dyh.dot(&head[1].w);
        let dzh = &dah * &cache.zh[h].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        gw[2 + 2 * h] = dzh.t().dot(&cache.a2);
        gb[2 + 2 * h] = dzh.sum_axis(Axis(0));
        da2 += &dzh.dot(&head[0].w);
    }
    let dz2 = &da2 * &cache.z2.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    gw[1] = dz2.t().dot(&cache.a1);
    gb[1] = dz2.sum_axis(Axis(0));
    let da1 = dz2.dot(&net.trunk[1].w);
    let dz1 = &da1 * &cache.z1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    gw[0] = dz1.t().dot(&cache.xs);
    gb[0] = dz1.sum_axis(Axis(0));

    Gradients { gw, gb, loss }
}

/// Mean squared force error per sample on standardized inputs.
fn eval_loss(net: &ResidualNet, xs: &Array2<f64>, y: &Array2<f64>) -> f64 {
    if xs.nrows() == 0 {
        return 0.0;
    }
    let cache = forward_cached(net, xs);
    (&cache.y_pred - y).mapv(|v| v * v).sum() / xs.nrows() as f64
}

/// Train a residual network against a nominal model.
///
/// Episodes are split train/validation by episode. The optional test set is
/// monitored for comparison only and never influences optimization.
pub fn train_residual(
    episodes: &[EpisodeData],
    nominal: &NominalModel,
    params: &VehicleParams,
    cfg: &TrainConfig,
    test_set: Option<&[EpisodeData]>,
) -> Result<(ResidualNet, TrainReport), LearnError> {
    if episodes.is_empty() {
        return Err(LearnError::BadDataset("no training episodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // episode-level split
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((episodes.len() as f64 * cfg.val_fraction).round() as usize)
        .min(episodes.len().saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_eps: Vec<EpisodeData> = train_idx.iter().map(|&i| episodes[i].clone()).collect();
    let val_eps: Vec<EpisodeData> = val_idx.iter().map(|&i| episodes[i].clone()).collect();

    let (x_train_raw, y_train) = assemble_arrays(&train_eps, nominal, params, cfg.subsample_stride);
    let (x_val_raw, y_val) = assemble_arrays(&val_eps, nominal, params, cfg.subsample_stride);
    if x_train_raw.nrows() < cfg.batch_size {
        return Err(LearnError::BadDataset(format!(
            "only {} training rows for batch size {}",
            x_train_raw.nrows(),
            cfg.batch_size
        )));
    }

    let mut net = ResidualNet::new(cfg.seed);
    net.norm = Normalization::fit(&x_train_raw);
    let xs_train = net.norm.apply(&x_train_raw);
    let xs_val = net.norm.apply(&x_val_raw);
    let test_arrays = test_set.map(|eps| {
        let (x, y) = assemble_arrays(eps, nominal, params, cfg.subsample_stride);
        (net.norm.apply(&x), y)
    });

    let mut adams: Vec<Adam> = net.layers().iter().map(|l| Adam::new(l)).collect();
    let n_rows = xs_train.nrows();
    let mut indices: Vec<usize> = (0..n_rows).collect();
    let mut report = TrainReport {
        train_rows: n_rows,
        val_rows: xs_val.nrows(),
        ..Default::default()
    };
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in indices.chunks(cfg.batch_size) {
            let xb = gather(&xs_train, chunk);
            let yb = gather(&y_train, chunk);
            let cache = forward_cached(&net, &xb);
            let grads = backward(&net, &cache, &yb);
            if !grads.loss.is_finite() {
                return Err(LearnError::DivergedLoss { epoch });
            }
            epoch_loss += grads.loss;
            batches += 1;
            step += 1;
            let mut layers = net.layers_mut();
            for (i, l) in layers.iter_mut().enumerate() {
                adams[i].step(l, &grads.gw[i], &grads.gb[i], cfg.learning_rate, step);
                // one power-iteration step per weight per update, then project
                l.power_iterate(1);
                l.project();
            }
        }
        report.train_losses.push(epoch_loss / batches.max(1) as f64);
        report.val_losses.push(eval_loss(&net, &xs_val, &y_val));
        if let Some((xt, yt)) = &test_arrays {
            if cfg.test_eval_every > 0 && (epoch + 1) % cfg.test_eval_every == 0 {
                report.test_losses.push((epoch, eval_loss(&net, xt, yt)));
            }
        }
    }

    // settle the spectral estimates before freezing the weights
    for l in net.layers_mut() {
        l.power_iterate(200);
        l.project();
    }

    report.final_train_loss = eval_loss(&net, &xs_train, &y_train);
    report.final_val_loss = eval_loss(&net, &xs_val, &y_val);
    if let Some((xt, yt)) = &test_arrays {
        report.final_test_loss = Some(eval_loss(&net, xt, yt));
    }
    report.spectral_norms = net.layers().iter().map(|l| l.spectral_norm_accurate()).collect();

    net.meta = super::NetMeta {
        baseline: nominal.name().to_string(),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        train_rows: n_rows,
        final_train_loss: report.final_train_loss,
        final_val_loss: report.final_val_loss,
        final_test_loss: report.final_test_loss,
        quaternion_convention: "body-to-inertial wxyz".into(),
    };
    Ok((net, report))
}

fn gather(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (k, &i) in idx.iter().enumerate() {
        out.row_mut(k).assign(&x.row(i));
    }
    out
}

/// Compare analytic backprop gradients against central finite differences on
/// `samples` randomly chosen weight entries; returns the max relative error.
pub fn gradient_check(net: &ResidualNet, xs: &Array2<f64>, y: &Array2<f64>, samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cache = forward_cached(net, xs);
    let grads = backward(net, &cache, y);

    let shapes: Vec<(usize, usize)> = net.layers().iter().map(|l| (l.w.nrows(), l.w.ncols())).collect();
    let mut max_rel: f64 = 0.0;
    for _ in 0..samples {
        let li = rng.random_range(0..shapes.len());
        let (r, c) = shapes[li];
        let (i, j) = (rng.random_range(0..r), rng.random_range(0..c));
        let analytic = grads.gw[li][(i, j)];
        let h = 1e-6;
        let mut plus = net.clone();
        plus.layers_mut()[li].w[(i, j)] += h;
        let mut minus = net.clone();
        minus.layers_mut()[li].w[(i, j)] -= h;
        let lp = eval_loss(&plus, xs, y);
        let lm = eval_loss(&minus, xs, y);
        let numeric = (lp - lm) / (2.0 * h);
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic - numeric).abs() / denom);
    }
    max_rel
}

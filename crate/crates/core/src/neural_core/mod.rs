//! From-first-principles numeric engine: a single LSTM cell with a dense
//! sigmoid head, binary cross-entropy loss, exact BPTT gradients, an Adam
//! optimizer, and finite-difference gradient verification.
//!
//! Everything is `f64`; matrices are row-major `Vec<f64>`.

mod adam;
mod checkpoint;
mod grad_check;

pub use adam::{adam_step, AdamParams, AdamState};
pub use checkpoint::{load_model, save_model, CheckpointError};
pub use grad_check::grad_check;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Probabilities are clamped to [EPS, 1-EPS] inside the loss only.
pub const BCE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("feature mismatch: model={model} data={data}")]
    FeatureMismatch { model: usize, data: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("cache was built for a different model or input")]
    CacheMismatch,
}

/// All trainable parameters of the LSTM cell and its dense head.
///
/// Gate weight matrices `w_*` are `hidden x n_features`, recurrent
/// matrices `u_*` are `hidden x hidden`, biases are length `hidden`.
/// The same struct doubles as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub n_features: usize,
    pub hidden: usize,
    pub w_i: Vec<f64>,
    pub u_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub u_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_g: Vec<f64>,
    pub u_g: Vec<f64>,
    pub b_g: Vec<f64>,
    pub w_o: Vec<f64>,
    pub u_o: Vec<f64>,
    pub b_o: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: f64,
}

/// Names of the 14 parameter tensors, in canonical order.
pub const TENSOR_NAMES: [&str; 14] = [
    "w_i", "u_i", "b_i", "w_f", "u_f", "b_f", "w_g", "u_g", "b_g", "w_o", "u_o", "b_o", "dense_w",
    "dense_b",
];

impl LstmModel {
    /// All-zero model of the given shape; also used for gradient buffers.
    pub fn zeros(n_features: usize, hidden: usize) -> Self {
        let w = || vec![0.0; hidden * n_features];
        let u = || vec![0.0; hidden * hidden];
        let b = || vec![0.0; hidden];
        LstmModel {
            n_features,
            hidden,
            w_i: w(),
            u_i: u(),
            b_i: b(),
            w_f: w(),
            u_f: u(),
            b_f: b(),
            w_g: w(),
            u_g: u(),
            b_g: b(),
            w_o: w(),
            u_o: u(),
            b_o: b(),
            dense_w: vec![0.0; hidden],
            dense_b: 0.0,
        }
    }

    /// Expected element count of a named tensor for this shape.
    pub fn tensor_len(&self, name: &str) -> Option<usize> {
        match name {
            "w_i" | "w_f" | "w_g" | "w_o" => Some(self.hidden * self.n_features),
            "u_i" | "u_f" | "u_g" | "u_o" => Some(self.hidden * self.hidden),
            "b_i" | "b_f" | "b_g" | "b_o" | "dense_w" => Some(self.hidden),
            "dense_b" => Some(1),
            _ => None,
        }
    }

    /// Tensors in canonical order as read-only slices.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w_i", &self.w_i[..]),
            ("u_i", &self.u_i[..]),
            ("b_i", &self.b_i[..]),
            ("w_f", &self.w_f[..]),
            ("u_f", &self.u_f[..]),
            ("b_f", &self.b_f[..]),
            ("w_g", &self.w_g[..]),
            ("u_g", &self.u_g[..]),
            ("b_g", &self.b_g[..]),
            ("w_o", &self.w_o[..]),
            ("u_o", &self.u_o[..]),
            ("b_o", &self.b_o[..]),
            ("dense_w", &self.dense_w[..]),
            ("dense_b", std::slice::from_ref(&self.dense_b)),
        ]
    }

    /// Tensors in canonical order as mutable slices.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w_i", &mut self.w_i[..]),
            ("u_i", &mut self.u_i[..]),
            ("b_i", &mut self.b_i[..]),
            ("w_f", &mut self.w_f[..]),
            ("u_f", &mut self.u_f[..]),
            ("b_f", &mut self.b_f[..]),
            ("w_g", &mut self.w_g[..]),
            ("u_g", &mut self.u_g[..]),
            ("b_g", &mut self.b_g[..]),
            ("w_o", &mut self.w_o[..]),
            ("u_o", &mut self.u_o[..]),
            ("b_o", &mut self.b_o[..]),
            ("dense_w", &mut self.dense_w[..]),
            ("dense_b", std::slice::from_mut(&mut self.dense_b)),
        ]
    }
}

/// Per-step activations retained for backprop.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub cand: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub h_prev: Vec<f64>,
}

/// Full forward trace: one [`StepCache`] per time step plus the output
/// probability.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub steps: Vec<StepCache>,
    pub prob: f64,
}

/// Numerically stable logistic function; never overflows.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy with the probability clamped to [ε, 1-ε].
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn gate_preact(w: &[f64], u: &[f64], b: &[f64], x: &[f64], h_prev: &[f64], out: &mut [f64]) {
    let nf = x.len();
    let hidden = b.len();
    for h in 0..hidden {
        let mut z = b[h];
        let wrow = &w[h * nf..(h + 1) * nf];
        for (wj, xj) in wrow.iter().zip(x) {
            z += wj * xj;
        }
        let urow = &u[h * hidden..(h + 1) * hidden];
        for (uj, hj) in urow.iter().zip(h_prev) {
            z += uj * hj;
        }
        out[h] = z;
    }
}

/// Runs the LSTM recurrence over the input sequence (h0 = c0 = 0) and the
/// dense sigmoid head over the final hidden state.
///
/// Each step: i = σ(W_i x + U_i h + b_i), f = σ(·), o = σ(·),
/// g = tanh(·), c ← f∘c + i∘g, h ← o∘tanh(c); p = σ(dense_w·h_T + dense_b).
pub fn forward(m: &LstmModel, xs: &[Vec<f64>]) -> Result<(f64, ForwardCache), ModelError> {
    if xs.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    for x in xs {
        if x.len() != m.n_features {
            return Err(ModelError::FeatureMismatch {
                model: m.n_features,
                data: x.len(),
            });
        }
    }

    let hidden = m.hidden;
    let mut h_prev = vec![0.0; hidden];
    let mut c_prev = vec![0.0; hidden];
    let mut steps = Vec::with_capacity(xs.len());
    let mut z = vec![0.0; hidden];

    for x in xs {
        let mut gate_i = vec![0.0; hidden];
        let mut gate_f = vec![0.0; hidden];
        let mut gate_o = vec![0.0; hidden];
        let mut cand = vec![0.0; hidden];

        gate_preact(&m.w_i, &m.u_i, &m.b_i, x, &h_prev, &mut z);
        for (g, zv) in gate_i.iter_mut().zip(&z) {
            *g = sigmoid(*zv);
        }
        gate_preact(&m.w_f, &m.u_f, &m.b_f, x, &h_prev, &mut z);
        for (g, zv) in gate_f.iter_mut().zip(&z) {
            *g = sigmoid(*zv);
        }
        gate_preact(&m.w_g, &m.u_g, &m.b_g, x, &h_prev, &mut z);
        for (g, zv) in cand.iter_mut().zip(&z) {
            *g = zv.tanh();
        }
        gate_preact(&m.w_o, &m.u_o, &m.b_o, x, &h_prev, &mut z);
        for (g, zv) in gate_o.iter_mut().zip(&z) {
            *g = sigmoid(*zv);
        }

        let mut c = vec![0.0; hidden];
        let mut h = vec![0.0; hidden];
        for j in 0..hidden {
            c[j] = gate_f[j] * c_prev[j] + gate_i[j] * cand[j];
            h[j] = gate_o[j] * c[j].tanh();
        }

        steps.push(StepCache {
            x: x.clone(),
            gate_i,
            gate_f,
            gate_o,
            cand,
            c: c.clone(),
            h: h.clone(),
            c_prev: std::mem::replace(&mut c_prev, c),
            h_prev: std::mem::replace(&mut h_prev, h),
        });
    }

    let mut logit = m.dense_b;
    for (w, h) in m.dense_w.iter().zip(&h_prev) {
        logit += w * h;
    }
    let prob = sigmoid(logit);

    Ok((prob, ForwardCache { steps, prob }))
}

/// Exact gradients of `bce_loss(forward(m, xs), y)` w.r.t. every parameter,
/// by backpropagation through time over all cached steps.
pub fn backward(m: &LstmModel, cache: &ForwardCache, y: u8) -> Result<LstmModel, ModelError> {
    let hidden = m.hidden;
    let nf = m.n_features;
    if cache.steps.is_empty() {
        return Err(ModelError::CacheMismatch);
    }
    for s in &cache.steps {
        if s.x.len() != nf || s.h.len() != hidden {
            return Err(ModelError::CacheMismatch);
        }
    }

    let mut g = LstmModel::zeros(nf, hidden);

    // dense head: dL/dlogit = p - y for sigmoid + BCE
    let dlogit = cache.prob - f64::from(y);
    let h_last = &cache.steps.last().unwrap().h;
    g.dense_b = dlogit;
    let mut dh = vec![0.0; hidden];
    for j in 0..hidden {
        g.dense_w[j] = dlogit * h_last[j];
        dh[j] = dlogit * m.dense_w[j];
    }

    let mut dc = vec![0.0; hidden];
    for step in cache.steps.iter().rev() {
        let mut dzi = vec![0.0; hidden];
        let mut dzf = vec![0.0; hidden];
        let mut dzo = vec![0.0; hidden];
        let mut dzg = vec![0.0; hidden];
        let mut dc_prev = vec![0.0; hidden];

        for j in 0..hidden {
            let tc = step.c[j].tanh();
            let do_ = dh[j] * tc;
            let dcj = dc[j] + dh[j] * step.gate_o[j] * (1.0 - tc * tc);

            let di = dcj * step.cand[j];
            let df = dcj * step.c_prev[j];
            let dg = dcj * step.gate_i[j];
            dc_prev[j] = dcj * step.gate_f[j];

            dzi[j] = di * step.gate_i[j] * (1.0 - step.gate_i[j]);
            dzf[j] = df * step.gate_f[j] * (1.0 - step.gate_f[j]);
            dzo[j] = do_ * step.gate_o[j] * (1.0 - step.gate_o[j]);
            dzg[j] = dg * (1.0 - step.cand[j] * step.cand[j]);
        }

        let mut dh_prev = vec![0.0; hidden];
        let accum = |dz: &[f64], u: &[f64], gw: &mut [f64], gu: &mut [f64], gb: &mut [f64], dh_prev: &mut [f64]| {
            for j in 0..hidden {
                gb[j] += dz[j];
                let grow = &mut gw[j * nf..(j + 1) * nf];
                for (gv, xv) in grow.iter_mut().zip(&step.x) {
                    *gv += dz[j] * xv;
                }
                let gurow = &mut gu[j * hidden..(j + 1) * hidden];
                for (gv, hv) in gurow.iter_mut().zip(&step.h_prev) {
                    *gv += dz[j] * hv;
                }
                let urow = &u[j * hidden..(j + 1) * hidden];
                for (dhp, uv) in dh_prev.iter_mut().zip(urow) {
                    *dhp += dz[j] * uv;
                }
            }
        };
        accum(&dzi, &m.u_i, &mut g.w_i, &mut g.u_i, &mut g.b_i, &mut dh_prev);
        accum(&dzf, &m.u_f, &mut g.w_f, &mut g.u_f, &mut g.b_f, &mut dh_prev);
        accum(&dzg, &m.u_g, &mut g.w_g, &mut g.u_g, &mut g.b_g, &mut dh_prev);
        accum(&dzo, &m.u_o, &mut g.w_o, &mut g.u_o, &mut g.b_o, &mut dh_prev);

        dh = dh_prev;
        dc = dc_prev;
    }

    Ok(g)
}

/// Uniform ±1/sqrt(hidden) weights, zero biases, forget bias 1.0.
/// Deterministic given the seed.
pub fn init_params(n_features: usize, hidden: usize, seed: u64) -> LstmModel {
    assert!(n_features > 0 && hidden > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (hidden as f64).sqrt();
    let mut m = LstmModel::zeros(n_features, hidden);
    {
        let mut draw = |buf: &mut [f64]| {
            for v in buf.iter_mut() {
                *v = (rng.gen::<f64>() * 2.0 - 1.0) * s;
            }
        };
        draw(&mut m.w_i);
        draw(&mut m.u_i);
        draw(&mut m.w_f);
        draw(&mut m.u_f);
        draw(&mut m.w_g);
        draw(&mut m.u_g);
        draw(&mut m.w_o);
        draw(&mut m.u_o);
        draw(&mut m.dense_w);
    }
    m.b_f.iter_mut().for_each(|b| *b = 1.0);
    m
}

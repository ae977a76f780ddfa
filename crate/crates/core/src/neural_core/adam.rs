//! Bias-corrected Adam, applied elementwise across every model tensor.

use super::{LstmModel, ModelError};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators, shaped like the model.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: LstmModel,
    pub v: LstmModel,
    pub t: u64,
}

impl AdamState {
    pub fn new(n_features: usize, hidden: usize) -> Self {
        AdamState {
            m: LstmModel::zeros(n_features, hidden),
            v: LstmModel::zeros(n_features, hidden),
            t: 0,
        }
    }
}

/// One Adam update of `model` in place from `grads`.
pub fn adam_step(
    model: &mut LstmModel,
    grads: &LstmModel,
    state: &mut AdamState,
    params: &AdamParams,
) -> Result<(), ModelError> {
    if grads.n_features != model.n_features || grads.hidden != model.hidden {
        return Err(ModelError::FeatureMismatch {
            model: model.n_features,
            data: grads.n_features,
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - params.beta1.powi(t);
    let bc2 = 1.0 - params.beta2.powi(t);

    let gs = grads.tensors();
    for (((pt, gt), mt), vt) in model
        .tensors_mut()
        .into_iter()
        .zip(gs)
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        let (p, g, m, v) = (pt.1, gt.1, mt.1, vt.1);
        for i in 0..p.len() {
            m[i] = params.beta1 * m[i] + (1.0 - params.beta1) * g[i];
            v[i] = params.beta2 * v[i] + (1.0 - params.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= params.lr * m_hat / (v_hat.sqrt() + params.eps);
        }
    }
    Ok(())
}

//! Central-difference verification of the analytic BPTT gradients.

use super::{backward, bce_loss, forward, LstmModel, ModelError};

fn loss_of(m: &LstmModel, xs: &[Vec<f64>], y: u8) -> Result<f64, ModelError> {
    let (p, _) = forward(m, xs)?;
    Ok(bce_loss(p, y))
}

/// Compares every analytic gradient against a central finite difference of
/// step `delta` and returns the maximum relative error
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
pub fn grad_check(m: &LstmModel, xs: &[Vec<f64>], y: u8, delta: f64) -> Result<f64, ModelError> {
    let (_, cache) = forward(m, xs)?;
    let analytic = backward(m, &cache, y)?;

    let mut probe = m.clone();
    let n_tensors = probe.tensors().len();
    let mut max_rel = 0.0f64;

    for ti in 0..n_tensors {
        let len = probe.tensors()[ti].1.len();
        for ei in 0..len {
            let orig = probe.tensors()[ti].1[ei];
            probe.tensors_mut()[ti].1[ei] = orig + delta;
            let plus = loss_of(&probe, xs, y)?;
            probe.tensors_mut()[ti].1[ei] = orig - delta;
            let minus = loss_of(&probe, xs, y)?;
            probe.tensors_mut()[ti].1[ei] = orig;

            let numeric = (plus - minus) / (2.0 * delta);
            let a = analytic.tensors()[ti].1[ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

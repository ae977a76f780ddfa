//! Training loop, dataset splitting, and metric computation (loss,
//! accuracy, confusion counts, ROC/AUC) for the phase classifiers.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::neural_core::{
    adam_step, backward, bce_loss, forward, init_params, AdamParams, AdamState, LstmModel,
    ModelError,
};
use crate::pattern_synth::{fmt_f64, Dataset, PatternSample};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub split_test_fraction: f64,
    pub shuffle_seed: u64,
    /// Features are divided by this at load time; generated values live in
    /// [0,100], so the model always sees [0,1].
    pub normalization: f64,
    pub hidden: usize,
    /// Feed one value per time step (T = n_features, width 1) instead of the
    /// default whole-pattern single step.
    pub sequential: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 5e-3,
            split_test_fraction: 0.2,
            shuffle_seed: 0,
            normalization: 100.0,
            hidden: 64,
            sequential: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("ROC needs at least one positive and one negative label")]
    SingleClass,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Deterministic shuffle by `shuffle_seed`, then the last
/// ceil(N * split_test_fraction) samples become the test set.
pub fn split(d: &Dataset, cfg: &TrainConfig) -> Result<(Dataset, Dataset), TrainError> {
    if d.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if !(cfg.split_test_fraction > 0.0 && cfg.split_test_fraction < 1.0) {
        return Err(TrainError::BadConfig(
            "split_test_fraction must lie in (0,1)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut samples = d.samples.clone();
    samples.shuffle(&mut rng);
    let n_test = (d.samples.len() as f64 * cfg.split_test_fraction).ceil() as usize;
    let test = samples.split_off(samples.len() - n_test);
    Ok((
        Dataset {
            phase: d.phase,
            seed: d.seed,
            samples,
        },
        Dataset {
            phase: d.phase,
            seed: d.seed,
            samples: test,
        },
    ))
}

/// Model inputs for one sample: a single feature-vector step by default,
/// or one width-1 step per value in sequential mode.
fn inputs_for(s: &PatternSample, normalization: f64, sequential: bool) -> Vec<Vec<f64>> {
    if sequential {
        s.values.iter().map(|v| vec![v / normalization]).collect()
    } else {
        vec![s.values.iter().map(|v| v / normalization).collect()]
    }
}

fn check_width(m: &LstmModel, d: &Dataset) -> Result<bool, ModelError> {
    let data = d.n_features();
    if m.n_features == data {
        Ok(false)
    } else if m.n_features == 1 {
        Ok(true)
    } else {
        Err(ModelError::FeatureMismatch {
            model: m.n_features,
            data,
        })
    }
}

/// Probability for every sample, in dataset order.
fn score_all(m: &LstmModel, d: &Dataset, normalization: f64) -> Result<Vec<f64>, ModelError> {
    let sequential = check_width(m, d)?;
    let mut out = Vec::with_capacity(d.samples.len());
    for s in &d.samples {
        let xs = inputs_for(s, normalization, sequential);
        let (p, _) = forward(m, &xs)?;
        out.push(p);
    }
    Ok(out)
}

fn mean_loss_and_acc(scores: &[f64], labels: &[u8], threshold: f64) -> (f64, f64) {
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (&p, &y) in scores.iter().zip(labels) {
        loss += bce_loss(p, y);
        let predicted = u8::from(p >= threshold);
        if predicted == y {
            correct += 1;
        }
    }
    (loss / n, correct as f64 / n)
}

/// Mini-batch Adam over the training split for `cfg.epochs` epochs.
/// Returns the final model and the per-epoch history; the history's final
/// test metrics equal a fresh [`evaluate`] on the test split.
pub fn train(
    d: &Dataset,
    cfg: &TrainConfig,
    init_seed: u64,
) -> Result<(LstmModel, Vec<EpochRecord>), TrainError> {
    if cfg.epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::BadConfig("batch_size must be at least 1".into()));
    }
    let (train_set, test_set) = split(d, cfg)?;

    let n_features = if cfg.sequential { 1 } else { d.n_features() };
    let mut model = init_params(n_features, cfg.hidden, init_seed);
    let mut state = AdamState::new(n_features, cfg.hidden);
    let params = AdamParams::with_lr(cfg.learning_rate);

    let train_labels: Vec<u8> = train_set.samples.iter().map(|s| s.label).collect();
    let test_labels: Vec<u8> = test_set.samples.iter().map(|s| s.label).collect();

    let mut order: Vec<usize> = (0..train_set.samples.len()).collect();
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed.wrapping_add(0x9e3779b97f4a7c15));

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut batch_rng);
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = LstmModel::zeros(n_features, cfg.hidden);
            let mut batch_loss = 0.0;
            for &si in batch {
                let s = &train_set.samples[si];
                let xs = inputs_for(s, cfg.normalization, cfg.sequential);
                let (p, cache) = forward(&model, &xs)?;
                batch_loss += bce_loss(p, s.label);
                let g = backward(&model, &cache, s.label)?;
                let scale = 1.0 / batch.len() as f64;
                for ((_, acc), (_, gt)) in grads.tensors_mut().into_iter().zip(g.tensors()) {
                    for (a, v) in acc.iter_mut().zip(gt) {
                        *a += scale * v;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: batch_idx,
                });
            }
            adam_step(&mut model, &grads, &mut state, &params)?;
        }

        let train_scores = score_all(&model, &train_set, cfg.normalization)?;
        let test_scores = score_all(&model, &test_set, cfg.normalization)?;
        let (train_loss, train_acc) = mean_loss_and_acc(&train_scores, &train_labels, 0.5);
        let (test_loss, test_acc) = mean_loss_and_acc(&test_scores, &test_labels, 0.5);
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
        });
    }

    Ok((model, history))
}

/// Scores every sample once and reports loss, accuracy, confusion counts,
/// and the ROC/AUC, classifying p >= threshold as positive.
pub fn evaluate_with_threshold(
    m: &LstmModel,
    d: &Dataset,
    normalization: f64,
    threshold: f64,
) -> Result<EvalReport, TrainError> {
    if d.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let scores = score_all(m, d, normalization)?;
    let labels: Vec<u8> = d.samples.iter().map(|s| s.label).collect();

    let (loss, accuracy) = mean_loss_and_acc(&scores, &labels, threshold);
    let mut confusion = Confusion::default();
    for (&p, &y) in scores.iter().zip(&labels) {
        match (p >= threshold, y == 1) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
            (false, true) => confusion.fn_ += 1,
        }
    }
    let (roc, auc) = roc(&scores, &labels)?;
    Ok(EvalReport {
        loss,
        accuracy,
        confusion,
        roc,
        auc,
    })
}

/// [`evaluate_with_threshold`] at the default 0.5 threshold.
pub fn evaluate(m: &LstmModel, d: &Dataset, normalization: f64) -> Result<EvalReport, TrainError> {
    evaluate_with_threshold(m, d, normalization, 0.5)
}

/// Threshold sweep over every distinct score, descending. The curve starts
/// at (0,0) (threshold +inf) and ends at (1,1); tied scores collapse into
/// one step. AUC by the trapezoidal rule.
pub fn roc(scores: &[f64], labels: &[u8]) -> Result<(Vec<RocPoint>, f64), TrainError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // consume the whole tie group before emitting a point
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

fn io_err(path: &Path, source: std::io::Error) -> TrainError {
    TrainError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// History CSV: `epoch,train_loss,train_acc,test_loss,test_acc`.
pub fn write_history(history: &[EpochRecord], path: &Path) -> Result<(), TrainError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    writeln!(f, "epoch,train_loss,train_acc,test_loss,test_acc").map_err(|e| io_err(path, e))?;
    for r in history {
        writeln!(
            f,
            "{},{},{},{},{}",
            r.epoch,
            fmt_f64(r.train_loss),
            fmt_f64(r.train_acc),
            fmt_f64(r.test_loss),
            fmt_f64(r.test_acc)
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// ROC CSV: `threshold,fpr,tpr` rows plus a trailing `# auc=<value>` line.
pub fn write_roc(report: &EvalReport, path: &Path) -> Result<(), TrainError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    writeln!(f, "threshold,fpr,tpr").map_err(|e| io_err(path, e))?;
    for p in &report.roc {
        let thr = if p.threshold.is_infinite() {
            "inf".to_string()
        } else {
            fmt_f64(p.threshold)
        };
        writeln!(f, "{},{},{}", thr, fmt_f64(p.fpr), fmt_f64(p.tpr)).map_err(|e| io_err(path, e))?;
    }
    writeln!(f, "# auc={}", fmt_f64(report.auc)).map_err(|e| io_err(path, e))
}

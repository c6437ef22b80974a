//! Dataset ingestion, Adamax training, checkpoints and macro-averaged
//! evaluation.

mod checkpoint;
mod dataset;
mod metrics;
mod optim;

pub use checkpoint::{from_bytes, load, save, to_bytes, FORMAT_VERSION, MAGIC};
pub use dataset::{assign_splits, ingest, DataSample, Dataset, IngestFailure, SourceItem, Split};
pub use metrics::{ClassMetrics, Metrics};
pub use optim::{adamax_step, AdamaxConfig, AdamaxState};

use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::ModelConfig;
use crate::encoder::{EncoderError, Vocabulary};
use crate::model::{argmax, ModelError, PreparedSample, SaccModel};
use crate::tensor::{Graph, TensorError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("manifest not found: {0}")]
    ManifestNotFound(PathBuf),
    #[error("manifest line {line}: {message}")]
    BadManifest { line: usize, message: String },
    #[error("no sample could be parsed ({} failures)", failures.len())]
    AllSamplesFailed { failures: Vec<IngestFailure> },
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error("training split is empty")]
    EmptyTrainSplit,
    #[error("evaluation split is empty")]
    EmptySplit,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("no gradient slot for parameter {0}")]
    MissingGradient(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamaxConfig::default();
        Self { epochs: 30, batch_size: 16, lr: a.lr, beta1: a.beta1, beta2: a.beta2, eps: a.eps, seed: 0, shuffle: true }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.lr > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "need epochs >= 1, batch_size >= 1 and lr > 0 (got {}, {}, {})",
                self.epochs, self.batch_size, self.lr
            )));
        }
        Ok(())
    }

    pub fn adamax(&self) -> AdamaxConfig {
        AdamaxConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub best: SaccModel,
    pub best_epoch: usize,
    pub last: SaccModel,
    pub history: Vec<EpochRecord>,
}

/// `-log softmax(logits)[label]`, evaluated with log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64, TrainError> {
    if label >= logits.len() {
        return Err(TrainError::LabelOutOfRange { label, classes: logits.len() });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Token lists of every statement tree in the training split.
pub fn training_corpus(dataset: &Dataset) -> Vec<Vec<String>> {
    dataset
        .indices(Split::Train)
        .into_iter()
        .flat_map(|i| dataset.samples[i].seq.trees.iter().map(|t| t.tokens()))
        .collect()
}

pub fn train(dataset: &Dataset, model_config: &ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(dataset, model_config, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    dataset: &Dataset,
    model_config: &ModelConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let train_idx = dataset.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(TrainError::EmptyTrainSplit);
    }
    let vocab = Vocabulary::build(&training_corpus(dataset), model_config.min_freq)?;
    let mut model = SaccModel::new(model_config.clone(), vocab, dataset.label_names.clone(), cfg.seed)?;
    let prepared: Vec<PreparedSample> =
        dataset.samples.iter().map(|s| model.prepare(&s.seq)).collect::<Result<_, _>>()?;

    let mut val_idx = dataset.indices(Split::Val);
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }

    let adamax = cfg.adamax();
    let mut state = AdamaxState::new(&model.store);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, SaccModel)> = None;
    for epoch in 1..=cfg.epochs {
        let mut order = train_idx.clone();
        if cfg.shuffle {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64)));
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PreparedSample> = chunk.iter().map(|&i| &prepared[i]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| dataset.samples[i].label).collect();
            let mut g = Graph::new();
            let fwd = model.forward(&mut g, &batch)?;
            let loss = g.cross_entropy(fwd.logits, &labels)?;
            loss_sum += g.value(loss).item() * chunk.len() as f64;
            let grads = g.backward(loss)?;
            model.store.zero_grad();
            grads.accumulate_into(&g, &mut model.store);
            drop(g);
            adamax_step(&mut model.store, &mut state, &adamax)?;
        }
        let preds = predict_indices(&model, &val_idx.iter().map(|&i| &prepared[i]).collect::<Vec<_>>())?;
        let correct = val_idx.iter().zip(&preds).filter(|(&i, &p)| dataset.samples[i].label == p).count();
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            val_accuracy: correct as f64 / val_idx.len() as f64,
        };
        on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(acc, _, _)| record.val_accuracy > *acc) {
            best = Some((record.val_accuracy, epoch, model.clone()));
        }
    }
    let (_, best_epoch, best) = best.expect("at least one epoch");
    Ok(TrainOutcome { best, best_epoch, last: model, history })
}

const EVAL_BATCH: usize = 32;

/// Predicted class index for each prepared sample.
pub fn predict_indices(model: &SaccModel, samples: &[&PreparedSample]) -> Result<Vec<usize>, TrainError> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_BATCH) {
        let mut g = Graph::new();
        let f = model.forward(&mut g, chunk)?;
        let logits = g.value(f.logits);
        out.extend((0..chunk.len()).map(|r| argmax(logits.row(r))));
    }
    Ok(out)
}

/// Metrics of `model` on one split of `dataset`.
pub fn evaluate(model: &SaccModel, dataset: &Dataset, split: Split) -> Result<Metrics, TrainError> {
    evaluate_samples(model, &dataset.indices(split).into_iter().map(|i| &dataset.samples[i]).collect::<Vec<_>>())
}

pub fn evaluate_samples(model: &SaccModel, samples: &[&DataSample]) -> Result<Metrics, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let p = model.num_classes();
    if let Some(s) = samples.iter().find(|s| s.label >= p) {
        return Err(TrainError::LabelOutOfRange { label: s.label, classes: p });
    }
    let prepared: Vec<PreparedSample> = samples.iter().map(|s| model.prepare(&s.seq)).collect::<Result<_, _>>()?;
    let preds = predict_indices(model, &prepared.iter().collect::<Vec<_>>())?;
    let truth: Vec<usize> = samples.iter().map(|s| s.label).collect();
    Ok(Metrics::from_predictions(&truth, &preds, p))
}

/// `epoch,train_loss,val_accuracy` with full-precision floats.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in history {
        w.serialize(r).expect("in-memory write");
    }
    let mut bytes = w.into_inner().expect("in-memory flush");
    bytes.flush().expect("in-memory flush");
    String::from_utf8(bytes).expect("ascii csv")
}

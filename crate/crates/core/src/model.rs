//! The full classifier: statement-tree encoder, masked Transformer stack
//! and pooled linear head, sharing one parameter store.
//!
//! A batch is packed into one tall sequence. Each sample's mask becomes a
//! diagonal block, its positional encoding restarts at 0 and pooling runs
//! over its own rows, so samples cannot influence each other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attention::{
    classify, encoder_stack, AttentionError, AttentionMask, AttentionPath, MaskPlan, ModelConfig, ModelParams,
    StackOutput,
};
use crate::encoder::{encode_forest, EncoderError, ForestInput, Vocabulary};
use crate::tensor::{Graph, ParamStore, Var};
use crate::treesplit::{adjacency, adjacency_closure, StatementSequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Attention(#[from] AttentionError),
    #[error("empty batch")]
    EmptyBatch,
}

/// A statement sequence turned into model inputs.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub forest: ForestInput,
    pub mask: AttentionMask,
    /// Header label of each statement tree.
    pub tree_labels: Vec<String>,
}

impl PreparedSample {
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

pub struct Forward {
    /// `batch x P`.
    pub logits: Var,
    pub stack: StackOutput,
    /// Row range of each sample in the packed sequence.
    pub segments: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct SaccModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub label_names: Vec<String>,
    pub store: ParamStore,
    pub params: ModelParams,
}

impl SaccModel {
    /// Fresh model; `config.num_classes` is taken from `label_names`.
    pub fn new(mut config: ModelConfig, vocab: Vocabulary, label_names: Vec<String>, seed: u64) -> Result<Self, ModelError> {
        config.num_classes = label_names.len();
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(&mut store, &config, vocab.len(), &mut rng);
        Ok(Self { config, vocab, label_names, store, params })
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn prepare(&self, seq: &StatementSequence) -> Result<PreparedSample, ModelError> {
        prepare_with(&self.config, &self.vocab, seq)
    }

    pub fn forward(&self, g: &mut Graph, batch: &[&PreparedSample]) -> Result<Forward, ModelError> {
        self.forward_with(g, batch, self.config.attention)
    }

    /// Forward pass with an explicit attention path.
    pub fn forward_with(&self, g: &mut Graph, batch: &[&PreparedSample], path: AttentionPath) -> Result<Forward, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let forest = ForestInput::concat(&batch.iter().map(|s| &s.forest).collect::<Vec<_>>());
        let e = encode_forest(g, &self.store, &self.params.encoder, &forest)?;

        let mask = AttentionMask::block_diagonal(&batch.iter().map(|s| &s.mask).collect::<Vec<_>>());
        let plan = match path {
            AttentionPath::Sparse => MaskPlan::sparse(&mask),
            AttentionPath::Dense => MaskPlan::dense(&mask),
        };
        let mut positions = Vec::with_capacity(mask.len());
        let mut segments = Vec::with_capacity(batch.len());
        for s in batch {
            segments.push((positions.len(), positions.len() + s.len()));
            positions.extend(0..s.len());
        }
        let stack = encoder_stack(g, &self.store, &self.params, e, &plan, &positions)?;
        let logits = classify(g, &self.store, &self.params, stack.out, &segments)?;
        Ok(Forward { logits, stack, segments })
    }

    /// Class probabilities for one sample.
    pub fn predict_probs(&self, sample: &PreparedSample) -> Result<Vec<f64>, ModelError> {
        let mut g = Graph::new();
        let f = self.forward(&mut g, &[sample])?;
        Ok(softmax(g.value(f.logits).row(0)))
    }
}

/// Inputs for `seq` under `config`, without needing model parameters.
pub fn prepare_with(config: &ModelConfig, vocab: &Vocabulary, seq: &StatementSequence) -> Result<PreparedSample, ModelError> {
    let adj = if config.adj_closure { adjacency_closure(seq) } else { adjacency(seq) };
    Ok(PreparedSample {
        forest: ForestInput::from_sequence(seq, vocab),
        mask: config.build_mask(&adj)?,
        tree_labels: seq.labels(),
    })
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Index of the largest value, first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

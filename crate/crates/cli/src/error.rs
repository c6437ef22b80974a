//! Structured errors printed as `{"error": {kind, line, col, message}}`.

use std::fmt;
use std::path::Path;

use sacc::attention::{AttentionError, MaskError};
use sacc::cfront::FrontError;
use sacc::encoder::EncoderError;
use sacc::model::ModelError;
use sacc::train::TrainError;
use sacc::treesplit::SplitError;
use serde::Serialize;

/// Exit code for bad input or a domain error.
pub const EXIT_INPUT: u8 = 1;
/// Exit code for a broken internal invariant.
pub const EXIT_INTERNAL: u8 = 2;

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
    pub message: String,
    #[serde(skip)]
    pub exit: u8,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.to_string(), line: None, col: None, message: message.into(), exit: EXIT_INPUT }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { exit: EXIT_INTERNAL, ..Self::new("internal", message) }
    }

    pub fn io(path: &Path, err: &std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }

    pub fn json(kind: &str, err: &serde_json::Error) -> Self {
        Self { line: Some(err.line()), col: Some(err.column()), ..Self::new(kind, err.to_string()) }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a CliError,
        }
        serde_json::to_string(&Wrapper { error: self }).expect("error serializes")
    }
}

fn from_front(e: &FrontError) -> CliError {
    let (line, col) = e.position();
    CliError { line, col, ..CliError::new(e.kind(), e.to_string()) }
}

fn from_attention(e: &AttentionError) -> CliError {
    match e {
        AttentionError::Mask(MaskError::IndexOutOfRange { .. }) => CliError::new("index_out_of_range", e.to_string()),
        AttentionError::Tensor(_) => CliError::internal(e.to_string()),
        _ => CliError::new("config", e.to_string()),
    }
}

fn from_model(e: &ModelError) -> CliError {
    match e {
        ModelError::Attention(a) => from_attention(a),
        ModelError::Encoder(EncoderError::Tensor(_)) => CliError::internal(e.to_string()),
        ModelError::Encoder(_) => CliError::new("encoder", e.to_string()),
        ModelError::EmptyBatch => CliError::internal(e.to_string()),
    }
}

fn from_train(e: &TrainError) -> CliError {
    let msg = e.to_string();
    match e {
        TrainError::ManifestNotFound(_) | TrainError::Io(..) => CliError::new("io", msg),
        TrainError::BadManifest { line, .. } => CliError { line: Some(*line), ..CliError::new("manifest", msg) },
        TrainError::AllSamplesFailed { .. } => CliError::new("no_samples", msg),
        TrainError::EmptyTrainSplit | TrainError::EmptySplit => CliError::new("empty_split", msg),
        TrainError::LabelOutOfRange { .. } => CliError::new("label_out_of_range", msg),
        TrainError::InvalidConfig(_) => CliError::new("config", msg),
        TrainError::BadCheckpoint(_) => CliError::new("checkpoint", msg),
        TrainError::Model(m) => from_model(m),
        TrainError::Encoder(EncoderError::Tensor(_)) | TrainError::MissingGradient(_) | TrainError::Tensor(_) => {
            CliError::internal(msg)
        }
        TrainError::Encoder(_) => CliError::new("encoder", msg),
    }
}

/// Map any error from a command onto its structured form.
pub fn classify(err: &anyhow::Error) -> CliError {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return e.clone();
    }
    if let Some(e) = err.downcast_ref::<FrontError>() {
        return from_front(e);
    }
    if let Some(e) = err.downcast_ref::<SplitError>() {
        return CliError::new("split", e.to_string());
    }
    if let Some(e) = err.downcast_ref::<TrainError>() {
        return from_train(e);
    }
    if let Some(e) = err.downcast_ref::<ModelError>() {
        return from_model(e);
    }
    if let Some(e) = err.downcast_ref::<AttentionError>() {
        return from_attention(e);
    }
    if let Some(e) = err.downcast_ref::<std::io::Error>() {
        return CliError::new("io", e.to_string());
    }
    CliError::internal(format!("{err:#}"))
}

//! From-scratch two-conv / two-pool / one-dense classifier in double precision.
//!
//! Shape chain for one input:
//!
//! ```text
//! 3×28×28 → conv 5×5 valid → 32×24×24 → ReLU → maxpool 2 → 32×12×12
//!         → conv 5×5 valid → 64×8×8   → ReLU → maxpool 2 → 64×4×4
//!         → flatten 1024 → dense → 2 logits
//! ```
//!
//! Convolutions are cross-correlations (no kernel flip). Max-pool and argmax
//! ties resolve to the first index.

use std::path::PathBuf;

mod io;
pub mod layers;
mod metrics;
mod model;
mod tensor;
mod train;

pub use io::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use metrics::{evaluate, f1_score, ConfusionCounts, EvalMetrics, UndefinedMetrics};
pub use model::{
    layout, loss, predict_from_logits, softmax, Activation, Architecture, CnnModel, Gradients, Padding, Prediction,
    CLASSES, CONV1_CHANNELS, CONV1_SIDE, CONV2_CHANNELS, CONV2_SIDE, FEATURES, INPUT_CHANNELS, INPUT_SIDE, KERNEL,
    POOL1_SIDE, POOL2_SIDE,
};
pub use tensor::Tensor;
pub use train::{accuracy, history_csv, train, train_from, EpochStats, TrainConfig, TrainOutcome};

use crate::weaklabel::Gender;

#[derive(Debug, thiserror::Error)]
pub enum CnnError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("{got} labels for a batch of {expected}")]
    LabelCount { expected: usize, got: usize },
    #[error("label {0} is not a valid class index")]
    InvalidLabel(usize),
    #[error("non-finite value in tensor or parameters")]
    NonFinite,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set has no {0} examples")]
    EmptyClass(Gender),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model file checksum mismatch")]
    ChecksumMismatch,
    #[error("model file is truncated")]
    Truncated,
    #[error("model file has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("model architecture differs from the supported network")]
    ArchitectureMismatch,
}

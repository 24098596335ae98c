use crate::churn::ChurnError;
use crate::cnn::CnnError;
use crate::imageprep::PrepError;
use crate::pipeline::PipelineError;
use crate::snapshots::SnapshotError;
use crate::stats::StatsError;
use crate::weaklabel::LabelError;

/// Any error the library can produce.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Churn(#[from] ChurnError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl Error {
    /// True when an internal consistency check failed, as opposed to bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::Pipeline(p) if p.is_invariant_violation())
    }
}

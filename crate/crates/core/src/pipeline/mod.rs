//! End-to-end before/after composition analysis.
//!
//! [`run_analysis`] diffs the two windows around the event, prepares and
//! classifies every cohort member's profile image, and compares female
//! fractions with the score test. [`render_report`] turns the result into
//! CSV, Markdown or JSON. [`gen_synthetic`] writes a complete dataset with a
//! known ground truth.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

mod analysis;
mod config;
mod corpus;
mod report;
mod synth;

pub use analysis::{
    classify_ids, run_analysis, run_analysis_with, CohortReport, CohortWindow, CompositionReport, DropCounts, Fate,
    DENOMINATOR_NOTE,
};
pub use config::AnalysisConfig;
pub use corpus::{build_training_corpus, load_names, write_names, LabeledCorpus};
pub use report::{parse_report_csv, render_report, ReportFormat, ReportRow, REPORT_CSV_HEADER};
pub use synth::{gen_synthetic, render_face, Group, SynthDataset, SynthFace, SynthSpec, SynthUser, CANVAS};

/// The two churn cohorts compared across windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    NewFollowers,
    Unfollowers,
}

impl Cohort {
    pub const ALL: [Cohort; 2] = [Cohort::NewFollowers, Cohort::Unfollowers];

    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::NewFollowers => "new_followers",
            Cohort::Unfollowers => "unfollowers",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Cohort::NewFollowers => "New followers",
            Cohort::Unfollowers => "Unfollowers",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Before,
    After,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Before => "before",
            Window::After => "after",
        })
    }
}

/// Pipeline stage an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Snapshots,
    Churn,
    Manifest,
    Names,
    Lexicon,
    Model,
    Prep,
    Classify,
    Stats,
    Synth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Snapshots => "snapshots",
            Stage::Churn => "churn",
            Stage::Manifest => "manifest",
            Stage::Names => "names",
            Stage::Lexicon => "lexicon",
            Stage::Model => "model",
            Stage::Prep => "prep",
            Stage::Classify => "classify",
            Stage::Stats => "stats",
            Stage::Synth => "synth",
        })
    }
}

fn item_suffix(item: &Option<u64>) -> String {
    item.map(|id| format!(" (user {id})")).unwrap_or_default()
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage} stage failed{}: {source}", item_suffix(.item))]
    Stage {
        stage: Stage,
        item: Option<u64>,
        #[source]
        source: Box<crate::Error>,
    },
    #[error("{window}-window {cohort} cohort is empty")]
    EmptyCohort { cohort: Cohort, window: Window },
    #[error("{window}-window {cohort} cohort has no classified members ({size} dropped)")]
    NothingClassified { cohort: Cohort, window: Window, size: usize },
    #[error("user {0} appears more than once in the manifest")]
    DuplicateManifestEntry(u64),
    #[error("provenance ledger does not reconcile for {window}-window {cohort}: {detail}")]
    Reconciliation {
        cohort: Cohort,
        window: Window,
        detail: String,
    },
}

impl PipelineError {
    pub(crate) fn stage(stage: Stage, item: Option<u64>, source: impl Into<crate::Error>) -> Self {
        PipelineError::Stage {
            stage,
            item,
            source: Box::new(source.into()),
        }
    }

    /// True for failed internal consistency checks.
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            PipelineError::Reconciliation { .. } => true,
            PipelineError::Stage { source, .. } => source.is_invariant_violation(),
            _ => false,
        }
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always follows input order.
pub(crate) fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

//! Follower churn accounting and gender-composition analysis.
//!
//! The crate is organised along the data flow of an analysis run:
//!
//! * [`snapshots`] parses, writes and diffs timestamped follower-ID snapshots.
//! * [`churn`] turns snapshot series into windowed churn records and
//!   unfollower destination rates.
//! * [`weaklabel`] assigns noisy gender labels from display names and builds
//!   balanced training sets.
//! * [`imageprep`] filters profile images, picks the largest face and produces
//!   the 3×28×28 network input.
//! * [`cnn`] is a from-scratch two-conv/two-pool/one-dense network with
//!   training, evaluation and a versioned weight format.
//! * [`stats`] holds the two-proportion score test and the normal CDF.
//! * [`pipeline`] wires everything into the end-to-end before/after analysis,
//!   renders reports, and generates synthetic datasets.

pub mod churn;
pub mod cnn;
pub mod error;
pub mod imageprep;
pub mod pipeline;
pub mod snapshots;
pub mod stats;
pub mod weaklabel;

pub use error::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

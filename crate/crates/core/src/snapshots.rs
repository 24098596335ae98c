//! Follower-ID snapshots: parsing, persistence and pairwise diffs.
//!
//! A snapshot file is line oriented UTF-8:
//!
//! ```text
//! account=alpha ts=2016-04-20T00:00:00Z
//! # comments and blank lines are ignored after the header
//! 17
//! 42
//! ```
//!
//! Files ending in `.gz` are transparently gzip (de)compressed.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("snapshot is empty: missing header line")]
    MissingHeader,
    #[error("malformed header on line 1: {0}")]
    MalformedHeader(String),
    #[error("malformed follower id on line {0}")]
    MalformedId(usize),
    #[error("account mismatch: {0:?} vs {1:?}")]
    AccountMismatch(String, String),
    #[error("snapshot timestamps not increasing: {0} then {1}")]
    NonIncreasingTimestamps(DateTime<Utc>, DateTime<Utc>),
    #[error("invalid account handle {0:?}")]
    InvalidAccount(String),
}

/// Sorted, duplicate-free set of opaque 64-bit follower IDs.
///
/// Backed by a sorted vector so that all set algebra is a linear merge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdSet(Vec<u64>);

impl IdSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a set from arbitrary IDs, returning it together with the number
    /// of duplicates that were dropped.
    pub fn from_unsorted(mut ids: Vec<u64>) -> (Self, usize) {
        let before = ids.len();
        ids.sort_unstable();
        ids.dedup();
        let dups = before - ids.len();
        (Self(ids), dups)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    /// `self ∖ other`
    pub fn difference(&self, other: &IdSet) -> IdSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() {
            if j == b.len() {
                out.extend_from_slice(&a[i..]);
                break;
            }
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        IdSet(out)
    }

    /// `self ∩ other`
    pub fn intersection(&self, other: &IdSet) -> IdSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        IdSet(out)
    }

    pub fn intersection_len(&self, other: &IdSet) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn is_disjoint(&self, other: &IdSet) -> bool {
        self.intersection_len(other) == 0
    }
}

impl FromIterator<u64> for IdSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        IdSet::from_unsorted(iter.into_iter().collect()).0
    }
}

impl<'a> IntoIterator for &'a IdSet {
    type Item = u64;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, u64>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

/// One account's follower set at one instant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowerSnapshot {
    pub account: String,
    pub captured_at: DateTime<Utc>,
    pub follower_ids: IdSet,
}

impl FollowerSnapshot {
    pub fn new(
        account: impl Into<String>,
        captured_at: DateTime<Utc>,
        follower_ids: IdSet,
    ) -> Result<Self, SnapshotError> {
        let account = account.into();
        validate_account(&account)?;
        Ok(Self {
            account,
            captured_at: truncate_to_second(captured_at),
            follower_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.follower_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.follower_ids.is_empty()
    }
}

/// A parsed snapshot plus the number of repeated ID lines that were folded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedSnapshot {
    pub snapshot: FollowerSnapshot,
    pub duplicate_warnings: usize,
}

fn validate_account(account: &str) -> Result<(), SnapshotError> {
    if account.is_empty() || account.chars().any(|c| c.is_whitespace() || c == '=') {
        return Err(SnapshotError::InvalidAccount(account.to_string()));
    }
    Ok(())
}

fn truncate_to_second(t: DateTime<Utc>) -> DateTime<Utc> {
    DateTime::from_timestamp(t.timestamp(), 0).expect("in-range timestamp")
}

/// Parses an ISO-8601 / RFC 3339 instant with whole-second precision.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let t = DateTime::parse_from_rfc3339(s).ok()?;
    if t.timestamp_subsec_nanos() != 0 {
        return None;
    }
    Some(t.with_timezone(&Utc))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_header(line: &str) -> Result<(String, DateTime<Utc>), SnapshotError> {
    let bad = || SnapshotError::MalformedHeader(line.to_string());
    let mut account = None;
    let mut ts = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(bad)?;
        match key {
            "account" if account.is_none() => account = Some(value.to_string()),
            "ts" if ts.is_none() => ts = Some(parse_timestamp(value).ok_or_else(bad)?),
            _ => return Err(bad()),
        }
    }
    match (account, ts) {
        (Some(a), Some(t)) if !a.is_empty() => Ok((a, t)),
        _ => Err(bad()),
    }
}

/// Parses a snapshot from any reader. Line numbers in errors are 1-based.
pub fn read_snapshot<R: BufRead>(reader: R) -> Result<ParsedSnapshot, SnapshotError> {
    let io_err = |source| SnapshotError::Io {
        path: PathBuf::from("<reader>"),
        source,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        None => return Err(SnapshotError::MissingHeader),
        Some(line) => line.map_err(io_err)?,
    };
    let header = header.trim_start_matches('\u{feff}');
    if header.trim().is_empty() {
        return Err(SnapshotError::MissingHeader);
    }
    let (account, captured_at) = parse_header(header.trim())?;

    let mut ids = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id: u64 = line.parse().map_err(|_| SnapshotError::MalformedId(idx + 2))?;
        ids.push(id);
    }
    let (follower_ids, duplicate_warnings) = IdSet::from_unsorted(ids);
    Ok(ParsedSnapshot {
        snapshot: FollowerSnapshot::new(account, captured_at, follower_ids)?,
        duplicate_warnings,
    })
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn parse_snapshot(path: impl AsRef<Path>) -> Result<ParsedSnapshot, SnapshotError> {
    let path = path.as_ref();
    let io_err = |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let reader: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    read_snapshot(BufReader::new(reader)).map_err(|e| match e {
        SnapshotError::Io { source, .. } => io_err(source),
        other => other,
    })
}

pub fn write_snapshot_to<W: Write>(snapshot: &FollowerSnapshot, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "account={} ts={}",
        snapshot.account,
        format_timestamp(&snapshot.captured_at)
    )?;
    for id in snapshot.follower_ids.iter() {
        writeln!(out, "{id}")?;
    }
    out.flush()
}

pub fn write_snapshot(snapshot: &FollowerSnapshot, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    let path = path.as_ref();
    let io_err = |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    if is_gzip(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        write_snapshot_to(snapshot, &mut enc).map_err(io_err)?;
        enc.finish().and_then(|mut w| w.flush()).map_err(io_err)
    } else {
        write_snapshot_to(snapshot, BufWriter::new(file)).map_err(io_err)
    }
}

/// Churn between two snapshots of one account.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnRecord {
    pub account: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub new_followers: IdSet,
    pub unfollowers: IdSet,
    pub retained: IdSet,
}

impl ChurnRecord {
    /// Checks the disjointness and cardinality identities against the two
    /// snapshot sizes this record was derived from.
    pub fn is_consistent(&self, before_len: usize, after_len: usize) -> bool {
        self.new_followers.is_disjoint(&self.unfollowers)
            && self.retained.is_disjoint(&self.new_followers)
            && self.retained.is_disjoint(&self.unfollowers)
            && before_len == self.retained.len() + self.unfollowers.len()
            && after_len == self.retained.len() + self.new_followers.len()
    }
}

impl fmt::Display for ChurnRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{} .. {}]: +{} -{} ={}",
            self.account,
            format_timestamp(&self.window_start),
            format_timestamp(&self.window_end),
            self.new_followers.len(),
            self.unfollowers.len(),
            self.retained.len()
        )
    }
}

pub fn diff(before: &FollowerSnapshot, after: &FollowerSnapshot) -> Result<ChurnRecord, SnapshotError> {
    if before.account != after.account {
        return Err(SnapshotError::AccountMismatch(
            before.account.clone(),
            after.account.clone(),
        ));
    }
    if before.captured_at >= after.captured_at {
        return Err(SnapshotError::NonIncreasingTimestamps(
            before.captured_at,
            after.captured_at,
        ));
    }
    let b = &before.follower_ids;
    let a = &after.follower_ids;
    Ok(ChurnRecord {
        account: before.account.clone(),
        window_start: before.captured_at,
        window_end: after.captured_at,
        new_followers: a.difference(b),
        unfollowers: b.difference(a),
        retained: b.intersection(a),
    })
}

/// Time-ordered snapshots of a single account.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotSeries {
    account: String,
    snapshots: Vec<FollowerSnapshot>,
}

impl SnapshotSeries {
    /// Sorts nothing: input must already be strictly increasing in time.
    pub fn new(account: impl Into<String>, snapshots: Vec<FollowerSnapshot>) -> Result<Self, SnapshotError> {
        let account = account.into();
        validate_account(&account)?;
        for s in &snapshots {
            if s.account != account {
                return Err(SnapshotError::AccountMismatch(account, s.account.clone()));
            }
        }
        for w in snapshots.windows(2) {
            if w[0].captured_at >= w[1].captured_at {
                return Err(SnapshotError::NonIncreasingTimestamps(
                    w[0].captured_at,
                    w[1].captured_at,
                ));
            }
        }
        Ok(Self { account, snapshots })
    }

    /// Builds a series from unordered snapshots by sorting them by time.
    pub fn from_unordered(account: impl Into<String>, mut snapshots: Vec<FollowerSnapshot>) -> Result<Self, SnapshotError> {
        snapshots.sort_by_key(|s| s.captured_at);
        Self::new(account, snapshots)
    }

    pub fn account(&self) -> &str {
        &self.account
    }

    pub fn snapshots(&self) -> &[FollowerSnapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Latest snapshot captured at or before `t`.
    pub fn at_or_before(&self, t: DateTime<Utc>) -> Option<&FollowerSnapshot> {
        let idx = self.snapshots.partition_point(|s| s.captured_at <= t);
        idx.checked_sub(1).map(|i| &self.snapshots[i])
    }
}

/// Loads every `*.snap`/`*.snap.gz`/`*.txt` snapshot in `dir` belonging to
/// `account`, ordered by capture time.
pub fn load_series(dir: impl AsRef<Path>, account: &str) -> Result<SnapshotSeries, SnapshotError> {
    let dir = dir.as_ref();
    let io_err = |source| SnapshotError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".snap") || name.ends_with(".snap.gz")
        })
        .collect();
    paths.sort();
    let mut snaps = Vec::new();
    for p in paths {
        let parsed = parse_snapshot(&p)?;
        if parsed.snapshot.account == account {
            snaps.push(parsed.snapshot);
        }
    }
    SnapshotSeries::from_unordered(account, snaps)
}

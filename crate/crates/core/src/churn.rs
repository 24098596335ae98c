//! Windowed churn summaries and unfollower destination rates.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::snapshots::{diff, format_timestamp, ChurnRecord, FollowerSnapshot, IdSet, SnapshotError, SnapshotSeries};

#[derive(Debug, thiserror::Error)]
pub enum ChurnError {
    #[error("unfollower set is empty; destination rate is undefined")]
    EmptyUnfollowers,
    #[error("need at least two boundaries, got {0}")]
    TooFewBoundaries(usize),
    #[error("series has {0} snapshot(s); at least two are required")]
    TooFewSnapshots(usize),
    #[error("boundary {0} lies outside the series time range")]
    BoundaryOutOfRange(DateTime<Utc>),
    #[error("boundaries {0} and {1} resolve to the same snapshot")]
    DegenerateWindow(DateTime<Utc>, DateTime<Utc>),
    #[error("boundaries must be strictly increasing ({0} then {1})")]
    UnorderedBoundaries(DateTime<Utc>, DateTime<Utc>),
    #[error("destination {0:?} has no snapshot at or before {1}")]
    NoDestinationSnapshot(String, DateTime<Utc>),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestinationRate {
    pub fraction: f64,
    pub numerator: usize,
    pub denominator: usize,
}

/// Share of `unfollowers` that follow the destination account.
pub fn destination_rate(unfollowers: &IdSet, destination: &FollowerSnapshot) -> Result<DestinationRate, ChurnError> {
    if unfollowers.is_empty() {
        return Err(ChurnError::EmptyUnfollowers);
    }
    let numerator = unfollowers.intersection_len(&destination.follower_ids);
    let denominator = unfollowers.len();
    Ok(DestinationRate {
        fraction: numerator as f64 / denominator as f64,
        numerator,
        denominator,
    })
}

/// Which end of a churn window destination memberships are read at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAnchor {
    Start,
    #[default]
    End,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub destination: String,
    /// Capture time of the destination snapshot actually used.
    pub snapshot_at: DateTime<Utc>,
    pub fraction: f64,
    pub numerator: usize,
    pub denominator: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub source_account: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub anchor: WindowAnchor,
    pub rows: Vec<TransitionRow>,
}

/// Destination rates of one churn record's unfollowers against several
/// destination accounts. Rows are sorted by destination handle.
pub fn transition_report(
    record: &ChurnRecord,
    destinations: &[SnapshotSeries],
    anchor: WindowAnchor,
) -> Result<TransitionReport, ChurnError> {
    let at = match anchor {
        WindowAnchor::Start => record.window_start,
        WindowAnchor::End => record.window_end,
    };
    let mut rows = destinations
        .iter()
        .map(|series| {
            let snap = series
                .at_or_before(at)
                .ok_or_else(|| ChurnError::NoDestinationSnapshot(series.account().to_string(), at))?;
            let rate = destination_rate(&record.unfollowers, snap)?;
            Ok(TransitionRow {
                destination: series.account().to_string(),
                snapshot_at: snap.captured_at,
                fraction: rate.fraction,
                numerator: rate.numerator,
                denominator: rate.denominator,
            })
        })
        .collect::<Result<Vec<_>, ChurnError>>()?;
    rows.sort_by(|a, b| a.destination.cmp(&b.destination));
    Ok(TransitionReport {
        source_account: record.account.clone(),
        window_start: record.window_start,
        window_end: record.window_end,
        anchor,
        rows,
    })
}

/// Which snapshot a requested boundary resolved to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySelection {
    pub boundary: DateTime<Utc>,
    pub snapshot_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnSummary {
    pub records: Vec<ChurnRecord>,
    pub selections: Vec<BoundarySelection>,
}

/// One churn record per consecutive boundary pair. Each boundary maps to the
/// nearest snapshot captured at or before it; the mapping is returned.
pub fn churn_summary(series: &SnapshotSeries, boundaries: &[DateTime<Utc>]) -> Result<ChurnSummary, ChurnError> {
    if boundaries.len() < 2 {
        return Err(ChurnError::TooFewBoundaries(boundaries.len()));
    }
    if series.len() < 2 {
        return Err(ChurnError::TooFewSnapshots(series.len()));
    }
    for w in boundaries.windows(2) {
        if w[0] >= w[1] {
            return Err(ChurnError::UnorderedBoundaries(w[0], w[1]));
        }
    }
    let last = series.snapshots().last().expect("non-empty").captured_at;
    let mut picked = Vec::with_capacity(boundaries.len());
    for &b in boundaries {
        if b > last {
            return Err(ChurnError::BoundaryOutOfRange(b));
        }
        let snap = series.at_or_before(b).ok_or(ChurnError::BoundaryOutOfRange(b))?;
        picked.push(snap);
    }
    let mut records = Vec::with_capacity(boundaries.len() - 1);
    for (i, pair) in picked.windows(2).enumerate() {
        if pair[0].captured_at == pair[1].captured_at {
            return Err(ChurnError::DegenerateWindow(boundaries[i], boundaries[i + 1]));
        }
        records.push(diff(pair[0], pair[1])?);
    }
    let selections = boundaries
        .iter()
        .zip(&picked)
        .map(|(&boundary, s)| BoundarySelection {
            boundary,
            snapshot_at: s.captured_at,
        })
        .collect();
    Ok(ChurnSummary { records, selections })
}

pub fn transitions_csv(report: &TransitionReport) -> String {
    let mut out = String::from("destination,fraction,numerator,denominator\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{},{},{}", r.destination, r.fraction, r.numerator, r.denominator);
    }
    out
}

/// Before/after destination table: one row per window, one column per
/// destination, cells as percentages with two decimals.
pub fn transitions_markdown(before: &TransitionReport, after: &TransitionReport) -> String {
    let mut dests: Vec<&str> = before
        .rows
        .iter()
        .chain(&after.rows)
        .map(|r| r.destination.as_str())
        .collect();
    dests.sort_unstable();
    dests.dedup();
    let mut out = String::new();
    let _ = writeln!(out, "| Destination | {} |", dests.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(dests.len()));
    for (label, report) in [("Before", before), ("After", after)] {
        let cells: Vec<String> = dests
            .iter()
            .map(|d| {
                report
                    .rows
                    .iter()
                    .find(|r| r.destination == *d)
                    .map_or_else(|| "n/a".to_string(), |r| format!("{:.2}%", 100.0 * r.fraction))
            })
            .collect();
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
    out
}

pub fn churn_csv(records: &[ChurnRecord]) -> String {
    let mut out = String::from("account,window_start,window_end,new_followers,unfollowers,retained\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.account,
            format_timestamp(&r.window_start),
            format_timestamp(&r.window_end),
            r.new_followers.len(),
            r.unfollowers.len(),
            r.retained.len()
        );
    }
    out
}

/// Before/after mobility table for several accounts: each account gets a
/// Before and After column holding new-follower and unfollower counts.
pub fn churn_markdown(accounts: &[(&str, &ChurnRecord, &ChurnRecord)]) -> String {
    let mut out = String::new();
    let mut head = String::from("| |");
    let mut sub = String::from("| |");
    let mut rule = String::from("|---|");
    for (name, _, _) in accounts {
        let _ = write!(head, " {name} | |");
        sub.push_str(" Before | After |");
        rule.push_str("---|---|");
    }
    let _ = writeln!(out, "{head}\n{sub}\n{rule}");
    let mut row_new = String::from("| New Followers |");
    let mut row_un = String::from("| Unfollowers |");
    for (_, before, after) in accounts {
        let _ = write!(row_new, " {} | {} |", before.new_followers.len(), after.new_followers.len());
        let _ = write!(row_un, " {} | {} |", before.unfollowers.len(), after.unfollowers.len());
    }
    let _ = writeln!(out, "{row_new}\n{row_un}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshots::parse_timestamp;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn snap(account: &str, t: &str, ids: &[u64]) -> FollowerSnapshot {
        FollowerSnapshot::new(account, ts(t), ids.iter().copied().collect()).unwrap()
    }

    #[test]
    fn destination_rate_enumerable() {
        let unf: IdSet = [1, 2, 3, 4].into_iter().collect();
        let dest = snap("delta", "2016-05-01T00:00:00Z", &[2, 4, 6]);
        let r = destination_rate(&unf, &dest).unwrap();
        assert_eq!((r.numerator, r.denominator), (2, 4));
        assert_eq!(r.fraction, 0.5);

        let dest = snap("gamma", "2016-05-01T00:00:00Z", &[7, 8]);
        assert_eq!(destination_rate(&unf, &dest).unwrap().fraction, 0.0);
        assert!(matches!(destination_rate(&IdSet::new(), &dest), Err(ChurnError::EmptyUnfollowers)));
    }

    fn three_snapshot_series() -> SnapshotSeries {
        SnapshotSeries::new(
            "c",
            vec![
                snap("c", "2016-04-20T00:00:00Z", &[1, 2, 3]),
                snap("c", "2016-04-27T00:00:00Z", &[2, 3, 4, 5]),
                snap("c", "2016-05-02T00:00:00Z", &[3, 4, 6]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn summary_at_snapshot_times_composes_diff() {
        let s = three_snapshot_series();
        let b: Vec<_> = s.snapshots().iter().map(|x| x.captured_at).collect();
        let sum = churn_summary(&s, &b).unwrap();
        assert_eq!(sum.records.len(), 2);
        assert_eq!(sum.records[0], diff(&s.snapshots()[0], &s.snapshots()[1]).unwrap());
        assert_eq!(sum.records[1], diff(&s.snapshots()[1], &s.snapshots()[2]).unwrap());
        // persistence: joined in window 1 and still present at t3 => retained in window 2
        let persist = sum.records[0].new_followers.intersection(&s.snapshots()[2].follower_ids);
        assert!(persist.iter().all(|id| sum.records[1].retained.contains(id)));
    }

    #[test]
    fn summary_between_snapshots_uses_at_or_before() {
        let s = three_snapshot_series();
        let b = [
            ts("2016-04-20T12:00:00Z"),
            ts("2016-04-28T00:00:00Z"),
            ts("2016-05-02T00:00:00Z"),
        ];
        let sum = churn_summary(&s, &b).unwrap();
        assert_eq!(sum.selections[0].snapshot_at, ts("2016-04-20T00:00:00Z"));
        assert_eq!(sum.selections[1].snapshot_at, ts("2016-04-27T00:00:00Z"));
        assert_eq!(sum.selections[2].snapshot_at, ts("2016-05-02T00:00:00Z"));
    }

    #[test]
    fn summary_errors() {
        let s = three_snapshot_series();
        assert!(matches!(
            churn_summary(&s, &[ts("2016-04-20T00:00:00Z")]),
            Err(ChurnError::TooFewBoundaries(1))
        ));
        assert!(matches!(
            churn_summary(&s, &[ts("2016-04-19T00:00:00Z"), ts("2016-04-27T00:00:00Z")]),
            Err(ChurnError::BoundaryOutOfRange(_))
        ));
        assert!(matches!(
            churn_summary(&s, &[ts("2016-04-20T00:00:00Z"), ts("2016-06-01T00:00:00Z")]),
            Err(ChurnError::BoundaryOutOfRange(_))
        ));
        assert!(matches!(
            churn_summary(&s, &[ts("2016-04-20T00:00:00Z"), ts("2016-04-21T00:00:00Z")]),
            Err(ChurnError::DegenerateWindow(..))
        ));
        let one = SnapshotSeries::new("c", vec![snap("c", "2016-04-20T00:00:00Z", &[1])]).unwrap();
        assert!(matches!(
            churn_summary(&one, &[ts("2016-04-20T00:00:00Z"), ts("2016-04-21T00:00:00Z")]),
            Err(ChurnError::TooFewSnapshots(1))
        ));
    }

    #[test]
    fn transition_rows_sorted_and_anchored() {
        let s = three_snapshot_series();
        let rec = diff(&s.snapshots()[0], &s.snapshots()[1]).unwrap(); // unfollowers {1}
        let dests = vec![
            SnapshotSeries::new(
                "omega",
                vec![
                    snap("omega", "2016-04-20T00:00:00Z", &[]),
                    snap("omega", "2016-04-27T00:00:00Z", &[1]),
                ],
            )
            .unwrap(),
            SnapshotSeries::new("delta", vec![snap("delta", "2016-04-01T00:00:00Z", &[1, 9])]).unwrap(),
        ];
        let end = transition_report(&rec, &dests, WindowAnchor::End).unwrap();
        assert_eq!(end.rows[0].destination, "delta");
        assert_eq!(end.rows[1].destination, "omega");
        assert_eq!(end.rows[1].fraction, 1.0);
        let start = transition_report(&rec, &dests, WindowAnchor::Start).unwrap();
        assert_eq!(start.rows[1].fraction, 0.0);
        let csv = transitions_csv(&end);
        assert!(csv.starts_with("destination,fraction,numerator,denominator\ndelta,1,1,1\n"));
        let md = transitions_markdown(&start, &end);
        assert!(md.contains("| Before | 100.00% | 0.00% |"));
    }
}

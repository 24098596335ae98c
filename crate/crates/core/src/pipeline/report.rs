use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::analysis::{CohortReport, CohortWindow, CompositionReport, DropCounts};
use super::{Cohort, PipelineError};
use crate::snapshots::format_timestamp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format {s:?} (expected csv, markdown or json)")),
        }
    }
}

const WINDOW_FIELDS: [&str; 9] = [
    "size",
    "classified",
    "female",
    "male",
    "no_image",
    "no_face",
    "below_threshold",
    "below_floor",
    "female_fraction",
];

pub const REPORT_CSV_HEADER: &str = "cohort,\
before_size,before_classified,before_female,before_male,before_no_image,before_no_face,before_below_threshold,before_below_floor,before_female_fraction,\
after_size,after_classified,after_female,after_male,after_no_image,after_no_face,after_below_threshold,after_below_floor,after_female_fraction,\
z,p_two_sided,pooled_p";

const NA: &str = "n/a";

/// Deterministic text rendering. Degenerate cohorts show `n/a` for the test.
pub fn render_report(report: &CompositionReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serialises");
            s.push('\n');
            s
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_else(|| NA.to_string())
}

fn render_csv(report: &CompositionReport) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for c in &report.cohorts {
        out.push_str(c.cohort.as_str());
        for w in [&c.before, &c.after] {
            let d = &w.drops;
            let _ = write!(
                out,
                ",{},{},{},{},{},{},{},{},{}",
                w.cohort_size,
                w.classified,
                w.female,
                w.male,
                d.no_image,
                d.no_face,
                d.below_threshold,
                d.below_floor,
                opt(w.female_fraction())
            );
        }
        let t = c.test.as_ref();
        let _ = writeln!(
            out,
            ",{},{},{}",
            opt(t.map(|t| t.z)),
            opt(t.map(|t| t.p_two_sided)),
            opt(t.map(|t| t.pooled_p))
        );
    }
    out
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x)).unwrap_or_else(|| NA.to_string())
}

fn render_markdown(report: &CompositionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## Gender composition of {} churn\n", report.account);
    let _ = writeln!(
        out,
        "Before: {} to {} (exclusive). After: {} to {} (inclusive).\n",
        format_timestamp(&report.before_start),
        format_timestamp(&report.event_time),
        format_timestamp(&report.event_time),
        format_timestamp(&report.after_end)
    );
    out.push_str("| Cohort | Before: classified | Before: female | After: classified | After: female | z | p (two-sided) |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
    for c in &report.cohorts {
        let (z, p) = match &c.test {
            Some(t) => (format!("{:.4}", t.z), format!("{:.4}", t.p_two_sided)),
            None => (NA.to_string(), NA.to_string()),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            c.cohort.title(),
            c.before.classified,
            pct(c.before.female_fraction()),
            c.after.classified,
            pct(c.after.female_fraction()),
            z,
            p
        );
    }
    out.push_str("\n| Cohort | Window | Members | No image | No face | Below size threshold | Below probability floor |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---:|\n");
    for c in &report.cohorts {
        for (name, w) in [("Before", &c.before), ("After", &c.after)] {
            let d = &w.drops;
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                c.cohort.title(),
                name,
                w.cohort_size,
                d.no_image,
                d.no_face,
                d.below_threshold,
                d.below_floor
            );
        }
    }
    let _ = writeln!(
        out,
        "\nNote: {}; probability floor {}.",
        report.denominator, report.prob_floor
    );
    out
}

/// One parsed CSV report row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub cohort: Cohort,
    pub before: CohortWindow,
    pub after: CohortWindow,
    pub before_female_fraction: Option<f64>,
    pub after_female_fraction: Option<f64>,
    pub z: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub pooled_p: Option<f64>,
}

impl From<&CohortReport> for ReportRow {
    fn from(c: &CohortReport) -> Self {
        Self {
            cohort: c.cohort,
            before: c.before,
            after: c.after,
            before_female_fraction: c.before.female_fraction(),
            after_female_fraction: c.after.female_fraction(),
            z: c.test.map(|t| t.z),
            p_two_sided: c.test.map(|t| t.p_two_sided),
            pooled_p: c.test.map(|t| t.pooled_p),
        }
    }
}

/// Parses the CSV produced by [`render_report`].
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>, PipelineError> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_CSV_HEADER) {
        return Err(PipelineError::Config("report CSV header mismatch".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = |m: String| PipelineError::Config(format!("report CSV row {}: {m}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 1 + 2 * WINDOW_FIELDS.len() + 3 {
            return Err(bad(format!("expected 22 fields, got {}", f.len())));
        }
        let cohort = match f[0] {
            "new_followers" => Cohort::NewFollowers,
            "unfollowers" => Cohort::Unfollowers,
            other => return Err(bad(format!("unknown cohort {other:?}"))),
        };
        let int = |k: usize| f[k].parse::<usize>().map_err(|_| bad(format!("field {} not an integer", k + 1)));
        let real = |k: usize| -> Result<Option<f64>, PipelineError> {
            if f[k] == NA {
                Ok(None)
            } else {
                f[k].parse::<f64>()
                    .map(Some)
                    .map_err(|_| bad(format!("field {} not a number", k + 1)))
            }
        };
        let window = |o: usize| -> Result<(CohortWindow, Option<f64>), PipelineError> {
            Ok((
                CohortWindow {
                    cohort_size: int(o)?,
                    classified: int(o + 1)?,
                    female: int(o + 2)?,
                    male: int(o + 3)?,
                    drops: DropCounts {
                        no_image: int(o + 4)?,
                        no_face: int(o + 5)?,
                        below_threshold: int(o + 6)?,
                        below_floor: int(o + 7)?,
                    },
                },
                real(o + 8)?,
            ))
        };
        let (before, bf) = window(1)?;
        let (after, af) = window(10)?;
        rows.push(ReportRow {
            cohort,
            before,
            after,
            before_female_fraction: bf,
            after_female_fraction: af,
            z: real(19)?,
            p_two_sided: real(20)?,
            pooled_p: real(21)?,
        });
    }
    Ok(rows)
}

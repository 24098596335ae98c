use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::PipelineError;
use crate::imageprep::{FaceSource, FilterOn, PrepOptions, DEFAULT_THRESHOLD_BYTES};
use crate::snapshots::parse_timestamp;

/// Everything one before/after analysis run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub account: String,
    pub before_start: DateTime<Utc>,
    pub event_time: DateTime<Utc>,
    pub after_end: DateTime<Utc>,
    /// Directory of `*.snap` / `*.snap.gz` files.
    pub snapshots: PathBuf,
    pub manifest: PathBuf,
    pub model: PathBuf,
    pub names: Option<PathBuf>,
    pub lexicon_male: Option<PathBuf>,
    pub lexicon_female: Option<PathBuf>,
    pub image_threshold: u64,
    /// Predictions whose winning probability is below this are dropped.
    pub prob_floor: f64,
    pub filter_on: FilterOn,
    pub face_source: FaceSource,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    account: String,
    before_start: String,
    event_time: String,
    after_end: String,
    snapshots: PathBuf,
    manifest: PathBuf,
    model: PathBuf,
    names: Option<PathBuf>,
    lexicon_male: Option<PathBuf>,
    lexicon_female: Option<PathBuf>,
    image_threshold: Option<u64>,
    prob_floor: Option<f64>,
    filter_on: Option<FilterOn>,
    face_source: Option<FaceSource>,
    seed: Option<u64>,
}

impl AnalysisConfig {
    /// Parses TOML key/value text. Relative paths are resolved against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let ts = |key: &str, v: &str| {
            parse_timestamp(v).ok_or_else(|| PipelineError::Config(format!("{key}: invalid timestamp {v:?}")))
        };
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let cfg = Self {
            account: raw.account,
            before_start: ts("before_start", &raw.before_start)?,
            event_time: ts("event_time", &raw.event_time)?,
            after_end: ts("after_end", &raw.after_end)?,
            snapshots: resolve(raw.snapshots),
            manifest: resolve(raw.manifest),
            model: resolve(raw.model),
            names: raw.names.map(resolve),
            lexicon_male: raw.lexicon_male.map(resolve),
            lexicon_female: raw.lexicon_female.map(resolve),
            image_threshold: raw.image_threshold.unwrap_or(DEFAULT_THRESHOLD_BYTES),
            prob_floor: raw.prob_floor.unwrap_or(0.5),
            filter_on: raw.filter_on.unwrap_or_default(),
            face_source: raw.face_source.unwrap_or_default(),
            seed: raw.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.before_start < self.event_time && self.event_time < self.after_end) {
            return Err(PipelineError::Config(
                "window boundaries must satisfy before_start < event_time < after_end".into(),
            ));
        }
        if !(0.5..1.0).contains(&self.prob_floor) {
            return Err(PipelineError::Config(format!(
                "prob_floor must lie in [0.5, 1), got {}",
                self.prob_floor
            )));
        }
        Ok(())
    }

    pub fn prep_options(&self) -> PrepOptions {
        PrepOptions {
            threshold_bytes: self.image_threshold,
            filter_on: self.filter_on,
            face_source: self.face_source,
        }
    }

    /// Serialises back to the TOML accepted by [`AnalysisConfig::from_toml_str`],
    /// with paths written as given.
    pub fn to_toml(&self) -> String {
        use crate::snapshots::format_timestamp;
        use std::fmt::Write as _;
        let mut s = String::new();
        let p = |p: &Path| toml_string(&p.to_string_lossy());
        let _ = writeln!(s, "account = {}", toml_string(&self.account));
        let _ = writeln!(s, "before_start = \"{}\"", format_timestamp(&self.before_start));
        let _ = writeln!(s, "event_time = \"{}\"", format_timestamp(&self.event_time));
        let _ = writeln!(s, "after_end = \"{}\"", format_timestamp(&self.after_end));
        let _ = writeln!(s, "snapshots = {}", p(&self.snapshots));
        let _ = writeln!(s, "manifest = {}", p(&self.manifest));
        let _ = writeln!(s, "model = {}", p(&self.model));
        if let Some(n) = &self.names {
            let _ = writeln!(s, "names = {}", p(n));
        }
        if let Some(m) = &self.lexicon_male {
            let _ = writeln!(s, "lexicon_male = {}", p(m));
        }
        if let Some(f) = &self.lexicon_female {
            let _ = writeln!(s, "lexicon_female = {}", p(f));
        }
        let _ = writeln!(s, "image_threshold = {}", self.image_threshold);
        let _ = writeln!(s, "prob_floor = {:?}", self.prob_floor);
        let _ = writeln!(
            s,
            "filter_on = \"{}\"",
            match self.filter_on {
                FilterOn::Source => "source",
                FilterOn::Crop => "crop",
            }
        );
        let _ = writeln!(
            s,
            "face_source = \"{}\"",
            match self.face_source {
                FaceSource::Boxes => "boxes",
                FaceSource::Precropped => "precropped",
            }
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

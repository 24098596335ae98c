use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ordered_map, AnalysisConfig, Cohort, PipelineError, Stage, Window};
use crate::churn::{churn_summary, BoundarySelection};
use crate::cnn::{load_model, CnnModel};
use crate::imageprep::{prepare_entry, Manifest, ManifestEntry, PrepDrop, PrepOptions};
use crate::snapshots::{load_series, IdSet};
use crate::stats::{score_test, ProportionSample, ScoreTestResult, StatsError};
use crate::weaklabel::Gender;

/// Stored with every report: what the fractions are computed over.
pub const DENOMINATOR_NOTE: &str = "female fractions use classified members as denominators";

/// Images are prepared and classified this many at a time to bound memory.
const CLASSIFY_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub no_image: usize,
    pub no_face: usize,
    pub below_threshold: usize,
    pub below_floor: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.no_image + self.no_face + self.below_threshold + self.below_floor
    }
}

/// One cohort in one window, with its provenance ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortWindow {
    pub cohort_size: usize,
    pub classified: usize,
    pub female: usize,
    pub male: usize,
    pub drops: DropCounts,
}

impl CohortWindow {
    pub fn female_fraction(&self) -> Option<f64> {
        (self.classified > 0).then(|| self.female as f64 / self.classified as f64)
    }

    /// Checks `cohort_size = classified + Σ drops` and `classified = female + male`.
    pub fn reconcile(&self) -> Result<(), String> {
        if self.cohort_size != self.classified + self.drops.total() {
            return Err(format!(
                "cohort size {} != classified {} + drops {}",
                self.cohort_size,
                self.classified,
                self.drops.total()
            ));
        }
        if self.classified != self.female + self.male {
            return Err(format!(
                "classified {} != female {} + male {}",
                self.classified, self.female, self.male
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort: Cohort,
    pub before: CohortWindow,
    pub after: CohortWindow,
    /// `after` against `before`; `None` when the pooled proportion is 0 or 1.
    pub test: Option<ScoreTestResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub account: String,
    pub before_start: DateTime<Utc>,
    pub event_time: DateTime<Utc>,
    pub after_end: DateTime<Utc>,
    pub selections: Vec<BoundarySelection>,
    pub prob_floor: f64,
    pub denominator: String,
    pub cohorts: Vec<CohortReport>,
}

impl CompositionReport {
    pub fn cohort(&self, cohort: Cohort) -> Option<&CohortReport> {
        self.cohorts.iter().find(|c| c.cohort == cohort)
    }
}

/// Loads everything named in `config` and runs the analysis.
pub fn run_analysis(config: &AnalysisConfig) -> Result<CompositionReport, PipelineError> {
    config.validate()?;
    let model = load_model(&config.model).map_err(|e| PipelineError::stage(Stage::Model, None, e))?;
    let manifest = Manifest::load(&config.manifest).map_err(|e| PipelineError::stage(Stage::Manifest, None, e))?;
    run_analysis_with(config, &model, &manifest)
}

/// [`run_analysis`] with the model and manifest already in memory.
pub fn run_analysis_with(
    config: &AnalysisConfig,
    model: &CnnModel,
    manifest: &Manifest,
) -> Result<CompositionReport, PipelineError> {
    config.validate()?;
    let series =
        load_series(&config.snapshots, &config.account).map_err(|e| PipelineError::stage(Stage::Snapshots, None, e))?;
    let summary = churn_summary(&series, &[config.before_start, config.event_time, config.after_end])
        .map_err(|e| PipelineError::stage(Stage::Churn, None, e))?;
    let by_id = index_manifest(manifest)?;
    let opts = config.prep_options();

    let (before_rec, after_rec) = (&summary.records[0], &summary.records[1]);
    let mut cohorts = Vec::with_capacity(2);
    for cohort in Cohort::ALL {
        let pick = |r: &crate::snapshots::ChurnRecord| match cohort {
            Cohort::NewFollowers => r.new_followers.clone(),
            Cohort::Unfollowers => r.unfollowers.clone(),
        };
        let mut windows = [CohortWindow::default_for(0); 2];
        for (slot, (window, ids)) in [(Window::Before, pick(before_rec)), (Window::After, pick(after_rec))]
            .into_iter()
            .enumerate()
        {
            if ids.is_empty() {
                return Err(PipelineError::EmptyCohort { cohort, window });
            }
            let cw = classify_cohort(model, &by_id, &ids, &opts, config.prob_floor)?;
            cw.reconcile()
                .map_err(|detail| PipelineError::Reconciliation { cohort, window, detail })?;
            if cw.classified == 0 {
                return Err(PipelineError::NothingClassified {
                    cohort,
                    window,
                    size: cw.cohort_size,
                });
            }
            windows[slot] = cw;
        }
        let [before, after] = windows;
        let test = compare(&before, &after)?;
        cohorts.push(CohortReport {
            cohort,
            before,
            after,
            test,
        });
    }

    Ok(CompositionReport {
        account: config.account.clone(),
        before_start: config.before_start,
        event_time: config.event_time,
        after_end: config.after_end,
        selections: summary.selections,
        prob_floor: config.prob_floor,
        denominator: DENOMINATOR_NOTE.to_string(),
        cohorts,
    })
}

impl CohortWindow {
    fn default_for(cohort_size: usize) -> Self {
        Self {
            cohort_size,
            classified: 0,
            female: 0,
            male: 0,
            drops: DropCounts::default(),
        }
    }
}

fn compare(before: &CohortWindow, after: &CohortWindow) -> Result<Option<ScoreTestResult>, PipelineError> {
    let sample = |w: &CohortWindow| {
        ProportionSample::new(w.female as u64, w.classified as u64).map_err(|e| PipelineError::stage(Stage::Stats, None, e))
    };
    match score_test(sample(after)?, sample(before)?) {
        Ok(r) => Ok(Some(r)),
        Err(StatsError::DegeneratePool(_)) => Ok(None),
        Err(e) => Err(PipelineError::stage(Stage::Stats, None, e)),
    }
}

fn index_manifest(manifest: &Manifest) -> Result<HashMap<u64, &ManifestEntry>, PipelineError> {
    let mut by_id = HashMap::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        if by_id.insert(e.user_id, e).is_some() {
            return Err(PipelineError::DuplicateManifestEntry(e.user_id));
        }
    }
    Ok(by_id)
}

/// Outcome of preparing and classifying one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fate {
    NoImage,
    Dropped(PrepDrop),
    BelowFloor(f64),
    Classified(Gender, f64),
}

/// Prepares and classifies `ids` in ascending ID order.
pub fn classify_ids(
    model: &CnnModel,
    manifest: &Manifest,
    ids: &IdSet,
    opts: &PrepOptions,
    prob_floor: f64,
) -> Result<Vec<(u64, Fate)>, PipelineError> {
    let by_id = index_manifest(manifest)?;
    fates(model, &by_id, ids, opts, prob_floor)
}

fn fates(
    model: &CnnModel,
    by_id: &HashMap<u64, &ManifestEntry>,
    ids: &IdSet,
    opts: &PrepOptions,
    prob_floor: f64,
) -> Result<Vec<(u64, Fate)>, PipelineError> {
    let mut out = Vec::with_capacity(ids.len());
    for chunk in ids.as_slice().chunks(CLASSIFY_CHUNK) {
        let prepared = ordered_map(chunk, |&id| match by_id.get(&id) {
            None => Ok(Err(Fate::NoImage)),
            Some(entry) => match prepare_entry(entry, opts) {
                Ok(Ok(t)) => Ok(Ok(t)),
                Ok(Err(drop)) => Ok(Err(Fate::Dropped(drop))),
                Err(e) => Err(PipelineError::stage(Stage::Prep, Some(id), e)),
            },
        });
        let mut tensors = Vec::new();
        let mut slots = Vec::with_capacity(chunk.len());
        for p in prepared {
            match p? {
                Ok(t) => {
                    slots.push(None);
                    tensors.push(t);
                }
                Err(f) => slots.push(Some(f)),
            }
        }
        let mut preds = model.predict_batch(&tensors).into_iter();
        for (&id, slot) in chunk.iter().zip(slots) {
            let fate = match slot {
                Some(f) => f,
                None => {
                    let p = preds.next().expect("one prediction per tensor");
                    if p.probability < prob_floor {
                        Fate::BelowFloor(p.probability)
                    } else {
                        Fate::Classified(p.gender, p.probability)
                    }
                }
            };
            out.push((id, fate));
        }
    }
    Ok(out)
}

fn classify_cohort(
    model: &CnnModel,
    by_id: &HashMap<u64, &ManifestEntry>,
    ids: &IdSet,
    opts: &PrepOptions,
    prob_floor: f64,
) -> Result<CohortWindow, PipelineError> {
    let mut w = CohortWindow::default_for(ids.len());
    for (_, fate) in fates(model, by_id, ids, opts, prob_floor)? {
        match fate {
            Fate::NoImage => w.drops.no_image += 1,
            Fate::Dropped(PrepDrop::NoFace) => w.drops.no_face += 1,
            Fate::Dropped(PrepDrop::BelowThreshold) => w.drops.below_threshold += 1,
            Fate::BelowFloor(_) => w.drops.below_floor += 1,
            Fate::Classified(g, _) => {
                w.classified += 1;
                match g {
                    Gender::Female => w.female += 1,
                    Gender::Male => w.male += 1,
                }
            }
        }
    }
    Ok(w)
}

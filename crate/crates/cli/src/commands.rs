use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, ValueEnum};

use churnlens::churn::{churn_csv, churn_markdown, churn_summary, transition_report, transitions_markdown, WindowAnchor};
use churnlens::cnn::{evaluate, history_csv, load_model, save_model, train, EpochStats, TrainConfig};
use churnlens::imageprep::{
    prepare_entry, read_tensor_file, write_tensor_file, FaceSource, FaceTensor, FilterOn, Manifest, PrepDrop,
    PrepOptions, DEFAULT_THRESHOLD_BYTES,
};
use churnlens::pipeline::{
    build_training_corpus, classify_ids, gen_synthetic, load_names, render_report, AnalysisConfig, Fate, Group,
    ReportFormat, SynthSpec,
};
use churnlens::snapshots::{diff, format_timestamp, load_series, parse_snapshot, parse_timestamp, write_snapshot, IdSet};
use churnlens::stats::{score_test, ProportionSample};
use churnlens::weaklabel::{name_key, weak_label, Gender, NameLexicon};

use crate::output::{emit, table, write_file};
use crate::{Cli, CliError, Command, Format, Global};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest(a) => ingest(g, a),
        Command::Diff(a) => diff_cmd(g, a),
        Command::Transitions(a) => transitions(g, a),
        Command::Label(a) => label(g, a),
        Command::Prep(a) => prep(g, a),
        Command::Train(a) => train_cmd(g, a),
        Command::Eval(a) => eval(g, a),
        Command::Classify(a) => classify(g, a),
        Command::Scoretest(a) => scoretest(g, a),
        Command::Report(a) => report(g, a),
        Command::Synth(a) => synth(g, a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_config(g: &Global) -> Result<Option<AnalysisConfig>, CliError> {
    g.config.as_ref().map(|p| AnalysisConfig::load(p).map_err(CliError::from)).transpose()
}

fn require_config(g: &Global, what: &str) -> Result<AnalysisConfig, CliError> {
    load_config(g)?.ok_or_else(|| usage(format!("{what} requires --config or explicit arguments")))
}

fn seed(g: &Global, cfg: Option<&AnalysisConfig>) -> u64 {
    g.seed.or(cfg.map(|c| c.seed)).unwrap_or(0)
}

fn out_dir(g: &Global) -> PathBuf {
    g.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    parse_timestamp(s).ok_or_else(|| format!("invalid RFC 3339 timestamp {s:?}"))
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), fmt_f)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable value");
    s.push('\n');
    s
}

/// Window boundaries from `--boundary` flags, else from the config.
fn boundaries(explicit: &[DateTime<Utc>], cfg: Option<&AnalysisConfig>) -> Result<Vec<DateTime<Utc>>, CliError> {
    if !explicit.is_empty() {
        return Ok(explicit.to_vec());
    }
    cfg.map(|c| vec![c.before_start, c.event_time, c.after_end])
        .ok_or_else(|| usage("give at least two --boundary values or a --config"))
}

fn lexicon(male: &Option<PathBuf>, female: &Option<PathBuf>, cfg: Option<&AnalysisConfig>) -> Result<NameLexicon, CliError> {
    let male = male.clone().or_else(|| cfg.and_then(|c| c.lexicon_male.clone()));
    let female = female.clone().or_else(|| cfg.and_then(|c| c.lexicon_female.clone()));
    match (male, female) {
        (Some(m), Some(f)) => Ok(NameLexicon::load(m, f)?),
        (None, None) => Ok(NameLexicon::default()),
        _ => Err(usage("--male and --female lexicon files must be given together")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct PrepFlags {
    /// Minimum image size in bytes (inclusive).
    #[arg(long)]
    pub threshold: Option<u64>,
    #[arg(long, value_enum)]
    pub filter_on: Option<FilterOnArg>,
    #[arg(long, value_enum)]
    pub face_source: Option<FaceSourceArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FilterOnArg {
    Source,
    Crop,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FaceSourceArg {
    Boxes,
    Precropped,
}

impl PrepFlags {
    fn options(&self, cfg: Option<&AnalysisConfig>) -> PrepOptions {
        let base = cfg.map(|c| c.prep_options()).unwrap_or(PrepOptions {
            threshold_bytes: DEFAULT_THRESHOLD_BYTES,
            ..PrepOptions::default()
        });
        PrepOptions {
            threshold_bytes: self.threshold.unwrap_or(base.threshold_bytes),
            filter_on: match self.filter_on {
                Some(FilterOnArg::Source) => FilterOn::Source,
                Some(FilterOnArg::Crop) => FilterOn::Crop,
                None => base.filter_on,
            },
            face_source: match self.face_source {
                Some(FaceSourceArg::Boxes) => FaceSource::Boxes,
                Some(FaceSourceArg::Precropped) => FaceSource::Precropped,
                None => base.face_source,
            },
        }
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Snapshot files (`.snap` or `.snap.gz`).
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Rewrite each snapshot in canonical form under `--out-dir`.
    #[arg(long)]
    pub normalize: bool,
}

fn ingest(g: &Global, a: &IngestArgs) -> Result<(), CliError> {
    if a.normalize && g.out_dir.is_none() {
        return Err(usage("--normalize needs --out-dir"));
    }
    let mut rows = Vec::new();
    for path in &a.files {
        let parsed = parse_snapshot(path)?;
        let s = &parsed.snapshot;
        let stamp = format_timestamp(&s.captured_at);
        if a.normalize {
            let name = format!("{}-{}.snap", s.account, stamp.replace(':', ""));
            write_snapshot(s, out_dir(g).join(name))?;
        }
        rows.push(vec![
            s.account.clone(),
            stamp,
            s.len().to_string(),
            parsed.duplicate_warnings.to_string(),
            path.display().to_string(),
        ]);
    }
    let header = ["account", "captured_at", "followers", "duplicates", "path"];
    emit(g, "ingest", &table(g.format, &header, &rows))
}

// ------------------------------------------------------------------ diff

#[derive(Args, Debug)]
pub struct DiffArgs {
    /// Two snapshot files, before then after.
    #[arg(num_args = 0..=2)]
    pub files: Vec<PathBuf>,
    /// Directory of snapshots; used with `--account` and boundaries.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    #[arg(long)]
    pub account: Option<String>,
    /// Window boundary (RFC 3339); repeat for consecutive windows.
    #[arg(long = "boundary", value_parser = parse_time)]
    pub boundaries: Vec<DateTime<Utc>>,
}

fn diff_cmd(g: &Global, a: &DiffArgs) -> Result<(), CliError> {
    let records = match a.files.len() {
        2 => {
            let before = parse_snapshot(&a.files[0])?.snapshot;
            let after = parse_snapshot(&a.files[1])?.snapshot;
            vec![diff(&before, &after)?]
        }
        0 => {
            let cfg = load_config(g)?;
            let dir = a.snapshots.clone().or_else(|| cfg.as_ref().map(|c| c.snapshots.clone()));
            let account = a.account.clone().or_else(|| cfg.as_ref().map(|c| c.account.clone()));
            let (Some(dir), Some(account)) = (dir, account) else {
                return Err(usage("diff needs two snapshot files, or --snapshots and --account (or --config)"));
            };
            let series = load_series(&dir, &account)?;
            churn_summary(&series, &boundaries(&a.boundaries, cfg.as_ref())?)?.records
        }
        _ => return Err(usage("diff takes exactly two snapshot files")),
    };
    let text = match g.format {
        Format::Csv => churn_csv(&records),
        Format::Markdown if records.len() == 2 => {
            churn_markdown(&[(records[0].account.as_str(), &records[0], &records[1])])
        }
        Format::Markdown => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.account.clone(),
                        format_timestamp(&r.window_start),
                        format_timestamp(&r.window_end),
                        r.new_followers.len().to_string(),
                        r.unfollowers.len().to_string(),
                        r.retained.len().to_string(),
                    ]
                })
                .collect();
            let header = ["account", "window_start", "window_end", "new_followers", "unfollowers", "retained"];
            table(Format::Markdown, &header, &rows)
        }
        Format::Json => {
            let items: Vec<_> = records
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "account": r.account,
                        "window_start": format_timestamp(&r.window_start),
                        "window_end": format_timestamp(&r.window_end),
                        "new_followers": r.new_followers.len(),
                        "unfollowers": r.unfollowers.len(),
                        "retained": r.retained.len(),
                    })
                })
                .collect();
            to_json(&items)
        }
    };
    emit(g, "churn", &text)
}

// ----------------------------------------------------------- transitions

#[derive(Args, Debug)]
pub struct TransitionsArgs {
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Source account whose unfollowers are tracked.
    #[arg(long)]
    pub account: Option<String>,
    /// Destination account; repeat for several.
    #[arg(long = "dest", required = true)]
    pub destinations: Vec<String>,
    #[arg(long = "boundary", value_parser = parse_time)]
    pub boundaries: Vec<DateTime<Utc>>,
    /// Read destination memberships at the start or end of each window.
    #[arg(long, value_enum, default_value_t = AnchorArg::End)]
    pub anchor: AnchorArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum AnchorArg {
    Start,
    End,
}

fn transitions(g: &Global, a: &TransitionsArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let dir = a
        .snapshots
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.snapshots.clone()))
        .ok_or_else(|| usage("transitions needs --snapshots or --config"))?;
    let account = a
        .account
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.account.clone()))
        .ok_or_else(|| usage("transitions needs --account or --config"))?;
    let anchor = match a.anchor {
        AnchorArg::Start => WindowAnchor::Start,
        AnchorArg::End => WindowAnchor::End,
    };
    let series = load_series(&dir, &account)?;
    let dests = a
        .destinations
        .iter()
        .map(|d| load_series(&dir, d))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = churn_summary(&series, &boundaries(&a.boundaries, cfg.as_ref())?)?;
    let reports = summary
        .records
        .iter()
        .map(|r| transition_report(r, &dests, anchor))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match g.format {
        Format::Json => to_json(&reports),
        Format::Markdown if reports.len() == 2 => transitions_markdown(&reports[0], &reports[1]),
        f => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|rep| {
                    rep.rows.iter().map(move |r| {
                        vec![
                            format_timestamp(&rep.window_start),
                            format_timestamp(&rep.window_end),
                            r.destination.clone(),
                            format_timestamp(&r.snapshot_at),
                            fmt_f(r.fraction),
                            r.numerator.to_string(),
                            r.denominator.to_string(),
                        ]
                    })
                })
                .collect();
            let header = [
                "window_start",
                "window_end",
                "destination",
                "snapshot_at",
                "fraction",
                "numerator",
                "denominator",
            ];
            table(f, &header, &rows)
        }
    };
    emit(g, "transitions", &text)
}

// ----------------------------------------------------------------- label

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// CSV `user_id,display_name`.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Male given names, one per line.
    #[arg(long)]
    pub male: Option<PathBuf>,
    /// Female given names, one per line.
    #[arg(long)]
    pub female: Option<PathBuf>,
}

fn label(g: &Global, a: &LabelArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let names_path = a
        .names
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.names.clone()))
        .ok_or_else(|| usage("label needs --names or a config with `names`"))?;
    let lex = lexicon(&a.male, &a.female, cfg.as_ref())?;
    let (names, repeats) = load_names(&names_path)?;
    if repeats > 0 {
        eprintln!("churnlens: {repeats} repeated user id rows ignored");
    }
    let rows: Vec<Vec<String>> = names
        .iter()
        .map(|(id, name)| {
            vec![
                id.to_string(),
                name.clone(),
                name_key(name).unwrap_or_default(),
                weak_label(name, &lex).to_string(),
            ]
        })
        .collect();
    emit(g, "labels", &table(g.format, &["user_id", "display_name", "key", "label"], &rows))
}

// ------------------------------------------------------------------ prep

#[derive(Args, Debug)]
pub struct PrepArgs {
    /// Image manifest CSV `user_id,image_path,byte_size[,x,y,w,h ...]`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Weak-label and balance users from this names CSV; without it every
    /// manifest row is prepared unlabeled.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub male: Option<PathBuf>,
    #[arg(long)]
    pub female: Option<PathBuf>,
    #[command(flatten)]
    pub prep: PrepFlags,
}

fn prep(g: &Global, a: &PrepArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let manifest_path = a
        .manifest
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.manifest.clone()))
        .ok_or_else(|| usage("prep needs --manifest or --config"))?;
    let manifest = Manifest::load(&manifest_path)?;
    let opts = a.prep.options(cfg.as_ref());
    let dir = out_dir(g);
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("creating {}: {e}", dir.display())))?;

    let mut stats: Vec<(&str, usize)> = vec![("manifest_rows", manifest.entries.len())];
    let records: Vec<(u64, FaceTensor)> = match a.names.clone().or_else(|| cfg.as_ref().and_then(|c| c.names.clone())) {
        Some(names_path) => {
            let lex = lexicon(&a.male, &a.female, cfg.as_ref())?;
            let (names, _) = load_names(&names_path)?;
            let corpus = build_training_corpus(&names, &lex, &manifest, &opts, seed(g, cfg.as_ref()))?;
            let labels: Vec<Vec<String>> = corpus
                .items
                .iter()
                .map(|(id, _, gender)| vec![id.to_string(), gender.to_string()])
                .collect();
            write_file(&dir.join("labels.csv"), table(Format::Csv, &["user_id", "label"], &labels).as_bytes())?;
            stats.extend([
                ("names", corpus.names),
                ("unknown_names", corpus.unknown_names),
                ("no_image", corpus.no_image),
                ("no_face", corpus.no_face),
                ("below_threshold", corpus.below_threshold),
            ]);
            corpus.items.into_iter().map(|(id, t, _)| (id, t)).collect()
        }
        None => {
            let (mut no_face, mut small) = (0, 0);
            let mut out = Vec::new();
            for e in &manifest.entries {
                match prepare_entry(e, &opts)? {
                    Ok(t) => out.push((e.user_id, t)),
                    Err(PrepDrop::NoFace) => no_face += 1,
                    Err(PrepDrop::BelowThreshold) => small += 1,
                }
            }
            stats.extend([("no_face", no_face), ("below_threshold", small)]);
            out
        }
    };
    stats.push(("tensors", records.len()));
    write_tensor_file(dir.join("tensors.ftns"), &records)?;
    let rows: Vec<Vec<String>> = stats.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    emit(g, "prep", &table(g.format, &["stat", "count"], &rows))
}

/// Joins a tensor file with a `user_id,label` CSV. Tensors without a label
/// are an error.
fn labeled_tensors(tensors: &Path, labels: &Path) -> Result<Vec<(FaceTensor, Gender)>, CliError> {
    let mut rdr = csv::Reader::from_path(labels).map_err(|e| CliError::Data(format!("{}: {e}", labels.display())))?;
    let mut by_id = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Data(format!("{}: {e}", labels.display())))?;
        let bad = || CliError::Data(format!("{}: malformed row {:?}", labels.display(), row));
        let id: u64 = row.get(0).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let g: Gender = row.get(1).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        by_id.insert(id, g);
    }
    read_tensor_file(tensors)?
        .into_iter()
        .map(|(id, t)| {
            by_id
                .get(&id)
                .map(|&g| (t, g))
                .ok_or_else(|| CliError::Data(format!("user {id} has a tensor but no label")))
        })
        .collect()
}

// ----------------------------------------------------------------- train

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Tensor file from `prep`; without it the corpus is built from the config.
    #[arg(long, requires = "labels")]
    pub tensors: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Optional held-out tensors and labels for per-epoch accuracy.
    #[arg(long, requires = "val_labels")]
    pub val_tensors: Option<PathBuf>,
    #[arg(long)]
    pub val_labels: Option<PathBuf>,
    /// Output weight file; defaults to `<out-dir>/model.cnnw`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
}

fn train_cmd(g: &Global, a: &TrainArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let data = match (&a.tensors, &a.labels) {
        (Some(t), Some(l)) => labeled_tensors(t, l)?,
        _ => {
            let cfg = cfg.as_ref().ok_or_else(|| usage("train needs --tensors/--labels or --config"))?;
            let names_path = cfg
                .names
                .as_ref()
                .ok_or_else(|| CliError::Data("config has no `names` file to label from".into()))?;
            let (names, _) = load_names(names_path)?;
            let lex = lexicon(&None, &None, Some(cfg))?;
            let manifest = Manifest::load(&cfg.manifest)?;
            build_training_corpus(&names, &lex, &manifest, &cfg.prep_options(), seed(g, Some(cfg)))?
                .items
                .into_iter()
                .map(|(_, t, gender)| (t, gender))
                .collect()
        }
    };
    let val = match (&a.val_tensors, &a.val_labels) {
        (Some(t), Some(l)) => Some(labeled_tensors(t, l)?),
        _ => None,
    };
    let config = TrainConfig {
        learning_rate: a.lr,
        momentum: a.momentum,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: seed(g, cfg.as_ref()),
    };
    let outcome = train(&data, val.as_deref(), &config)?;
    let model_path = a
        .model
        .clone()
        .or_else(|| g.out_dir.as_ref().map(|d| d.join("model.cnnw")))
        .or_else(|| cfg.as_ref().map(|c| c.model.clone()))
        .unwrap_or_else(|| PathBuf::from("model.cnnw"));
    if let Some(parent) = model_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("creating {}: {e}", parent.display())))?;
    }
    save_model(&outcome.model, &model_path)?;
    eprintln!("churnlens: wrote {}", model_path.display());
    emit(g, "history", &render_history(g.format, &outcome.history))
}

fn render_history(format: Format, history: &[EpochStats]) -> String {
    match format {
        Format::Csv => history_csv(history),
        Format::Json => to_json(&history),
        Format::Markdown => {
            let rows: Vec<Vec<String>> = history
                .iter()
                .map(|h| vec![h.epoch.to_string(), fmt_f(h.loss), fmt_f(h.train_acc), opt_f(h.val_acc)])
                .collect();
            table(Format::Markdown, &["epoch", "loss", "train_acc", "val_acc"], &rows)
        }
    }
}

// ------------------------------------------------------------------ eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub tensors: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Class treated as positive for precision and recall.
    #[arg(long, value_enum)]
    pub positive: GenderArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum GenderArg {
    Male,
    Female,
}

impl From<GenderArg> for Gender {
    fn from(g: GenderArg) -> Self {
        match g {
            GenderArg::Male => Gender::Male,
            GenderArg::Female => Gender::Female,
        }
    }
}

fn model_path(g: &Global, explicit: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    match explicit {
        Some(p) => Ok(p.clone()),
        None => Ok(require_config(g, "locating the model")?.model),
    }
}

fn eval(g: &Global, a: &EvalArgs) -> Result<(), CliError> {
    let model = load_model(model_path(g, &a.model)?)?;
    let data = labeled_tensors(&a.tensors, &a.labels)?;
    if data.is_empty() {
        return Err(CliError::Data("no labeled tensors to evaluate".into()));
    }
    let m = evaluate(&model, &data, a.positive.into());
    let header = ["positive", "precision", "recall", "f1", "accuracy", "tp", "fp", "fn", "tn"];
    let row = vec![
        Gender::from(a.positive).to_string(),
        fmt_f(m.precision),
        fmt_f(m.recall),
        fmt_f(m.f1),
        fmt_f(m.accuracy),
        m.counts.tp.to_string(),
        m.counts.fp.to_string(),
        m.counts.fn_.to_string(),
        m.counts.tn.to_string(),
    ];
    if m.undefined.any() {
        eprintln!("churnlens: some metrics had a zero denominator and are reported as 0");
    }
    emit(g, "eval", &table(g.format, &header, &[row]))
}

// -------------------------------------------------------------- classify

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Restrict to these user IDs (one per line); default is every manifest row.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Winning-class probability below which a prediction is dropped.
    #[arg(long)]
    pub prob_floor: Option<f64>,
    #[command(flatten)]
    pub prep: PrepFlags,
}

fn read_ids(path: &Path) -> Result<IdSet, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        ids.push(
            line.parse()
                .map_err(|_| CliError::Data(format!("{}:{}: bad user id {line:?}", path.display(), i + 1)))?,
        );
    }
    Ok(IdSet::from_unsorted(ids).0)
}

fn classify(g: &Global, a: &ClassifyArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let model = load_model(match &a.model {
        Some(p) => p.clone(),
        None => cfg.as_ref().map(|c| c.model.clone()).ok_or_else(|| usage("classify needs --model or --config"))?,
    })?;
    let manifest_path = a
        .manifest
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.manifest.clone()))
        .ok_or_else(|| usage("classify needs --manifest or --config"))?;
    let manifest = Manifest::load(&manifest_path)?;
    let ids = match &a.ids {
        Some(p) => read_ids(p)?,
        None => IdSet::from_unsorted(manifest.entries.iter().map(|e| e.user_id).collect()).0,
    };
    let floor = a.prob_floor.or(cfg.as_ref().map(|c| c.prob_floor)).unwrap_or(0.5);
    if !(0.5..1.0).contains(&floor) {
        return Err(usage(format!("--prob-floor must lie in [0.5, 1), got {floor}")));
    }
    let fates = classify_ids(&model, &manifest, &ids, &a.prep.options(cfg.as_ref()), floor)?;
    let rows: Vec<Vec<String>> = fates
        .iter()
        .map(|(id, fate)| {
            let (status, gender, p) = match fate {
                Fate::NoImage => ("no_image", String::new(), String::new()),
                Fate::Dropped(PrepDrop::NoFace) => ("no_face", String::new(), String::new()),
                Fate::Dropped(PrepDrop::BelowThreshold) => ("below_threshold", String::new(), String::new()),
                Fate::BelowFloor(p) => ("below_floor", String::new(), fmt_f(*p)),
                Fate::Classified(g, p) => ("classified", g.to_string(), fmt_f(*p)),
            };
            vec![id.to_string(), status.to_string(), gender, p]
        })
        .collect();
    emit(g, "predictions", &table(g.format, &["user_id", "status", "gender", "probability"], &rows))
}

// ------------------------------------------------------------- scoretest

#[derive(Args, Debug)]
pub struct ScoretestArgs {
    /// Successes in sample 1.
    #[arg(long)]
    pub x1: u64,
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub x2: u64,
    #[arg(long)]
    pub n2: u64,
}

fn scoretest(g: &Global, a: &ScoretestArgs) -> Result<(), CliError> {
    let s1 = ProportionSample::new(a.x1, a.n1)?;
    let s2 = ProportionSample::new(a.x2, a.n2)?;
    let r = score_test(s1, s2)?;
    let header = ["z", "p_two_sided", "pooled_p", "n1", "x1", "n2", "x2"];
    let row = vec![
        fmt_f(r.z),
        fmt_f(r.p_two_sided),
        fmt_f(r.pooled_p),
        a.n1.to_string(),
        a.x1.to_string(),
        a.n2.to_string(),
        a.x2.to_string(),
    ];
    emit(g, "scoretest", &table(g.format, &header, &[row]))
}

// ---------------------------------------------------------------- report

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Use this weight file instead of the config's `model`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

fn report(g: &Global, a: &ReportArgs) -> Result<(), CliError> {
    let mut cfg = require_config(g, "report")?;
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    let rep = churnlens::pipeline::run_analysis(&cfg)?;
    let format = match g.format {
        Format::Csv => ReportFormat::Csv,
        Format::Markdown => ReportFormat::Markdown,
        Format::Json => ReportFormat::Json,
    };
    emit(g, "report", &render_report(&rep, format))
}

// ----------------------------------------------------------------- synth

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML file overriding generator defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

fn synth(g: &Global, a: &SynthArgs) -> Result<(), CliError> {
    let spec: SynthSpec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    let dir = g.out_dir.clone().ok_or_else(|| usage("synth needs --out-dir"))?;
    let ds = gen_synthetic(g.seed.unwrap_or(0), &spec, &dir)?;
    let rows: Vec<Vec<String>> = Group::ALL
        .iter()
        .map(|&grp| {
            let (n, f) = ds.group_truth(grp);
            vec![grp.as_str().to_string(), n.to_string(), f.to_string()]
        })
        .collect();
    let text = table(g.format, &["group", "users", "female"], &rows);
    write_file(&dir.join(format!("summary.{}", crate::output::extension(g.format))), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

//! Synthetic datasets with planted cohort compositions.
//!
//! Every user gets a private RNG stream keyed by their ID, and draws the same
//! sequence of values whatever their gender turns out to be. Raising a planted
//! female fraction therefore only flips some members from male to female and
//! leaves everybody else's image untouched.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ordered_map, AnalysisConfig, PipelineError};
use crate::imageprep::{FaceBox, FaceSource, FilterOn, Manifest, ManifestEntry, RasterImage, DEFAULT_THRESHOLD_BYTES};
use crate::snapshots::{write_snapshot, FollowerSnapshot, IdSet};
use crate::weaklabel::{Gender, NameLexicon};

pub const CANVAS: u32 = 40;
const FIRST_ID: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub account: String,
    pub before_start: DateTime<Utc>,
    pub window_days: u32,
    /// Followers present in all three snapshots.
    pub stayers: usize,
    /// Named users with images who never follow; the weak-label training pool.
    pub train_pool: usize,
    pub new_before: usize,
    pub new_after: usize,
    pub leave_before: usize,
    pub leave_after: usize,
    pub female_stayers: f64,
    pub female_train: f64,
    pub female_new_before: f64,
    pub female_new_after: f64,
    pub female_leave_before: f64,
    pub female_leave_after: f64,
    /// Pixel noise standard deviation as a fraction of the 0..255 range.
    pub noise: f64,
    pub missing_image_rate: f64,
    pub no_face_rate: f64,
    pub small_image_rate: f64,
    pub decoy_rate: f64,
    /// Share of users whose display name is in neither gendered list.
    pub unknown_name_rate: f64,
    pub male_names: Vec<String>,
    pub female_names: Vec<String>,
    pub other_names: Vec<String>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            account: "candidate".into(),
            before_start: Utc.with_ymd_and_hms(2016, 4, 20, 0, 0, 0).unwrap(),
            window_days: 7,
            stayers: 2000,
            train_pool: 1200,
            new_before: 500,
            new_after: 500,
            leave_before: 50,
            leave_after: 50,
            female_stayers: 0.5,
            female_train: 0.5,
            female_new_before: 0.5,
            female_new_after: 0.5,
            female_leave_before: 0.5,
            female_leave_after: 0.5,
            noise: 0.05,
            missing_image_rate: 0.0,
            no_face_rate: 0.0,
            small_image_rate: 0.0,
            decoy_rate: 0.0,
            unknown_name_rate: 0.0,
            male_names: strings(&["David", "James", "John", "Luke", "Michael", "Robert", "Thomas", "William"]),
            female_names: strings(&["Anna", "Caroline", "Elizabeth", "Emily", "Isabella", "Laura", "Maria", "Sarah"]),
            other_names: strings(&["Alex", "Casey", "Jordan", "Kim", "Quinn", "Robin", "Sam", "Taylor"]),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidSpec(m));
        for (name, v) in [
            ("female_stayers", self.female_stayers),
            ("female_train", self.female_train),
            ("female_new_before", self.female_new_before),
            ("female_new_after", self.female_new_after),
            ("female_leave_before", self.female_leave_before),
            ("female_leave_after", self.female_leave_after),
            ("missing_image_rate", self.missing_image_rate),
            ("no_face_rate", self.no_face_rate),
            ("small_image_rate", self.small_image_rate),
            ("decoy_rate", self.decoy_rate),
            ("unknown_name_rate", self.unknown_name_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and non-negative, got {}", self.noise));
        }
        if self.window_days == 0 {
            return bad("window_days must be at least 1".into());
        }
        if self.account.is_empty() || self.account.contains(['/', '\\']) {
            return bad(format!("account {:?} is not usable as a file name", self.account));
        }
        if self.male_names.is_empty() || self.female_names.is_empty() {
            return bad("both gendered name pools must be non-empty".into());
        }
        if self.unknown_name_rate > 0.0 && self.other_names.is_empty() {
            return bad("unknown_name_rate > 0 needs other_names".into());
        }
        let lex = self.lexicon()?;
        for n in &self.other_names {
            if lex.lookup(&n.to_lowercase()) != crate::weaklabel::WeakLabel::Unknown {
                return bad(format!("other name {n:?} is also a gendered name"));
            }
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Result<NameLexicon, PipelineError> {
        NameLexicon::new(&self.male_names, &self.female_names).map_err(|e| PipelineError::InvalidSpec(e.to_string()))
    }

    pub fn event_time(&self) -> DateTime<Utc> {
        self.before_start + Duration::days(self.window_days as i64)
    }

    pub fn after_end(&self) -> DateTime<Utc> {
        self.event_time() + Duration::days(self.window_days as i64)
    }
}

/// Which part of the synthetic population a user belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Stayer,
    LeaveBefore,
    LeaveAfter,
    NewBefore,
    NewAfter,
    Train,
}

impl Group {
    pub const ALL: [Group; 6] = [
        Group::Stayer,
        Group::LeaveBefore,
        Group::LeaveAfter,
        Group::NewBefore,
        Group::NewAfter,
        Group::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Stayer => "stayer",
            Group::LeaveBefore => "leave_before",
            Group::LeaveAfter => "leave_after",
            Group::NewBefore => "new_before",
            Group::NewAfter => "new_after",
            Group::Train => "train",
        }
    }

    fn has_image(self) -> bool {
        self != Group::Stayer
    }
}

/// Ground truth for one generated user.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthUser {
    pub id: u64,
    pub group: Group,
    pub gender: Gender,
    pub display_name: String,
    /// `None` when the user has no manifest row.
    pub manifest: Option<ManifestEntry>,
}

/// What [`gen_synthetic`] wrote. `config` is the re-loaded `analysis.toml`.
#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub root: PathBuf,
    pub config: AnalysisConfig,
    pub users: Vec<SynthUser>,
}

impl SynthDataset {
    pub fn config_path(&self) -> PathBuf {
        self.root.join("analysis.toml")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.csv")
    }

    pub fn names_path(&self) -> PathBuf {
        self.root.join("names.csv")
    }

    /// `(members, planted females)` of a group.
    pub fn group_truth(&self, group: Group) -> (usize, usize) {
        self.users
            .iter()
            .filter(|u| u.group == group)
            .fold((0, 0), |(n, f), u| (n + 1, f + usize::from(u.gender == Gender::Female)))
    }
}

/// A rendered synthetic profile picture.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthFace {
    pub image: RasterImage,
    pub face: FaceBox,
    pub decoy: Option<FaceBox>,
}

fn fill_pattern(img: &mut RasterImage, b: &FaceBox, gender: Gender, bright: [u8; 3], dark: [u8; 3]) {
    let mid = b.y + b.h / 2;
    for y in b.y..b.y + b.h {
        let upper = y < mid;
        let lit = upper == (gender == Gender::Female);
        let rgb = if lit { bright } else { dark };
        for x in b.x..b.x + b.w {
            img.set_pixel(x, y, rgb);
        }
    }
}

/// Draws a 40×40 picture whose face box is bright on top and dark below for
/// women, the reverse for men, with seeded Gaussian pixel noise. A decoy is
/// a smaller box with the opposite pattern.
pub fn render_face(gender: Gender, noise: f64, decoy: bool, seed: u64) -> SynthFace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = [0; 3].map(|_| rng.random_range(90..=170u8));
    let mut image = RasterImage::filled(CANVAS, CANVAS, bg, 0).expect("canvas size is valid");
    let side = rng.random_range(24..=36u32);
    let face = FaceBox {
        x: rng.random_range(0..=CANVAS - side),
        y: rng.random_range(0..=CANVAS - side),
        w: side,
        h: side,
    };
    let tint = [0; 3].map(|_| rng.random_range(-15..=15i16));
    let level = |lo: u8, hi: u8, rng: &mut ChaCha8Rng| {
        let v = rng.random_range(lo..=hi) as i16;
        tint.map(|t| (v + t).clamp(0, 255) as u8)
    };
    let bright = level(170, 240, &mut rng);
    let dark = level(20, 90, &mut rng);
    let dside = rng.random_range(8..=14u32);
    let decoy_box = FaceBox {
        x: rng.random_range(0..=CANVAS - dside),
        y: rng.random_range(0..=CANVAS - dside),
        w: dside,
        h: dside,
    };
    let decoy = decoy.then_some(decoy_box);
    if let Some(d) = &decoy {
        let other = match gender {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        };
        fill_pattern(&mut image, d, other, bright, dark);
    }
    fill_pattern(&mut image, &face, gender, bright, dark);
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise * 255.0).expect("finite sigma");
        for y in 0..CANVAS {
            for x in 0..CANVAS {
                let px = image.pixel(x, y).map(|c| (c as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8);
                image.set_pixel(x, y, px);
            }
        }
    }
    SynthFace { image, face, decoy }
}

const SURNAMES: [&str; 8] = ["Smith", "Jones", "Garcia", "Brown", "Miller", "Davis", "Lopez", "Wilson"];

fn make_user(seed: u64, id: u64, group: Group, female_rate: f64, spec: &SynthSpec) -> (SynthUser, Option<SynthFace>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let u_gender: f64 = rng.random();
    let u_name: f64 = rng.random();
    let u_unknown: f64 = rng.random();
    let surname = SURNAMES[rng.random_range(0..SURNAMES.len())];
    let style = rng.random_range(0..3u8);
    let suffix = rng.random_range(10..100u32);
    let u_missing: f64 = rng.random();
    let u_noface: f64 = rng.random();
    let u_small: f64 = rng.random();
    let u_decoy: f64 = rng.random();
    let u_size: f64 = rng.random();
    let face_seed: u64 = rng.random();

    let gender = if u_gender < female_rate { Gender::Female } else { Gender::Male };
    let pick = |pool: &[String]| pool[((u_name * pool.len() as f64) as usize).min(pool.len() - 1)].clone();
    let first = if u_unknown < spec.unknown_name_rate {
        pick(&spec.other_names)
    } else {
        match gender {
            Gender::Male => pick(&spec.male_names),
            Gender::Female => pick(&spec.female_names),
        }
    };
    let display_name = match style {
        0 => format!("{first} {surname}"),
        1 => format!("{}_{}{suffix}", first.to_lowercase(), surname.to_lowercase()),
        _ => first.to_uppercase(),
    };

    let mut manifest = None;
    let mut render = None;
    if group.has_image() && u_missing >= spec.missing_image_rate {
        let small = u_small < spec.small_image_rate;
        let byte_size = if small {
            2000 + (u_size * (DEFAULT_THRESHOLD_BYTES - 2000) as f64) as u64
        } else {
            20_000 + (u_size * 60_000.0) as u64
        };
        let decoy = u_decoy < spec.decoy_rate;
        let faces = render_face(gender, spec.noise, decoy, face_seed);
        let boxes = if u_noface < spec.no_face_rate {
            Vec::new()
        } else {
            std::iter::once(faces.face).chain(faces.decoy).collect()
        };
        manifest = Some(ManifestEntry {
            user_id: id,
            image_path: PathBuf::from(format!("images/{id}.png")),
            byte_size,
            boxes,
        });
        render = Some(faces);
    }
    (
        SynthUser {
            id,
            group,
            gender,
            display_name,
            manifest,
        },
        render,
    )
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes snapshots, images, manifest, names, truth, lexicon files and an
/// `analysis.toml` under `out_dir`. Same seed and spec give byte-identical
/// files.
pub fn gen_synthetic(seed: u64, spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<SynthDataset, PipelineError> {
    spec.validate()?;
    let root = out_dir.as_ref().to_path_buf();
    for d in ["", "snapshots", "images", "lexicon"] {
        let p = root.join(d);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }

    let groups = [
        (Group::Stayer, spec.stayers, spec.female_stayers),
        (Group::LeaveBefore, spec.leave_before, spec.female_leave_before),
        (Group::LeaveAfter, spec.leave_after, spec.female_leave_after),
        (Group::NewBefore, spec.new_before, spec.female_new_before),
        (Group::NewAfter, spec.new_after, spec.female_new_after),
        (Group::Train, spec.train_pool, spec.female_train),
    ];
    let mut plan = Vec::new();
    let mut next = FIRST_ID;
    for (group, n, rate) in groups {
        for _ in 0..n {
            plan.push((next, group, rate));
            next += 1;
        }
    }

    let made = ordered_map(&plan, |&(id, group, rate)| {
        let (user, render) = make_user(seed, id, group, rate, spec);
        if let (Some(faces), Some(entry)) = (render, &user.manifest) {
            let path = root.join(&entry.image_path);
            fs::write(&path, faces.image.encode_png()).map_err(io_err(&path))?;
        }
        Ok::<_, PipelineError>(user)
    });
    let users = made.into_iter().collect::<Result<Vec<_>, _>>()?;

    let ids_of = |gs: &[Group]| -> IdSet { users.iter().filter(|u| gs.contains(&u.group)).map(|u| u.id).collect() };
    let t0 = spec.before_start;
    let (t1, t2) = (spec.event_time(), spec.after_end());
    let snaps = [
        (t0, ids_of(&[Group::Stayer, Group::LeaveBefore, Group::LeaveAfter])),
        (t1, ids_of(&[Group::Stayer, Group::LeaveAfter, Group::NewBefore])),
        (t2, ids_of(&[Group::Stayer, Group::NewBefore, Group::NewAfter])),
    ];
    for (i, (t, ids)) in snaps.into_iter().enumerate() {
        let path = root.join(format!("snapshots/{}-{i}.snap", spec.account));
        FollowerSnapshot::new(spec.account.clone(), t, ids)
            .and_then(|snap| write_snapshot(&snap, &path))
            .map_err(|e| PipelineError::stage(super::Stage::Synth, None, e))?;
    }

    let manifest = Manifest {
        entries: users.iter().filter_map(|u| u.manifest.clone()).collect(),
    };
    let mpath = root.join("manifest.csv");
    let file = fs::File::create(&mpath).map_err(io_err(&mpath))?;
    manifest.write(BufWriter::new(file)).map_err(|e| PipelineError::Io {
        path: mpath.clone(),
        source: e.into(),
    })?;

    let names: Vec<(u64, String)> = users.iter().map(|u| (u.id, u.display_name.clone())).collect();
    let npath = root.join("names.csv");
    let file = fs::File::create(&npath).map_err(io_err(&npath))?;
    super::write_names(&names, BufWriter::new(file)).map_err(|e| PipelineError::Io {
        path: npath.clone(),
        source: e.into(),
    })?;

    let mut truth = String::from("user_id,gender,group\n");
    for u in &users {
        truth.push_str(&format!("{},{},{}\n", u.id, u.gender, u.group.as_str()));
    }
    let tpath = root.join("truth.csv");
    fs::write(&tpath, truth).map_err(io_err(&tpath))?;

    for (file, pool) in [("male.txt", &spec.male_names), ("female.txt", &spec.female_names)] {
        let p = root.join("lexicon").join(file);
        fs::write(&p, pool.join("\n") + "\n").map_err(io_err(&p))?;
    }

    let config = AnalysisConfig {
        account: spec.account.clone(),
        before_start: t0,
        event_time: t1,
        after_end: t2,
        snapshots: "snapshots".into(),
        manifest: "manifest.csv".into(),
        model: "model.cnnw".into(),
        names: Some("names.csv".into()),
        lexicon_male: Some("lexicon/male.txt".into()),
        lexicon_female: Some("lexicon/female.txt".into()),
        image_threshold: DEFAULT_THRESHOLD_BYTES,
        prob_floor: 0.5,
        filter_on: FilterOn::Source,
        face_source: FaceSource::Boxes,
        seed,
    };
    let cpath = root.join("analysis.toml");
    fs::write(&cpath, config.to_toml()).map_err(io_err(&cpath))?;
    let config = AnalysisConfig::load(&cpath)?;

    Ok(SynthDataset { root, config, users })
}

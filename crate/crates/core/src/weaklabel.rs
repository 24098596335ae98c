//! Weak gender labels from display names, and balanced training sets.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("name {0:?} appears in both the male and the female list")]
    AmbiguousName(String),
    #[error("no {0} items in the labeled pool")]
    EmptyClass(Gender),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    /// Network output index. Male is class 0.
    pub fn class_index(self) -> usize {
        match self {
            Gender::Male => 0,
            Gender::Female => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Gender::Male),
            1 => Some(Gender::Female),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            _ => Err(LabelError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakLabel {
    Male,
    Female,
    Unknown,
}

impl WeakLabel {
    pub fn gender(self) -> Option<Gender> {
        match self {
            WeakLabel::Male => Some(Gender::Male),
            WeakLabel::Female => Some(Gender::Female),
            WeakLabel::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeakLabel::Male => "male",
            WeakLabel::Female => "female",
            WeakLabel::Unknown => "unknown",
        }
    }
}

impl From<Gender> for WeakLabel {
    fn from(g: Gender) -> Self {
        match g {
            Gender::Male => WeakLabel::Male,
            Gender::Female => WeakLabel::Female,
        }
    }
}

impl fmt::Display for WeakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case-folded given-name lists. The two lists never overlap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameLexicon {
    male: HashSet<String>,
    female: HashSet<String>,
}

pub const DEFAULT_MALE_NAMES: [&str; 4] = ["James", "John", "Luke", "Michael"];
pub const DEFAULT_FEMALE_NAMES: [&str; 5] = ["Caroline", "Elizabeth", "Emily", "Isabella", "Maria"];

impl Default for NameLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_MALE_NAMES, DEFAULT_FEMALE_NAMES).expect("default lists are disjoint")
    }
}

impl NameLexicon {
    pub fn new<I, J, S, T>(male: I, female: J) -> Result<Self, LabelError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let fold = |s: &str| s.trim().to_lowercase();
        let male: HashSet<String> = male
            .into_iter()
            .map(|s| fold(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        let female: HashSet<String> = female
            .into_iter()
            .map(|s| fold(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        if let Some(dup) = male.intersection(&female).min() {
            return Err(LabelError::AmbiguousName(dup.clone()));
        }
        Ok(Self { male, female })
    }

    /// Reads one name per line from each file; `#` lines are comments.
    pub fn load(male_path: impl AsRef<Path>, female_path: impl AsRef<Path>) -> Result<Self, LabelError> {
        let read = |p: &Path| -> Result<Vec<String>, LabelError> {
            let text = std::fs::read_to_string(p).map_err(|source| LabelError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect())
        };
        Self::new(read(male_path.as_ref())?, read(female_path.as_ref())?)
    }

    pub fn male_len(&self) -> usize {
        self.male.len()
    }

    pub fn female_len(&self) -> usize {
        self.female.len()
    }

    /// Sorted names of one gender.
    pub fn names(&self, gender: Gender) -> Vec<&str> {
        let set = match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        };
        let mut v: Vec<&str> = set.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn lookup(&self, key: &str) -> WeakLabel {
        if self.male.contains(key) {
            WeakLabel::Male
        } else if self.female.contains(key) {
            WeakLabel::Female
        } else {
            WeakLabel::Unknown
        }
    }
}

/// The lookup key of a display name: the first alphabetic run inside the
/// first whitespace-delimited token, lowercased.
///
/// `"James Smith"` → `"james"`, `"emily_r"` → `"emily"`, `"@Maria!"` → `"maria"`.
pub fn name_key(display_name: &str) -> Option<String> {
    let token = display_name.split_whitespace().next()?;
    let start = token.find(char::is_alphabetic)?;
    let rest = &token[start..];
    let end = rest.find(|c: char| !c.is_alphabetic()).unwrap_or(rest.len());
    Some(rest[..end].to_lowercase())
}

pub fn weak_label(display_name: &str, lexicon: &NameLexicon) -> WeakLabel {
    match name_key(display_name) {
        Some(key) => lexicon.lookup(&key),
        None => WeakLabel::Unknown,
    }
}

/// Drops unknowns and downsamples the majority class uniformly at random to
/// the minority size. Surviving items keep their input order.
pub fn build_balanced_set<T: Clone>(pool: &[(T, WeakLabel)], seed: u64) -> Result<Vec<(T, Gender)>, LabelError> {
    let males: Vec<usize> = pool
        .iter()
        .enumerate()
        .filter(|(_, (_, l))| *l == WeakLabel::Male)
        .map(|(i, _)| i)
        .collect();
    let females: Vec<usize> = pool
        .iter()
        .enumerate()
        .filter(|(_, (_, l))| *l == WeakLabel::Female)
        .map(|(i, _)| i)
        .collect();
    if males.is_empty() {
        return Err(LabelError::EmptyClass(Gender::Male));
    }
    if females.is_empty() {
        return Err(LabelError::EmptyClass(Gender::Female));
    }
    let n = males.len().min(females.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |idx: &[usize]| -> Vec<usize> {
        if idx.len() == n {
            return idx.to_vec();
        }
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, idx.len(), n)
            .into_iter()
            .map(|k| idx[k])
            .collect();
        chosen.sort_unstable();
        chosen
    };
    let mut keep = pick(&males);
    keep.extend(pick(&females));
    keep.sort_unstable();
    Ok(keep
        .into_iter()
        .map(|i| {
            let (item, label) = &pool[i];
            (item.clone(), label.gender().expect("unknowns filtered"))
        })
        .collect())
}

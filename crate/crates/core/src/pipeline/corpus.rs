use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::{ordered_map, PipelineError, Stage};
use crate::imageprep::{prepare_entry, FaceTensor, Manifest, PrepDrop, PrepOptions};
use crate::weaklabel::{build_balanced_set, weak_label, Gender, NameLexicon, WeakLabel};

/// Reads `user_id,display_name` rows. Repeated IDs keep their first name;
/// the number of discarded repeats is returned alongside.
pub fn load_names(path: impl AsRef<Path>) -> Result<(Vec<(u64, String)>, usize), PipelineError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_names(BufReader::new(file))
}

fn read_names<R: Read>(reader: R) -> Result<(Vec<(u64, String)>, usize), PipelineError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    let mut repeats = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |msg: String| PipelineError::Config(format!("names line {line}: {msg}"));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields, got {}", rec.len())));
        }
        let id: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad user id {:?}", &rec[0])))?;
        if seen.insert(id, ()).is_some() {
            repeats += 1;
            continue;
        }
        out.push((id, rec[1].to_string()));
    }
    Ok((out, repeats))
}

pub fn write_names<W: Write>(names: &[(u64, String)], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "display_name"])?;
    for (id, name) in names {
        w.write_record([id.to_string().as_str(), name.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Balanced weakly labeled training data plus the counts behind it.
#[derive(Clone, Debug)]
pub struct LabeledCorpus {
    /// `(user_id, tensor, weak label)`, ascending by user ID.
    pub items: Vec<(u64, FaceTensor, Gender)>,
    pub names: usize,
    pub unknown_names: usize,
    pub no_image: usize,
    pub no_face: usize,
    pub below_threshold: usize,
}

/// Labels every named user from the lexicon, prepares the images of the
/// labeled ones, then downsamples the majority class among the survivors.
pub fn build_training_corpus(
    names: &[(u64, String)],
    lexicon: &NameLexicon,
    manifest: &Manifest,
    opts: &PrepOptions,
    seed: u64,
) -> Result<LabeledCorpus, PipelineError> {
    let by_id: HashMap<u64, _> = manifest.entries.iter().map(|e| (e.user_id, e)).collect();
    let mut labeled: Vec<(u64, Gender)> = Vec::new();
    let mut unknown_names = 0;
    for (id, name) in names {
        match weak_label(name, lexicon) {
            WeakLabel::Unknown => unknown_names += 1,
            l => labeled.push((*id, l.gender().expect("known label"))),
        }
    }
    labeled.sort_unstable_by_key(|(id, _)| *id);

    let prepared = ordered_map(&labeled, |&(id, _)| match by_id.get(&id) {
        None => Ok(None),
        Some(e) => prepare_entry(e, opts)
            .map(Some)
            .map_err(|err| PipelineError::stage(Stage::Prep, Some(id), err)),
    });
    let mut corpus = LabeledCorpus {
        items: Vec::new(),
        names: names.len(),
        unknown_names,
        no_image: 0,
        no_face: 0,
        below_threshold: 0,
    };
    let mut pool = Vec::new();
    for ((id, g), p) in labeled.into_iter().zip(prepared) {
        match p? {
            None => corpus.no_image += 1,
            Some(Err(PrepDrop::NoFace)) => corpus.no_face += 1,
            Some(Err(PrepDrop::BelowThreshold)) => corpus.below_threshold += 1,
            Some(Ok(t)) => pool.push(((id, t), WeakLabel::from(g))),
        }
    }
    corpus.items = build_balanced_set(&pool, seed)
        .map_err(|e| PipelineError::stage(Stage::Names, None, e))?
        .into_iter()
        .map(|((id, t), g)| (id, t, g))
        .collect();
    Ok(corpus)
}

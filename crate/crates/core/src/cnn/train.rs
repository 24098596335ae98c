use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{predict_from_logits, CnnModel};
use super::CnnError;
use crate::imageprep::FaceTensor;
use crate::weaklabel::Gender;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CnnError> {
        let bad = |m: String| Err(CnnError::InvalidConfig(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be a finite non-negative number, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean loss over the epoch's mini-batches.
    pub loss: f64,
    /// Accuracy of the pre-update predictions seen during the epoch.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: CnnModel,
    pub history: Vec<EpochStats>,
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,train_acc,val_acc\n");
    for h in history {
        let val = h.val_acc.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", h.epoch, h.loss, h.train_acc, val);
    }
    out
}

/// Mini-batch SGD with classical momentum (`v ← μv − ηg; θ ← θ + v`) from the
/// seeded initialisation. Epoch order is reshuffled with a second stream of
/// the same seed. Bit-reproducible for fixed inputs.
pub fn train(
    dataset: &[(FaceTensor, Gender)],
    validation: Option<&[(FaceTensor, Gender)]>,
    config: &TrainConfig,
) -> Result<TrainOutcome, CnnError> {
    train_from(CnnModel::initialize(config.seed), dataset, validation, config)
}

/// Like [`train`] but starting from an existing model.
pub fn train_from(
    mut model: CnnModel,
    dataset: &[(FaceTensor, Gender)],
    validation: Option<&[(FaceTensor, Gender)]>,
    config: &TrainConfig,
) -> Result<TrainOutcome, CnnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(CnnError::EmptyDataset);
    }
    for g in [Gender::Male, Gender::Female] {
        if !dataset.iter().any(|(_, l)| *l == g) {
            return Err(CnnError::EmptyClass(g));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut velocity = vec![0.0; model.param_count()];
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let samples: Vec<(&[f64], usize)> = idx
                .iter()
                .map(|&i| (dataset[i].0.data(), dataset[i].1.class_index()))
                .collect();
            let (loss, grad, logits) = model.batch_gradient(&samples);
            if !loss.is_finite() {
                return Err(CnnError::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += loss * idx.len() as f64;
            correct += logits
                .iter()
                .zip(&samples)
                .filter(|(z, (_, y))| predict_from_logits(**z).class == *y)
                .count();
            for ((p, v), g) in model.params_mut().iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
        }
        let val_acc = validation.filter(|v| !v.is_empty()).map(|v| accuracy(&model, v));
        history.push(EpochStats {
            epoch,
            loss: loss_sum / dataset.len() as f64,
            train_acc: correct as f64 / dataset.len() as f64,
            val_acc,
        });
    }
    Ok(TrainOutcome { model, history })
}

pub fn accuracy(model: &CnnModel, labeled: &[(FaceTensor, Gender)]) -> f64 {
    let tensors: Vec<FaceTensor> = labeled.iter().map(|(t, _)| t.clone()).collect();
    let hits = model
        .predict_batch(&tensors)
        .iter()
        .zip(labeled)
        .filter(|(p, (_, g))| p.gender == *g)
        .count();
    hits as f64 / labeled.len() as f64
}

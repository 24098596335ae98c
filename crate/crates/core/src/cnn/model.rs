use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{conv_backward, conv_forward, col2im, dot, maxpool2, maxpool2_backward, relu_backward, relu_in_place};
use super::tensor::Tensor;
use super::CnnError;
use crate::imageprep::{FaceTensor, TENSOR_LEN};
use crate::weaklabel::Gender;

pub const INPUT_CHANNELS: usize = 3;
pub const INPUT_SIDE: usize = 28;
pub const KERNEL: usize = 5;
pub const CONV1_CHANNELS: usize = 32;
pub const CONV2_CHANNELS: usize = 64;
pub const CLASSES: usize = 2;

pub const CONV1_SIDE: usize = INPUT_SIDE - KERNEL + 1; // 24
pub const POOL1_SIDE: usize = CONV1_SIDE / 2; // 12
pub const CONV2_SIDE: usize = POOL1_SIDE - KERNEL + 1; // 8
pub const POOL2_SIDE: usize = CONV2_SIDE / 2; // 4
pub const FEATURES: usize = CONV2_CHANNELS * POOL2_SIDE * POOL2_SIDE; // 1024

const CONV1_TAPS: usize = INPUT_CHANNELS * KERNEL * KERNEL;
const CONV2_TAPS: usize = CONV1_CHANNELS * KERNEL * KERNEL;
const CONV1_POS: usize = CONV1_SIDE * CONV1_SIDE;
const CONV2_POS: usize = CONV2_SIDE * CONV2_SIDE;
const POOL1_LEN: usize = CONV1_CHANNELS * POOL1_SIDE * POOL1_SIDE;

/// Offsets of each parameter block inside the flat parameter vector. This is
/// also the on-disk order.
pub mod layout {
    use std::ops::Range;

    pub const CONV1_W: Range<usize> = 0..2400;
    pub const CONV1_B: Range<usize> = 2400..2432;
    pub const CONV2_W: Range<usize> = 2432..53632;
    pub const CONV2_B: Range<usize> = 53632..53696;
    pub const FC_W: Range<usize> = 53696..55744;
    pub const FC_B: Range<usize> = 55744..55746;
    pub const TOTAL: usize = 55746;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    Valid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

/// Fixed hyper-structure of the network, stored alongside the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_channels: u32,
    pub input_side: u32,
    pub conv1_channels: u32,
    pub conv2_channels: u32,
    pub kernel: u32,
    pub stride: u32,
    pub padding: Padding,
    pub pool: u32,
    pub activation: Activation,
    pub classes: u32,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_channels: INPUT_CHANNELS as u32,
            input_side: INPUT_SIDE as u32,
            conv1_channels: CONV1_CHANNELS as u32,
            conv2_channels: CONV2_CHANNELS as u32,
            kernel: KERNEL as u32,
            stride: 1,
            padding: Padding::Valid,
            pool: 2,
            activation: Activation::Relu,
            classes: CLASSES as u32,
        }
    }
}

/// conv(5×5, 32) → ReLU → pool → conv(5×5, 64) → ReLU → pool → dense(1024 → 2).
#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    architecture: Architecture,
    params: Vec<f64>,
}

/// Same layout as the model parameters.
pub type Gradients = Vec<f64>;

/// Per-thread scratch buffers for one sample.
pub(crate) struct Workspace {
    col1: Vec<f64>,
    act1: Vec<f64>,
    pool1: Vec<f64>,
    arg1: Vec<usize>,
    col2: Vec<f64>,
    act2: Vec<f64>,
    pool2: Vec<f64>,
    arg2: Vec<usize>,
    // backward
    g_pool2: Vec<f64>,
    g_act2: Vec<f64>,
    g_col2: Vec<f64>,
    g_pool1: Vec<f64>,
    g_act1: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new() -> Self {
        Self {
            col1: vec![0.0; CONV1_TAPS * CONV1_POS],
            act1: vec![0.0; CONV1_CHANNELS * CONV1_POS],
            pool1: vec![0.0; POOL1_LEN],
            arg1: vec![0; POOL1_LEN],
            col2: vec![0.0; CONV2_TAPS * CONV2_POS],
            act2: vec![0.0; CONV2_CHANNELS * CONV2_POS],
            pool2: vec![0.0; FEATURES],
            arg2: vec![0; FEATURES],
            g_pool2: vec![0.0; FEATURES],
            g_act2: vec![0.0; CONV2_CHANNELS * CONV2_POS],
            g_col2: vec![0.0; CONV2_TAPS * CONV2_POS],
            g_pool1: vec![0.0; POOL1_LEN],
            g_act1: vec![0.0; CONV1_CHANNELS * CONV1_POS],
        }
    }
}

/// Network output for one input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub gender: Gender,
    pub class: usize,
    pub probability: f64,
}

/// Numerically stable softmax of a two-logit row.
pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Argmax of the softmax with ties resolved to class 0.
pub fn predict_from_logits(logits: [f64; 2]) -> Prediction {
    let p = softmax(logits);
    let class = if logits[1] > logits[0] { 1 } else { 0 };
    Prediction {
        gender: Gender::from_class_index(class).expect("two classes"),
        class,
        probability: p[class],
    }
}

fn logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Mean softmax cross-entropy of `logits[N×C]` against class indices.
pub fn loss(logits: &Tensor, labels: &[usize]) -> Result<f64, CnnError> {
    let (n, classes) = logits_dims(logits)?;
    if labels.len() != n {
        return Err(CnnError::LabelCount {
            expected: n,
            got: labels.len(),
        });
    }
    let mut total = 0.0;
    for (row, &y) in logits.data().chunks_exact(classes).zip(labels) {
        if y >= classes {
            return Err(CnnError::InvalidLabel(y));
        }
        total += logsumexp(row) - row[y];
    }
    Ok(total / n as f64)
}

fn logits_dims(logits: &Tensor) -> Result<(usize, usize), CnnError> {
    match logits.shape() {
        [n, c] if *n > 0 && *c > 0 => Ok((*n, *c)),
        other => Err(CnnError::ShapeMismatch {
            expected: vec![0, CLASSES],
            got: other.to_vec(),
        }),
    }
}

impl CnnModel {
    pub fn zeros() -> Self {
        Self {
            architecture: Architecture::default(),
            params: vec![0.0; layout::TOTAL],
        }
    }

    /// Uniform(−r, r) weights with `r = sqrt(6 / (fan_in + fan_out))` per
    /// layer and zero biases, drawn from a ChaCha8 stream seeded by `seed`.
    pub fn initialize(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeros();
        let blocks = [
            (layout::CONV1_W, CONV1_TAPS, CONV1_CHANNELS * KERNEL * KERNEL),
            (layout::CONV2_W, CONV2_TAPS, CONV2_CHANNELS * KERNEL * KERNEL),
            (layout::FC_W, FEATURES, CLASSES),
        ];
        for (range, fan_in, fan_out) in blocks {
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut model.params[range] {
                *w = rng.random_range(-r..r);
            }
        }
        model
    }

    pub fn from_parts(architecture: Architecture, params: Vec<f64>) -> Result<Self, CnnError> {
        if architecture != Architecture::default() {
            return Err(CnnError::ArchitectureMismatch);
        }
        if params.len() != layout::TOTAL {
            return Err(CnnError::ShapeMismatch {
                expected: vec![layout::TOTAL],
                got: vec![params.len()],
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(CnnError::NonFinite);
        }
        Ok(Self { architecture, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Forward pass of one 3×28×28 input, leaving activations in `ws`.
    pub(crate) fn forward_sample(&self, x: &[f64], ws: &mut Workspace) -> [f64; 2] {
        let p = &self.params;
        conv_forward(
            x,
            INPUT_CHANNELS,
            INPUT_SIDE,
            INPUT_SIDE,
            &p[layout::CONV1_W],
            &p[layout::CONV1_B],
            CONV1_CHANNELS,
            KERNEL,
            &mut ws.col1,
            &mut ws.act1,
        );
        relu_in_place(&mut ws.act1);
        maxpool2(&ws.act1, CONV1_CHANNELS, CONV1_SIDE, CONV1_SIDE, &mut ws.pool1, &mut ws.arg1);
        conv_forward(
            &ws.pool1,
            CONV1_CHANNELS,
            POOL1_SIDE,
            POOL1_SIDE,
            &p[layout::CONV2_W],
            &p[layout::CONV2_B],
            CONV2_CHANNELS,
            KERNEL,
            &mut ws.col2,
            &mut ws.act2,
        );
        relu_in_place(&mut ws.act2);
        maxpool2(&ws.act2, CONV2_CHANNELS, CONV2_SIDE, CONV2_SIDE, &mut ws.pool2, &mut ws.arg2);
        let fc_w = &p[layout::FC_W];
        let fc_b = &p[layout::FC_B];
        [
            fc_b[0] + dot(&fc_w[..FEATURES], &ws.pool2),
            fc_b[1] + dot(&fc_w[FEATURES..], &ws.pool2),
        ]
    }

    /// Accumulates into `grad` the gradient of `weight · CE(logits, label)`
    /// for one sample and returns the unweighted loss and logits.
    pub(crate) fn backward_sample(
        &self,
        x: &[f64],
        label: usize,
        weight: f64,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> (f64, [f64; 2]) {
        let logits = self.forward_sample(x, ws);
        let sample_loss = logsumexp(&logits) - logits[label];
        let prob = softmax(logits);
        let mut g_logits = [prob[0] * weight, prob[1] * weight];
        g_logits[label] -= weight;

        let p = &self.params;
        let fc_w = &p[layout::FC_W];
        {
            let (g_fc_w, rest) = grad[layout::FC_W.start..].split_at_mut(layout::FC_W.len());
            for c in 0..CLASSES {
                super::layers::axpy(g_logits[c], &ws.pool2, &mut g_fc_w[c * FEATURES..(c + 1) * FEATURES]);
                rest[c] += g_logits[c];
            }
        }
        for (f, g) in ws.g_pool2.iter_mut().enumerate() {
            *g = fc_w[f] * g_logits[0] + fc_w[FEATURES + f] * g_logits[1];
        }

        maxpool2_backward(&ws.g_pool2, &ws.arg2, &mut ws.g_act2);
        relu_backward(&ws.act2, &mut ws.g_act2);
        {
            let (g_w2, g_b2) = grad[layout::CONV2_W.start..layout::CONV2_B.end].split_at_mut(layout::CONV2_W.len());
            conv_backward(
                &ws.col2,
                &p[layout::CONV2_W],
                &ws.g_act2,
                CONV2_CHANNELS,
                CONV2_TAPS,
                CONV2_POS,
                g_w2,
                g_b2,
                Some(&mut ws.g_col2),
            );
        }
        ws.g_pool1.fill(0.0);
        col2im(&ws.g_col2, CONV1_CHANNELS, POOL1_SIDE, POOL1_SIDE, KERNEL, &mut ws.g_pool1);

        maxpool2_backward(&ws.g_pool1, &ws.arg1, &mut ws.g_act1);
        relu_backward(&ws.act1, &mut ws.g_act1);
        let (g_w1, g_b1) = grad[layout::CONV1_W.start..layout::CONV1_B.end].split_at_mut(layout::CONV1_W.len());
        conv_backward(
            &ws.col1,
            &p[layout::CONV1_W],
            &ws.g_act1,
            CONV1_CHANNELS,
            CONV1_TAPS,
            CONV1_POS,
            g_w1,
            g_b1,
            None,
        );
        (sample_loss, logits)
    }

    /// Logits `[N×2]` for a batch `[N×3×28×28]`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor, CnnError> {
        let n = check_batch(batch)?;
        let samples: Vec<&[f64]> = batch.data().chunks_exact(TENSOR_LEN).collect();
        let logits = self.forward_many(&samples);
        let data = logits.into_iter().flatten().collect();
        Tensor::new(vec![n, CLASSES], data)
    }

    pub(crate) fn forward_many(&self, samples: &[&[f64]]) -> Vec<[f64; 2]> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            samples
                .par_iter()
                .map_init(Workspace::new, |ws, x| self.forward_sample(x, ws))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut ws = Workspace::new();
            samples.iter().map(|x| self.forward_sample(x, &mut ws)).collect()
        }
    }

    /// Exact gradient of the mean batch loss. Returns `(loss, gradients)`.
    pub fn backward(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Gradients), CnnError> {
        let n = check_batch(batch)?;
        if labels.len() != n {
            return Err(CnnError::LabelCount {
                expected: n,
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= CLASSES) {
            return Err(CnnError::InvalidLabel(bad));
        }
        let samples: Vec<(&[f64], usize)> = batch.data().chunks_exact(TENSOR_LEN).zip(labels.iter().copied()).collect();
        let (loss, grad, _) = self.batch_gradient(&samples);
        Ok((loss, grad))
    }

    /// Mean loss, gradient, and the per-sample logits of a labeled batch.
    ///
    /// Samples are processed in fixed-size chunks whose partial gradients are
    /// summed in chunk order, so the result does not depend on thread count.
    pub(crate) fn batch_gradient(&self, samples: &[(&[f64], usize)]) -> (f64, Gradients, Vec<[f64; 2]>) {
        const CHUNK: usize = 8;
        let weight = 1.0 / samples.len() as f64;
        let run_chunk = |chunk: &[(&[f64], usize)]| {
            let mut ws = Workspace::new();
            let mut grad = vec![0.0; layout::TOTAL];
            let mut loss = 0.0;
            let mut logits = Vec::with_capacity(chunk.len());
            for &(x, y) in chunk {
                let (l, z) = self.backward_sample(x, y, weight, &mut ws, &mut grad);
                loss += l;
                logits.push(z);
            }
            (loss, grad, logits)
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<_> = {
            use rayon::prelude::*;
            samples.par_chunks(CHUNK).map(run_chunk).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<_> = samples.chunks(CHUNK).map(run_chunk).collect();

        let mut parts = parts.into_iter();
        let (mut loss, mut grad, mut logits) = parts.next().unwrap_or_else(|| (0.0, vec![0.0; layout::TOTAL], Vec::new()));
        for (l, g, z) in parts {
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            logits.extend(z);
        }
        (loss * weight, grad, logits)
    }

    pub fn predict(&self, tensor: &FaceTensor) -> Prediction {
        let mut ws = Workspace::new();
        predict_from_logits(self.forward_sample(tensor.data(), &mut ws))
    }

    pub fn predict_batch(&self, tensors: &[FaceTensor]) -> Vec<Prediction> {
        let samples: Vec<&[f64]> = tensors.iter().map(FaceTensor::data).collect();
        self.forward_many(&samples).into_iter().map(predict_from_logits).collect()
    }
}

fn check_batch(batch: &Tensor) -> Result<usize, CnnError> {
    match batch.shape() {
        [n, INPUT_CHANNELS, INPUT_SIDE, INPUT_SIDE] if *n > 0 => Ok(*n),
        other => Err(CnnError::ShapeMismatch {
            expected: vec![0, INPUT_CHANNELS, INPUT_SIDE, INPUT_SIDE],
            got: other.to_vec(),
        }),
    }
}

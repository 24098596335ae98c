mod common;

use churnlens::cnn::{decode_model, encode_model, loss, train, CnnModel, Tensor, TrainConfig};
use churnlens::imageprep::{FaceTensor, TENSOR_LEN};
use churnlens::weaklabel::Gender;

use common::*;

fn batch(xs: &[Vec<f64>]) -> Tensor {
    Tensor::new(vec![xs.len(), IN_C, IN, IN], xs.concat()).unwrap()
}

#[test]
fn parameter_layout_matches_reference() {
    assert_eq!(CnnModel::initialize(0).param_count(), TOTAL);
    assert_eq!(TENSOR_LEN, IN_C * IN * IN);
}

#[test]
fn forward_matches_reference_network() {
    let model = CnnModel::initialize(11);
    let xs = random_inputs(6, 3);
    let logits = model.forward(&batch(&xs)).unwrap();
    assert_eq!(logits.shape(), &[6, 2]);
    for (x, got) in xs.iter().zip(logits.data().chunks_exact(2)) {
        let want = forward(model.params(), x).logits;
        for k in 0..2 {
            assert!((got[k] - want[k]).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn backward_loss_is_mean_cross_entropy() {
    let model = CnnModel::initialize(5);
    let xs = random_inputs(4, 9);
    let labels = [0, 1, 1, 0];
    let b = batch(&xs);
    let (l, g) = model.backward(&b, &labels).unwrap();
    assert_eq!(g.len(), TOTAL);
    let want = mean_loss(model.params(), &xs, &labels);
    assert!((l - want).abs() < 1e-12);
    let from_logits = loss(&model.forward(&b).unwrap(), &labels).unwrap();
    assert!((from_logits - want).abs() < 1e-12);
}

// The incremental oracle should agree with plain central differences of the
// full loss, up to the latter's roundoff floor.
#[test]
fn incremental_fd_agrees_with_full_forward_fd() {
    let model = CnnModel::initialize(2);
    let p = model.params().to_vec();
    let xs = random_inputs(2, 4);
    let labels = [1, 0];
    let eps = 1e-4;
    let fast = fd_gradient(&p, &xs, &labels, eps);
    for idx in [W1 + 7, B1 + 3, W2 + 1234, B2 + 60, WF + 5, WF + F + 900, BF, BF + 1] {
        let mut q = p.clone();
        q[idx] = p[idx] + eps;
        let up = mean_loss(&q, &xs, &labels);
        q[idx] = p[idx] - eps;
        let down = mean_loss(&q, &xs, &labels);
        let slow = (up - down) / (2.0 * eps);
        assert!((fast[idx] - slow).abs() < 1e-8, "param {idx}: {} vs {slow}", fast[idx]);
    }
}

#[test]
fn backward_matches_fd_on_dense_layer() {
    let model = CnnModel::initialize(8);
    let xs = random_inputs(3, 1);
    let labels = [0, 1, 1];
    let (_, g) = model.backward(&batch(&xs), &labels).unwrap();
    let fd = fd_gradient(model.params(), &xs, &labels, 1e-5);
    for idx in WF..TOTAL {
        let scale = fd[idx].abs().max(1e-8);
        assert!((g[idx] - fd[idx]).abs() / scale < 1e-5, "param {idx}: {} vs {}", g[idx], fd[idx]);
    }
}

fn labeled(xs: &[Vec<f64>], labels: &[usize]) -> Vec<(FaceTensor, Gender)> {
    xs.iter()
        .zip(labels)
        .map(|(x, &y)| (FaceTensor::new(x.clone()).unwrap(), Gender::from_class_index(y).unwrap()))
        .collect()
}

#[test]
fn memorizes_a_small_random_set() {
    let xs = random_inputs(16, 21);
    let labels: Vec<usize> = (0..16).map(|i| (i * 7 + 3) % 5 % 2).collect();
    let set = labeled(&xs, &labels);
    let config = TrainConfig {
        epochs: 60,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let out = train(&set, None, &config).unwrap();
    let first = out.history.first().unwrap().loss;
    let last = out.history.last().unwrap();
    assert!(last.loss < first / 4.0, "loss {first} -> {}", last.loss);
    let right = set.iter().filter(|(t, g)| out.model.predict(t).gender == *g).count();
    assert_eq!(right, 16);
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let xs = random_inputs(12, 30);
    let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
    let set = labeled(&xs, &labels);
    let config = TrainConfig {
        epochs: 2,
        batch_size: 4,
        seed: 77,
        ..TrainConfig::default()
    };
    let a = train(&set, None, &config).unwrap();
    let b = train(&set, None, &config).unwrap();
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(a.history, b.history);

    let restored = decode_model(&encode_model(&a.model)).unwrap();
    assert_eq!(restored.params(), a.model.params());
    for (t, _) in &set {
        assert_eq!(restored.predict(t), a.model.predict(t));
    }
}

#[test]
fn different_seeds_initialise_differently() {
    assert_ne!(CnnModel::initialize(1).params(), CnnModel::initialize(2).params());
    assert_eq!(CnnModel::initialize(3).params(), CnnModel::initialize(3).params());
}

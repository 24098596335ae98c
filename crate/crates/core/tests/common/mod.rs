//! Test-only reference implementations. Nothing here calls into the crate's
//! layer code; the network is spelled out as plain nested loops over the flat
//! parameter vector.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const IN_C: usize = 3;
pub const IN: usize = 28;
pub const K: usize = 5;
pub const C1: usize = 32;
pub const S1: usize = 24;
pub const P1: usize = 12;
pub const C2: usize = 64;
pub const S2: usize = 8;
pub const P2: usize = 4;
pub const F: usize = C2 * P2 * P2;

pub const W1: usize = 0;
pub const B1: usize = W1 + C1 * IN_C * K * K;
pub const W2: usize = B1 + C1;
pub const B2: usize = W2 + C2 * C1 * K * K;
pub const WF: usize = B2 + C2;
pub const BF: usize = WF + 2 * F;
pub const TOTAL: usize = BF + 2;

#[inline]
pub fn w1(o: usize, c: usize, ky: usize, kx: usize) -> usize {
    W1 + ((o * IN_C + c) * K + ky) * K + kx
}

#[inline]
pub fn w2(o: usize, c: usize, ky: usize, kx: usize) -> usize {
    W2 + ((o * C1 + c) * K + ky) * K + kx
}

/// Every intermediate of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    pub conv1: Vec<f64>,
    pub pool1: Vec<f64>,
    pub conv2: Vec<f64>,
    pub pool2: Vec<f64>,
    pub logits: [f64; 2],
}

pub fn conv1_channel(p: &[f64], x: &[f64], o: usize, out: &mut [f64]) {
    for y in 0..S1 {
        for xx in 0..S1 {
            let mut s = p[B1 + o];
            for c in 0..IN_C {
                for ky in 0..K {
                    for kx in 0..K {
                        s += p[w1(o, c, ky, kx)] * x[(c * IN + y + ky) * IN + xx + kx];
                    }
                }
            }
            out[y * S1 + xx] = s;
        }
    }
}

/// ReLU then 2×2 max-pool of one `side×side` channel.
pub fn relu_pool(pre: &[f64], side: usize, out: &mut [f64]) {
    let half = side / 2;
    for y in 0..half {
        for x in 0..half {
            let mut m = f64::NEG_INFINITY;
            for dy in 0..2 {
                for dx in 0..2 {
                    m = m.max(pre[(2 * y + dy) * side + 2 * x + dx].max(0.0));
                }
            }
            out[y * half + x] = m;
        }
    }
}

pub fn conv2_channel(p: &[f64], pool1: &[f64], o: usize, out: &mut [f64]) {
    for y in 0..S2 {
        for x in 0..S2 {
            let mut s = p[B2 + o];
            for c in 0..C1 {
                for ky in 0..K {
                    for kx in 0..K {
                        s += p[w2(o, c, ky, kx)] * pool1[(c * P1 + y + ky) * P1 + x + kx];
                    }
                }
            }
            out[y * S2 + x] = s;
        }
    }
}

pub fn dense(p: &[f64], pool2: &[f64]) -> [f64; 2] {
    let mut z = [p[BF], p[BF + 1]];
    for (k, zk) in z.iter_mut().enumerate() {
        for f in 0..F {
            *zk += p[WF + k * F + f] * pool2[f];
        }
    }
    z
}

pub fn forward(p: &[f64], x: &[f64]) -> Trace {
    assert_eq!(p.len(), TOTAL);
    let mut conv1 = vec![0.0; C1 * S1 * S1];
    let mut pool1 = vec![0.0; C1 * P1 * P1];
    for o in 0..C1 {
        conv1_channel(p, x, o, &mut conv1[o * S1 * S1..(o + 1) * S1 * S1]);
        relu_pool(&conv1[o * S1 * S1..(o + 1) * S1 * S1], S1, &mut pool1[o * P1 * P1..(o + 1) * P1 * P1]);
    }
    let mut conv2 = vec![0.0; C2 * S2 * S2];
    let mut pool2 = vec![0.0; F];
    for o in 0..C2 {
        conv2_channel(p, &pool1, o, &mut conv2[o * S2 * S2..(o + 1) * S2 * S2]);
        relu_pool(&conv2[o * S2 * S2..(o + 1) * S2 * S2], S2, &mut pool2[o * P2 * P2..(o + 1) * P2 * P2]);
    }
    let logits = dense(p, &pool2);
    Trace {
        conv1,
        pool1,
        conv2,
        pool2,
        logits,
    }
}

/// Softmax cross-entropy with a max shift.
pub fn cross_entropy(z: [f64; 2], label: usize) -> f64 {
    let m = z[0].max(z[1]);
    m + ((z[0] - m).exp() + (z[1] - m).exp()).ln() - z[label]
}

pub fn mean_loss(p: &[f64], xs: &[Vec<f64>], labels: &[usize]) -> f64 {
    xs.iter()
        .zip(labels)
        .map(|(x, &y)| cross_entropy(forward(p, x).logits, y))
        .sum::<f64>()
        / xs.len() as f64
}

/// Change in softmax cross-entropy when logits `z` move by `dz`, computed
/// without subtracting two O(1) losses:
/// `CE(z+dz) − CE(z) = log Σₖ softmax(z)ₖ e^{dzₖ} − dz_y`.
pub fn ce_delta(z: [f64; 2], dz: [f64; 2], label: usize) -> f64 {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let sum = e[0] + e[1];
    let t = e[0] / sum * dz[0].exp_m1() + e[1] / sum * dz[1].exp_m1();
    t.ln_1p() - dz[label]
}

/// Max-pool changes of one channel whose pre-activations moved by `dpre`.
fn pooled_delta(pre: &[f64], dpre: &[f64], side: usize, old: &[f64], out: &mut [f64]) {
    let moved: Vec<f64> = pre.iter().zip(dpre).map(|(a, b)| a + b).collect();
    relu_pool(&moved, side, out);
    for (o, b) in out.iter_mut().zip(old) {
        *o -= b;
    }
}

/// Logit change from a change in one conv2 channel's pooled outputs.
fn dense_delta(p: &[f64], o: usize, dpool: &[f64]) -> [f64; 2] {
    let mut dz = [0.0; 2];
    for (k, d) in dz.iter_mut().enumerate() {
        for (j, v) in dpool.iter().enumerate() {
            *d += p[WF + k * F + o * P2 * P2 + j] * v;
        }
    }
    dz
}

/// Central differences `(L(θ+εeᵢ) − L(θ−εeᵢ)) / 2ε` of the mean loss for
/// every parameter.
///
/// Each side is evaluated as `L(θ±εeᵢ) − L(θ)` by propagating activation
/// deltas from cached activations through only what parameter `i` reaches,
/// then [`ce_delta`]. Subtracting full losses instead would leave a roundoff
/// floor near 1e-11 in every component.
pub fn fd_gradient(p: &[f64], xs: &[Vec<f64>], labels: &[usize], eps: f64) -> Vec<f64> {
    let traces: Vec<Trace> = xs.iter().map(|x| forward(p, x)).collect();
    let n = xs.len() as f64;
    let mut g = vec![0.0; TOTAL];
    let central = |side: &dyn Fn(f64, usize) -> [f64; 2]| -> f64 {
        let mut d = [0.0; 2];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            d[slot] = (0..xs.len())
                .map(|s| ce_delta(traces[s].logits, side(sign * eps, s), labels[s]))
                .sum::<f64>()
                / n;
        }
        (d[0] - d[1]) / (2.0 * eps)
    };

    for k in 0..2 {
        for f in 0..=F {
            let idx = if f < F { WF + k * F + f } else { BF + k };
            g[idx] = central(&|e, s| {
                let mut dz = [0.0; 2];
                dz[k] = e * if f < F { traces[s].pool2[f] } else { 1.0 };
                dz
            });
        }
    }

    // second conv layer: only output channel o moves
    let plane2 = S2 * S2;
    for o in 0..C2 {
        let n_w = C1 * K * K;
        for j in 0..=n_w {
            let idx = if j < n_w { W2 + o * n_w + j } else { B2 + o };
            let (c, ky, kx) = (j / (K * K), (j / K) % K, j % K);
            g[idx] = central(&|e, s| {
                let t = &traces[s];
                let mut dpre = [0.0; S2 * S2];
                for y in 0..S2 {
                    for x in 0..S2 {
                        dpre[y * S2 + x] = if j < n_w { e * t.pool1[(c * P1 + y + ky) * P1 + x + kx] } else { e };
                    }
                }
                let mut dpool = [0.0; P2 * P2];
                pooled_delta(
                    &t.conv2[o * plane2..(o + 1) * plane2],
                    &dpre,
                    S2,
                    &t.pool2[o * P2 * P2..(o + 1) * P2 * P2],
                    &mut dpool,
                );
                dense_delta(p, o, &dpool)
            });
        }
    }

    // first conv layer: one pool1 channel moves, which shifts every conv2
    // pre-activation through that channel's weights
    let plane1 = S1 * S1;
    for c1 in 0..C1 {
        let n_w = IN_C * K * K;
        for j in 0..=n_w {
            let idx = if j < n_w { W1 + c1 * n_w + j } else { B1 + c1 };
            let (ci, ky, kx) = (j / (K * K), (j / K) % K, j % K);
            g[idx] = central(&|e, s| {
                let t = &traces[s];
                let x = &xs[s];
                let mut dpre = [0.0; S1 * S1];
                for y in 0..S1 {
                    for xx in 0..S1 {
                        dpre[y * S1 + xx] = if j < n_w { e * x[(ci * IN + y + ky) * IN + xx + kx] } else { e };
                    }
                }
                let mut dp1 = [0.0; P1 * P1];
                pooled_delta(
                    &t.conv1[c1 * plane1..(c1 + 1) * plane1],
                    &dpre,
                    S1,
                    &t.pool1[c1 * P1 * P1..(c1 + 1) * P1 * P1],
                    &mut dp1,
                );
                let mut dz = [0.0; 2];
                if dp1.iter().all(|&v| v == 0.0) {
                    return dz;
                }
                let mut d2 = [0.0; S2 * S2];
                let mut dpool = [0.0; P2 * P2];
                for o in 0..C2 {
                    for y in 0..S2 {
                        for xx in 0..S2 {
                            let mut acc = 0.0;
                            for ky2 in 0..K {
                                for kx2 in 0..K {
                                    acc += p[w2(o, c1, ky2, kx2)] * dp1[(y + ky2) * P1 + xx + kx2];
                                }
                            }
                            d2[y * S2 + xx] = acc;
                        }
                    }
                    pooled_delta(
                        &t.conv2[o * plane2..(o + 1) * plane2],
                        &d2,
                        S2,
                        &t.pool2[o * P2 * P2..(o + 1) * P2 * P2],
                        &mut dpool,
                    );
                    let dzo = dense_delta(p, o, &dpool);
                    dz[0] += dzo[0];
                    dz[1] += dzo[1];
                }
                dz
            });
        }
    }
    g
}

/// `n` seeded inputs with values uniform in [0, 1).
pub fn random_inputs(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..IN_C * IN * IN).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Two-proportion score statistic written out independently of the crate.
pub fn pooled_z(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (x1, n1, x2, n2) = (x1 as f64, n1 as f64, x2 as f64, n2 as f64);
    let p = (x1 + x2) / (n1 + n2);
    (x1 / n1 - x2 / n2) / (p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)).sqrt()
}

/// Φ(z) by composite Simpson quadrature of the standard normal density
/// from 0 to |z|.
pub fn phi_quadrature(z: f64) -> f64 {
    let a = z.abs();
    let n = 20_000usize;
    let h = a / n as f64;
    let dens = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = dens(0.0) + dens(a);
    for i in 1..n {
        let t = i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * dens(t);
    }
    let half = s * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

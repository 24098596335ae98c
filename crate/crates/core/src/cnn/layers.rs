//! Shape-generic kernels: valid cross-correlation via im2col, 2×2 max-pool,
//! ReLU, and their backward passes. All buffers are channel-major.

/// Unrolls `input[c][h][w]` into `col[(c·k + ki)·k + kj][i·ow + j]` for a valid
/// stride-1 window of side `k`.
pub fn im2col(input: &[f64], channels: usize, h: usize, w: usize, k: usize, col: &mut [f64]) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    debug_assert_eq!(input.len(), channels * h * w);
    debug_assert_eq!(col.len(), channels * k * k * oh * ow);
    let mut row = 0;
    for c in 0..channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let dst = &mut col[row * oh * ow..(row + 1) * oh * ow];
                for i in 0..oh {
                    let src = &plane[(i + ki) * w + kj..(i + ki) * w + kj + ow];
                    dst[i * ow..(i + 1) * ow].copy_from_slice(src);
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates `col` back into `grad_input`.
pub fn col2im(col: &[f64], channels: usize, h: usize, w: usize, k: usize, grad_input: &mut [f64]) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut row = 0;
    for c in 0..channels {
        let plane = &mut grad_input[c * h * w..(c + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let src = &col[row * oh * ow..(row + 1) * oh * ow];
                for i in 0..oh {
                    let dst = &mut plane[(i + ki) * w + kj..(i + ki) * w + kj + ow];
                    for (d, s) in dst.iter_mut().zip(&src[i * ow..(i + 1) * ow]) {
                        *d += s;
                    }
                }
                row += 1;
            }
        }
    }
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dot product with four interleaved accumulators; fixed summation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Valid stride-1 cross-correlation plus bias. `weights` is
/// `[out_c][in_c][k][k]`; `col` is scratch of size `in_c·k²·oh·ow`; `out` is
/// `[out_c][oh][ow]`.
#[allow(clippy::too_many_arguments)]
pub fn conv_forward(
    input: &[f64],
    in_c: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    bias: &[f64],
    out_c: usize,
    k: usize,
    col: &mut [f64],
    out: &mut [f64],
) {
    let positions = (h - k + 1) * (w - k + 1);
    let taps = in_c * k * k;
    im2col(input, in_c, h, w, k, col);
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx") {
        // SAFETY: the CPU supports AVX, checked just above.
        unsafe { conv_kernel_avx(col, weights, bias, out_c, taps, positions, out) };
        return;
    }
    conv_kernel(col, weights, bias, out_c, taps, positions, out);
}

/// Same arithmetic as [`conv_kernel`], compiled with wider vectors. No fused
/// multiply-add is enabled, so results are bit-identical.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn conv_kernel_avx(
    col: &[f64],
    weights: &[f64],
    bias: &[f64],
    out_c: usize,
    taps: usize,
    positions: usize,
    out: &mut [f64],
) {
    conv_kernel(col, weights, bias, out_c, taps, positions, out);
}

/// `out[o][p] = bias[o] + Σ_t weights[o][t]·col[t][p]`, summed in tap order,
/// register-blocked over 4 output channels × 8 positions.
#[inline(always)]
fn conv_kernel(
    col: &[f64],
    weights: &[f64],
    bias: &[f64],
    out_c: usize,
    taps: usize,
    positions: usize,
    out: &mut [f64],
) {
    let blocked_o = out_c / BO * BO;
    let blocked_p = positions / BP * BP;
    let mut packed = vec![0.0; taps * BO];
    for o0 in (0..blocked_o).step_by(BO) {
        for t in 0..taps {
            for i in 0..BO {
                packed[t * BO + i] = weights[(o0 + i) * taps + t];
            }
        }
        for p0 in (0..blocked_p).step_by(BP) {
            let mut acc = [[0.0; BP]; BO];
            for (i, a) in acc.iter_mut().enumerate() {
                *a = [bias[o0 + i]; BP];
            }
            for t in 0..taps {
                let c: &[f64; BP] = col[t * positions + p0..][..BP].try_into().unwrap();
                let wt: &[f64; BO] = packed[t * BO..][..BO].try_into().unwrap();
                for i in 0..BO {
                    for j in 0..BP {
                        acc[i][j] += wt[i] * c[j];
                    }
                }
            }
            for (i, a) in acc.iter().enumerate() {
                out[(o0 + i) * positions + p0..][..BP].copy_from_slice(a);
            }
        }
    }
    // ragged edges: same per-element summation order as the blocked path
    for o in 0..out_c {
        let start = if o < blocked_o { blocked_p } else { 0 };
        if start == positions {
            continue;
        }
        let row = &mut out[o * positions + start..(o + 1) * positions];
        row.fill(bias[o]);
        let wrow = &weights[o * taps..(o + 1) * taps];
        for (t, &wt) in wrow.iter().enumerate() {
            axpy(wt, &col[t * positions + start..(t + 1) * positions], row);
        }
    }
}

const BO: usize = 4;
const BP: usize = 8;

/// Gradients of a convolution given the unrolled input `col` and the output
/// gradient. Weight and bias gradients are accumulated; `grad_col`, when
/// given, is overwritten with the gradient w.r.t. `col`.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward(
    col: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    out_c: usize,
    taps: usize,
    positions: usize,
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
    grad_col: Option<&mut [f64]>,
) {
    for o in 0..out_c {
        let g = &grad_out[o * positions..(o + 1) * positions];
        grad_bias[o] += g.iter().sum::<f64>();
        let gw = &mut grad_weights[o * taps..(o + 1) * taps];
        for (t, gwt) in gw.iter_mut().enumerate() {
            *gwt += dot(g, &col[t * positions..(t + 1) * positions]);
        }
    }
    if let Some(grad_col) = grad_col {
        grad_col.fill(0.0);
        for o in 0..out_c {
            let g = &grad_out[o * positions..(o + 1) * positions];
            let wrow = &weights[o * taps..(o + 1) * taps];
            for (t, &wt) in wrow.iter().enumerate() {
                axpy(wt, g, &mut grad_col[t * positions..(t + 1) * positions]);
            }
        }
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `grad` wherever the activation was not strictly positive.
pub fn relu_backward(activation: &[f64], grad: &mut [f64]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// 2×2 stride-2 max-pool over `[c][h][w]` (even `h`, `w`). `argmax` receives
/// the flat input index of each winner; ties go to the first element in
/// row-major window order.
pub fn maxpool2(input: &[f64], channels: usize, h: usize, w: usize, out: &mut [f64], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for c in 0..channels {
        for i in 0..oh {
            for j in 0..ow {
                let base = c * h * w + 2 * i * w + 2 * j;
                let mut best = base;
                for cand in [base + 1, base + w, base + w + 1] {
                    if input[cand] > input[best] {
                        best = cand;
                    }
                }
                let o = (c * oh + i) * ow + j;
                out[o] = input[best];
                argmax[o] = best;
            }
        }
    }
}

/// Routes pooled gradients back to the recorded winners.
pub fn maxpool2_backward(grad_out: &[f64], argmax: &[usize], grad_input: &mut [f64]) {
    grad_input.fill(0.0);
    for (g, &idx) in grad_out.iter().zip(argmax) {
        grad_input[idx] += g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_is_identity() {
        let input: Vec<f64> = (1..=9).map(f64::from).collect();
        let mut col = vec![0.0; 9];
        let mut out = vec![0.0; 9];
        conv_forward(&input, 1, 3, 3, &[1.0], &[0.0], 1, 1, &mut col, &mut out);
        assert_eq!(out, input);
    }

    #[test]
    fn small_conv_by_hand() {
        // 1x3x3 input, one 2x2 kernel of ones, bias 0.5
        let input: Vec<f64> = (1..=9).map(f64::from).collect();
        let mut col = vec![0.0; 4 * 4];
        let mut out = vec![0.0; 4];
        conv_forward(&input, 1, 3, 3, &[1.0; 4], &[0.5], 1, 2, &mut col, &mut out);
        assert_eq!(out, vec![12.5, 16.5, 24.5, 28.5]);
    }

    #[test]
    fn pool_ties_pick_first() {
        let input = vec![1.0, 1.0, 0.0, 3.0, 1.0, 1.0, 3.0, 0.0];
        let mut out = vec![0.0; 2];
        let mut arg = vec![0; 2];
        maxpool2(&input, 1, 2, 4, &mut out, &mut arg);
        assert_eq!(out, vec![1.0, 3.0]);
        assert_eq!(arg, vec![0, 3]);
        let mut g = vec![9.0; 8];
        maxpool2_backward(&[2.0, 5.0], &arg, &mut g);
        assert_eq!(g, vec![2.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let (c, h, w, k) = (2, 5, 4, 3);
        let x: Vec<f64> = (0..c * h * w).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let n = c * k * k * (h - k + 1) * (w - k + 1);
        let y: Vec<f64> = (0..n).map(|i| ((i * 17 % 7) as f64) - 3.0).collect();
        let mut col = vec![0.0; n];
        im2col(&x, c, h, w, k, &mut col);
        let mut back = vec![0.0; x.len()];
        col2im(&y, c, h, w, k, &mut back);
        let lhs: f64 = col.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn blocked_conv_is_bit_identical_to_direct_sum() {
        // 6 output channels and 5x5 = 25 positions leave ragged blocks
        let (in_c, h, w, k, out_c) = (3, 7, 7, 3, 6);
        let x: Vec<f64> = (0..in_c * h * w).map(|i| ((i * 29 % 13) as f64 - 6.0) / 7.0).collect();
        let taps = in_c * k * k;
        let wts: Vec<f64> = (0..out_c * taps).map(|i| ((i * 11 % 17) as f64 - 8.0) / 9.0).collect();
        let bias: Vec<f64> = (0..out_c).map(|o| o as f64 * 0.1 - 0.2).collect();
        let (oh, ow) = (h - k + 1, w - k + 1);
        let mut col = vec![0.0; taps * oh * ow];
        let mut out = vec![0.0; out_c * oh * ow];
        conv_forward(&x, in_c, h, w, &wts, &bias, out_c, k, &mut col, &mut out);
        let mut portable = vec![0.0; out.len()];
        conv_kernel(&col, &wts, &bias, out_c, taps, oh * ow, &mut portable);
        assert!(portable.iter().zip(&out).all(|(a, b)| a.to_bits() == b.to_bits()));
        for o in 0..out_c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut s = bias[o];
                    for c in 0..in_c {
                        for ki in 0..k {
                            for kj in 0..k {
                                s += wts[o * taps + (c * k + ki) * k + kj] * x[(c * h + i + ki) * w + j + kj];
                            }
                        }
                    }
                    assert_eq!(out[(o * oh + i) * ow + j].to_bits(), s.to_bits());
                }
            }
        }
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..13).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}

//! Numeric primitives over channel-major `[channels * len]` buffers.
//!
//! Both the inference path and the tape call into these functions, so a
//! recorded forward pass is bit-identical to a plain one.

/// 1-D convolution with zero `same` padding and stride 1.
///
/// `x` is `[in_ch * len]`, `w` is `[out_ch * in_ch * k]` (kernel-minor),
/// `b` is `[out_ch]`, `y` is `[out_ch * len]`. `k` must be odd.
pub(crate) fn conv1d_same(
    x: &[f64],
    in_ch: usize,
    len: usize,
    w: &[f64],
    b: &[f64],
    out_ch: usize,
    k: usize,
    y: &mut [f64],
) {
    debug_assert_eq!(k % 2, 1);
    debug_assert_eq!(x.len(), in_ch * len);
    debug_assert_eq!(w.len(), out_ch * in_ch * k);
    debug_assert_eq!(b.len(), out_ch);
    debug_assert_eq!(y.len(), out_ch * len);
    let pad = (k - 1) / 2;
    for o in 0..out_ch {
        let yo = &mut y[o * len..(o + 1) * len];
        yo.fill(b[o]);
        for i in 0..in_ch {
            let xi = &x[i * len..(i + 1) * len];
            let wrow = &w[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (kk, &wv) in wrow.iter().enumerate() {
                // y[t] += wv * x[t + kk - pad], clipped to valid x indices
                if kk >= pad {
                    let shift = kk - pad;
                    if shift >= len {
                        continue;
                    }
                    for (yv, &xv) in yo[..len - shift].iter_mut().zip(&xi[shift..]) {
                        *yv += wv * xv;
                    }
                } else {
                    let shift = pad - kk;
                    if shift >= len {
                        continue;
                    }
                    for (yv, &xv) in yo[shift..].iter_mut().zip(&xi[..len - shift]) {
                        *yv += wv * xv;
                    }
                }
            }
        }
    }
}

/// Accumulates the convolution's input gradient: `gx += W^T * gy`.
pub(crate) fn conv1d_same_grad_input(
    gy: &[f64],
    w: &[f64],
    in_ch: usize,
    out_ch: usize,
    k: usize,
    len: usize,
    gx: &mut [f64],
) {
    let pad = (k - 1) / 2;
    for o in 0..out_ch {
        let gyo = &gy[o * len..(o + 1) * len];
        for i in 0..in_ch {
            let gxi = &mut gx[i * len..(i + 1) * len];
            let wrow = &w[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (kk, &wv) in wrow.iter().enumerate() {
                if kk >= pad {
                    let shift = kk - pad;
                    if shift >= len {
                        continue;
                    }
                    for (gxv, &gyv) in gxi[shift..].iter_mut().zip(&gyo[..len - shift]) {
                        *gxv += wv * gyv;
                    }
                } else {
                    let shift = pad - kk;
                    if shift >= len {
                        continue;
                    }
                    for (gxv, &gyv) in gxi[..len - shift].iter_mut().zip(&gyo[shift..]) {
                        *gxv += wv * gyv;
                    }
                }
            }
        }
    }
}

/// Accumulates the convolution's weight and bias gradients.
pub(crate) fn conv1d_same_grad_params(
    gy: &[f64],
    x: &[f64],
    in_ch: usize,
    out_ch: usize,
    k: usize,
    len: usize,
    gw: &mut [f64],
    gb: &mut [f64],
) {
    let pad = (k - 1) / 2;
    for o in 0..out_ch {
        let gyo = &gy[o * len..(o + 1) * len];
        gb[o] += gyo.iter().sum::<f64>();
        for i in 0..in_ch {
            let xi = &x[i * len..(i + 1) * len];
            let grow = &mut gw[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (kk, gwv) in grow.iter_mut().enumerate() {
                let dot = if kk >= pad {
                    let shift = kk - pad;
                    if shift >= len {
                        continue;
                    }
                    gyo[..len - shift]
                        .iter()
                        .zip(&xi[shift..])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                } else {
                    let shift = pad - kk;
                    if shift >= len {
                        continue;
                    }
                    gyo[shift..]
                        .iter()
                        .zip(&xi[..len - shift])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                };
                *gwv += dot;
            }
        }
    }
}

pub(crate) fn relu(x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv = if xv > 0.0 { xv } else { 0.0 };
    }
}

/// `gx += gy * 1[y > 0]`, with `y` the ReLU output.
pub(crate) fn relu_grad(y: &[f64], gy: &[f64], gx: &mut [f64]) {
    for ((gxv, &gyv), &yv) in gx.iter_mut().zip(gy).zip(y) {
        if yv > 0.0 {
            *gxv += gyv;
        }
    }
}

/// Copies `in_ch` channels into the first channels of `y`, zeroing the rest.
pub(crate) fn pad_channels(x: &[f64], in_ch: usize, out_ch: usize, len: usize, y: &mut [f64]) {
    debug_assert!(out_ch >= in_ch);
    y[..in_ch * len].copy_from_slice(x);
    y[in_ch * len..out_ch * len].fill(0.0);
}

/// Per-channel mean over the time axis: `[ch * len] -> [ch]`.
pub(crate) fn mean_pool(x: &[f64], ch: usize, len: usize, y: &mut [f64]) {
    for (c, yv) in y.iter_mut().enumerate().take(ch) {
        *yv = x[c * len..(c + 1) * len].iter().sum::<f64>() / len as f64;
    }
}

/// Dense layer `y = W x + b`, `w` laid out `[out_dim * in_dim]` row-major.
pub(crate) fn affine(x: &[f64], w: &[f64], b: &[f64], out_dim: usize, in_dim: usize, y: &mut [f64]) {
    for m in 0..out_dim {
        let row = &w[m * in_dim..(m + 1) * in_dim];
        y[m] = b[m] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(z: &[f64], p: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (pv, &zv) in p.iter_mut().zip(z) {
        *pv = (zv - m).exp();
        sum += *pv;
    }
    for pv in p.iter_mut() {
        *pv /= sum;
    }
}

/// log(sum(exp(z))) with the usual max shift.
pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|&zv| (zv - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_same_matches_naive() {
        // 2 in-ch, 3 out-ch, k=3, len=5 against a direct triple loop.
        let in_ch = 2;
        let out_ch = 3;
        let k = 3;
        let len = 5;
        let x: Vec<f64> = (0..in_ch * len).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let w: Vec<f64> = (0..out_ch * in_ch * k).map(|i| ((i * 7 % 11) as f64) * 0.1 - 0.5).collect();
        let b = vec![0.25, -0.5, 0.0];
        let mut y = vec![0.0; out_ch * len];
        conv1d_same(&x, in_ch, len, &w, &b, out_ch, k, &mut y);

        let pad = (k - 1) / 2;
        for o in 0..out_ch {
            for t in 0..len {
                let mut acc = b[o];
                for i in 0..in_ch {
                    for kk in 0..k {
                        let ti = t as isize + kk as isize - pad as isize;
                        if ti >= 0 && (ti as usize) < len {
                            acc += w[(o * in_ch + i) * k + kk] * x[i * len + ti as usize];
                        }
                    }
                }
                assert!((y[o * len + t] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_normalizes() {
        let z = [2.0, 0.0];
        let mut p = [0.0; 2];
        softmax(&z, &mut p);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.880797).abs() < 1e-6);
        assert!((p[1] - 0.119203).abs() < 1e-6);
    }
}

//! Dense kernels over row-major slices, with matching backward passes.
//! Backward functions accumulate into their gradient buffers.

/// `y = x·w + b` for `x: n×din`, `w: din×dout`.
pub(crate) fn linear(x: &[f64], n: usize, w: &[f64], b: &[f64], din: usize, dout: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), n * din);
    debug_assert_eq!(w.len(), din * dout);
    let mut y = Vec::with_capacity(n * dout);
    for i in 0..n {
        y.extend_from_slice(b);
        let yi = &mut y[i * dout..];
        for (k, &xk) in x[i * din..(i + 1) * din].iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let wk = &w[k * dout..(k + 1) * dout];
            for (yv, wv) in yi[..dout].iter_mut().zip(wk) {
                *yv += xk * wv;
            }
        }
    }
    y
}

/// Backward of [`linear`]. `dx` may be `None` when the input needs no
/// gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn linear_backward(
    x: &[f64],
    n: usize,
    w: &[f64],
    din: usize,
    dout: usize,
    dy: &[f64],
    dx: Option<&mut [f64]>,
    dw: &mut [f64],
    db: &mut [f64],
) {
    for i in 0..n {
        let dyi = &dy[i * dout..(i + 1) * dout];
        for (g, v) in db.iter_mut().zip(dyi) {
            *g += v;
        }
        for (k, &xk) in x[i * din..(i + 1) * din].iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let dwk = &mut dw[k * dout..(k + 1) * dout];
            for (g, v) in dwk.iter_mut().zip(dyi) {
                *g += xk * v;
            }
        }
    }
    if let Some(dx) = dx {
        for i in 0..n {
            let dyi = &dy[i * dout..(i + 1) * dout];
            for k in 0..din {
                let wk = &w[k * dout..(k + 1) * dout];
                dx[i * din + k] += dot(wk, dyi);
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) struct LnCache {
    pub xhat: Vec<f64>,
    pub rstd: Vec<f64>,
}

pub(crate) fn layer_norm(x: &[f64], n: usize, d: usize, g: &[f64], b: &[f64], eps: f64) -> (Vec<f64>, LnCache) {
    let mut y = vec![0.0; n * d];
    let mut xhat = vec![0.0; n * d];
    let mut rstd = vec![0.0; n];
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let r = 1.0 / (var + eps).sqrt();
        rstd[i] = r;
        for k in 0..d {
            let h = (row[k] - mean) * r;
            xhat[i * d + k] = h;
            y[i * d + k] = g[k] * h + b[k];
        }
    }
    (y, LnCache { xhat, rstd })
}

pub(crate) fn layer_norm_backward(
    cache: &LnCache,
    n: usize,
    d: usize,
    g: &[f64],
    dy: &[f64],
    dx: &mut [f64],
    dg: &mut [f64],
    db: &mut [f64],
) {
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let xh = &cache.xhat[i * d..(i + 1) * d];
        let dyi = &dy[i * d..(i + 1) * d];
        for k in 0..d {
            dg[k] += dyi[k] * xh[k];
            db[k] += dyi[k];
            dxhat[k] = dyi[k] * g[k];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let r = cache.rstd[i];
        for k in 0..d {
            dx[i * d + k] += r * (dxhat[k] - mean_d - xh[k] * mean_dx);
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// Tanh approximation of GELU.
#[inline]
pub(crate) fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + 0.044715 * u * u * u)).tanh())
}

#[inline]
pub(crate) fn gelu_grad(u: f64) -> f64 {
    let inner = GELU_C * (u + 0.044715 * u * u * u);
    let t = inner.tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * u * u)
}

/// In-place numerically stable softmax.
pub(crate) fn softmax(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// Cross-entropy of one logit row against `gold`; returns the loss and
/// writes `softmax - onehot` into `grad`.
pub(crate) fn cross_entropy_row(logits: &[f64], gold: usize, grad: &mut [f64]) -> f64 {
    grad.copy_from_slice(logits);
    softmax(grad);
    let loss = -grad[gold].max(f64::MIN_POSITIVE).ln();
    grad[gold] -= 1.0;
    loss
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn linear_matches_hand_product() {
        // [1 2] · [[1 0 2],[0 1 1]] + [0.5 0 0]
        let y = linear(&[1.0, 2.0], 1, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0], &[0.5, 0.0, 0.0], 2, 3);
        assert_eq!(y, vec![1.5, 2.0, 4.0]);
    }

    #[test]
    fn layer_norm_gradient() {
        let x = [0.3, -1.2, 2.0, 0.7, 0.1, 0.1, -0.4, 0.9];
        let g = [1.5, 0.5, -1.0, 2.0];
        let b = [0.1, 0.2, 0.3, 0.4];
        let w = [0.7, -0.3, 1.1, 0.2, -0.5, 0.9, 0.4, -1.3];
        let f = |x: &[f64]| dot(&layer_norm(x, 2, 4, &g, &b, 1e-5).0, &w);
        let (_, cache) = layer_norm(&x, 2, 4, &g, &b, 1e-5);
        let mut dx = vec![0.0; 8];
        let (mut dg, mut db) = (vec![0.0; 4], vec![0.0; 4]);
        layer_norm_backward(&cache, 2, 4, &g, &w, &mut dx, &mut dg, &mut db);
        for (a, n) in dx.iter().zip(numeric(f, &x)) {
            assert!((a - n).abs() < 1e-6, "{a} vs {n}");
        }
    }

    #[test]
    fn gelu_values_and_slope() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_191_990_608_276_8).abs() < 1e-12);
        for u in [-2.0, -0.3, 0.0, 0.8, 3.1] {
            let n = (gelu(u + 1e-6) - gelu(u - 1e-6)) / 2e-6;
            assert!((gelu_grad(u) - n).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_cross_entropy() {
        let mut g = vec![0.0; 14];
        let loss = cross_entropy_row(&[0.0; 14], 3, &mut g);
        assert!((loss - 14f64.ln()).abs() < 1e-12);
        assert!((g[3] + 13.0 / 14.0).abs() < 1e-12);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}

//! Dense kernels on row-major `f64` buffers.

pub const NORM_EPS: f64 = 1e-6;

/// `C = A·B + beta·C` where `A` is m×k and `B` is k×n, either optionally
/// stored transposed.
#[allow(clippy::too_many_arguments)]
pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides describe exactly the checked buffer extents.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `Y = X·Wᵀ (+ b)` for X rows×in and W out×in.
pub fn linear(x: &[f64], rows: usize, w: &[f64], out: usize, bias: Option<&[f64]>) -> Vec<f64> {
    let inp = w.len() / out;
    let mut y = vec![0.0; rows * out];
    if let Some(b) = bias {
        for r in y.chunks_exact_mut(out) {
            r.copy_from_slice(b);
        }
    }
    gemm(rows, inp, out, x, false, w, true, if bias.is_some() { 1.0 } else { 0.0 }, &mut y);
    y
}

/// Accumulates the gradients of [`linear`] and returns `dX`.
pub fn linear_backward(
    x: &[f64],
    rows: usize,
    w: &[f64],
    out: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: Option<&mut [f64]>,
) -> Vec<f64> {
    let inp = w.len() / out;
    gemm(out, rows, inp, dy, true, x, false, 1.0, dw);
    if let Some(db) = db {
        for r in dy.chunks_exact(out) {
            for (g, v) in db.iter_mut().zip(r) {
                *g += v;
            }
        }
    }
    let mut dx = vec![0.0; rows * inp];
    gemm(rows, out, inp, dy, false, w, false, 0.0, &mut dx);
    dx
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = W x` for W out×in.
pub fn matvec(w: &[f64], x: &[f64], y: &mut [f64]) {
    let inp = x.len();
    for (o, row) in y.iter_mut().zip(w.chunks_exact(inp)) {
        *o = dot(row, x);
    }
}

/// `y += Wᵀ x` for W out×in.
pub fn matvec_t_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let inp = y.len();
    for (&xo, row) in x.iter().zip(w.chunks_exact(inp)) {
        if xo != 0.0 {
            for (a, &r) in y.iter_mut().zip(row) {
                *a += xo * r;
            }
        }
    }
}

/// `W += a bᵀ`.
pub fn outer_acc(w: &mut [f64], a: &[f64], b: &[f64]) {
    for (&ai, row) in a.iter().zip(w.chunks_exact_mut(b.len())) {
        if ai != 0.0 {
            for (r, &bj) in row.iter_mut().zip(b) {
                *r += ai * bj;
            }
        }
    }
}

/// Root-mean-square normaliser `sqrt(mean(x²) + eps)`.
pub fn rms(x: &[f64]) -> f64 {
    (dot(x, x) / x.len() as f64 + NORM_EPS).sqrt()
}

/// `x / rms(x) (⊙ g)`, returning the rms.
pub fn rmsnorm(x: &[f64], gain: Option<&[f64]>, out: &mut [f64]) -> f64 {
    let r = rms(x);
    match gain {
        Some(g) => {
            for ((o, &v), &gi) in out.iter_mut().zip(x).zip(g) {
                *o = v / r * gi;
            }
        }
        None => {
            for (o, &v) in out.iter_mut().zip(x) {
                *o = v / r;
            }
        }
    }
    r
}

/// Adds `dL/dx` to `dx` given the output gradient of [`rmsnorm`].
pub fn rmsnorm_backward(x: &[f64], r: f64, gain: Option<&[f64]>, dy: &[f64], dx: &mut [f64], dgain: Option<&mut [f64]>) {
    let n = x.len() as f64;
    if let Some(dg) = dgain {
        for ((g, &d), &v) in dg.iter_mut().zip(dy).zip(x) {
            *g += d * v / r;
        }
    }
    let gy: Vec<f64> = match gain {
        Some(g) => dy.iter().zip(g).map(|(a, b)| a * b).collect(),
        None => dy.to_vec(),
    };
    let proj = dot(&gy, x) / (n * r * r * r);
    for ((d, &g), &v) in dx.iter_mut().zip(&gy).zip(x) {
        *d += g / r - v * proj;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// In-place numerically stable softmax.
pub fn softmax_inplace(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in x.iter_mut() {
        *v /= s;
    }
}

/// ALiBi slope of head `h` out of `n_heads`.
pub fn alibi_slope(h: usize, n_heads: usize) -> f64 {
    2f64.powf(-8.0 * (h + 1) as f64 / n_heads as f64)
}

//! Log-determinant of `I + c G` through the smaller Gram matrix and an
//! in-place Hermitian Cholesky factorization.

use num_complex::Complex64;

const JITTER: f64 = 1e-12;

/// Scratch buffers reused across draws.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    a: Vec<Complex64>,
    saved: Vec<Complex64>,
}

impl Workspace {
    /// Zeroed `n x n` scratch matrix.
    pub(crate) fn matrix(&mut self, n: usize) -> &mut [Complex64] {
        self.a.clear();
        self.a.resize(n * n, Complex64::new(0.0, 0.0));
        &mut self.a
    }
}

/// `ln det(I + scale H H^h)` for row-major `h` of shape `n_r x n_t`, using
/// `det(I + scale H^h H)` when `n_t < n_r`.
pub(crate) fn gram_logdet(
    h: &[Complex64],
    n_r: usize,
    n_t: usize,
    scale: f64,
    ws: &mut Workspace,
) -> f64 {
    let n = n_r.min(n_t);
    ws.a.clear();
    ws.a.resize(n * n, Complex64::new(0.0, 0.0));
    if n_t < n_r {
        // A = I + scale H^h H, accumulated row by row of H.
        for r in 0..n_r {
            let row = &h[r * n_t..(r + 1) * n_t];
            accumulate_outer(&mut ws.a, row, scale);
        }
    } else {
        // A = I + scale H H^h: entry (i, j) is scale <row_i, row_j>.
        for i in 0..n_r {
            let ri = &h[i * n_t..(i + 1) * n_t];
            for j in 0..=i {
                let rj = &h[j * n_t..(j + 1) * n_t];
                let dot: Complex64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
                ws.a[i * n + j] = dot * scale;
            }
        }
    }
    for i in 0..n {
        ws.a[i * n + i] += 1.0;
    }
    hermitian_logdet(ws, n)
}

/// `ln det(I + scale L L^h)` for the row-major lower-triangular `l`.
pub(crate) fn lower_gram_logdet(l: &[Complex64], n: usize, scale: f64, ws: &mut Workspace) -> f64 {
    let a = ws.matrix(n);
    for i in 0..n {
        let ri = &l[i * n..i * n + i + 1];
        for j in 0..=i {
            let rj = &l[j * n..j * n + j + 1];
            let dot: Complex64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
            a[i * n + j] = dot * scale;
        }
        a[i * n + i] += 1.0;
    }
    hermitian_logdet(ws, n)
}

/// Adds `scale * conj(v)^T v` to the lower triangle of the `n x n` matrix `a`
/// (`n = v.len()`), i.e. one row of `H^h H`.
#[inline]
pub(crate) fn accumulate_outer(a: &mut [Complex64], v: &[Complex64], scale: f64) {
    let n = v.len();
    for i in 0..n {
        let vi = v[i].conj() * scale;
        for j in 0..=i {
            a[i * n + j] += vi * v[j];
        }
    }
}

/// Log-determinant of the Hermitian positive-definite matrix held (lower
/// triangle) in `ws.a`. The matrix is destroyed. On a non-positive pivot the
/// original is reloaded with `JITTER` added to the diagonal.
pub(crate) fn hermitian_logdet(ws: &mut Workspace, n: usize) -> f64 {
    if n == 1 {
        return ws.a[0].re.ln();
    }
    ws.saved.clear();
    ws.saved.extend_from_slice(&ws.a);
    if let Some(v) = cholesky_logdet(&mut ws.a, n) {
        return v;
    }
    // Measure-zero event for I + PSD.
    let mut jitter = JITTER;
    loop {
        ws.a.copy_from_slice(&ws.saved);
        for i in 0..n {
            ws.a[i * n + i] += jitter;
        }
        if let Some(v) = cholesky_logdet(&mut ws.a, n) {
            return v;
        }
        jitter *= 10.0;
    }
}

/// In-place lower Cholesky; returns `ln det` or `None` on a non-positive pivot.
fn cholesky_logdet(a: &mut [Complex64], n: usize) -> Option<f64> {
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let l = d.sqrt();
        a[j * n + j] = Complex64::new(l, 0.0);
        logdet += d.ln();
        let inv = 1.0 / l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s * inv;
        }
    }
    Some(logdet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_recovers_singular_input() {
        // [[1, 1], [1, 1]] is singular.
        let mut ws = Workspace {
            a: vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            saved: Vec::new(),
        };
        let v = hermitian_logdet(&mut ws, 2);
        assert!(v.is_finite());
        assert!(v < -20.0);
    }

    #[test]
    fn wide_and_tall_agree() {
        // H (2x3) and its conjugate transpose give the same determinant.
        let h = [
            Complex64::new(0.3, -1.2),
            Complex64::new(0.7, 0.1),
            Complex64::new(-0.5, 0.4),
            Complex64::new(1.1, 0.9),
            Complex64::new(-0.2, -0.6),
            Complex64::new(0.8, 0.0),
        ];
        let mut ht = Vec::new();
        for t in 0..3 {
            for r in 0..2 {
                ht.push(h[r * 3 + t].conj());
            }
        }
        let mut ws = Workspace::default();
        let a = gram_logdet(&h, 2, 3, 0.7, &mut ws);
        let b = gram_logdet(&ht, 3, 2, 0.7, &mut ws);
        assert!((a - b).abs() < 1e-13);
    }
}

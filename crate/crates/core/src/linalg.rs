//! Dense symmetric linear algebra: Cholesky factorization and triangular
//! solves, sized for Gram matrices up to a few thousand rows.

use ndarray::{Array1, Array2, ArrayView2};

/// Dot product with four independent accumulators; the split keeps the
/// floating-point dependency chain short enough to vectorize.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let a = &a[..n];
    let b = &b[..n];
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let quads = n / 4;
    for k in 0..quads {
        let i = 4 * k;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s2) + (s1 + s3);
    for i in 4 * quads..n {
        s += a[i] * b[i];
    }
    s
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    l: Vec<f64>, // row-major n * n, strictly upper part left zero
    n: usize,
}

impl Cholesky {
    /// Factors `a = L Lᵀ`. Returns `None` when a pivot is non-positive or
    /// non-finite, i.e. when `a` is not numerically positive definite.
    pub fn factor(a: &ArrayView2<f64>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..i {
                let s = a[[i, j]] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / l[j * n + j];
            }
            let s = a[[i, i]] - dot(&l[i * n..i * n + i], &l[i * n..i * n + i]);
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            l[i * n + i] = s.sqrt();
        }
        Some(Cholesky { l, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Squared ratio of extreme diagonal entries of `L`; a cheap lower bound
    /// on the spectral condition number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let d = self.l[i * n + i];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo) * (hi / lo)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        // forward: L y = b
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &x[..i]);
            x[i] = (x[i] - s) / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Array1::from_vec(x)
    }
}

/// Squared-diagonal-ratio condition estimate of a symmetric matrix, used for
/// diagnostics when factorization fails.
pub fn diag_condition_estimate(a: &ArrayView2<f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..a.nrows() {
        let d = a[[i, i]].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `‖a x − b‖_∞`, the interpolation residual of a candidate solve.
pub fn residual_inf(a: &ArrayView2<f64>, x: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let ax = a.dot(x);
    ax.iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Adds `jitter` to the diagonal of `a`.
pub fn add_jitter(a: &mut Array2<f64>, jitter: f64) {
    for i in 0..a.nrows() {
        a[[i, i]] += jitter;
    }
}

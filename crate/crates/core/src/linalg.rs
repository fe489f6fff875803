//! Small dense kernels: symmetric eigenvalues and complex LU solves.

use num_complex::Complex64;
use rayon::prelude::*;

// Rows per rayon task in the Householder update; below this the
// reduction runs sequentially.
const PAR_ROWS: usize = 256;

/// Eigenvalues of a real symmetric matrix, ascending.
///
/// `a` is row-major `n x n` and is consumed as workspace. The matrix is first
/// reduced to tridiagonal form by Householder reflections, then the
/// tridiagonal eigenvalues are found by implicit QL with Wilkinson shifts.
/// Returns `None` if QL fails to converge (30 sweeps per eigenvalue).
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix is not n x n");
    if n == 0 {
        return Some(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| x.total_cmp(y));
    Some(d)
}

/// Householder reduction, returns the diagonal and the sub-diagonal
/// (`e[k]` couples `k` and `k + 1`; the last entry is zero).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let m = n - k - 1;
        let first = k + 1;
        let x = &a[k * n + first..k * n + n];
        let scale: f64 = x.iter().map(|t| t.abs()).sum();
        if scale == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let v = &mut v[..m];
        for (vi, &xi) in v.iter_mut().zip(x) {
            *vi = xi / scale;
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        e[k] = alpha * scale;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // p = beta * B v on the trailing block B = a[first.., first..]
        let p = &mut p[..m];
        let block_row = |i: usize, a: &[f64]| -> f64 {
            let row = &a[(first + i) * n + first..(first + i) * n + n];
            beta * row.iter().zip(v.iter()).map(|(r, s)| r * s).sum::<f64>()
        };
        if m >= PAR_ROWS {
            let a_ro: &[f64] = a;
            p.par_iter_mut().enumerate().for_each(|(i, pi)| *pi = block_row(i, a_ro));
        } else {
            for (i, pi) in p.iter_mut().enumerate() {
                *pi = block_row(i, a);
            }
        }
        let kdot = 0.5 * beta * p.iter().zip(v.iter()).map(|(s, t)| s * t).sum::<f64>();
        for (pi, &vi) in p.iter_mut().zip(v.iter()) {
            *pi -= kdot * vi;
        }
        let (v, w) = (&*v, &*p);
        // B <- B - v w^T - w v^T
        let update = |i: usize, row: &mut [f64]| {
            let (vi, wi) = (v[i], w[i]);
            for ((r, &vj), &wj) in row.iter_mut().zip(v).zip(w) {
                *r -= vi * wj + wi * vj;
            }
        };
        let tail = &mut a[first * n..];
        if m >= PAR_ROWS {
            tail.par_chunks_mut(n).enumerate().for_each(|(i, row)| update(i, &mut row[first..]));
        } else {
            for (i, row) in tail.chunks_mut(n).enumerate() {
                update(i, &mut row[first..]);
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 2) * n + n - 1];
    }
    d[n - 1] = a[n * n - 1];
    (d, e)
}

/// Implicit QL iteration on a symmetric tridiagonal matrix; eigenvalues are
/// left in `d`, `e` is destroyed.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Option<()> {
    let n = d.len();
    // Absolute floor for deflation, needed where diagonal entries vanish.
    let norm = (0..n).map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 }).fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some(())
}

/// LU factorization with partial pivoting of a complex row-major matrix.
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl ComplexLu {
    /// Factorizes `a` (consumed). Returns `None` if a pivot falls below
    /// `min_pivot` in absolute value.
    pub fn factor(mut a: Vec<Complex64>, n: usize, min_pivot: f64) -> Option<ComplexLu> {
        assert_eq!(a.len(), n * n);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let (piv, best) = (k..n).map(|i| (i, a[i * n + k].norm())).max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
            if !(best >= min_pivot) {
                return None;
            }
            pivots[k] = piv;
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
            }
            let inv = a[k * n + k].inv();
            let (upper, lower) = a.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            for row in lower.chunks_mut(n) {
                let factor = row[k] * inv;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                row[k] = factor;
                for j in k + 1..n {
                    row[j] -= factor * pivot_row[j];
                }
            }
        }
        Some(ComplexLu { n, lu: a, pivots })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}

//! Dense real symmetric eigenvalues: Householder reduction to tridiagonal
//! form followed by implicit-shift QL.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric: |a_ij - a_ji| = {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    #[error("matrix data has length {len}, expected {n}x{n}")]
    Shape { len: usize, n: usize },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != n * n {
            return Err(LinalgError::Shape { len: data.len(), n });
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Sets `a_ij` and `a_ji`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `alpha * self + beta * other`, entrywise.
    pub fn axpby(&self, alpha: f64, other: &SymMatrix, beta: f64) -> SymMatrix {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        SymMatrix { n: self.n, data }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// All eigenvalues in ascending order.
///
/// Rejects matrices whose asymmetry exceeds `1e-12 ||A||_F`.
pub fn eigenvalues_symmetric(a: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let tolerance = 1e-12 * a.frobenius_norm();
    let asymmetry = a.max_asymmetry();
    if asymmetry > tolerance {
        return Err(LinalgError::NotSymmetric { asymmetry, tolerance });
    }
    let (mut d, mut e) = tridiagonalize(a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Householder reduction; returns the diagonal and the subdiagonal
/// (`e[k]` couples `k` and `k + 1`; the last entry is zero).
fn tridiagonalize(a: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n;
    let mut m = a.data.clone();
    // symmetrize so rounding in the input cannot leak into the reduction
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let col = |r: usize| m[(k + 1 + r) * n + k];
        let scale: f64 = (0..len).map(|r| col(r).abs()).sum();
        d[k] = m[k * n + k];
        if scale == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let mut norm2 = 0.0;
        for r in 0..len {
            v[r] = col(r) / scale;
            norm2 += v[r] * v[r];
        }
        let norm = norm2.sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        e[k] = alpha * scale;
        v[0] -= alpha;
        let vnorm = (0..len).map(|r| v[r] * v[r]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v.iter_mut().take(len) {
            *x /= vnorm;
        }
        // w = A22 v, c = v^T A22 v, q = w - c v, A22 -= 2 (v q^T + q v^T)
        let base = (k + 1) * n + (k + 1);
        for r in 0..len {
            let row = &m[base + r * n..base + r * n + len];
            w[r] = row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
        }
        let c: f64 = (0..len).map(|r| v[r] * w[r]).sum();
        for r in 0..len {
            w[r] -= c * v[r];
        }
        for r in 0..len {
            let (vr, wr) = (2.0 * v[r], 2.0 * w[r]);
            let row = &mut m[base + r * n..base + r * n + len];
            for (s, x) in row.iter_mut().enumerate() {
                *x -= vr * w[s] + wr * v[s];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = m[(n - 2) * n + (n - 2)];
        e[n - 2] = m[(n - 1) * n + (n - 2)];
    }
    if n >= 1 {
        d[n - 1] = m[(n - 1) * n + (n - 1)];
    }
    (d, e)
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
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
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_is_sorted() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(eigenvalues_symmetric(&a).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_swap() {
        let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ev = eigenvalues_symmetric(&a).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.5, 0.0]).unwrap();
        assert!(matches!(eigenvalues_symmetric(&a), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(SymMatrix::from_row_major(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn empty_and_scalar() {
        assert!(eigenvalues_symmetric(&SymMatrix::zeros(0)).unwrap().is_empty());
        assert_eq!(eigenvalues_symmetric(&SymMatrix::from_diagonal(&[-4.0])).unwrap(), vec![-4.0]);
    }
}

//! Small dense symmetric matrices and the cyclic Jacobi eigenvalue method.

use crate::error::{domain, Error, Result};

/// Square matrix stored row-major; symmetric by construction where used.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// From rows; fails if not square or not symmetric within `tol`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return domain("matrix is not square");
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if (rows[i][j] - rows[j][i]).abs() > tol * (1.0 + rows[i][j].abs()) {
                    return domain(format!("matrix not symmetric at ({i},{j})"));
                }
                m.a[i * n + j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymMatrix {
            n: self.n,
            a: self.a.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, c: f64) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += c * y;
        }
    }

    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                for j in 0..n {
                    out[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    fn off_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &SymMatrix, offdiag_tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    let n = m.n;
    let mut a = m.clone();
    let scale = a.a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if !scale.is_finite() {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    if scale > 0.0 {
        let mut sweeps = 0;
        while a.off_norm() > offdiag_tol * scale.max(1.0) {
            if sweeps == max_sweeps {
                return Err(Error::Numerical(format!(
                    "Jacobi did not converge in {max_sweeps} sweeps"
                )));
            }
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, p, q);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn rotate(a: &mut SymMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.n;
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.a[k * n + p] = c * akp - s * akq;
        a.a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a.a[p * n + k];
        let aqk = a.a[q * n + k];
        a.a[p * n + k] = c * apk - s * aqk;
        a.a[q * n + k] = s * apk + c * aqk;
    }
    a.a[p * n + q] = 0.0;
    a.a[q * n + p] = 0.0;
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_small() {
        assert_eq!(det(&[vec![2.0, 1.0], vec![1.0, 3.0]]), 5.0);
        assert_eq!(det(&[vec![0.0, 1.0], vec![1.0, 0.0]]), -1.0);
        assert_eq!(det(&[vec![1.0, 2.0], vec![2.0, 4.0]]), 0.0);
    }

    fn eig(rows: &[Vec<f64>]) -> Vec<f64> {
        jacobi_eigenvalues(&SymMatrix::from_rows(rows, 1e-12).unwrap(), 1e-12, 100).unwrap()
    }

    #[test]
    fn swap_matrix() {
        let ev = eig(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_and_spectrum_of_3x3() {
        // eigenvalues 2 - sqrt 2, 2, 2 + sqrt 2
        let ev = eig(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let s2 = 2f64.sqrt();
        for (got, want) in ev.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(eig(&[vec![0.0; 2], vec![0.0; 2]]), vec![0.0, 0.0]);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(SymMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]], 1e-9).is_err());
    }
}

//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson-type shifts).

/// Eigendecomposition of a symmetric tridiagonal matrix, ascending order.
#[derive(Clone, Debug)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    /// Column-major `n x n`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<f64>,
    n: usize,
}

impl TridiagonalEigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// First component of every eigenvector.
    pub fn first_components(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.vectors[k * self.n]).collect()
    }

    /// Last component of every eigenvector.
    pub fn last_components(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.vectors[k * self.n + self.n - 1])
            .collect()
    }
}

/// Diagonalizes the tridiagonal matrix with diagonal `diag` and off-diagonal
/// `off` (`off.len() == diag.len() - 1`).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64]) -> TridiagonalEigen {
    let n = diag.len();
    assert!(
        n == 0 || off.len() + 1 == n,
        "off-diagonal must have length n - 1"
    );
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    // v[k * n + i]: component k of vector i (row-major)
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        h = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * h;
                        v[row + i] = c * v[row + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter >= 100 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[col * n + k] = v[k * n + src];
        }
    }
    TridiagonalEigen { values, vectors, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = off[i];
                m[(i + 1, i)] = off[i];
            }
        }
        m
    }

    #[test]
    fn one_by_one() {
        let eig = symmetric_tridiagonal_eigen(&[2.5], &[]);
        assert_eq!(eig.values, vec![2.5]);
        assert_eq!(eig.first_components(), vec![1.0]);
    }

    #[test]
    fn two_by_two_swap() {
        let eig = symmetric_tridiagonal_eigen(&[0.0, 0.0], &[1.0]);
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
        for t in eig.first_components() {
            assert!((t * t - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_closed_form() {
        let n = 40;
        let eig = symmetric_tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1]);
        for (k, lam) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((lam - exact).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn residual_and_orthogonality(
            diag in prop::collection::vec(-5.0f64..5.0, 1..40),
            seed_off in prop::collection::vec(-3.0f64..3.0, 40),
        ) {
            let n = diag.len();
            let off = &seed_off[..n - 1];
            let eig = symmetric_tridiagonal_eigen(&diag, off);
            let t = dense(&diag, off);
            let norm = t.norm();
            for k in 0..n {
                let z = nalgebra::DVector::from_column_slice(eig.vector(k));
                let r = &t * &z - &z * eig.values[k];
                prop_assert!(r.norm() <= 1e-12 * norm.max(1.0));
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
            let sum_tau: f64 = eig.first_components().iter().map(|x| x * x).sum();
            prop_assert!((sum_tau - 1.0).abs() < 1e-12);
            prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

//! Sparse symmetric matrices and the operator abstraction used by every
//! estimator.
//!
//! Estimators only ever need `y = A x`, so they are written against
//! [`LinearOperator`]. [`SparseSymmetricMatrix`] is the CSR implementation;
//! [`MappedOperator`] composes the affine map onto `[-1, 1]` without
//! materializing a new matrix and [`CountingOperator`] instruments MATVECs.

mod interval;
mod laplacian;
mod market;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;

use crate::error::{DosError, Result};

pub use interval::{
    apply_spectral_map, estimate_spectral_interval, IntervalOptions, LinearSpectralMap,
    MappedOperator, SpectralInterval,
};
pub use laplacian::{generate_modified_laplacian_2d, GaussianBump, LaplacianSpec};
pub use market::{load_matrix_market, read_matrix_market, write_matrix_market};

/// A symmetric linear operator known only through its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Computes `y = A x`. Both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
}

/// Real symmetric matrix in compressed sparse row form with both triangles
/// stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// Whether the source only carried one triangle that was mirrored on load.
    symmetric_storage: bool,
}

impl SparseSymmetricMatrix {
    /// Builds a matrix from coordinate entries. Duplicates are summed.
    ///
    /// With `one_triangle` set, every off-diagonal entry is mirrored. Otherwise
    /// the entries must already describe a symmetric matrix exactly.
    pub fn from_triplets(
        n: usize,
        entries: &[(usize, usize, f64)],
        one_triangle: bool,
    ) -> Result<Self> {
        let mut expanded = Vec::with_capacity(if one_triangle {
            2 * entries.len()
        } else {
            entries.len()
        });
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(DosError::IndexOutOfRange {
                    row: i,
                    col: j,
                    dim: n,
                });
            }
            expanded.push((i, j, v));
            if one_triangle && i != j {
                expanded.push((j, i, v));
            }
        }
        expanded.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(expanded.len());
        let mut values: Vec<f64> = Vec::with_capacity(expanded.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in expanded {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }

        let matrix = SparseSymmetricMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric_storage: one_triangle,
        };
        if !one_triangle {
            matrix.check_symmetric()?;
        }
        Ok(matrix)
    }

    pub fn zeros(n: usize) -> Self {
        SparseSymmetricMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric_storage: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseSymmetricMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
            symmetric_storage: false,
        }
    }

    /// Constant-coefficient tridiagonal matrix `tridiag(off, diag, off)`.
    pub fn tridiagonal(n: usize, diag: f64, off: f64) -> Self {
        let mut entries = Vec::with_capacity(2 * n);
        for i in 0..n {
            entries.push((i, i, diag));
            if i + 1 < n {
                entries.push((i + 1, i, off));
            }
        }
        Self::from_triplets(n, &entries, true).expect("indices are in range")
    }

    /// Keeps entries with `|a_ij| > 0` from a dense symmetric matrix.
    pub fn from_dense(dense: &DMatrix<f64>) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(DosError::DimensionMismatch {
                expected: dense.nrows(),
                got: dense.ncols(),
            });
        }
        let n = dense.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &entries, false)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn symmetric_storage(&self) -> bool {
        self.symmetric_storage
    }

    /// Iterates `(row, col, value)` over all stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n {
            return 0.0;
        }
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            dense[(i, j)] = v;
        }
        dense
    }

    /// Checks exact structural and numerical symmetry.
    pub fn check_symmetric(&self) -> Result<()> {
        for (i, j, v) in self.entries() {
            if i != j && self.get(j, i) != v {
                return Err(DosError::NotSymmetric { row: i, col: j });
            }
        }
        Ok(())
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut radius = 0.0;
            let mut center = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[p] == i {
                    center = self.values[p];
                } else {
                    radius += self.values[p].abs();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.n == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// `y = A x` with a dimension check.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(DosError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }
}

impl LinearOperator for SparseSymmetricMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let start = self.row_ptr[i];
            let end = self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (c, v) in self.col_idx[start..end].iter().zip(&self.values[start..end]) {
                acc += v * x[*c];
            }
            *yi = acc;
        }
    }
}

/// Wraps an operator and counts applications.
pub struct CountingOperator<O> {
    inner: O,
    count: AtomicUsize,
}

impl<O: LinearOperator> CountingOperator<O> {
    pub fn new(inner: O) -> Self {
        CountingOperator {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: LinearOperator> LinearOperator for CountingOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, density: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                if i == j || rng.gen::<f64>() < density {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        m
    }

    #[test]
    fn identity_matvec() {
        let a = SparseSymmetricMatrix::identity(3);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn laplacian_row_sums() {
        let a = SparseSymmetricMatrix::tridiagonal(3, 2.0, -1.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = SparseSymmetricMatrix::identity(3);
        assert!(matches!(
            a.matvec(&[1.0, 2.0]),
            Err(DosError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn matvec_matches_dense_product() {
        let dense = random_symmetric(10, 0.4, 11);
        let sparse = SparseSymmetricMatrix::from_dense(&dense).unwrap();
        let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = sparse.matvec(&x).unwrap();
        let expected = &dense * nalgebra::DVector::from_vec(x);
        for (a, b) in y.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseSymmetricMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 0.5)], true)
            .unwrap();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.5);
        assert_eq!(a.get(1, 0), 0.5);
    }

    #[test]
    fn asymmetric_general_entries_rejected() {
        let err = SparseSymmetricMatrix::from_triplets(2, &[(1, 0, 1.0)], false).unwrap_err();
        assert!(matches!(err, DosError::NotSymmetric { .. }));
    }

    #[test]
    fn out_of_range_rejected() {
        let err = SparseSymmetricMatrix::from_triplets(2, &[(2, 0, 1.0)], true).unwrap_err();
        assert!(matches!(err, DosError::IndexOutOfRange { .. }));
    }

    #[test]
    fn counting_operator_counts() {
        let a = CountingOperator::new(SparseSymmetricMatrix::identity(4));
        let mut y = vec![0.0; 4];
        a.apply(&[1.0; 4], &mut y);
        a.apply(&[1.0; 4], &mut y);
        assert_eq!(a.count(), 2);
    }

    proptest! {
        #[test]
        fn matvec_oracle_small(n in 1usize..50, seed in any::<u64>(), density in 0.05f64..0.6) {
            let dense = random_symmetric(n, density, seed);
            let sparse = SparseSymmetricMatrix::from_dense(&dense).unwrap();
            prop_assert!(sparse.check_symmetric().is_ok());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = sparse.matvec(&x).unwrap();
            let expected = &dense * nalgebra::DVector::from_vec(x);
            for (a, b) in y.iter().zip(expected.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn csr_structure_invariants(n in 1usize..30, seed in any::<u64>()) {
            let dense = random_symmetric(n, 0.3, seed);
            let sparse = SparseSymmetricMatrix::from_dense(&dense).unwrap();
            prop_assert!(sparse.row_ptr().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(sparse.col_idx().iter().all(|&c| c < n));
            for (i, j, v) in sparse.entries() {
                prop_assert_eq!(sparse.get(j, i), v);
            }
        }
    }
}

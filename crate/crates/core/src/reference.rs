//! Dense-eigensolver ground truth for small matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Method, RegularizationKernel, SpectralDensityEstimate};
use crate::error::{DosError, Result};
use crate::matrix::SparseSymmetricMatrix;

pub const DEFAULT_ORACLE_CAP: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<f64>>,
}

impl ExactSpectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        ExactSpectrum {
            eigenvalues,
            eigenvectors: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `(1/n) sum_j kernel(t - lambda_j)`.
    pub fn regularized(&self, kernel: &RegularizationKernel, t: f64) -> f64 {
        let s: f64 = self.eigenvalues.iter().map(|l| kernel.eval(t - l)).sum();
        s / self.dim() as f64
    }
}

/// Full symmetric eigendecomposition, refused above `cap`.
pub fn dense_eigensolve(
    a: &SparseSymmetricMatrix,
    cap: usize,
    keep_vectors: bool,
) -> Result<ExactSpectrum> {
    let n = a.dim();
    if n > cap {
        return Err(DosError::OracleCap { dim: n, cap });
    }
    if n == 0 {
        return Ok(ExactSpectrum::from_eigenvalues(Vec::new()));
    }
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = keep_vectors
        .then(|| DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]));
    Ok(ExactSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// `phi_sigma` (or `phi_eta`) on `grid`, in the eigenvalues' coordinates.
pub fn exact_regularized_dos(
    spectrum: &ExactSpectrum,
    kernel: &RegularizationKernel,
    grid: &[f64],
) -> Result<SpectralDensityEstimate> {
    kernel.validate()?;
    let values = grid
        .par_iter()
        .map(|&t| spectrum.regularized(kernel, t))
        .collect();
    let mut est = SpectralDensityEstimate::new(Method::Exact, grid.to_vec(), values);
    match *kernel {
        RegularizationKernel::Gaussian { sigma } => est.params.sigma = Some(sigma),
        RegularizationKernel::Lorentzian { eta } => est.params.eta = Some(eta),
    }
    Ok(est)
}

/// Number of eigenvalues in `[a, b]`; zero when `a > b`.
pub fn eigenvalue_count(spectrum: &ExactSpectrum, a: f64, b: f64) -> usize {
    if a > b {
        return 0;
    }
    let ev = &spectrum.eigenvalues;
    ev.partition_point(|&x| x <= b) - ev.partition_point(|&x| x < a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` increasing edges.
    pub edges: Vec<f64>,
    /// Count / (n * bin width).
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn integral(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.density)
            .map(|(w, d)| (w[1] - w[0]) * d)
            .sum()
    }
}

/// Equal-width histogram over `[lambda_min, lambda_max]` (padded when the
/// spectrum is a single point). Integrates to one.
pub fn histogram_dos(spectrum: &ExactSpectrum, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 || spectrum.dim() == 0 {
        return Err(DosError::InvalidParameter(
            "histogram needs at least one bin and one eigenvalue".into(),
        ));
    }
    let (mut lo, mut hi) = (spectrum.min(), spectrum.max());
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in &spectrum.eigenvalues {
        let bin = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let n = spectrum.dim() as f64;
    Ok(Histogram {
        edges: (0..=n_bins).map(|i| lo + width * i as f64).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    })
}

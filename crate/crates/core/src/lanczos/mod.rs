//! Lanczos tridiagonalization and the Ritz-value based estimators.
//!
//! An `M`-step run from `v0` yields `T_M`; its eigenvalues `theta_k` and the
//! squared first eigenvector components `tau_k^2` form a Gaussian quadrature
//! rule for the spectral measure `sum_j beta_j^2 delta(t - lambda_j)` seen by
//! `v0 / |v0|`. Pooling these rules over random probes, with weights
//! `|v0|^2 tau_k^2 / n`, approximates the DOS; the estimators differ only in
//! how the pooled rule is smoothed.

mod cdos;
mod haydock;
mod tridiag;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{EstimateParams, Method, RegularizationKernel, SpectralDensityEstimate};
use crate::error::{DosError, Result};
use crate::matrix::{LinearOperator, LinearSpectralMap};
use crate::stochastic::ProbeVectorSource;

pub use cdos::{cdos_refine, cdos_staircase_difference, MonotoneCubic};
pub use haydock::{
    continued_fraction, haydock_dos, ritz_lorentzian, tridiagonal_resolvent, HaydockRoute,
};
pub use tridiag::{symmetric_tridiagonal_eigen, TridiagonalEigen};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reorthogonalization {
    /// Plain three-term recurrence.
    None,
    /// Classical Gram-Schmidt applied twice against the whole basis.
    #[default]
    Full,
    /// Orthogonalize only against Ritz vectors that have converged.
    Selective,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LanczosOptions {
    pub reorth: Reorthogonalization,
    /// Return the Lanczos vectors in the factorization.
    pub keep_basis: bool,
}

/// `A V_M = V_M T_M + f_M e_M^T` with `T_M = tridiag(beta, alpha, beta)`.
#[derive(Clone, Debug)]
pub struct TridiagonalFactorization {
    pub alpha: Vec<f64>,
    /// Off-diagonal, `alpha.len() - 1` entries.
    pub beta: Vec<f64>,
    /// `|f_M|`, the coupling to the next (not computed) Lanczos vector.
    pub beta_next: f64,
    pub basis: Option<Vec<Vec<f64>>>,
    /// `|v0|`; the basis starts from `v0 / |v0|`.
    pub start_norm: f64,
    /// The Krylov space became invariant before the requested step count.
    pub breakdown: bool,
}

impl TridiagonalFactorization {
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn eigen(&self) -> TridiagonalEigen {
        symmetric_tridiagonal_eigen(&self.alpha, &self.beta)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Runs `steps` Lanczos steps on `op` from `v0`.
///
/// A happy breakdown (`beta_{j+1}` negligible against the running estimate of
/// `|T|`) truncates the factorization at step `j`.
pub fn lanczos_factorize<O: LinearOperator + ?Sized>(
    op: &O,
    v0: &[f64],
    steps: usize,
    options: LanczosOptions,
) -> Result<TridiagonalFactorization> {
    let n = op.dim();
    if v0.len() != n {
        return Err(DosError::DimensionMismatch {
            expected: n,
            got: v0.len(),
        });
    }
    if steps == 0 || steps > n {
        return Err(DosError::InvalidParameter(format!(
            "lanczos needs 1 <= steps <= n = {n}, got {steps}"
        )));
    }
    let start_norm = norm(v0);
    if !(start_norm > 0.0) || !start_norm.is_finite() {
        return Err(DosError::Breakdown("starting vector has zero norm".into()));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    basis.push(v0.iter().map(|x| x / start_norm).collect());
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    let mut anorm: f64 = 0.0;
    let mut beta_next = 0.0;
    let mut breakdown = false;

    for j in 0..steps {
        op.apply(&basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        let mut a = dot(&basis[j], &w);
        axpy(-a, &basis[j], &mut w);

        match options.reorth {
            Reorthogonalization::None => {}
            Reorthogonalization::Full => {
                for _ in 0..2 {
                    let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &w)).collect();
                    for (q, c) in basis.iter().zip(&coeffs) {
                        axpy(-c, q, &mut w);
                    }
                    a += coeffs[j];
                }
            }
            Reorthogonalization::Selective => {
                let b = norm(&w);
                let mut diag = alpha.clone();
                diag.push(a);
                let eig = symmetric_tridiagonal_eigen(&diag, &beta);
                let last = eig.last_components();
                let threshold = f64::EPSILON.sqrt() * anorm.max(a.abs());
                for (k, zk) in last.iter().enumerate() {
                    if (b * zk).abs() <= threshold {
                        let z = eig.vector(k);
                        let mut y = vec![0.0; n];
                        for (q, zi) in basis.iter().zip(z) {
                            axpy(*zi, q, &mut y);
                        }
                        let c = dot(&y, &w);
                        axpy(-c, &y, &mut w);
                    }
                }
            }
        }

        if !a.is_finite() {
            return Err(DosError::NonFinite {
                context: "lanczos recurrence",
                step: j,
            });
        }
        alpha.push(a);
        let b = norm(&w);
        anorm = anorm.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));
        beta_next = b;
        if j + 1 == steps {
            break;
        }
        if b <= 1e-12 * anorm {
            breakdown = true;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    Ok(TridiagonalFactorization {
        alpha,
        beta,
        beta_next,
        basis: options.keep_basis.then_some(basis),
        start_norm,
        breakdown,
    })
}

/// Ritz values and weights of one factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RitzQuadrature {
    pub theta: Vec<f64>,
    /// Squared first eigenvector components; they sum to one.
    pub tau_sq: Vec<f64>,
    /// `|v0|^2` of the probe that produced the rule.
    pub probe_norm_sq: f64,
}

pub fn ritz_quadrature(factorization: &TridiagonalFactorization) -> RitzQuadrature {
    let eig = factorization.eigen();
    RitzQuadrature {
        tau_sq: eig.first_components().iter().map(|t| t * t).collect(),
        theta: eig.values,
        probe_norm_sq: factorization.start_norm * factorization.start_norm,
    }
}

/// Union of Ritz rules from several probes with weights normalized by
/// `n * n_vec`, i.e. a discrete approximation of the DOS.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PooledQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PooledQuadrature {
    pub fn pool(rules: &[RitzQuadrature], dim: usize) -> Self {
        let scale = 1.0 / (dim as f64 * rules.len() as f64);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for rule in rules {
            for (theta, tau) in rule.theta.iter().zip(&rule.tau_sq) {
                nodes.push(*theta);
                weights.push(rule.probe_norm_sq * tau * scale);
            }
        }
        PooledQuadrature { nodes, weights }
    }

    pub fn total_weight(&self) -> f64 {
        crate::stochastic::pairwise_sum(&self.weights)
    }

    /// `sum_k w_k f(theta_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .collect();
        crate::stochastic::pairwise_sum(&terms)
    }

    /// Smooths the rule with `kernel` on `grid`.
    pub fn blur(&self, kernel: &RegularizationKernel, grid: &[f64]) -> Vec<f64> {
        grid.par_iter()
            .map(|&t| self.integrate(|theta| kernel.eval(t - theta)))
            .collect()
    }

    /// Nodes expressed in original coordinates.
    pub fn to_original(&self, map: &LinearSpectralMap) -> Self {
        PooledQuadrature {
            nodes: self.nodes.iter().map(|&t| map.to_original(t)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// One Lanczos run per probe.
#[derive(Clone, Debug)]
pub struct ProbeRun {
    pub factorization: TridiagonalFactorization,
    pub quadrature: RitzQuadrature,
}

/// Runs `n_vec` independent Lanczos processes from probes `0..n_vec` of
/// `src`. `steps` is clamped to the operator dimension.
pub fn lanczos_runs<O: LinearOperator + ?Sized>(
    op: &O,
    steps: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
    options: LanczosOptions,
) -> Result<Vec<ProbeRun>> {
    if n_vec == 0 {
        return Err(DosError::InvalidParameter("n_vec must be at least 1".into()));
    }
    let steps = steps.min(op.dim());
    (0..n_vec as u64)
        .into_par_iter()
        .map(|l| {
            let mut v0 = src.draw(l);
            if norm(&v0) == 0.0 {
                // resample once from a disjoint stream
                v0 = src.with_stream(src.stream ^ u64::MAX).draw(l);
            }
            let factorization = lanczos_factorize(op, &v0, steps, options)?;
            let quadrature = ritz_quadrature(&factorization);
            Ok(ProbeRun {
                factorization,
                quadrature,
            })
        })
        .collect()
}

pub fn pooled_quadrature(runs: &[ProbeRun], dim: usize) -> PooledQuadrature {
    let rules: Vec<RitzQuadrature> = runs.iter().map(|r| r.quadrature.clone()).collect();
    PooledQuadrature::pool(&rules, dim)
}

fn total_steps(runs: &[ProbeRun]) -> usize {
    runs.iter().map(|r| r.factorization.steps()).sum()
}

/// Gaussian-blurred Ritz quadrature averaged over probes, on `grid` in the
/// operator's coordinates.
pub fn lanczos_dos<O: LinearOperator + ?Sized>(
    op: &O,
    steps: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
    sigma: f64,
    grid: &[f64],
    options: LanczosOptions,
) -> Result<SpectralDensityEstimate> {
    let kernel = RegularizationKernel::Gaussian { sigma };
    kernel.validate()?;
    let runs = lanczos_runs(op, steps, src, n_vec, options)?;
    let pooled = pooled_quadrature(&runs, op.dim());
    let values = pooled.blur(&kernel, grid);
    Ok(
        SpectralDensityEstimate::new(Method::Lanczos, grid.to_vec(), values).with_params(
            EstimateParams {
                degree: Some(steps),
                n_vec: Some(n_vec),
                sigma: Some(sigma),
                matvecs: total_steps(&runs),
                ..Default::default()
            },
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseSymmetricMatrix;
    use crate::stochastic::ProbeDistribution;
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn dense_t(f: &TridiagonalFactorization) -> DMatrix<f64> {
        let m = f.steps();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = f.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = f.beta[i];
                t[(i + 1, i)] = f.beta[i];
            }
        }
        t
    }

    #[test]
    fn full_steps_recover_diagonal() {
        let a = SparseSymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let v0 = vec![1.0 / 3f64.sqrt(); 3];
        let f = lanczos_factorize(&a, &v0, 3, LanczosOptions::default()).unwrap();
        let eig = f.eigen();
        for (got, want) in eig.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvector_start_breaks_down() {
        let a = SparseSymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let f = lanczos_factorize(&a, &[0.0, 5.0, 0.0], 3, LanczosOptions::default()).unwrap();
        assert!(f.breakdown);
        assert_eq!(f.alpha, vec![2.0]);
        let q = ritz_quadrature(&f);
        assert_eq!(q.tau_sq, vec![1.0]);
    }

    #[test]
    fn zero_start_is_an_error() {
        let a = SparseSymmetricMatrix::identity(3);
        assert!(matches!(
            lanczos_factorize(&a, &[0.0; 3], 2, LanczosOptions::default()),
            Err(DosError::Breakdown(_))
        ));
        assert!(lanczos_factorize(&a, &[1.0; 3], 4, LanczosOptions::default()).is_err());
    }

    #[test]
    fn factorization_identity_and_orthogonality() {
        let dense = random_symmetric(30, 3);
        let v0: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        for reorth in [Reorthogonalization::Full, Reorthogonalization::Selective] {
            let options = LanczosOptions {
                reorth,
                keep_basis: true,
            };
            let f = lanczos_factorize(&dense, &v0, 12, options).unwrap();
            let basis = f.basis.as_ref().unwrap();
            let m = f.steps();
            let v = DMatrix::from_fn(30, m, |i, j| basis[j][i]);
            let vtv = v.transpose() * &v;
            assert!((vtv - DMatrix::identity(m, m)).amax() <= 1e-8);
            // A V - V T has only its last column populated, with norm beta_next
            let r = &dense * &v - &v * dense_t(&f);
            for j in 0..m - 1 {
                assert!(r.column(j).norm() <= 1e-8 * dense.norm());
            }
            assert!((r.column(m - 1).norm() - f.beta_next).abs() <= 1e-8 * dense.norm());
        }
    }

    #[test]
    fn ritz_values_match_dense_oracle_at_full_steps() {
        let dense = random_symmetric(30, 8);
        let exact = SymmetricEigen::new(dense.clone());
        let mut ev: Vec<f64> = exact.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let v0 = ProbeVectorSource::gaussian(1, 30).draw(0);
        let f = lanczos_factorize(&dense, &v0, 30, LanczosOptions::default()).unwrap();
        let q = ritz_quadrature(&f);
        for (a, b) in q.theta.iter().zip(&ev) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn quadrature_base_cases() {
        let single = TridiagonalFactorization {
            alpha: vec![0.7],
            beta: vec![],
            beta_next: 0.0,
            basis: None,
            start_norm: 1.0,
            breakdown: false,
        };
        let q = ritz_quadrature(&single);
        assert_eq!(q.theta, vec![0.7]);
        assert_eq!(q.tau_sq, vec![1.0]);

        let swap = TridiagonalFactorization {
            alpha: vec![0.0, 0.0],
            beta: vec![1.0],
            ..single
        };
        let q = ritz_quadrature(&swap);
        assert!((q.theta[0] + 1.0).abs() < 1e-15 && (q.theta[1] - 1.0).abs() < 1e-15);
        assert!(q.tau_sq.iter().all(|t| (t - 0.5).abs() < 1e-15));
    }

    #[test]
    fn weights_sum_to_one() {
        let dense = random_symmetric(25, 4);
        let src = ProbeVectorSource::gaussian(2, 25);
        let runs = lanczos_runs(&dense, 10, &src, 5, LanczosOptions::default()).unwrap();
        for run in &runs {
            let s: f64 = run.quadrature.tau_sq.iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn moment_matching_degree_two_m_minus_one() {
        let n = 20;
        let m = 5;
        let dense = random_symmetric(n, 21);
        let eig = SymmetricEigen::new(dense.clone());
        let v0 = ProbeVectorSource::gaussian(5, n).draw(0);
        let v = DVector::from_vec(v0.clone());
        let unit = &v / v.norm();
        let betas_sq: Vec<f64> = (0..n)
            .map(|j| eig.eigenvectors.column(j).dot(&unit).powi(2))
            .collect();
        let f = lanczos_factorize(&dense, &v0, m, LanczosOptions::default()).unwrap();
        let q = ritz_quadrature(&f);
        for p in 0..(2 * m) as i32 {
            let exact: f64 = (0..n)
                .map(|j| betas_sq[j] * eig.eigenvalues[j].powi(p))
                .sum();
            let approx: f64 = q
                .theta
                .iter()
                .zip(&q.tau_sq)
                .map(|(t, w)| w * t.powi(p))
                .sum();
            assert!((exact - approx).abs() <= 1e-9 * exact.abs().max(1e-3), "q = {p}");
        }
    }

    #[test]
    fn single_eigenvalue_matrix_blurs_to_gaussian() {
        let a = SparseSymmetricMatrix::from_diagonal(&[0.3]);
        let src = ProbeVectorSource::new(ProbeDistribution::Canonical, 0, 1);
        let grid = crate::density::uniform_grid(-1.0, 1.0, 41);
        let est = lanczos_dos(&a, 1, &src, 3, 0.2, &grid, LanczosOptions::default()).unwrap();
        for (t, v) in grid.iter().zip(&est.values) {
            assert!((v - crate::density::gaussian(t - 0.3, 0.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn lanczos_dos_is_nonnegative() {
        let dense = random_symmetric(40, 6);
        let src = ProbeVectorSource::gaussian(3, 40);
        let grid = crate::density::uniform_grid(-8.0, 8.0, 200);
        let est = lanczos_dos(&dense, 8, &src, 4, 0.1, &grid, LanczosOptions::default()).unwrap();
        assert!(est.min_value() >= 0.0);
        assert_eq!(est.params.matvecs, 32);
    }
}

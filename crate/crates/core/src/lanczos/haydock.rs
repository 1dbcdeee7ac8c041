//! Lorentzian-regularized DOS from the (1,1) resolvent entry of `T_M`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lanczos_runs, LanczosOptions, RitzQuadrature, TridiagonalFactorization};
use crate::density::{EstimateParams, Method, RegularizationKernel, SpectralDensityEstimate};
use crate::error::{DosError, Result};
use crate::matrix::LinearOperator;
use crate::stochastic::ProbeVectorSource;

/// How `e_1^T (z I - T)^{-1} e_1` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaydockRoute {
    /// Bottom-up continued fraction.
    #[default]
    ContinuedFraction,
    /// Direct solve of the shifted tridiagonal system.
    Resolvent,
    /// Lorentzian blur of the Ritz quadrature.
    RitzSum,
}

/// `e_1^T (z I - T)^{-1} e_1` for `T = tridiag(beta, alpha, beta)`.
pub fn continued_fraction(alpha: &[f64], beta: &[f64], z: Complex64) -> Complex64 {
    let m = alpha.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..m).rev() {
        let tail = if j + 1 < m {
            beta[j] * beta[j] * acc
        } else {
            Complex64::new(0.0, 0.0)
        };
        acc = 1.0 / (z - alpha[j] - tail);
    }
    acc
}

/// Solves `(z I - T) w = e_1` by forward elimination and returns
/// `(w_1, w_M)`.
pub fn tridiagonal_resolvent(alpha: &[f64], beta: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let m = alpha.len();
    // Thomas algorithm on diag z - alpha, off-diagonals -beta
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    let mut denom = z - alpha[0];
    if m > 1 {
        c[0] = Complex64::new(-beta[0], 0.0) / denom;
    }
    d[0] = 1.0 / denom;
    for i in 1..m {
        denom = (z - alpha[i]) + beta[i - 1] * c[i - 1];
        if i + 1 < m {
            c[i] = Complex64::new(-beta[i], 0.0) / denom;
        }
        d[i] = (beta[i - 1] * d[i - 1]) / denom;
    }
    let mut w = d;
    for i in (0..m.saturating_sub(1)).rev() {
        w[i] = w[i] - c[i] * w[i + 1];
    }
    (w[0], w[m - 1])
}

/// `sum_k tau_k^2 eta / (pi ((t - theta_k)^2 + eta^2))`.
pub fn ritz_lorentzian(q: &RitzQuadrature, t: f64, eta: f64) -> f64 {
    let kernel = RegularizationKernel::Lorentzian { eta };
    q.theta
        .iter()
        .zip(&q.tau_sq)
        .map(|(theta, w)| w * kernel.eval(t - theta))
        .sum()
}

fn probe_value(
    f: &TridiagonalFactorization,
    q: &RitzQuadrature,
    t: f64,
    eta: f64,
    route: HaydockRoute,
) -> (f64, f64) {
    let z = Complex64::new(t, eta);
    let (first, last) = tridiagonal_resolvent(&f.alpha, &f.beta, z);
    let diag = f.beta_next * last.norm();
    let value = match route {
        HaydockRoute::ContinuedFraction => -continued_fraction(&f.alpha, &f.beta, z).im / PI,
        HaydockRoute::Resolvent => -first.im / PI,
        HaydockRoute::RitzSum => ritz_lorentzian(q, t, eta),
    };
    (value, diag)
}

/// Haydock estimate on `grid` (operator coordinates), pooled over probes
/// with weights `|v_l|^2 / (n n_vec)`.
///
/// `params.truncation_diagnostic` holds the largest
/// `beta_{M+1} |e_M^T (z I - T)^{-1} e_1|` seen, an indicator of how much the
/// neglected remainder of the continued fraction could matter.
#[allow(clippy::too_many_arguments)]
pub fn haydock_dos<O: LinearOperator + ?Sized>(
    op: &O,
    steps: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
    eta: f64,
    grid: &[f64],
    options: LanczosOptions,
    route: HaydockRoute,
) -> Result<SpectralDensityEstimate> {
    if !(eta > 0.0) {
        return Err(DosError::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let runs = lanczos_runs(op, steps, src, n_vec, options)?;
    let scale = 1.0 / (op.dim() as f64 * n_vec as f64);
    let per_point: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| {
            let mut terms = Vec::with_capacity(runs.len());
            let mut diag: f64 = 0.0;
            for run in &runs {
                let (v, d) = probe_value(&run.factorization, &run.quadrature, t, eta, route);
                terms.push(run.quadrature.probe_norm_sq * scale * v);
                diag = diag.max(d);
            }
            (crate::stochastic::pairwise_sum(&terms).max(0.0), diag)
        })
        .collect();
    let values = per_point.iter().map(|p| p.0).collect();
    let diagnostic = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(
        SpectralDensityEstimate::new(Method::Haydock, grid.to_vec(), values).with_params(
            EstimateParams {
                degree: Some(steps),
                n_vec: Some(n_vec),
                eta: Some(eta),
                matvecs: runs.iter().map(|r| r.factorization.steps()).sum(),
                truncation_diagnostic: Some(diagnostic),
                ..Default::default()
            },
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::{lanczos_factorize, ritz_quadrature};
    use nalgebra::DMatrix;

    #[test]
    fn one_by_one_is_lorentzian() {
        let z = Complex64::new(0.3, 0.1);
        let v = -continued_fraction(&[0.5], &[], z).im / PI;
        let expect = 0.1 / PI / ((0.3f64 - 0.5).powi(2) + 0.01);
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_real_point() {
        let z = Complex64::new(2.0, 0.0);
        let cf = continued_fraction(&[0.0, 0.0], &[1.0], z);
        assert!((cf.re - 2.0 / 3.0).abs() < 1e-15 && cf.im == 0.0);
        let (first, last) = tridiagonal_resolvent(&[0.0, 0.0], &[1.0], z);
        assert!((first.re - 2.0 / 3.0).abs() < 1e-15);
        assert!((last.re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn three_routes_agree() {
        let n = 40;
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            ((a * 1.3 + b * 0.7).sin()) / (n as f64).sqrt()
        });
        let v0 = ProbeVectorSource::gaussian(9, n).draw(0);
        let f = lanczos_factorize(&dense, &v0, 25, LanczosOptions::default()).unwrap();
        let q = ritz_quadrature(&f);
        for i in 0..200 {
            let t = -3.0 + 6.0 * i as f64 / 199.0;
            let eta = 0.05;
            let a = probe_value(&f, &q, t, eta, HaydockRoute::ContinuedFraction).0;
            let b = probe_value(&f, &q, t, eta, HaydockRoute::Resolvent).0;
            let c = probe_value(&f, &q, t, eta, HaydockRoute::RitzSum).0;
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "t = {t}");
            assert!((a - c).abs() <= 1e-10 * a.abs().max(1.0), "t = {t}");
        }
    }

    #[test]
    fn rejects_nonpositive_eta() {
        let a = crate::matrix::SparseSymmetricMatrix::identity(2);
        let src = ProbeVectorSource::gaussian(0, 2);
        assert!(haydock_dos(&a, 2, &src, 1, 0.0, &[0.0], LanczosOptions::default(), HaydockRoute::default()).is_err());
    }
}

//! Delta-Gauss-Legendre: Gaussian-regularized delta probes expanded in
//! Legendre polynomials, one shared moment sequence for all probe points.
//!
//! `gamma_k(t) = int_{-1}^{1} L_k(s) exp(-((s - t) / sigma)^2 / 2) ds` is
//! generated by a three-term recurrence that integrates by parts against the
//! Gaussian; it stays accurate while the coefficients decay and is cut off
//! once two consecutive values are negligible.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{check_mapped_points, EstimateParams, Method, SpectralDensityEstimate};
use crate::error::{DosError, Result};
use crate::kpm::{Basis, MomentSequence};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DglCoefficients {
    pub gamma: Vec<f64>,
    pub psi: Vec<f64>,
    /// Highest degree kept, `gamma.len() - 1`.
    pub effective_degree: usize,
    pub center: f64,
    pub sigma: f64,
}

/// `exp(-((1 - t)/sigma)^2 / 2) - (-1)^k exp(-((1 + t)/sigma)^2 / 2)`.
fn boundary_term(k: usize, upper: f64, lower: f64) -> f64 {
    if k % 2 == 0 {
        upper - lower
    } else {
        upper + lower
    }
}

/// Coefficients for the probe centered at `t`, up to `max_degree`, stopping
/// at the first `k` with `|gamma_{k-1}| + |gamma_k| <= k * tol`.
pub fn compute_dgl_coefficients(
    t: f64,
    sigma: f64,
    max_degree: usize,
    tol: f64,
) -> Result<DglCoefficients> {
    if !(sigma > 0.0) {
        return Err(DosError::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(tol > 0.0) {
        return Err(DosError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let s2 = sigma * sigma;
    let root2s = std::f64::consts::SQRT_2 * sigma;
    let gamma0 = sigma * (PI / 2.0).sqrt() * (libm::erf((1.0 - t) / root2s) + libm::erf((1.0 + t) / root2s));
    let upper = (-0.5 * ((1.0 - t) / sigma).powi(2)).exp();
    let lower = (-0.5 * ((1.0 + t) / sigma).powi(2)).exp();

    let mut gamma = vec![gamma0];
    let mut psi = vec![0.0];
    if max_degree >= 1 {
        gamma.push(t * gamma0 - s2 * boundary_term(0, upper, lower));
        psi.push(gamma0);
    }
    let mut k = 1;
    while k < max_degree {
        if gamma[k - 1].abs() + gamma[k].abs() <= k as f64 * tol {
            break;
        }
        let kf = k as f64;
        let next = (2.0 * kf + 1.0) / (kf + 1.0)
            * (s2 * (psi[k] - boundary_term(k, upper, lower)) + t * gamma[k])
            - kf / (kf + 1.0) * gamma[k - 1];
        if !next.is_finite() {
            return Err(DosError::NonFinite {
                context: "gauss-legendre coefficient recurrence",
                step: k + 1,
            });
        }
        psi.push((2.0 * kf + 1.0) * gamma[k] + psi[k - 1]);
        gamma.push(next);
        k += 1;
    }
    Ok(DglCoefficients {
        effective_degree: gamma.len() - 1,
        gamma,
        psi,
        center: t,
        sigma,
    })
}

/// `phi(t_i) = (1/n) (2 pi sigma^2)^{-1/2} sum_{k <= M_i} (k + 1/2) gamma_k(t_i) zeta_k`.
pub fn evaluate_dgl_dos(
    m: &MomentSequence,
    grid: &[f64],
    sigma: f64,
    tol: f64,
) -> Result<SpectralDensityEstimate> {
    if m.basis != Basis::Legendre {
        return Err(DosError::InvalidParameter(
            "Gauss-Legendre expansion needs Legendre moments".into(),
        ));
    }
    check_mapped_points(grid)?;
    let norm = 1.0 / (m.n as f64 * (2.0 * PI).sqrt() * sigma);
    let per_point: Vec<(f64, usize)> = grid
        .par_iter()
        .map(|&t| {
            let c = compute_dgl_coefficients(t, sigma, m.degree, tol)?;
            let sum: f64 = c
                .gamma
                .iter()
                .zip(&m.zeta)
                .enumerate()
                .map(|(k, (g, z))| (k as f64 + 0.5) * g * z)
                .sum();
            Ok((norm * sum, c.effective_degree))
        })
        .collect::<Result<_>>()?;
    let values = per_point.iter().map(|p| p.0).collect();
    let degrees = per_point.iter().map(|p| p.1).collect();
    Ok(
        SpectralDensityEstimate::new(Method::Dgl, grid.to_vec(), values).with_params(
            EstimateParams {
                degree: Some(m.degree),
                n_vec: Some(m.n_vec),
                sigma: Some(sigma),
                matvecs: m.matvecs,
                point_degrees: Some(degrees),
                ..Default::default()
            },
        ),
    )
}

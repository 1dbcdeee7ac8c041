//! Accuracy metrics: Gaussian-tested sup error, pointwise Lp distances and
//! the heat-capacity functional.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{
    gaussian, interpolate_linear, trapezoid_weights, uniform_grid, RegularizationKernel,
    SpectralDensityEstimate,
};
use crate::error::{DosError, Result};
use crate::lanczos::PooledQuadrature;
use crate::matrix::SpectralInterval;
use crate::reference::ExactSpectrum;

pub const DEFAULT_CENTERS: usize = 1000;
/// Minimum grid points per `sigma` for the test-function quadrature.
pub const POINTS_PER_SIGMA: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// `sup_c |<phi, g_c> - <phi~, g_c>|` over Gaussian test functions.
    SupGaussian,
    /// `max_c |phi_sigma(c) - phi~(c)|` for estimates that are already
    /// regularized.
    SupRegularized,
    Lp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpNorm {
    L1,
    L2,
    Inf,
}

impl FromStr for LpNorm {
    type Err = DosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(LpNorm::L1),
            "2" | "l2" => Ok(LpNorm::L2),
            "inf" | "linf" | "max" => Ok(LpNorm::Inf),
            other => Err(DosError::InvalidParameter(format!("unknown norm '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub metric: MetricKind,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<LpNorm>,
    /// Number of test-function centers, where applicable.
    pub centers: usize,
    /// Largest spacing of the approximation grid.
    pub grid_spacing: f64,
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} = {:.6e}", self.metric, self.value)
    }
}

fn max_spacing(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn original(approx: &SpectralDensityEstimate) -> SpectralDensityEstimate {
    if approx.map.is_some() {
        approx.to_original()
    } else {
        approx.clone()
    }
}

fn check_sigma(sigma: f64, centers: usize) -> Result<()> {
    RegularizationKernel::Gaussian { sigma }.validate()?;
    if centers == 0 {
        return Err(DosError::InvalidParameter("need at least one center".into()));
    }
    Ok(())
}

/// `sup |<phi, g_sigma(. - c)> - <phi~, g_sigma(. - c)>|` over `centers`
/// uniform centers in `interval`. The exact pairing is the closed form
/// `(1/n) sum_j g_sigma(lambda_j - c)`; the approximate one is trapezoidal
/// quadrature on the estimate's grid, which must resolve `sigma`.
pub fn error_sup_gaussian(
    exact: &ExactSpectrum,
    approx: &SpectralDensityEstimate,
    sigma: f64,
    centers: usize,
    interval: &SpectralInterval,
) -> Result<ErrorReport> {
    check_sigma(sigma, centers)?;
    let approx = original(approx);
    let spacing = max_spacing(&approx.grid);
    if approx.len() < 2 || spacing > sigma / POINTS_PER_SIGMA {
        return Err(DosError::GridTooCoarse { spacing, sigma });
    }
    let weights: Vec<f64> = trapezoid_weights(&approx.grid)
        .iter()
        .zip(&approx.values)
        .map(|(w, v)| w * v)
        .collect();
    let kernel = RegularizationKernel::Gaussian { sigma };
    let value = uniform_grid(interval.lower, interval.upper, centers)
        .par_iter()
        .map(|&c| {
            let paired: f64 = approx
                .grid
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * gaussian(x - c, sigma))
                .sum();
            (exact.regularized(&kernel, c) - paired).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(ErrorReport {
        metric: MetricKind::SupGaussian,
        value,
        sigma: Some(sigma),
        norm: None,
        centers,
        grid_spacing: spacing,
    })
}

/// `max_c |phi_kernel(c) - phi~(c)|` over the same centers, `phi~` linearly
/// interpolated.
pub fn error_sup_regularized(
    exact: &ExactSpectrum,
    approx: &SpectralDensityEstimate,
    kernel: &RegularizationKernel,
    centers: usize,
    interval: &SpectralInterval,
) -> Result<ErrorReport> {
    kernel.validate()?;
    check_sigma(kernel.width(), centers)?;
    let approx = original(approx);
    let value = uniform_grid(interval.lower, interval.upper, centers)
        .par_iter()
        .map(|&c| (exact.regularized(kernel, c) - approx.interpolate(c)).abs())
        .reduce(|| 0.0, f64::max);
    Ok(ErrorReport {
        metric: MetricKind::SupRegularized,
        value,
        sigma: Some(kernel.width()),
        norm: None,
        centers,
        grid_spacing: max_spacing(&approx.grid),
    })
}

/// Discrete Lp distance on the reference grid; `approx` is linearly
/// interpolated onto it when the grids differ.
pub fn error_lp(
    reference: &SpectralDensityEstimate,
    approx: &SpectralDensityEstimate,
    norm: LpNorm,
) -> Result<ErrorReport> {
    let reference = original(reference);
    let approx = original(approx);
    if reference.is_empty() || approx.is_empty() {
        return Err(DosError::InvalidParameter("empty estimate".into()));
    }
    let (r0, r1) = (reference.grid[0], reference.grid[reference.len() - 1]);
    let (a0, a1) = (approx.grid[0], approx.grid[approx.len() - 1]);
    if a1 < r0 || r1 < a0 {
        return Err(DosError::InvalidParameter(
            "estimates are defined on non-overlapping grids".into(),
        ));
    }
    let diff: Vec<f64> = if reference.grid == approx.grid {
        reference
            .values
            .iter()
            .zip(&approx.values)
            .map(|(a, b)| (a - b).abs())
            .collect()
    } else {
        reference
            .grid
            .iter()
            .zip(&reference.values)
            .map(|(&x, r)| (r - interpolate_linear(&approx.grid, &approx.values, x)).abs())
            .collect()
    };
    let w = trapezoid_weights(&reference.grid);
    let value = match norm {
        LpNorm::Inf => diff.iter().cloned().fold(0.0, f64::max),
        LpNorm::L1 => diff.iter().zip(&w).map(|(d, w)| d * w).sum(),
        LpNorm::L2 => diff.iter().zip(&w).map(|(d, w)| d * d * w).sum::<f64>().sqrt(),
    };
    Ok(ErrorReport {
        metric: MetricKind::Lp,
        value,
        sigma: None,
        norm: Some(norm),
        centers: 0,
        grid_spacing: max_spacing(&reference.grid),
    })
}

/// Physical constants entering `x = hbar c omega / (k_B T)`; all one by
/// default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub boltzmann: f64,
    pub hbar: f64,
    pub light_speed: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            boltzmann: 1.0,
            hbar: 1.0,
            light_speed: 1.0,
        }
    }
}

/// Eigenvalues below this magnitude are clamped to zero; more negative ones
/// are rejected.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;

/// `g(omega) = k_B x^2 e^{-x} / (1 - e^{-x})^2` with `x = hbar c omega / (k_B T)`.
pub fn heat_kernel(omega: f64, temperature: f64, c: &PhysicalConstants) -> f64 {
    let x = c.hbar * c.light_speed * omega / (c.boltzmann * temperature);
    let half = 0.5 * x;
    if half.abs() < 1e-8 {
        return c.boltzmann;
    }
    // x^2 e^{-x} / (1 - e^{-x})^2 = (x/2)^2 / sinh^2(x/2)
    c.boltzmann * (half / half.sinh()).powi(2)
}

fn check_temperatures(temperatures: &[f64]) -> Result<()> {
    match temperatures.iter().find(|t| !(**t > 0.0)) {
        Some(t) => Err(DosError::InvalidParameter(format!(
            "temperatures must be positive, got {t}"
        ))),
        None => Ok(()),
    }
}

fn normalize(mut cv: Vec<f64>) -> Vec<f64> {
    let max = cv.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut cv {
            *v /= max;
        }
    }
    cv
}

fn frequency(lambda: f64) -> f64 {
    lambda.max(0.0).sqrt()
}

/// Normalized `C_v(T) = (1/n) sum_j g(sqrt(lambda_j))`.
pub fn heat_capacity_exact(
    spectrum: &ExactSpectrum,
    temperatures: &[f64],
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    check_temperatures(temperatures)?;
    if let Some(&l) = spectrum.eigenvalues.iter().find(|&&l| l < -NEGATIVE_TOLERANCE) {
        return Err(DosError::NegativeEigenvalue(l));
    }
    let n = spectrum.dim() as f64;
    Ok(normalize(
        temperatures
            .par_iter()
            .map(|&t| {
                spectrum
                    .eigenvalues
                    .iter()
                    .map(|&l| heat_kernel(frequency(l), t, constants))
                    .sum::<f64>()
                    / n
            })
            .collect(),
    ))
}

/// Normalized `C_v(T) = sum_i w_i g(sqrt(lambda_i)) phi~(lambda_i)` for a
/// density known at nodes `lambda` with quadrature weights `weights`.
/// Density at negative nodes is attributed to zero frequency.
pub fn heat_capacity_weighted(
    lambda: &[f64],
    weights: &[f64],
    density: &[f64],
    temperatures: &[f64],
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    check_temperatures(temperatures)?;
    if lambda.len() != weights.len() || lambda.len() != density.len() {
        return Err(DosError::DimensionMismatch {
            expected: lambda.len(),
            got: weights.len().min(density.len()),
        });
    }
    Ok(normalize(
        temperatures
            .par_iter()
            .map(|&t| {
                lambda
                    .iter()
                    .zip(weights)
                    .zip(density)
                    .map(|((&l, w), d)| w * d * heat_kernel(frequency(l), t, constants))
                    .sum()
            })
            .collect(),
    ))
}

/// Trapezoidal heat capacity of an estimate.
pub fn heat_capacity_density(
    approx: &SpectralDensityEstimate,
    temperatures: &[f64],
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let approx = original(approx);
    let w = trapezoid_weights(&approx.grid);
    heat_capacity_weighted(&approx.grid, &w, &approx.values, temperatures, constants)
}

/// Heat capacity from a pooled Ritz rule in original coordinates, the kernel
/// `g` taking the place of the Gaussian blur.
pub fn heat_capacity_quadrature(
    q: &PooledQuadrature,
    temperatures: &[f64],
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    check_temperatures(temperatures)?;
    Ok(normalize(
        temperatures
            .par_iter()
            .map(|&t| q.integrate(|l| heat_kernel(frequency(l), t, constants)))
            .collect(),
    ))
}

/// `n` temperatures log-spaced between `lo` and `hi`.
pub fn temperature_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    uniform_grid(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

pub fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

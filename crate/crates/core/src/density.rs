//! Spectral density estimates, regularization kernels and evaluation grids.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DosError, Result};
use crate::matrix::LinearSpectralMap;

/// Evaluation points must satisfy `|t| <= 1 - EDGE_GUARD` in mapped
/// coordinates for expansions carrying the `1/sqrt(1 - t^2)` weight.
pub const EDGE_GUARD: f64 = 1e-6;

pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Kpm,
    KpmJackson,
    Kpml,
    Spectroscopic,
    DeltaCheb,
    Dgl,
    Lanczos,
    Haydock,
    Cdos,
    /// Regularized DOS from the dense oracle spectrum.
    Exact,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Kpm,
        Method::KpmJackson,
        Method::Kpml,
        Method::Spectroscopic,
        Method::DeltaCheb,
        Method::Dgl,
        Method::Lanczos,
        Method::Haydock,
        Method::Cdos,
        Method::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kpm => "kpm",
            Method::KpmJackson => "kpm-jackson",
            Method::Kpml => "kpml",
            Method::Spectroscopic => "spectroscopic",
            Method::DeltaCheb => "delta-cheb",
            Method::Dgl => "dgl",
            Method::Lanczos => "lanczos",
            Method::Haydock => "haydock",
            Method::Cdos => "cdos",
            Method::Exact => "exact",
        }
    }

    /// Methods whose output already carries the target Gaussian or Lorentzian
    /// blur, as opposed to raw polynomial approximations of the DOS.
    pub fn is_regularized(self) -> bool {
        matches!(
            self,
            Method::Dgl | Method::Lanczos | Method::Haydock | Method::Exact
        )
    }

    /// Methods expanded in polynomials on the mapped interval `[-1, 1]`.
    pub fn is_polynomial(self) -> bool {
        matches!(
            self,
            Method::Kpm
                | Method::KpmJackson
                | Method::Kpml
                | Method::Spectroscopic
                | Method::DeltaCheb
                | Method::Dgl
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DosError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DosError::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Smoothing applied to the delta peaks of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegularizationKernel {
    Gaussian { sigma: f64 },
    Lorentzian { eta: f64 },
}

impl RegularizationKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularizationKernel::Gaussian { sigma } if !(sigma > 0.0) => Err(
                DosError::InvalidParameter(format!("sigma must be positive, got {sigma}")),
            ),
            RegularizationKernel::Lorentzian { eta } if !(eta > 0.0) => Err(
                DosError::InvalidParameter(format!("eta must be positive, got {eta}")),
            ),
            _ => Ok(()),
        }
    }

    /// Unit-mass kernel evaluated at offset `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RegularizationKernel::Gaussian { sigma } => gaussian(x, sigma),
            RegularizationKernel::Lorentzian { eta } => eta / (PI * (x * x + eta * eta)),
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            RegularizationKernel::Gaussian { sigma } => sigma,
            RegularizationKernel::Lorentzian { eta } => eta,
        }
    }

    /// Same kernel expressed in coordinates scaled by `1 / scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        match *self {
            RegularizationKernel::Gaussian { sigma } => RegularizationKernel::Gaussian {
                sigma: sigma / scale,
            },
            RegularizationKernel::Lorentzian { eta } => {
                RegularizationKernel::Lorentzian { eta: eta / scale }
            }
        }
    }

    /// Half-width of the window holding all but a small fraction of the mass.
    pub fn support_pad(&self) -> f64 {
        match *self {
            RegularizationKernel::Gaussian { sigma } => 6.0 * sigma,
            RegularizationKernel::Lorentzian { eta } => 60.0 * eta,
        }
    }
}

/// `g_sigma(x) = exp(-x^2 / (2 sigma^2)) / sqrt(2 pi sigma^2)`.
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Run parameters recorded alongside an estimate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_vec: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<String>,
    /// Total MATVECs spent, all probes included.
    pub matvecs: usize,
    /// Per-point polynomial degrees when they vary across the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_degrees: Option<Vec<usize>>,
    /// Largest neglected continued-fraction remainder, Haydock only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_diagnostic: Option<f64>,
}

/// Density values on a grid.
///
/// `grid`/`values` live in the coordinates of the operator the estimator
/// ran on. When `map` is set those are mapped coordinates `t = (lambda - c) / d`
/// and [`to_original`](Self::to_original) converts back, rescaling densities
/// by `1 / d` so the integral is preserved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityEstimate {
    pub method: Method,
    pub params: EstimateParams,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub map: Option<LinearSpectralMap>,
}

impl SpectralDensityEstimate {
    pub fn new(method: Method, grid: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        SpectralDensityEstimate {
            method,
            params: EstimateParams::default(),
            grid,
            values,
            map: None,
        }
    }

    pub fn with_params(mut self, params: EstimateParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_map(mut self, map: LinearSpectralMap) -> Self {
        self.map = Some(map);
        self
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Grid points in original coordinates.
    pub fn lambda(&self) -> Vec<f64> {
        match self.map {
            Some(map) => self.grid.iter().map(|&t| map.to_original(t)).collect(),
            None => self.grid.clone(),
        }
    }

    /// Densities with respect to the original variable.
    pub fn lambda_values(&self) -> Vec<f64> {
        match self.map {
            Some(map) => self.values.iter().map(|v| v / map.scale).collect(),
            None => self.values.clone(),
        }
    }

    pub fn to_original(&self) -> SpectralDensityEstimate {
        SpectralDensityEstimate {
            method: self.method,
            params: self.params.clone(),
            grid: self.lambda(),
            values: self.lambda_values(),
            map: None,
        }
    }

    /// Trapezoidal integral over the grid.
    pub fn integrate(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_linear(&self.grid, &self.values, x)
    }
}

/// Trapezoidal rule on an arbitrary increasing grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Trapezoid weights for an increasing grid.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for i in 0..x.len().saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Piecewise-linear interpolation on an increasing grid, zero outside it.
pub fn interpolate_linear(x: &[f64], y: &[f64], at: f64) -> f64 {
    if x.is_empty() || at < x[0] || at > x[x.len() - 1] {
        return 0.0;
    }
    let i = x.partition_point(|&p| p <= at);
    if i == 0 {
        return y[0];
    }
    if i >= x.len() {
        return y[x.len() - 1];
    }
    let (x0, x1) = (x[i - 1], x[i]);
    let w = (at - x0) / (x1 - x0);
    y[i - 1] * (1.0 - w) + y[i] * w
}

/// `n` uniformly spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + h * i as f64).collect()
        }
    }
}

/// `n` cell-centered points in `(-1, 1)`: `t_i = -1 + (2 i + 1) / n`.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -1.0 + (2 * i + 1) as f64 / n as f64)
        .collect()
}

/// Checks the edge guard for mapped evaluation points.
pub(crate) fn check_mapped_points(points: &[f64]) -> Result<()> {
    match points.iter().find(|t| !(t.abs() <= 1.0 - EDGE_GUARD)) {
        Some(&t) => Err(DosError::OutsideDomain(t)),
        None => Ok(()),
    }
}

//! End-to-end runs: spectral interval, affine map, estimator, unmapping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{
    interior_grid, uniform_grid, Method, RegularizationKernel, SpectralDensityEstimate,
    DEFAULT_GRID_POINTS,
};
use crate::dgl::{evaluate_dgl_dos, DEFAULT_TOLERANCE};
use crate::error::{DosError, Result};
use crate::kpm::{
    compute_chebyshev_moments, compute_legendre_moments, delta_chebyshev_dos, kpm_dos,
    moments_to_coefficients, moments_via_product_formula, spectroscopic_dos, chebyshev_series,
    DampingKernel, MomentSequence,
};
use crate::lanczos::{
    cdos_refine, haydock_dos, lanczos_runs, pooled_quadrature, HaydockRoute, LanczosOptions,
    PooledQuadrature, Reorthogonalization,
};
use crate::matrix::{
    apply_spectral_map, estimate_spectral_interval, CountingOperator, IntervalOptions,
    LinearOperator, LinearSpectralMap, SparseSymmetricMatrix, SpectralInterval,
};
use crate::metrics::{
    error_sup_gaussian, error_sup_regularized, heat_capacity_density, heat_capacity_exact,
    heat_capacity_quadrature, heat_capacity_weighted, ErrorReport, PhysicalConstants,
};
use crate::reference::{dense_eigensolve, exact_regularized_dos, ExactSpectrum, DEFAULT_ORACLE_CAP};
use crate::stochastic::{ProbeDistribution, ProbeVectorSource};

/// Grid points per kernel width used when the grid size is derived.
const POINTS_PER_WIDTH: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub degree: usize,
    pub n_vec: usize,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    /// Evaluation points; derived from the kernel width when unset.
    pub grid_points: Option<usize>,
    pub seed: u64,
    pub distribution: ProbeDistribution,
    pub interval: IntervalOptions,
    pub reorth: Reorthogonalization,
    /// Chebyshev moments from half the MATVECs.
    pub product_formula: bool,
    pub dgl_tolerance: f64,
    pub haydock_route: HaydockRoute,
    /// Per-point degrees for delta-Chebyshev; uniform `degree` when unset.
    pub point_degrees: Option<Vec<usize>>,
    pub oracle_cap: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            method: Method::Lanczos,
            degree: 100,
            n_vec: 100,
            sigma: None,
            eta: None,
            grid_points: None,
            seed: 0,
            distribution: ProbeDistribution::Gaussian,
            interval: IntervalOptions::default(),
            reorth: Reorthogonalization::Full,
            product_formula: false,
            dgl_tolerance: DEFAULT_TOLERANCE,
            haydock_route: HaydockRoute::ContinuedFraction,
            point_degrees: None,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl EstimatorConfig {
    pub fn new(method: Method) -> Self {
        EstimatorConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vec == 0 {
            return Err(DosError::InvalidParameter("--nvec must be at least 1".into()));
        }
        if matches!(self.method, Method::Lanczos | Method::Haydock | Method::Cdos) && self.degree == 0 {
            return Err(DosError::InvalidParameter(format!(
                "{} needs at least one Lanczos step (--degree >= 1)",
                self.method
            )));
        }
        if matches!(self.method, Method::Dgl | Method::Lanczos) && self.sigma.is_none() {
            return Err(DosError::InvalidParameter(format!(
                "{} needs --sigma",
                self.method
            )));
        }
        if self.method == Method::Exact && self.sigma.is_none() && self.eta.is_none() {
            return Err(DosError::InvalidParameter("exact needs --sigma or --eta".into()));
        }
        if let Some(s) = self.sigma {
            RegularizationKernel::Gaussian { sigma: s }.validate()?;
        }
        if let Some(e) = self.eta {
            RegularizationKernel::Lorentzian { eta: e }.validate()?;
        }
        if self.grid_points == Some(0) {
            return Err(DosError::InvalidParameter("--grid-points must be positive".into()));
        }
        Ok(())
    }

    fn source(&self, dim: usize) -> ProbeVectorSource {
        ProbeVectorSource::new(self.distribution, self.seed, dim).with_stream(1)
    }

    fn lanczos_options(&self) -> LanczosOptions {
        LanczosOptions {
            reorth: self.reorth,
            keep_basis: false,
        }
    }

    /// Kernel used by the regularized output of this method, in original
    /// coordinates.
    pub fn kernel(&self, interval: &SpectralInterval) -> Option<RegularizationKernel> {
        match self.method {
            Method::Haydock => Some(RegularizationKernel::Lorentzian {
                eta: self.eta.unwrap_or_else(|| default_eta(interval, self.points_hint())),
            }),
            Method::Exact => Some(match (self.sigma, self.eta) {
                (Some(sigma), _) => RegularizationKernel::Gaussian { sigma },
                (None, Some(eta)) => RegularizationKernel::Lorentzian { eta },
                (None, None) => return None,
            }),
            Method::Lanczos | Method::Dgl => self.sigma.map(|sigma| RegularizationKernel::Gaussian { sigma }),
            _ => None,
        }
    }

    fn points_hint(&self) -> usize {
        self.grid_points.unwrap_or(DEFAULT_GRID_POINTS)
    }

    /// Number of points for a grid of length `span`: the configured count, or
    /// enough to resolve the smaller of sigma and eta.
    fn grid_len(&self, span: f64, width: Option<f64>) -> usize {
        if let Some(n) = self.grid_points {
            return n;
        }
        let widths = [width, self.sigma].into_iter().flatten();
        let finest = widths.fold(f64::INFINITY, f64::min);
        if finest.is_finite() {
            DEFAULT_GRID_POINTS.max((POINTS_PER_WIDTH * span / finest).ceil() as usize + 1)
        } else {
            DEFAULT_GRID_POINTS
        }
    }
}

/// `eta = (lambda_ub - lambda_lb) / (2 n_pts)`.
pub fn default_eta(interval: &SpectralInterval, points: usize) -> f64 {
    (interval.upper - interval.lower) / (2.0 * points as f64)
}

/// Outcome of one estimator run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DosRun {
    /// Estimate in mapped coordinates with the map attached.
    pub estimate: SpectralDensityEstimate,
    pub interval: SpectralInterval,
    /// MATVECs spent on the interval estimate (not included in
    /// `estimate.params.matvecs`).
    pub interval_matvecs: usize,
}

impl DosRun {
    pub fn map(&self) -> LinearSpectralMap {
        self.estimate.map.expect("pipeline estimates carry a map")
    }

    pub fn original(&self) -> SpectralDensityEstimate {
        self.estimate.to_original()
    }
}

/// Spectral interval of `a` with MATVEC count.
pub fn spectral_interval(
    a: &SparseSymmetricMatrix,
    options: IntervalOptions,
) -> Result<(SpectralInterval, usize)> {
    let counter = CountingOperator::new(a);
    let interval = estimate_spectral_interval(&counter, options)?;
    Ok((interval, counter.count()))
}

fn chebyshev_moments<O: LinearOperator + ?Sized>(
    op: &O,
    cfg: &EstimatorConfig,
    src: &ProbeVectorSource,
) -> Result<MomentSequence> {
    if cfg.product_formula {
        moments_via_product_formula(op, cfg.degree, src, cfg.n_vec, None)
    } else {
        compute_chebyshev_moments(op, cfg.degree, src, cfg.n_vec)
    }
}

/// Grid in mapped coordinates covering the interval padded by the kernel's
/// support.
fn padded_grid(cfg: &EstimatorConfig, kernel: &RegularizationKernel, map: &LinearSpectralMap) -> Vec<f64> {
    let pad = kernel.support_pad() / map.scale;
    let span = (2.0 + 2.0 * pad) * map.scale;
    uniform_grid(-1.0 - pad, 1.0 + pad, cfg.grid_len(span, Some(kernel.width())))
}

/// Runs `cfg.method` on `a`, using `interval` when given.
pub fn run_method(
    a: &SparseSymmetricMatrix,
    cfg: &EstimatorConfig,
    interval: Option<SpectralInterval>,
) -> Result<DosRun> {
    cfg.validate()?;
    let (interval, interval_matvecs) = match interval {
        Some(iv) => (iv, 0),
        None => spectral_interval(a, cfg.interval)?,
    };
    let map = LinearSpectralMap::from_interval(&interval)?;
    let mapped = apply_spectral_map(a, &interval)?;
    let op = CountingOperator::new(&mapped);
    let src = cfg.source(a.dim());
    let span = 2.0 * map.scale;
    let interior = || interior_grid(cfg.grid_len(span, None));

    let mut estimate = match cfg.method {
        Method::Kpm | Method::KpmJackson => {
            let damping = if cfg.method == Method::Kpm {
                DampingKernel::None
            } else {
                DampingKernel::Jackson
            };
            kpm_dos(&chebyshev_moments(&op, cfg, &src)?, damping, &interior())?
        }
        Method::Spectroscopic => spectroscopic_dos(&chebyshev_moments(&op, cfg, &src)?, &interior())?,
        Method::DeltaCheb => {
            let m = chebyshev_moments(&op, cfg, &src)?;
            let grid = interior();
            let degrees = match &cfg.point_degrees {
                Some(d) => d.clone(),
                None => vec![cfg.degree; grid.len()],
            };
            delta_chebyshev_dos(&m, &grid, &degrees)?
        }
        Method::Kpml => {
            let m = compute_legendre_moments(&op, cfg.degree, &src, cfg.n_vec)?;
            crate::kpm::evaluate_kpml_dos(&m, &interior())?
        }
        Method::Dgl => {
            let sigma = cfg.sigma.expect("validated");
            let m = compute_legendre_moments(&op, cfg.degree, &src, cfg.n_vec)?;
            let grid = interior_grid(cfg.grid_len(span, Some(sigma)));
            evaluate_dgl_dos(&m, &grid, sigma / map.scale, cfg.dgl_tolerance)?
        }
        Method::Lanczos => {
            let kernel = cfg.kernel(&interval).expect("validated");
            let runs = lanczos_runs(&op, cfg.degree, &src, cfg.n_vec, cfg.lanczos_options())?;
            let pooled = pooled_quadrature(&runs, a.dim());
            let grid = padded_grid(cfg, &kernel, &map);
            let values = pooled.blur(&kernel.scaled(map.scale), &grid);
            let mut est = SpectralDensityEstimate::new(Method::Lanczos, grid, values);
            est.params.degree = Some(cfg.degree);
            est.params.n_vec = Some(cfg.n_vec);
            est.params.sigma = cfg.sigma;
            est.params.matvecs = runs.iter().map(|r| r.factorization.steps()).sum();
            est
        }
        Method::Haydock => {
            let kernel = cfg.kernel(&interval).expect("haydock always has a kernel");
            let grid = padded_grid(cfg, &kernel, &map);
            let eta = kernel.width();
            let mut est = haydock_dos(
                &op,
                cfg.degree,
                &src,
                cfg.n_vec,
                eta / map.scale,
                &grid,
                cfg.lanczos_options(),
                cfg.haydock_route,
            )?;
            est.params.eta = Some(eta);
            est
        }
        Method::Cdos => {
            let runs = lanczos_runs(&op, cfg.degree, &src, cfg.n_vec, cfg.lanczos_options())?;
            let pooled = pooled_quadrature(&runs, a.dim());
            let mut est = cdos_refine(&pooled, (-1.0, 1.0), &interior())?;
            est.params.degree = Some(cfg.degree);
            est.params.n_vec = Some(cfg.n_vec);
            est.params.matvecs = runs.iter().map(|r| r.factorization.steps()).sum();
            est
        }
        Method::Exact => {
            let kernel = cfg.kernel(&interval).expect("validated");
            let spectrum = dense_eigensolve(a, cfg.oracle_cap, false)?;
            let grid = padded_grid(cfg, &kernel, &map);
            let lambda: Vec<f64> = grid.iter().map(|&t| map.to_original(t)).collect();
            let exact = exact_regularized_dos(&spectrum, &kernel, &lambda)?;
            let mut est = SpectralDensityEstimate::new(
                Method::Exact,
                grid,
                exact.values.iter().map(|v| v * map.scale).collect(),
            );
            est.params = exact.params;
            est
        }
    };
    if cfg.method == Method::Dgl {
        estimate.params.sigma = cfg.sigma;
    }
    debug_assert!(cfg.method == Method::Exact || estimate.params.matvecs == op.count());
    estimate.params.matvecs = op.count();
    Ok(DosRun {
        estimate: estimate.with_map(map),
        interval,
        interval_matvecs,
    })
}

/// Error of a run against the exact spectrum under the protocol matching
/// the method: Gaussian-tested sup error for raw expansions, pointwise
/// sup error against `phi_sigma` for methods that are already regularized.
pub fn evaluate_error(
    spectrum: &ExactSpectrum,
    run: &DosRun,
    sigma: f64,
    centers: usize,
) -> Result<ErrorReport> {
    let approx = run.original();
    if run.estimate.method.is_regularized() {
        error_sup_regularized(
            spectrum,
            &approx,
            &RegularizationKernel::Gaussian { sigma },
            centers,
            &run.interval,
        )
    } else {
        error_sup_gaussian(spectrum, &approx, sigma, centers, &run.interval)
    }
}

/// Pooled Ritz rule in original coordinates.
pub fn lanczos_quadrature_original(
    a: &SparseSymmetricMatrix,
    cfg: &EstimatorConfig,
    interval: &SpectralInterval,
) -> Result<(PooledQuadrature, usize)> {
    let map = LinearSpectralMap::from_interval(interval)?;
    let mapped = apply_spectral_map(a, interval)?;
    let op = CountingOperator::new(&mapped);
    let runs = lanczos_runs(&op, cfg.degree, &cfg.source(a.dim()), cfg.n_vec, cfg.lanczos_options())?;
    Ok((pooled_quadrature(&runs, a.dim()).to_original(&map), op.count()))
}

/// Normalized heat capacity by the natural route of each method: Ritz
/// quadrature with `g` in place of the blur for Lanczos, Gauss-Chebyshev
/// quadrature of the expansion for (Jackson-)KPM, the dense spectrum for
/// Exact and trapezoidal quadrature of the density otherwise.
pub fn heat_capacity(
    a: &SparseSymmetricMatrix,
    cfg: &EstimatorConfig,
    interval: Option<SpectralInterval>,
    temperatures: &[f64],
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let interval = match interval {
        Some(iv) => iv,
        None => spectral_interval(a, cfg.interval)?.0,
    };
    match cfg.method {
        Method::Exact => {
            let spectrum = dense_eigensolve(a, cfg.oracle_cap, false)?;
            heat_capacity_exact(&spectrum, temperatures, constants)
        }
        Method::Lanczos => {
            let (q, _) = lanczos_quadrature_original(a, cfg, &interval)?;
            heat_capacity_quadrature(&q, temperatures, constants)
        }
        Method::Kpm | Method::KpmJackson => {
            let map = LinearSpectralMap::from_interval(&interval)?;
            let mapped = apply_spectral_map(a, &interval)?;
            let m = chebyshev_moments(&mapped, cfg, &cfg.source(a.dim()))?;
            let damping = if cfg.method == Method::Kpm {
                DampingKernel::None
            } else {
                DampingKernel::Jackson
            };
            let coeffs = moments_to_coefficients(&m, damping)?;
            // sum_j (pi/N) f(t_j) sum_k mu_k T_k(t_j) integrates f phi exactly
            // for polynomial f of degree < 2N - M
            let nodes = (4 * cfg.degree).max(DEFAULT_GRID_POINTS);
            let t: Vec<f64> = (0..nodes)
                .map(|j| ((2 * j + 1) as f64 * PI / (2 * nodes) as f64).cos())
                .collect();
            let lambda: Vec<f64> = t.iter().map(|&x| map.to_original(x)).collect();
            let weights = vec![PI / nodes as f64; nodes];
            let series: Vec<f64> = t.iter().map(|&x| chebyshev_series(&coeffs, x)).collect();
            heat_capacity_weighted(&lambda, &weights, &series, temperatures, constants)
        }
        _ => {
            let run = run_method(a, cfg, Some(interval))?;
            heat_capacity_density(&run.original(), temperatures, constants)
        }
    }
}

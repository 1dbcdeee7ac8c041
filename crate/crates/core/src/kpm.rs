//! Kernel polynomial method: Chebyshev and Legendre moments of the mapped
//! operator and the expansions built from them.
//!
//! Probes stay unnormalized, so `zeta_k / n` estimates the normalized trace
//! `Tr p_k(B) / n`. All evaluation grids are in mapped coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{check_mapped_points, EstimateParams, Method, SpectralDensityEstimate};
use crate::error::{DosError, Result};
use crate::matrix::LinearOperator;
use crate::stochastic::{pairwise_mean_rows, ProbeVectorSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Chebyshev,
    Legendre,
}

/// Probe-averaged moments `zeta_k = mean_l v_l^T p_k(B) v_l`, `k = 0..=degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub zeta: Vec<f64>,
    /// Sample variance of each moment across probes.
    pub variance: Vec<f64>,
    pub degree: usize,
    pub n_vec: usize,
    pub basis: Basis,
    /// Matrix dimension.
    pub n: usize,
    pub matvecs: usize,
}

impl MomentSequence {
    fn from_rows(rows: Vec<Vec<f64>>, degree: usize, basis: Basis, n: usize, matvecs: usize) -> Self {
        let zeta = pairwise_mean_rows(&rows);
        let n_vec = rows.len();
        let variance = (0..=degree)
            .map(|k| {
                if n_vec < 2 {
                    return 0.0;
                }
                let ss: f64 = rows.iter().map(|r| (r[k] - zeta[k]).powi(2)).sum();
                ss / (n_vec - 1) as f64
            })
            .collect();
        MomentSequence {
            zeta,
            variance,
            degree,
            n_vec,
            basis,
            n,
            matvecs,
        }
    }

    /// Moments from known eigenvalues: `zeta_k = sum_j p_k(lambda_j)`.
    pub fn from_eigenvalues(eigenvalues: &[f64], degree: usize, basis: Basis) -> Self {
        let mut zeta = vec![0.0; degree + 1];
        for &x in eigenvalues {
            let vals = match basis {
                Basis::Chebyshev => chebyshev_values(x, degree),
                Basis::Legendre => legendre_values(x, degree),
            };
            for (z, v) in zeta.iter_mut().zip(vals) {
                *z += v;
            }
        }
        MomentSequence {
            zeta,
            variance: vec![0.0; degree + 1],
            degree,
            n_vec: 1,
            basis,
            n: eigenvalues.len(),
            matvecs: 0,
        }
    }

    /// Standard error of each averaged moment.
    pub fn std_error(&self) -> Vec<f64> {
        self.variance
            .iter()
            .map(|v| (v / self.n_vec as f64).sqrt())
            .collect()
    }

    /// The first `degree + 1` moments.
    pub fn truncated(&self, degree: usize) -> Result<Self> {
        if degree > self.degree {
            return Err(DosError::InvalidParameter(format!(
                "moments only available up to degree {}",
                self.degree
            )));
        }
        Ok(MomentSequence {
            zeta: self.zeta[..=degree].to_vec(),
            variance: self.variance[..=degree].to_vec(),
            degree,
            ..self.clone()
        })
    }

    fn require(&self, basis: Basis) -> Result<()> {
        if self.basis != basis {
            return Err(DosError::InvalidParameter(format!(
                "expected {basis:?} moments, got {:?}",
                self.basis
            )));
        }
        Ok(())
    }
}

/// `T_0(x) .. T_degree(x)`.
pub fn chebyshev_values(x: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for k in 2..=degree {
        out.push(2.0 * x * out[k - 1] - out[k - 2]);
    }
    out
}

/// `L_0(x) .. L_degree(x)`.
pub fn legendre_values(x: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for k in 1..degree {
        let kf = k as f64;
        out.push(((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_probe_args(n_vec: usize) -> Result<()> {
    if n_vec == 0 {
        return Err(DosError::InvalidParameter("n_vec must be at least 1".into()));
    }
    Ok(())
}

fn check_finite(value: f64, context: &'static str, step: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DosError::NonFinite { context, step })
    }
}

/// Runs the three-term recurrence `v_{k+1} = a_k B v_k - b_k v_{k-1}` per
/// probe, collecting `v_0^T v_k`.
fn recurrence_moments<O, C>(
    op: &O,
    degree: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
    basis: Basis,
    coeffs: C,
) -> Result<MomentSequence>
where
    O: LinearOperator + ?Sized,
    C: Fn(usize) -> (f64, f64) + Sync,
{
    check_probe_args(n_vec)?;
    let n = op.dim();
    let context = match basis {
        Basis::Chebyshev => "chebyshev recurrence",
        Basis::Legendre => "legendre recurrence",
    };
    let rows: Vec<Vec<f64>> = (0..n_vec as u64)
        .into_par_iter()
        .map(|l| {
            let v0 = src.draw(l);
            let mut zeta = Vec::with_capacity(degree + 1);
            zeta.push(dot(&v0, &v0));
            if degree == 0 {
                return Ok(zeta);
            }
            let mut prev = v0.clone();
            let mut cur = vec![0.0; n];
            op.apply(&v0, &mut cur);
            zeta.push(dot(&v0, &cur));
            let mut next = vec![0.0; n];
            for k in 1..degree {
                op.apply(&cur, &mut next);
                let (a, b) = coeffs(k);
                for (x, p) in next.iter_mut().zip(&prev) {
                    *x = a * *x - b * p;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
                let z = dot(&v0, &cur);
                check_finite(z, context, k + 1)?;
                zeta.push(z);
            }
            Ok(zeta)
        })
        .collect::<Result<_>>()?;
    Ok(MomentSequence::from_rows(rows, degree, basis, n, degree * n_vec))
}

/// Chebyshev moments via `v_{k+1} = 2 B v_k - v_{k-1}`; `degree` MATVECs per
/// probe.
pub fn compute_chebyshev_moments<O: LinearOperator + ?Sized>(
    op: &O,
    degree: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
) -> Result<MomentSequence> {
    recurrence_moments(op, degree, src, n_vec, Basis::Chebyshev, |_| (2.0, 1.0))
}

/// Legendre moments via `v_{k+1} = ((2k+1) B v_k - k v_{k-1}) / (k+1)`.
pub fn compute_legendre_moments<O: LinearOperator + ?Sized>(
    op: &O,
    degree: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
) -> Result<MomentSequence> {
    recurrence_moments(op, degree, src, n_vec, Basis::Legendre, |k| {
        let kf = k as f64;
        ((2.0 * kf + 1.0) / (kf + 1.0), kf / (kf + 1.0))
    })
}

/// Chebyshev moments from `ceil(degree / 2)` MATVECs per probe using
/// `T_{a+b} = 2 T_a T_b - T_{a-b}`:
/// `zeta_{2j} = 2 v_j^T v_j - zeta_0` and `zeta_{2j+1} = 2 v_{j+1}^T v_j - zeta_1`.
///
/// Only three vectors per probe are live at any time; `memory_budget` (bytes)
/// bounds the total over probes evaluated concurrently.
pub fn moments_via_product_formula<O: LinearOperator + ?Sized>(
    op: &O,
    degree: usize,
    src: &ProbeVectorSource,
    n_vec: usize,
    memory_budget: Option<usize>,
) -> Result<MomentSequence> {
    check_probe_args(n_vec)?;
    let n = op.dim();
    if let Some(budget) = memory_budget {
        let workers = rayon::current_num_threads().min(n_vec);
        let required = 4 * n * std::mem::size_of::<f64>() * workers;
        if required > budget {
            return Err(DosError::MemoryBudget { required, budget });
        }
    }
    let half = degree.div_ceil(2);
    let rows: Vec<Vec<f64>> = (0..n_vec as u64)
        .into_par_iter()
        .map(|l| {
            let v0 = src.draw(l);
            let mut zeta = vec![0.0; degree + 1];
            zeta[0] = dot(&v0, &v0);
            if degree == 0 {
                return Ok(zeta);
            }
            let mut prev = v0.clone();
            let mut cur = vec![0.0; n];
            op.apply(&v0, &mut cur);
            zeta[1] = dot(&v0, &cur);
            // v_j = prev, v_{j+1} = cur
            let mut next = vec![0.0; n];
            for j in 1..=half {
                if 2 * j <= degree {
                    zeta[2 * j] = 2.0 * dot(&cur, &cur) - zeta[0];
                    check_finite(zeta[2 * j], "chebyshev product formula", j)?;
                }
                if j == half {
                    break;
                }
                op.apply(&cur, &mut next);
                for (x, p) in next.iter_mut().zip(&prev) {
                    *x = 2.0 * *x - p;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
                if 2 * j + 1 <= degree {
                    zeta[2 * j + 1] = 2.0 * dot(&cur, &prev) - zeta[1];
                    check_finite(zeta[2 * j + 1], "chebyshev product formula", j + 1)?;
                }
            }
            Ok(zeta)
        })
        .collect::<Result<_>>()?;
    Ok(MomentSequence::from_rows(
        rows,
        degree,
        Basis::Chebyshev,
        n,
        half * n_vec,
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingKernel {
    #[default]
    None,
    Jackson,
}

impl DampingKernel {
    /// `g_0 .. g_degree`.
    pub fn coefficients(self, degree: usize) -> Vec<f64> {
        match self {
            DampingKernel::None => vec![1.0; degree + 1],
            DampingKernel::Jackson => {
                let m2 = (degree + 2) as f64;
                let alpha = PI / m2;
                (0..=degree)
                    .map(|k| {
                        let kf = k as f64;
                        ((1.0 - kf / m2) * alpha.sin() * (kf * alpha).cos()
                            + alpha.cos() * (kf * alpha).sin() / m2)
                            / alpha.sin()
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for DampingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DampingKernel::None => "none",
            DampingKernel::Jackson => "jackson",
        })
    }
}

impl FromStr for DampingKernel {
    type Err = DosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(DampingKernel::None),
            "jackson" => Ok(DampingKernel::Jackson),
            other => Err(DosError::InvalidParameter(format!(
                "unknown damping kernel '{other}'"
            ))),
        }
    }
}

/// `mu_k = (2 - delta_k0) / (n pi) * zeta_k * g_k`.
pub fn moments_to_coefficients(m: &MomentSequence, damping: DampingKernel) -> Result<Vec<f64>> {
    m.require(Basis::Chebyshev)?;
    let g = damping.coefficients(m.degree);
    let n = m.n as f64;
    Ok(m.zeta
        .iter()
        .zip(g)
        .enumerate()
        .map(|(k, (z, g))| {
            let factor = if k == 0 { 1.0 } else { 2.0 };
            factor / (n * PI) * z * g
        })
        .collect())
}

/// Clenshaw evaluation of `sum_k c_k T_k(t)`.
pub fn chebyshev_series(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// `phi(t) = sum_k mu_k T_k(t) / sqrt(1 - t^2)` on `grid`.
pub fn evaluate_kpm_dos(coeffs: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    check_mapped_points(grid)?;
    Ok(grid
        .par_iter()
        .map(|&t| chebyshev_series(coeffs, t) / (1.0 - t * t).sqrt())
        .collect())
}

fn params_from(m: &MomentSequence) -> EstimateParams {
    EstimateParams {
        degree: Some(m.degree),
        n_vec: Some(m.n_vec),
        matvecs: m.matvecs,
        ..Default::default()
    }
}

/// KPM estimate, optionally Jackson-damped.
pub fn kpm_dos(
    m: &MomentSequence,
    damping: DampingKernel,
    grid: &[f64],
) -> Result<SpectralDensityEstimate> {
    let coeffs = moments_to_coefficients(m, damping)?;
    let values = evaluate_kpm_dos(&coeffs, grid)?;
    let method = match damping {
        DampingKernel::None => Method::Kpm,
        DampingKernel::Jackson => Method::KpmJackson,
    };
    Ok(
        SpectralDensityEstimate::new(method, grid.to_vec(), values).with_params(EstimateParams {
            damping: Some(damping.to_string()),
            ..params_from(m)
        }),
    )
}

/// Legendre expansion `phi(t) = sum_k (k + 1/2) (zeta_k / n) L_k(t)`.
pub fn evaluate_kpml_dos(m: &MomentSequence, grid: &[f64]) -> Result<SpectralDensityEstimate> {
    m.require(Basis::Legendre)?;
    if let Some(&t) = grid.iter().find(|t| !(t.abs() <= 1.0)) {
        return Err(DosError::OutsideDomain(t));
    }
    let n = m.n as f64;
    let values = grid
        .par_iter()
        .map(|&t| {
            legendre_values(t, m.degree)
                .iter()
                .zip(&m.zeta)
                .enumerate()
                .map(|(k, (l, z))| (k as f64 + 0.5) * z / n * l)
                .sum()
        })
        .collect();
    Ok(SpectralDensityEstimate::new(Method::Kpml, grid.to_vec(), values).with_params(params_from(m)))
}

/// Undamped KPM coefficients with the degree-`M` term halved.
pub fn spectroscopic_coefficients(m: &MomentSequence) -> Result<Vec<f64>> {
    let mut coeffs = moments_to_coefficients(m, DampingKernel::None)?;
    if m.degree > 0 {
        coeffs[m.degree] *= 0.5;
    }
    Ok(coeffs)
}

/// Spectroscopic (trapezoidal cosine-transform) reconstruction on `grid`.
pub fn spectroscopic_dos(m: &MomentSequence, grid: &[f64]) -> Result<SpectralDensityEstimate> {
    let coeffs = spectroscopic_coefficients(m)?;
    let values = evaluate_kpm_dos(&coeffs, grid)?;
    Ok(
        SpectralDensityEstimate::new(Method::Spectroscopic, grid.to_vec(), values)
            .with_params(params_from(m)),
    )
}

/// Spectroscopic estimate at the interior Chebyshev points
/// `t_p = cos(p pi / M)`, `p = 1..M-1`, via a type-I DCT of the moments:
/// `phi(t_p) = 2 F(p) / (n pi sin(p pi / M))`. The grid is returned in
/// increasing order.
pub fn spectroscopic_dct(m: &MomentSequence) -> Result<SpectralDensityEstimate> {
    m.require(Basis::Chebyshev)?;
    let degree = m.degree;
    if degree < 2 {
        return Err(DosError::InvalidParameter(
            "the cosine-transform reconstruction needs degree >= 2".into(),
        ));
    }
    let mut buffer = m.zeta.clone();
    let mut planner = rustdct::DctPlanner::new();
    planner.plan_dct1(degree + 1).process_dct1(&mut buffer);
    let n = m.n as f64;
    let mut grid = Vec::with_capacity(degree - 1);
    let mut values = Vec::with_capacity(degree - 1);
    for p in (1..degree).rev() {
        let theta = p as f64 * PI / degree as f64;
        grid.push(theta.cos());
        values.push(2.0 * buffer[p] / (n * PI * theta.sin()));
    }
    Ok(
        SpectralDensityEstimate::new(Method::Spectroscopic, grid, values)
            .with_params(params_from(m)),
    )
}

/// Pointwise Chebyshev expansion of `delta(t_i - B)`, truncated at degree
/// `degrees[i]` for the point `grid[i]`.
pub fn delta_chebyshev_dos(
    m: &MomentSequence,
    grid: &[f64],
    degrees: &[usize],
) -> Result<SpectralDensityEstimate> {
    m.require(Basis::Chebyshev)?;
    check_mapped_points(grid)?;
    if degrees.len() != grid.len() {
        return Err(DosError::DimensionMismatch {
            expected: grid.len(),
            got: degrees.len(),
        });
    }
    if let Some(&d) = degrees.iter().find(|&&d| d > m.degree) {
        return Err(DosError::InvalidParameter(format!(
            "point degree {d} exceeds available moment degree {}",
            m.degree
        )));
    }
    let n = m.n as f64;
    let values = grid
        .par_iter()
        .zip(degrees)
        .map(|(&t, &mi)| {
            let tk = chebyshev_values(t, mi);
            let sum: f64 = (0..=mi)
                .map(|k| {
                    let factor = if k == 0 { 1.0 } else { 2.0 };
                    factor / (n * PI) * m.zeta[k] * tk[k]
                })
                .sum();
            sum / (1.0 - t * t).sqrt()
        })
        .collect();
    let uniform = degrees.iter().all(|&d| d == m.degree);
    Ok(
        SpectralDensityEstimate::new(Method::DeltaCheb, grid.to_vec(), values).with_params(
            EstimateParams {
                point_degrees: (!uniform).then(|| degrees.to_vec()),
                ..params_from(m)
            },
        ),
    )
}

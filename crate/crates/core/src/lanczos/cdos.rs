//! Cumulative DOS from pooled Ritz quadrature, smoothed by a monotone
//! piecewise-cubic interpolant whose derivative is the DOS estimate.

use crate::density::{EstimateParams, Method, SpectralDensityEstimate};
use crate::error::{DosError, Result};

use super::PooledQuadrature;

/// Monotone cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(DosError::InvalidParameter(
                "monotone interpolation needs at least two points".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DosError::InvalidParameter(
                "interpolation nodes must be strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                let (d0, d1) = (delta[i - 1], delta[i]);
                if d0 * d1 > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(MonotoneCubic { x, y, slopes })
    }

    fn segment(&self, at: f64) -> usize {
        let i = self.x.partition_point(|&p| p <= at);
        i.clamp(1, self.x.len() - 1) - 1
    }

    pub fn eval(&self, at: f64) -> f64 {
        let n = self.x.len();
        if at <= self.x[0] {
            return self.y[0];
        }
        if at >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.segment(at);
        let h = self.x[i + 1] - self.x[i];
        let s = (at - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.y[i]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * self.y[i + 1]
            + (s3 - s2) * h * self.slopes[i + 1]
    }

    /// Analytic derivative; zero outside the node range.
    pub fn derivative(&self, at: f64) -> f64 {
        let n = self.x.len();
        if at < self.x[0] || at > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(at);
        let h = self.x[i + 1] - self.x[i];
        let s = (at - self.x[i]) / h;
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * self.y[i]
            + (3.0 * s2 - 4.0 * s + 1.0) * h * self.slopes[i]
            + (-6.0 * s2 + 6.0 * s) * self.y[i + 1]
            + (3.0 * s2 - 2.0 * s) * h * self.slopes[i + 1])
            / h
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Sorted nodes with clusters no wider than `tol` merged into their
/// weighted mean.
fn merged_nodes(q: &PooledQuadrature, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = q.nodes.iter().copied().zip(q.weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut start = f64::NEG_INFINITY;
    let mut moment = 0.0;
    for (x, w) in pairs {
        if x - start <= tol && !weights.is_empty() {
            let last = weights.len() - 1;
            weights[last] += w;
            moment += w * x;
            if weights[last] > 0.0 {
                nodes[last] = moment / weights[last];
            }
        } else {
            start = x;
            moment = w * x;
            nodes.push(x);
            weights.push(w);
        }
    }
    (nodes, weights)
}

/// Staircase CDOS through the riser midpoints, anchored at `(a, 0)` and
/// `(b, W)`, where `W` is the total weight.
fn staircase_interpolant(
    q: &PooledQuadrature,
    domain: (f64, f64),
) -> Result<MonotoneCubic> {
    let (a, b) = domain;
    if !(a < b) {
        return Err(DosError::InvalidInterval { lower: a, upper: b });
    }
    let (nodes, weights) = merged_nodes(q, 1e-12 * (b - a));
    if nodes.len() < 2 {
        return Err(DosError::InvalidParameter(
            "cumulative refinement needs at least two distinct Ritz values".into(),
        ));
    }
    if nodes[0] <= a || nodes[nodes.len() - 1] >= b {
        return Err(DosError::InvalidParameter(format!(
            "Ritz values must lie strictly inside [{a}, {b}]"
        )));
    }
    let mut x = Vec::with_capacity(nodes.len() + 2);
    let mut y = Vec::with_capacity(nodes.len() + 2);
    x.push(a);
    y.push(0.0);
    let mut cum = 0.0;
    for (node, w) in nodes.iter().zip(&weights) {
        x.push(*node);
        y.push(cum + 0.5 * w);
        cum += w;
    }
    x.push(b);
    y.push(cum);
    MonotoneCubic::new(x, y)
}

/// DOS as the derivative of the monotone interpolant of the Ritz staircase
/// on `grid` (operator coordinates) for a spectrum inside `domain`.
///
/// Each value is the derivative averaged over the cell between the midpoints
/// to the neighboring grid points (half cells at the ends), so the output
/// integrates to the staircase rise over the grid no matter how the Ritz
/// values fall relative to it.
pub fn cdos_refine(
    q: &PooledQuadrature,
    domain: (f64, f64),
    grid: &[f64],
) -> Result<SpectralDensityEstimate> {
    let spline = staircase_interpolant(q, domain)?;
    let n = grid.len();
    // cells match the trapezoid weights, so the rule telescopes to
    // C(t_last) - C(t_first)
    let mut edges = Vec::with_capacity(n + 1);
    if n >= 2 {
        edges.push(grid[0]);
        edges.extend(grid.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(grid[n - 1]);
    }
    let values = (0..n)
        .map(|i| match (edges.get(i), edges.get(i + 1)) {
            (Some(&lo), Some(&hi)) if hi > lo => {
                ((spline.eval(hi) - spline.eval(lo)) / (hi - lo)).max(0.0)
            }
            _ => spline.derivative(grid[i]).max(0.0),
        })
        .collect();
    Ok(SpectralDensityEstimate::new(Method::Cdos, grid.to_vec(), values))
}

/// Centered finite difference of the raw staircase on `grid`, the unrefined
/// baseline.
pub fn cdos_staircase_difference(q: &PooledQuadrature, grid: &[f64]) -> SpectralDensityEstimate {
    let stair = |t: f64| q.integrate(|x| if x <= t { 1.0 } else { 0.0 });
    let n = grid.len();
    let values = (0..n)
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let (lo, hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(n - 1)]);
            (stair(hi) - stair(lo)) / (hi - lo)
        })
        .collect();
    SpectralDensityEstimate::new(Method::Cdos, grid.to_vec(), values).with_params(EstimateParams {
        damping: Some("staircase".into()),
        ..Default::default()
    })
}

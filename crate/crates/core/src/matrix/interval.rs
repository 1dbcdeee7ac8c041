//! Spectral bounds from a short Lanczos run and the affine map onto `[-1, 1]`.

use serde::{Deserialize, Serialize};

use super::LinearOperator;
use crate::error::{DosError, Result};
use crate::lanczos::{lanczos_factorize, LanczosOptions};
use crate::stochastic::ProbeVectorSource;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(DosError::InvalidInterval { lower, upper });
        }
        Ok(SpectralInterval { lower, upper })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Widens both ends by `fraction` of the width.
    pub fn widened(&self, fraction: f64) -> Self {
        let pad = fraction * (self.upper - self.lower);
        SpectralInterval {
            lower: self.lower - pad,
            upper: self.upper + pad,
        }
    }
}

/// `t = (lambda - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSpectralMap {
    pub center: f64,
    pub scale: f64,
}

impl LinearSpectralMap {
    pub fn new(center: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !center.is_finite() {
            return Err(DosError::InvalidParameter(format!(
                "spectral map needs a finite positive scale, got {scale}"
            )));
        }
        Ok(LinearSpectralMap { center, scale })
    }

    pub fn from_interval(interval: &SpectralInterval) -> Result<Self> {
        Self::new(interval.center(), interval.half_width())
    }

    pub fn to_mapped(&self, lambda: f64) -> f64 {
        (lambda - self.center) / self.scale
    }

    pub fn to_original(&self, t: f64) -> f64 {
        self.center + self.scale * t
    }

    pub fn interval(&self) -> SpectralInterval {
        SpectralInterval {
            lower: self.center - self.scale,
            upper: self.center + self.scale,
        }
    }
}

/// `B = (A - c I) / d` applied on the fly.
pub struct MappedOperator<O> {
    inner: O,
    map: LinearSpectralMap,
}

impl<O: LinearOperator> MappedOperator<O> {
    pub fn map(&self) -> LinearSpectralMap {
        self.map
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: LinearOperator> LinearOperator for MappedOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        let inv = 1.0 / self.map.scale;
        let c = self.map.center;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = (*yi - c * xi) * inv;
        }
    }
}

pub fn apply_spectral_map<O: LinearOperator>(
    op: O,
    interval: &SpectralInterval,
) -> Result<MappedOperator<O>> {
    let map = LinearSpectralMap::from_interval(interval)?;
    Ok(MappedOperator { inner: op, map })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalOptions {
    pub steps: usize,
    /// Relative widening applied on each side.
    pub margin: f64,
    pub seed: u64,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        IntervalOptions {
            steps: 20,
            margin: 0.01,
            seed: 0,
        }
    }
}

/// Bounds `[theta_1 - r_1, theta_k + r_k]` from the extreme Ritz pairs of a
/// Lanczos run, with `r = beta_{M+1} |z_M|`, widened by `options.margin`.
pub fn estimate_spectral_interval<O: LinearOperator + ?Sized>(
    op: &O,
    options: IntervalOptions,
) -> Result<SpectralInterval> {
    let n = op.dim();
    if n == 0 {
        return Err(DosError::InvalidParameter("empty operator".into()));
    }
    if options.steps < 2 && n >= 2 {
        return Err(DosError::InvalidParameter(format!(
            "interval estimation needs at least 2 Lanczos steps, got {}",
            options.steps
        )));
    }
    if !(options.margin >= 0.0) {
        return Err(DosError::InvalidParameter(format!(
            "margin must be non-negative, got {}",
            options.margin
        )));
    }
    let src = ProbeVectorSource::gaussian(options.seed, n);
    let steps = options.steps.min(n);
    let mut v0 = src.draw(0);
    if v0.iter().all(|&x| x == 0.0) {
        v0 = src.draw(1);
    }
    let f = lanczos_factorize(op, &v0, steps, LanczosOptions::default())?;
    let eig = f.eigen();
    let last = eig.last_components();
    let k = eig.dim() - 1;
    // after a breakdown the Ritz values are exact eigenvalues
    let (r_lo, r_hi) = if f.breakdown {
        (0.0, 0.0)
    } else {
        (f.beta_next * last[0].abs(), f.beta_next * last[k].abs())
    };
    let mut lower = eig.values[0] - r_lo;
    let mut upper = eig.values[k] + r_hi;
    if !lower.is_finite() || !upper.is_finite() {
        return Err(DosError::NonFinite {
            context: "spectral interval",
            step: steps,
        });
    }
    let width = upper - lower;
    let scale = width.max(lower.abs().max(upper.abs())).max(1.0);
    if width <= 1e-12 * scale {
        // degenerate spectrum, keep a window of nonzero width around it
        let pad = 0.5 * (1e-3 * scale);
        lower -= pad;
        upper += pad;
    }
    Ok(SpectralInterval { lower, upper }.widened(options.margin))
}

//! Five-point 2D Laplacian with a diagonal Gaussian potential.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SparseSymmetricMatrix;
use crate::error::{DosError, Result};

/// `height * exp(-|p - center|^2 / (2 width^2))` added to the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center_x: f64,
    pub center_y: f64,
    pub height: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn new(center_x: f64, center_y: f64, height: f64, width: f64) -> Self {
        GaussianBump {
            center_x,
            center_y,
            height,
            width,
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        self.height * (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp()
    }
}

impl FromStr for GaussianBump {
    type Err = DosError;

    /// Parses `cx,cy,height,width`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| DosError::InvalidParameter(format!("bump '{s}' is not cx,cy,h,w")))?;
        match parts.as_slice() {
            [cx, cy, h, w] if *w > 0.0 => Ok(GaussianBump::new(*cx, *cy, *h, *w)),
            [_, _, _, _] => Err(DosError::InvalidParameter(format!(
                "bump '{s}' needs a positive width"
            ))),
            _ => Err(DosError::InvalidParameter(format!(
                "bump '{s}' is not cx,cy,h,w"
            ))),
        }
    }
}

/// Grid shape plus potential of a modified Laplacian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSpec {
    pub nx: usize,
    pub ny: usize,
    pub bumps: Vec<GaussianBump>,
}

impl LaplacianSpec {
    /// Bump magnitudes for the reconstructed 750-point test problem.
    pub const BUMP_HEIGHT: f64 = 10.0;
    pub const BUMP_WIDTH: f64 = 1.0;

    /// The 30 x 25 reconstruction of the 750-dimensional benchmark with
    /// bumps centered at (4, 5) and (25, 15).
    pub fn benchmark() -> Self {
        LaplacianSpec {
            nx: 30,
            ny: 25,
            bumps: vec![
                GaussianBump::new(4.0, 5.0, Self::BUMP_HEIGHT, Self::BUMP_WIDTH),
                GaussianBump::new(25.0, 15.0, Self::BUMP_HEIGHT, Self::BUMP_WIDTH),
            ],
        }
    }

    pub fn build(&self) -> Result<SparseSymmetricMatrix> {
        generate_modified_laplacian_2d(self.nx, self.ny, &self.bumps)
    }

    /// Parses a grid shape like `30x25`.
    pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| DosError::InvalidParameter(format!("grid '{s}' is not NXxNY")))?;
        let nx = a
            .trim()
            .parse()
            .map_err(|_| DosError::InvalidParameter(format!("grid '{s}' is not NXxNY")))?;
        let ny = b
            .trim()
            .parse()
            .map_err(|_| DosError::InvalidParameter(format!("grid '{s}' is not NXxNY")))?;
        Ok((nx, ny))
    }
}

/// Zero-Dirichlet five-point Laplacian on an `nx x ny` grid of unit spacing.
///
/// Grid point `(i, j)`, 1-based, sits at coordinates `(i, j)` and has row
/// index `(j - 1) * nx + (i - 1)`.
pub fn generate_modified_laplacian_2d(
    nx: usize,
    ny: usize,
    bumps: &[GaussianBump],
) -> Result<SparseSymmetricMatrix> {
    if nx == 0 || ny == 0 {
        return Err(DosError::InvalidParameter(format!(
            "grid must be at least 1x1, got {nx}x{ny}"
        )));
    }
    let n = nx
        .checked_mul(ny)
        .ok_or_else(|| DosError::InvalidParameter("grid size overflows".into()))?;
    let index = |i: usize, j: usize| j * nx + i;
    let mut entries = Vec::with_capacity(3 * n);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i + 1) as f64;
            let y = (j + 1) as f64;
            let potential: f64 = bumps.iter().map(|b| b.eval(x, y)).sum();
            let row = index(i, j);
            entries.push((row, row, 4.0 + potential));
            if i > 0 {
                entries.push((row, index(i - 1, j), -1.0));
            }
            if j > 0 {
                entries.push((row, index(i, j - 1), -1.0));
            }
        }
    }
    SparseSymmetricMatrix::from_triplets(n, &entries, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let a = generate_modified_laplacian_2d(1, 1, &[]).unwrap();
        assert_eq!(a.to_dense()[(0, 0)], 4.0);
    }

    #[test]
    fn one_dimensional_slice() {
        let a = generate_modified_laplacian_2d(3, 1, &[]).unwrap();
        assert_eq!(a, SparseSymmetricMatrix::tridiagonal(3, 4.0, -1.0));
    }

    #[test]
    fn zero_size_rejected() {
        assert!(generate_modified_laplacian_2d(0, 3, &[]).is_err());
    }

    #[test]
    fn benchmark_is_750_symmetric_and_dominant() {
        let a = LaplacianSpec::benchmark().build().unwrap();
        assert_eq!(a.dim(), 750);
        a.check_symmetric().unwrap();
        for i in 0..a.dim() {
            let off: f64 = a
                .entries()
                .filter(|(r, c, _)| *r == i && *c != i)
                .map(|(_, _, v)| v.abs())
                .sum();
            assert!(a.get(i, i) >= off);
        }
    }

    #[test]
    fn bump_adds_to_diagonal() {
        let bump = GaussianBump::new(2.0, 1.0, 3.0, 1.0);
        let a = generate_modified_laplacian_2d(3, 1, &[bump]).unwrap();
        assert!((a.get(1, 1) - 7.0).abs() < 1e-15);
        assert!((a.get(0, 0) - (4.0 + 3.0 * (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn parse_inputs() {
        assert_eq!(LaplacianSpec::parse_shape("30x25").unwrap(), (30, 25));
        assert!(LaplacianSpec::parse_shape("30-25").is_err());
        let b: GaussianBump = "4,5,20,2".parse().unwrap();
        assert_eq!(b, GaussianBump::new(4.0, 5.0, 20.0, 2.0));
        assert!("4,5,20".parse::<GaussianBump>().is_err());
        assert!("4,5,20,0".parse::<GaussianBump>().is_err());
    }
}

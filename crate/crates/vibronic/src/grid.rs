//! Uniform 1-D grids and sinc-DVR (Colbert-Miller) derivative matrices.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = SpatialGrid { lo, hi, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Grid(format!(
                "need at least 3 points, got {}",
                self.n
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi <= self.lo {
            return Err(Error::Grid(format!(
                "bounds must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point equal to `x` within `tol`.
    pub fn index_of(&self, x: f64, tol: f64) -> Option<usize> {
        let f = (x - self.lo) / self.spacing();
        let i = f.round();
        if i < 0.0 || i >= self.n as f64 {
            return None;
        }
        let i = i as usize;
        if (self.point(i) - x).abs() <= tol {
            Some(i)
        } else {
            None
        }
    }

    /// Same spacing, twice the number of intervals.
    pub fn refined(&self) -> SpatialGrid {
        SpatialGrid {
            lo: self.lo,
            hi: self.hi,
            n: 2 * (self.n - 1) + 1,
        }
    }
}

/// Weight of grid point `x` on the negative side: 1 below zero, 0 above,
/// and 1/2 for a point at zero (within round-off of `spacing`), so mirrored
/// grids split their midpoint evenly.
pub fn left_side_weight(x: f64, spacing: f64) -> f64 {
    let tol = 1e-9 * spacing;
    if x < -tol {
        1.0
    } else if x <= tol {
        0.5
    } else {
        0.0
    }
}

/// Sinc-DVR second-derivative matrix d²/dx² on `n` points with spacing `dx`.
pub fn sinc_dvr_second_derivative(n: usize, dx: f64) -> Array2<f64> {
    let pi2 = std::f64::consts::PI.powi(2);
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            -pi2 / 3.0 / (dx * dx)
        } else {
            let d = i as i64 - j as i64;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * sign / ((d * d) as f64 * dx * dx)
        }
    })
}

/// Sinc-DVR first-derivative matrix d/dx (antisymmetric).
pub fn sinc_dvr_first_derivative(n: usize, dx: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            let d = i as i64 - j as i64;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            sign / (d as f64 * dx)
        }
    })
}

/// Kinetic energy matrix -1/(2m) d²/dx².
pub fn sinc_dvr_kinetic(n: usize, dx: f64, mass: f64) -> Array2<f64> {
    sinc_dvr_second_derivative(n, dx).mapv(|x| -x / (2.0 * mass))
}

pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => dx * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Linear interpolation weights for `x` on a uniform grid, clamped to the ends.
/// Returns `(i, w)` with value = (1-w) f[i] + w f[i+1], and whether clamping happened.
pub fn interp_weights(grid: &SpatialGrid, x: f64) -> (usize, f64, bool) {
    let f = (x - grid.lo) / grid.spacing();
    if f <= 0.0 {
        return (0, 0.0, f < -1e-9);
    }
    let last = (grid.n - 1) as f64;
    if f >= last {
        return (grid.n - 2, 1.0, f > last + 1e-9);
    }
    let i = f.floor() as usize;
    (i, f - i as f64, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_points() {
        let g = SpatialGrid::new(-9.0, 9.0, 601).unwrap();
        assert!((g.spacing() - 0.03).abs() < 1e-15);
        assert_eq!(g.points().len(), 601);
        assert_eq!(g.point(600), 9.0);
        assert_eq!(g.index_of(0.0, 1e-12), Some(300));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(0.0, 1.0, 2).is_err());
        assert!(SpatialGrid::new(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn second_derivative_of_gaussian() {
        let g = SpatialGrid::new(-8.0, 8.0, 161).unwrap();
        let x = g.points();
        let f: Vec<f64> = x.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let d2 = sinc_dvr_second_derivative(g.n, g.spacing());
        for (i, xi) in x.iter().enumerate() {
            let v: f64 = (0..g.n).map(|j| d2[[i, j]] * f[j]).sum();
            let exact = (xi * xi - 1.0) * (-xi * xi / 2.0).exp();
            assert!((v - exact).abs() < 1e-8, "{v} {exact}");
        }
    }

    #[test]
    fn first_derivative_antisymmetric() {
        let d1 = sinc_dvr_first_derivative(7, 0.1);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(d1[[i, j]], -d1[[j, i]]);
            }
        }
    }

    #[test]
    fn trapezoid_linear_exact() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert!((trapezoid(&v, 1.0) - 4.5).abs() < 1e-15);
    }
}

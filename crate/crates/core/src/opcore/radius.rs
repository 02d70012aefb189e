use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use super::{c64, ensure_square, hermitian_part, ComplexMatrix};
use crate::par::{self, Backend};
use crate::{DilationError, Result};

pub const DEFAULT_RADIUS_GRID: usize = 1024;

/// Grid lower bound for the numerical radius:
/// `max_theta lambda_max(Re(e^{i theta} T))` over `grid_points` uniform angles.
pub fn numerical_radius(t: &ComplexMatrix, grid_points: usize) -> Result<f64> {
    numerical_radius_with(t, grid_points, Backend::default())
}

pub fn numerical_radius_with(t: &ComplexMatrix, grid_points: usize, backend: Backend) -> Result<f64> {
    let n = ensure_square(t)?;
    if grid_points < 4 {
        return Err(DilationError::InvalidArgument(format!("grid_points = {grid_points} < 4")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let thetas: Vec<f64> = (0..grid_points).map(|k| 2.0 * PI * k as f64 / grid_points as f64).collect();
    let tops = par::map(backend, &thetas, |&theta| {
        let rotated = t * c64::from_polar(1.0, theta);
        SymmetricEigen::new(hermitian_part(&rotated)).eigenvalues.max()
    });
    Ok(tops.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{from_real, identity, zeros};

    #[test]
    fn trivial_cases() {
        assert_eq!(numerical_radius(&zeros(2, 2), 16).unwrap(), 0.0);
        assert!((numerical_radius(&identity(3), 16).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nilpotent_disk() {
        let t = from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let w = numerical_radius(&t, DEFAULT_RADIUS_GRID).unwrap();
        assert!((w - 1.0).abs() < 1e-6);
        // oracle: sup over a dense grid of unit vectors (cos a, e^{ib} sin a)
        let mut best = 0.0f64;
        for i in 0..=200 {
            let a = PI / 2.0 * i as f64 / 200.0;
            for j in 0..64 {
                let bb = 2.0 * PI * j as f64 / 64.0;
                let h = [c64::new(a.cos(), 0.0), c64::from_polar(a.sin(), bb)];
                let th = [t[(0, 1)] * h[1], c64::new(0.0, 0.0)];
                let q = h[0].conj() * th[0] + h[1].conj() * th[1];
                best = best.max(q.norm());
            }
        }
        assert!((best - w).abs() < 1e-3);
    }

    #[test]
    fn rejects_small_grid_and_rectangular() {
        assert!(numerical_radius(&identity(2), 3).is_err());
        assert!(numerical_radius(&zeros(2, 3), 8).is_err());
    }

    #[test]
    fn backends_agree() {
        let t = from_real(2, 2, &[0.3, 1.1, -0.4, 0.2]);
        let a = numerical_radius_with(&t, 256, Backend::Sequential).unwrap();
        let b = numerical_radius_with(&t, 256, Backend::Parallel).unwrap();
        assert_eq!(a, b);
    }
}

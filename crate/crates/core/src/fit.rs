//! Small polynomial least-squares fits.

use nalgebra::{DMatrix, DVector};

/// Coefficients `c₀ + c₁x + … + c_d x^d` minimizing the squared residual,
/// or `None` when there are fewer than `degree + 1` points or the design
/// matrix is rank deficient.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Option<Vec<f64>> {
    assert_eq!(x.len(), y.len());
    if x.len() < degree + 1 {
        return None;
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |r, c| x[r].powi(c as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-13 * smax {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    Some(sol.iter().copied().collect())
}

/// Ratio of extreme singular values of the monomial design matrix.
pub fn condition_number(x: &[f64], degree: usize) -> f64 {
    if x.len() < degree + 1 {
        return f64::INFINITY;
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |r, c| x[r].powi(c as i32));
    let sv = a.singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Slope of the least-squares line through the points.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    polyfit(x, y, 1).map(|c| c[1])
}

/// Leading coefficient of the least-squares parabola.
pub fn curvature(x: &[f64], y: &[f64]) -> Option<f64> {
    polyfit(x, y, 2).map(|c| c[2])
}

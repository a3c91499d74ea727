//! Largest singular value, by full SVD and by power iteration.

use nalgebra::DMatrix;

use crate::raster::Plane;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

fn to_matrix(plane: &Plane) -> DMatrix<f64> {
    DMatrix::from_row_slice(plane.height(), plane.width(), plane.data())
}

/// Largest singular value from a full singular value decomposition.
pub fn max_singular_value(plane: &Plane) -> f64 {
    if plane.is_empty() {
        return 0.0;
    }
    to_matrix(plane)
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Spectral norm ||A||_2 by power iteration on A^T A.
///
/// Stops when the estimate changes by less than [`POWER_TOLERANCE`]
/// relative, or after [`POWER_MAX_ITERATIONS`] steps.
pub fn spectral_norm(plane: &Plane) -> f64 {
    let (cols, rows) = plane.dims();
    if plane.is_empty() {
        return 0.0;
    }
    let a = plane.data();

    // Deterministic start vector with no special alignment.
    let mut v: Vec<f64> = (0..cols)
        .map(|i| 1.0 + ((i as u64 * 0x9E37_79B9) % 1000) as f64 / 4000.0)
        .collect();
    normalize(&mut v);
    let mut av = vec![0.0; rows];
    let mut sigma = 0.0;

    for _ in 0..POWER_MAX_ITERATIONS {
        // av = A v
        for (r, out) in av.iter_mut().enumerate() {
            let row = &a[r * cols..(r + 1) * cols];
            *out = row.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let next = norm(&av);
        if next == 0.0 {
            return 0.0;
        }
        // v = A^T av
        v.iter_mut().for_each(|x| *x = 0.0);
        for (r, &s) in av.iter().enumerate() {
            let row = &a[r * cols..(r + 1) * cols];
            for (x, &m) in v.iter_mut().zip(row) {
                *x += m * s;
            }
        }
        normalize(&mut v);
        let converged = (next - sigma).abs() <= POWER_TOLERANCE * next;
        sigma = next;
        if converged {
            break;
        }
    }
    sigma
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

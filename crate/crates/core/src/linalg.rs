//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `A x = b` for symmetric positive (semi)definite `A` given in
/// row-major order. A scaled diagonal jitter is retried when the plain
/// Cholesky factorization fails.
pub fn solve_spd(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let d = b.len();
    debug_assert_eq!(a.len(), d * d);
    if d == 0 {
        return Ok(Vec::new());
    }
    let matrix = DMatrix::from_row_slice(d, d, a);
    let rhs = DVector::from_column_slice(b);
    if let Some(chol) = matrix.clone().cholesky() {
        return Ok(chol.solve(&rhs).iter().copied().collect());
    }
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::Singular);
    }
    for jitter in [1e-12, 1e-10, 1e-8] {
        let mut m = matrix.clone();
        for i in 0..d {
            m[(i, i)] += jitter * scale;
        }
        if let Some(chol) = m.cholesky() {
            return Ok(chol.solve(&rhs).iter().copied().collect());
        }
    }
    Err(Error::Singular)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = solve_spd(&[4.0, 1.0, 1.0, 3.0], &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_singular() {
        assert!(matches!(solve_spd(&[0.0; 4], &[1.0, 1.0]), Err(Error::Singular)));
    }
}

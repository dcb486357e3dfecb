//! Dense square solves for the per-level systems.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::{CoreError, Result};

/// Pivots at or below this magnitude make the system singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Solution of `A x = b` with its infinity-norm residual.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub residual: f64,
}

/// Solves `A x = b` for a row-major `dim x dim` matrix by LU with partial
/// pivoting and checks `|A x - b|_inf <= 1e-6 (1 + |b|_inf)`.
pub fn solve_linear_system(a: &[f64], dim: usize, b: &[f64]) -> Result<LinearSolution> {
    assert_eq!(a.len(), dim * dim, "matrix is not {dim} x {dim}");
    assert_eq!(b.len(), dim, "right-hand side length");
    if dim == 0 {
        return Ok(LinearSolution {
            x: Vec::new(),
            residual: 0.0,
        });
    }
    let m = DMatrix::from_row_slice(dim, dim, a);
    let rhs = DVector::from_column_slice(b);
    let lu = m.clone().lu();
    let smallest = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if smallest <= SINGULAR_PIVOT {
        return Err(CoreError::SingularMatrix(SINGULAR_PIVOT));
    }
    let x = lu
        .solve(&rhs)
        .ok_or(CoreError::SingularMatrix(SINGULAR_PIVOT))?;
    let residual = (&m * &x - &rhs).amax();
    let tolerance = 1e-6 * (1.0 + rhs.amax());
    if residual.is_nan() || residual > tolerance {
        return Err(CoreError::Residual {
            residual,
            tolerance,
        });
    }
    Ok(LinearSolution {
        x: x.iter().copied().collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = [3.0, -1.0, 2.5];
        let mut a = alloc::vec![0.0; 9];
        for t in 0..3 {
            a[t * 4] = 1.0;
        }
        assert_eq!(solve_linear_system(&a, 3, &b).unwrap().x, b);
    }

    #[test]
    fn diagonal_system() {
        let s = solve_linear_system(&[2.0, 0.0, 0.0, 4.0], 2, &[2.0, 8.0]).unwrap();
        assert_eq!(s.x, [1.0, 2.0]);
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn rank_deficient_is_singular() {
        assert!(matches!(
            solve_linear_system(&[1.0, 1.0, 2.0, 2.0], 2, &[1.0, 3.0]),
            Err(CoreError::SingularMatrix(_))
        ));
    }

    #[test]
    fn needs_pivoting() {
        let s = solve_linear_system(&[0.0, 1.0, 1.0, 0.0], 2, &[5.0, 7.0]).unwrap();
        assert_eq!(s.x, [7.0, 5.0]);
    }
}

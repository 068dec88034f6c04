//! Small dense complex linear-algebra helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::settings::MatrixNorm;

pub type CMatrix = DMatrix<Complex64>;

pub fn matrix_norm(m: &CMatrix, norm: MatrixNorm) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match norm {
        MatrixNorm::Operator2 => {
            if m.nrows() == 1 && m.ncols() == 1 {
                m[(0, 0)].norm()
            } else {
                m.clone().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
            }
        }
        MatrixNorm::Frobenius => m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
        MatrixNorm::MaxRowSum => m
            .row_iter()
            .map(|r| r.iter().map(|c| c.norm()).sum::<f64>())
            .fold(0.0, f64::max),
    }
}

pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Ratio of the smallest to the largest singular value.
pub fn reciprocal_condition(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0, |a: f64, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

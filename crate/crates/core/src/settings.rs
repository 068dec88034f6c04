//! Tolerances and budgets shared by the factorization kernels.

use serde::{Deserialize, Serialize};

/// Fringe coefficients at or below this magnitude are dropped when a series
/// is canonicalized.
pub const COEFF_EPS: f64 = 1e-14;

/// Points passed to circle evaluation must satisfy `||z| - 1| <= CIRCLE_TOL`.
pub const CIRCLE_TOL: f64 = 1e-12;

/// Band cap and tail tolerance applied whenever an operation grows a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Maximum number of exponents (kmax - kmin + 1) a result may occupy.
    pub band_cap: usize,
    /// Largest l1 mass that may be discarded when enforcing the cap.
    pub tail_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            band_cap: 512,
            tail_tol: 1e-10,
        }
    }
}

impl Truncation {
    /// No cap at all; used for residual computations that must be exact.
    pub const UNBOUNDED: Truncation = Truncation {
        band_cap: usize::MAX,
        tail_tol: f64::INFINITY,
    };
}

/// Submultiplicative norm used on matrix-valued Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixNorm {
    /// Largest singular value.
    #[default]
    Operator2,
    Frobenius,
    /// Induced infinity norm (maximum absolute row sum).
    MaxRowSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub truncation: Truncation,
    pub matrix_norm: MatrixNorm,
    /// Smallest modulus / singular value on the circle still counted as invertible.
    pub invertibility_floor: f64,
    /// Target for `||g h - 1||_W` when inverting.
    pub inversion_tol: f64,
    /// Reconstruction tolerance every factorization must meet.
    pub residual_tol: f64,
    /// Circle samples used for verification and sup-norm checks.
    pub samples: usize,
    /// Truncation order of the BCH series.
    pub bch_order: usize,
    /// Radius of the ball on which the BCH series is used.
    pub bch_radius: f64,
    /// Residual target of the split solver.
    pub solver_tol: f64,
    /// Step size below which the split iteration stops.
    pub solver_step_tol: f64,
    pub solver_max_iter: usize,
    /// Largest finite-section degree tried by the Toeplitz solves.
    pub section_cap: usize,
    /// Reciprocal condition number below which a finite section counts as singular.
    pub rcond_floor: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            truncation: Truncation::default(),
            matrix_norm: MatrixNorm::Operator2,
            invertibility_floor: 1e-8,
            inversion_tol: 1e-10,
            residual_tol: 1e-8,
            samples: 256,
            bch_order: 6,
            bch_radius: 0.125,
            solver_tol: 1e-10,
            solver_step_tol: 1e-12,
            solver_max_iter: 100,
            section_cap: 256,
            rcond_floor: 1e-10,
        }
    }
}

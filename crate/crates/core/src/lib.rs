//! Birkhoff factorization of loops on the unit circle.
//!
//! Loops are banded Laurent series (scalar or matrix valued). The crate
//! factors an invertible scalar loop as `g = g₊ · z^κ · g₋` and an invertible
//! matrix loop as `g = A₊ · diag(z^{κ_1}, …, z^{κ_n}) · A₋`, where the plus
//! factor extends holomorphically (and invertibly) into the unit disk and the
//! minus factor into its exterior, including the point at infinity.
//!
//! Near the identity of a matrix Lie group the factorization is also
//! available through a contraction fixed point on the Baker–Campbell–Hausdorff
//! product, see [`bch`].

// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bch;
pub mod error;
pub mod format;
pub mod laurent;
pub mod linalg;
pub mod matrix;
pub mod matrix_birkhoff;
pub mod norms;
pub mod sample;
pub mod scalar;
pub mod settings;

pub use bch::{LieAlgebraRep, LoopAlgebraElement, NormedSpace};
pub use error::{Error, Result};
pub use format::{emit_loop_spec, parse_loop_spec, LoopSpec};
pub use laurent::{ExteriorPoint, LaurentSeries};
pub use linalg::CMatrix;
pub use matrix::MatrixLoop;
pub use matrix_birkhoff::{EnumerationOrder, MatrixFactorization, VerifyReport};
pub use norms::{CircleLoop, Invertibility, NormReport};
pub use num_complex::Complex64;
pub use scalar::{ScalarFactorization, ScalarRoute};
pub use settings::{MatrixNorm, Settings, Truncation};

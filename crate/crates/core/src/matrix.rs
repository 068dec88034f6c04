//! Square matrices of Laurent series.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::{root_of_unity, LaurentSeries};
use crate::linalg::CMatrix;
use crate::settings::{Truncation, CIRCLE_TOL};

/// An `n × n` loop stored entrywise as banded Laurent series (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLoop {
    n: usize,
    entries: Vec<LaurentSeries>,
}

impl MatrixLoop {
    pub fn new(n: usize, entries: Vec<LaurentSeries>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} loop, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> LaurentSeries) -> Self {
        assert!(n > 0, "matrix dimension must be at least 1");
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| LaurentSeries::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                LaurentSeries::one()
            } else {
                LaurentSeries::zero()
            }
        })
    }

    /// The constant loop `z ↦ c`.
    pub fn constant(c: &CMatrix) -> Self {
        assert!(c.is_square(), "constant loop needs a square matrix");
        Self::from_fn(c.nrows(), |i, j| LaurentSeries::constant(c[(i, j)]))
    }

    /// `diag(z^{k_1}, …, z^{k_n})`.
    pub fn diag_monomials(exponents: &[i64]) -> Self {
        Self::from_fn(exponents.len(), |i, j| {
            if i == j {
                LaurentSeries::monomial(Complex64::new(1.0, 0.0), exponents[i])
            } else {
                LaurentSeries::zero()
            }
        })
    }

    pub fn scalar(f: LaurentSeries) -> Self {
        Self { n: 1, entries: vec![f] }
    }

    /// Assembles `Σ_k coeffs[k - kmin] z^k` from its matrix coefficients.
    pub fn from_coefficients(kmin: i64, coeffs: &[CMatrix]) -> Result<Self> {
        let n = coeffs
            .first()
            .map(|c| c.nrows())
            .ok_or_else(|| Error::invalid("no coefficients given"))?;
        if coeffs.iter().any(|c| c.nrows() != n || c.ncols() != n) {
            return Err(Error::invalid("coefficient matrices must all be n x n"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(LaurentSeries::new(kmin, coeffs.iter().map(|c| c[(i, j)]).collect())?);
            }
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[LaurentSeries] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<LaurentSeries> {
        self.entries
    }

    /// Smallest band containing every nonzero entry; `(0, 0)` for the zero loop.
    pub fn band(&self) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for e in self.entries.iter().filter(|e| !e.is_zero()) {
            lo = lo.min(e.kmin());
            hi = hi.max(e.kmax());
        }
        if lo > hi {
            (0, 0)
        } else {
            (lo, hi)
        }
    }

    pub fn width(&self) -> usize {
        let (lo, hi) = self.band();
        (hi - lo + 1) as usize
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentSeries::is_zero)
    }

    /// The matrix Fourier coefficient of `z^k`.
    pub fn coefficient(&self, k: i64) -> CMatrix {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j).fourier_coeff(k))
    }

    pub fn map_entries(&self, f: impl Fn(&LaurentSeries) -> LaurentSeries) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_map_entries(&self, f: impl Fn(&LaurentSeries) -> Result<LaurentSeries>) -> Result<Self> {
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    fn zip_entries(&self, other: &Self, f: impl Fn(&LaurentSeries, &LaurentSeries) -> LaurentSeries) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_entries(other, LaurentSeries::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_entries(other, LaurentSeries::sub)
    }

    pub fn neg(&self) -> Self {
        self.map_entries(LaurentSeries::neg)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_entries(|e| e.scale(c))
    }

    pub fn shift(&self, m: i64) -> Self {
        self.map_entries(|e| e.shift(m))
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        self.map_entries(|e| e.restrict(lo, hi))
    }

    pub fn reflect(&self) -> Self {
        self.map_entries(LaurentSeries::reflect)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.entry(j, i).clone())
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul_constant(&self, c: &CMatrix) -> Self {
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(LaurentSeries::zero(), |acc, k| {
                acc.add(&self.entry(k, j).scale(c[(i, k)]))
            })
        })
    }

    /// Right multiplication by a constant matrix.
    pub fn right_mul_constant(&self, c: &CMatrix) -> Self {
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(LaurentSeries::zero(), |acc, k| {
                acc.add(&self.entry(i, k).scale(c[(k, j)]))
            })
        })
    }

    /// `D · self` with `D = diag(z^{k_i})`: row `i` is shifted by `k_i`.
    pub fn shift_rows(&self, exponents: &[i64]) -> Self {
        Self::from_fn(self.n, |i, j| self.entry(i, j).shift(exponents[i]))
    }

    /// `self · D` with `D = diag(z^{k_j})`: column `j` is shifted by `k_j`.
    pub fn shift_cols(&self, exponents: &[i64]) -> Self {
        Self::from_fn(self.n, |i, j| self.entry(i, j).shift(exponents[j]))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_with(other, &Truncation::default())
    }

    /// Matrix product with Cauchy products on the entries.
    pub fn mul_with(&self, other: &Self, trunc: &Truncation) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::invalid(format!("dimension mismatch: {} vs {}", self.n, other.n)));
        }
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = LaurentSeries::zero();
                for k in 0..n {
                    let prod = self.entry(i, k).mul_with(other.entry(k, j), &Truncation::UNBOUNDED)?;
                    acc = acc.add(&prod);
                }
                entries.push(acc.capped(trunc)?);
            }
        }
        Ok(Self { n, entries })
    }

    /// Evaluates every entry at `z` (no domain check).
    pub fn eval_at(&self, z: Complex64) -> CMatrix {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval_at(z))
    }

    pub fn eval_circle(&self, z: Complex64) -> Result<CMatrix> {
        if (z.norm() - 1.0).abs() > CIRCLE_TOL {
            return Err(Error::invalid(format!("|z| = {} is not on the unit circle", z.norm())));
        }
        Ok(self.eval_at(z))
    }

    /// Values at the `count` roots of unity.
    pub fn samples(&self, count: usize) -> Vec<CMatrix> {
        let per_entry: Vec<Vec<Complex64>> = self.entries.iter().map(|e| e.samples(count)).collect();
        (0..count)
            .map(|s| DMatrix::from_fn(self.n, self.n, |i, j| per_entry[i * self.n + j][s]))
            .collect()
    }

    /// Inverse of [`MatrixLoop::samples`] for the band `kmin..=kmax`.
    pub fn from_samples(values: &[CMatrix], kmin: i64, kmax: i64) -> Result<Self> {
        let n = values
            .first()
            .map(|v| v.nrows())
            .ok_or_else(|| Error::invalid("no samples given"))?;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let vals: Vec<Complex64> = values.iter().map(|v| v[(i, j)]).collect();
                entries.push(LaurentSeries::from_samples(&vals, kmin, kmax)?);
            }
        }
        Self::new(n, entries)
    }

    /// Determinant as a Laurent series. The band of `det` is contained in
    /// `[n·kmin, n·kmax]`, so sampling at more points than that width and
    /// transforming back is exact up to rounding.
    pub fn det(&self) -> Result<LaurentSeries> {
        if self.n == 1 {
            return Ok(self.entries[0].clone());
        }
        let (lo, hi) = self.band();
        let n = self.n as i64;
        let (dlo, dhi) = (n * lo, n * hi);
        let count = ((dhi - dlo + 1) as usize).next_power_of_two() * 2;
        let vals: Vec<Complex64> = self.samples(count).into_iter().map(|m| m.determinant()).collect();
        LaurentSeries::from_samples(&vals, dlo, dhi)
    }

    /// Sup over `count` circle samples of the operator 2-norm of `self(z)`.
    pub fn sup_circle(&self, count: usize) -> f64 {
        self.samples(count)
            .iter()
            .map(|m| crate::linalg::matrix_norm(m, crate::settings::MatrixNorm::Operator2))
            .fold(0.0, f64::max)
    }
}

/// Evenly spaced circle points, mostly for tests and verification sweeps.
pub fn circle_points(count: usize) -> Vec<Complex64> {
    (0..count).map(|j| root_of_unity(j, count)).collect()
}

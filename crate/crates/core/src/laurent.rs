//! Banded Laurent series on the unit circle.
//!
//! A [`LaurentSeries`] stores the Fourier coefficients `f_k` for
//! `kmin <= k <= kmax` of a function on the circle, with the convention
//! `f_k = ∫_0^1 e^{-2πikt} f(e^{2πit}) dt`, so the monomial `z^m` has a single
//! coefficient `1` at `k = m`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::settings::{Truncation, CIRCLE_TOL, COEFF_EPS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn fft_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// The `j`-th of `n` equispaced points `e^{2πij/n}` on the circle.
pub fn root_of_unity(j: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)
}

/// A point of the closed exterior of the disk, including the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExteriorPoint {
    Finite(Complex64),
    Infinity,
}

/// A banded two-sided sequence of complex Fourier coefficients.
///
/// Always canonical: the outermost coefficients exceed [`COEFF_EPS`] in
/// modulus, or the series is the zero series stored as band `(0, 0)`.
#[derive(Clone, PartialEq)]
pub struct LaurentSeries {
    kmin: i64,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaurentSeries")
            .field("kmin", &self.kmin)
            .field("kmax", &self.kmax())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Default for LaurentSeries {
    fn default() -> Self {
        Self::zero()
    }
}

impl LaurentSeries {
    /// Builds a series whose `i`-th coefficient multiplies `z^{kmin + i}`.
    pub fn new(kmin: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid(format!(
                "coefficient of z^{} is not finite",
                kmin + bad as i64
            )));
        }
        Ok(Self::from_raw(kmin, coeffs))
    }

    pub(crate) fn from_raw(kmin: i64, coeffs: Vec<Complex64>) -> Self {
        let mut s = Self { kmin, coeffs };
        s.canonicalize();
        s
    }

    /// Builds a series from real coefficients.
    pub fn from_real(kmin: i64, coeffs: &[f64]) -> Self {
        Self::from_raw(kmin, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self {
            kmin: 0,
            coeffs: vec![ZERO],
        }
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0)
    }

    /// `c · z^k`.
    pub fn monomial(c: Complex64, k: i64) -> Self {
        Self::from_raw(k, vec![c])
    }

    fn canonicalize(&mut self) {
        let first = self.coeffs.iter().position(|c| c.norm() > COEFF_EPS);
        match first {
            None => *self = Self::zero(),
            Some(first) => {
                let last = self.coeffs.iter().rposition(|c| c.norm() > COEFF_EPS).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..first);
                self.kmin += first as i64;
            }
        }
    }

    pub fn kmin(&self) -> i64 {
        self.kmin
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.coeffs.len() as i64 - 1
    }

    /// Number of exponents spanned, `kmax - kmin + 1`.
    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    /// The Fourier coefficient of `z^k` (zero outside the band).
    pub fn fourier_coeff(&self, k: i64) -> Complex64 {
        if k < self.kmin || k > self.kmax() {
            ZERO
        } else {
            self.coeffs[(k - self.kmin) as usize]
        }
    }

    /// Iterates over `(exponent, coefficient)` pairs of the band.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.kmin + i as i64, c))
    }

    /// Keeps only the exponents in `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        let lo = lo.max(self.kmin);
        let hi = hi.min(self.kmax());
        if lo > hi {
            return Self::zero();
        }
        let a = (lo - self.kmin) as usize;
        let b = (hi - self.kmin) as usize;
        Self::from_raw(lo, self.coeffs[a..=b].to_vec())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let lo = self.kmin.min(other.kmin);
        let hi = self.kmax().max(other.kmax());
        let coeffs = (lo..=hi)
            .map(|k| op(self.fourier_coeff(k), other.fourier_coeff(k)))
            .collect();
        Self::from_raw(lo, coeffs)
    }

    pub fn neg(&self) -> Self {
        self.scale(-ONE)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(self.kmin, self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// `z^m · f`.
    pub fn shift(&self, m: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            kmin: self.kmin + m,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `z ↦ f(1/z)`: the coefficient of `z^k` moves to `z^{-k}`.
    pub fn reflect(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self::from_raw(-self.kmax(), coeffs)
    }

    /// Cauchy product under the default truncation policy.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_with(other, &Truncation::default())
    }

    /// Cauchy product `c_k = Σ_l a_l b_{k-l}`, with the band capped per `trunc`.
    pub fn mul_with(&self, other: &Self, trunc: &Truncation) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&other.coeffs) {
                *o += a * b;
            }
        }
        Self::from_raw(self.kmin + other.kmin, out).capped(trunc)
    }

    /// Enforces the band cap by shaving the smaller-magnitude end until the
    /// band fits, failing if the discarded l1 mass exceeds the tolerance.
    pub fn capped(self, trunc: &Truncation) -> Result<Self> {
        let (s, tail) = self.truncate_band(trunc.band_cap);
        if tail > trunc.tail_tol {
            return Err(Error::Truncation {
                tail_mass: tail,
                tolerance: trunc.tail_tol,
            });
        }
        Ok(s)
    }

    /// Shaves the band down to at most `cap` exponents; returns the discarded l1 mass.
    pub fn truncate_band(mut self, cap: usize) -> (Self, f64) {
        let cap = cap.max(1);
        if self.coeffs.len() <= cap {
            return (self, 0.0);
        }
        let mut lo = 0;
        let mut hi = self.coeffs.len();
        let mut tail = 0.0;
        while hi - lo > cap {
            let (a, b) = (self.coeffs[lo].norm(), self.coeffs[hi - 1].norm());
            if a <= b {
                tail += a;
                lo += 1;
            } else {
                tail += b;
                hi -= 1;
            }
        }
        self.coeffs.truncate(hi);
        self.coeffs.drain(..lo);
        self.kmin += lo as i64;
        self.canonicalize();
        (self, tail)
    }

    /// Σ_k f_k z^k for any nonzero `z` (or `z = 0` when `kmin >= 0`).
    pub fn eval_at(&self, z: Complex64) -> Complex64 {
        let mut pos = ZERO;
        let mut neg = ZERO;
        let start = self.kmin.max(0);
        if self.kmax() >= 0 {
            for k in (start..=self.kmax()).rev() {
                pos = pos * z + self.fourier_coeff(k);
            }
            if start > 0 {
                pos *= z.powi(start as i32);
            }
        }
        if self.kmin < 0 {
            let w = z.inv();
            let end = self.kmax().min(-1);
            // Σ_{k=kmin}^{end} f_k w^{-k}
            for k in self.kmin..=end {
                neg = neg * w + self.fourier_coeff(k);
            }
            neg *= w.powi((-end) as i32);
        }
        pos + neg
    }

    /// Evaluates the loop at a point of the unit circle.
    pub fn eval_circle(&self, z: Complex64) -> Result<Complex64> {
        if (z.norm() - 1.0).abs() > CIRCLE_TOL {
            return Err(Error::invalid(format!("|z| = {} is not on the unit circle", z.norm())));
        }
        Ok(self.eval_at(z))
    }

    /// The holomorphic extension `Σ_{k>=0} f_k z^k` to the closed unit disk.
    pub fn eval_disk(&self, z: Complex64) -> Result<Complex64> {
        if self.kmin < 0 {
            return Err(Error::domain("series has negative exponents; no extension to the disk"));
        }
        if z.norm() > 1.0 + CIRCLE_TOL {
            return Err(Error::invalid(format!(
                "|z| = {} lies outside the closed disk",
                z.norm()
            )));
        }
        Ok(self.eval_at(z))
    }

    /// The holomorphic extension `Σ_{k>=1} f_{-k} z^{-k}` to the exterior
    /// of the disk, vanishing at infinity.
    pub fn eval_exterior(&self, z: ExteriorPoint) -> Result<Complex64> {
        if self.kmax() >= 0 && !self.is_zero() {
            return Err(Error::domain(
                "series has nonnegative exponents; no extension vanishing at infinity",
            ));
        }
        match z {
            ExteriorPoint::Infinity => Ok(ZERO),
            ExteriorPoint::Finite(z) => {
                if z.norm() < 1.0 - CIRCLE_TOL {
                    return Err(Error::invalid(format!("|z| = {} lies inside the open disk", z.norm())));
                }
                Ok(self.eval_at(z))
            }
        }
    }

    /// Values at the `n` points `e^{2πij/n}`, `j = 0..n`.
    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        assert!(n > 0, "sample count must be positive");
        let mut buf = vec![ZERO; n];
        for (k, c) in self.terms() {
            buf[k.rem_euclid(n as i64) as usize] += c;
        }
        fft_inverse(n).process(&mut buf);
        buf
    }

    /// Recovers the series with band `kmin..=kmax` from its values at the
    /// `n = values.len()` roots of unity. Exponents congruent mod `n` alias.
    pub fn from_samples(values: &[Complex64], kmin: i64, kmax: i64) -> Result<Self> {
        let n = values.len();
        if kmin > kmax {
            return Err(Error::invalid(format!("empty band ({kmin}, {kmax})")));
        }
        if (kmax - kmin) as u64 >= n as u64 {
            return Err(Error::invalid(format!(
                "band ({kmin}, {kmax}) is wider than {} samples can resolve",
                n
            )));
        }
        let mut buf = values.to_vec();
        fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let coeffs = (kmin..=kmax)
            .map(|k| buf[k.rem_euclid(n as i64) as usize] * scale)
            .collect();
        Self::new(kmin, coeffs)
    }

    pub fn map_coeffs(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.kmin, self.coeffs.iter().map(|&c| f(c)).collect())
    }

    /// Sum of coefficient moduli.
    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

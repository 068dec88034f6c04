//! Random loops for property tests, benchmarks and the self-check command.
//! All generators are driven by a caller-supplied RNG so runs are reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::laurent::LaurentSeries;
use crate::linalg::CMatrix;
use crate::matrix::MatrixLoop;

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Coefficients `N(0,1) + iN(0,1)` on exponents `lo..=hi`.
pub fn gaussian_series<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64) -> LaurentSeries {
    LaurentSeries::new(lo, (lo..=hi).map(|_| complex_normal(rng)).collect()).expect("finite")
}

/// A Gaussian series on a random sub-band of `[-reach, reach]`.
pub fn random_banded_series<R: Rng + ?Sized>(rng: &mut R, reach: i64) -> LaurentSeries {
    let a = rng.random_range(-reach..=reach);
    let b = rng.random_range(-reach..=reach);
    gaussian_series(rng, a.min(b), a.max(b))
}

/// Rescales `f` to the given Wiener norm (zero stays zero).
pub fn with_wiener_norm(f: &LaurentSeries, norm: f64) -> LaurentSeries {
    let w = f.l1();
    if w == 0.0 {
        f.clone()
    } else {
        f.scale(Complex64::new(norm / w, 0.0))
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

/// `n × n` loop with Gaussian coefficient matrices on `lo..=hi`.
pub fn gaussian_matrix_loop<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: i64, hi: i64) -> MatrixLoop {
    MatrixLoop::from_fn(n, |_, _| gaussian_series(rng, lo, hi))
}

/// Random polynomial with `kmin..=kmax`, no root within `gap` of the unit
/// circle, together with the number of roots inside the disk.
pub fn laurent_poly_off_circle<R: Rng + ?Sized>(
    rng: &mut R,
    kmin: i64,
    degree: usize,
    gap: f64,
) -> (LaurentSeries, usize) {
    let mut poly = LaurentSeries::constant(complex_normal(rng));
    let mut inside = 0;
    for _ in 0..degree {
        let root = loop {
            let r: f64 = rng.random_range(0.2..2.5);
            if (r - 1.0).abs() > gap {
                break Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            }
        };
        if root.norm() < 1.0 {
            inside += 1;
        }
        let factor = LaurentSeries::new(0, vec![-root, Complex64::new(1.0, 0.0)]).expect("finite");
        poly = poly.mul(&factor).expect("small product");
    }
    (poly.shift(kmin), inside)
}

/// Unit upper-triangular loop with polynomial entries in `z` of degree ≤ `degree`.
pub fn unit_upper_plus<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: i64, scale: f64) -> MatrixLoop {
    let s = Complex64::new(scale, 0.0);
    MatrixLoop::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => LaurentSeries::one(),
        std::cmp::Ordering::Less => gaussian_series(rng, 0, degree).scale(s),
        std::cmp::Ordering::Greater => LaurentSeries::zero(),
    })
}

/// Unit lower-triangular loop with polynomial entries in `z⁻¹` of degree ≤ `degree`.
pub fn unit_lower_minus<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: i64, scale: f64) -> MatrixLoop {
    let s = Complex64::new(scale, 0.0);
    MatrixLoop::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => LaurentSeries::one(),
        std::cmp::Ordering::Greater => gaussian_series(rng, -degree, 0).scale(s),
        std::cmp::Ordering::Less => LaurentSeries::zero(),
    })
}

/// A planted loop `plus · diag(z^κ) · minus` with unit-triangular polynomial factors.
#[derive(Debug, Clone)]
pub struct Planted {
    pub g: MatrixLoop,
    pub plus: MatrixLoop,
    pub indices: Vec<i64>,
    pub minus: MatrixLoop,
}

pub fn planted<R: Rng + ?Sized>(rng: &mut R, indices: &[i64], degree: i64, scale: f64) -> Planted {
    let n = indices.len();
    let plus = unit_upper_plus(rng, n, degree, scale);
    let minus = unit_lower_minus(rng, n, degree, scale);
    let g = plus
        .mul(&MatrixLoop::diag_monomials(indices))
        .and_then(|pd| pd.mul(&minus))
        .expect("small product");
    Planted {
        g,
        plus,
        indices: indices.to_vec(),
        minus,
    }
}

/// Random non-increasing tuple of length `n` with entries in `[-bound, bound]`.
pub fn random_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, bound: i64) -> Vec<i64> {
    let mut k: Vec<i64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    k.sort_unstable_by(|a, b| b.cmp(a));
    k
}

/// A random coupling admissible for `indices` (non-increasing): `c_kj` is
/// zero when `κ_k < κ_j` and a polynomial of degree ≤ `κ_k - κ_j` otherwise,
/// with an invertible upper-triangular constant part.
pub fn admissible_coupling<R: Rng + ?Sized>(rng: &mut R, indices: &[i64], scale: f64) -> MatrixLoop {
    let n = indices.len();
    let s = Complex64::new(scale, 0.0);
    MatrixLoop::from_fn(n, |k, j| {
        let gap = indices[k] - indices[j];
        if k == j {
            LaurentSeries::constant(Complex64::new(1.0, 0.0) + complex_normal(rng) * 0.1)
        } else if gap < 0 || (gap == 0 && k > j) {
            // keep the same-index blocks upper triangular so C stays invertible
            LaurentSeries::zero()
        } else {
            gaussian_series(rng, 0, gap).scale(s)
        }
    })
}

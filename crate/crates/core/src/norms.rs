//! Norms on loops, the splitting projections, invertibility on the circle,
//! and inversion / exponential / logarithm of loops.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{root_of_unity, LaurentSeries};
use crate::linalg::{matrix_norm, smallest_singular_value, CMatrix};
use crate::matrix::MatrixLoop;
use crate::settings::{MatrixNorm, Settings, Truncation};

const EXP_TERM_TOL: f64 = 1e-14;
const MAX_SERIES_TERMS: usize = 2000;
/// Sup-norm agreement required between a sampled logarithm and its band fit.
const LOG_FIT_TOL: f64 = 1e-12;

/// `Σ_k |f_k|`.
pub fn wiener_norm(f: &LaurentSeries) -> f64 {
    f.l1()
}

/// `Σ_k ‖F_k‖` for the matrix coefficients `F_k`, measured in `norm`.
pub fn matrix_wiener_norm(f: &MatrixLoop, norm: MatrixNorm) -> f64 {
    let (lo, hi) = f.band();
    if f.n() == 1 {
        return f.entry(0, 0).l1();
    }
    (lo..=hi).map(|k| matrix_norm(&f.coefficient(k), norm)).sum()
}

/// `Σ_k max(|k|^m, 1) |f_k|`.
pub fn weighted_wiener_norm(f: &LaurentSeries, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::invalid(format!("weight exponent must be nonnegative, got {m}")));
    }
    Ok(f.terms()
        .map(|(k, c)| (k.unsigned_abs() as f64).powf(m).max(1.0) * c.norm())
        .sum())
}

fn annulus_radii(n: u32) -> (f64, f64) {
    let n = n as f64;
    (1.0 - 1.0 / n, 1.0 + 1.0 / n)
}

fn annulus_sample_count(width: usize) -> usize {
    (8 * width).max(1024)
}

/// `max(sup_{A_n} |f|, ‖f‖_W)` on the annulus `1 - 1/n < |z| < 1 + 1/n`.
///
/// `|f|` is subharmonic, so the sup over the annulus is taken on the two
/// boundary circles, each sampled on an angular grid.
pub fn annulus_norm(f: &LaurentSeries, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("annulus parameter must be positive"));
    }
    let (r_in, r_out) = annulus_radii(n);
    if r_in == 0.0 && f.kmin() < 0 {
        return Ok(f64::INFINITY);
    }
    let count = annulus_sample_count(f.width());
    let mut sup = 0.0f64;
    for r in [r_in, r_out] {
        for j in 0..count {
            sup = sup.max(f.eval_at(root_of_unity(j, count) * r).norm());
        }
    }
    Ok(sup.max(wiener_norm(f)))
}

/// Matrix version of [`annulus_norm`], with `norm` on the values.
pub fn matrix_annulus_norm(f: &MatrixLoop, n: u32, norm: MatrixNorm) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("annulus parameter must be positive"));
    }
    let (r_in, r_out) = annulus_radii(n);
    if r_in == 0.0 && f.band().0 < 0 {
        return Ok(f64::INFINITY);
    }
    let count = annulus_sample_count(f.width());
    let mut sup = 0.0f64;
    for r in [r_in, r_out] {
        for j in 0..count {
            sup = sup.max(matrix_norm(&f.eval_at(root_of_unity(j, count) * r), norm));
        }
    }
    Ok(sup.max(matrix_wiener_norm(f, norm)))
}

/// Norms of a loop gathered in one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub wiener: f64,
    /// Weighted Wiener norm keyed by the weight exponent (as written).
    pub weighted: BTreeMap<String, f64>,
    pub sup_circle: f64,
    /// Annulus norm keyed by the annulus parameter.
    pub annulus: BTreeMap<u32, f64>,
}

pub fn norm_report(f: &LaurentSeries, weights: &[f64], annuli: &[u32], samples: usize) -> Result<NormReport> {
    let mut weighted = BTreeMap::new();
    for &m in weights {
        weighted.insert(format!("{m}"), weighted_wiener_norm(f, m)?);
    }
    let mut annulus = BTreeMap::new();
    for &n in annuli {
        annulus.insert(n, annulus_norm(f, n)?);
    }
    let count = samples.max(4 * f.width());
    Ok(NormReport {
        wiener: wiener_norm(f),
        weighted,
        sup_circle: f.samples(count).iter().map(|v| v.norm()).fold(0.0, f64::max),
        annulus,
    })
}

/// Matrix loops get the same report; the weighted norms sum `max(|k|^m, 1) ‖F_k‖`.
pub fn matrix_norm_report(
    f: &MatrixLoop,
    weights: &[f64],
    annuli: &[u32],
    samples: usize,
    norm: MatrixNorm,
) -> Result<NormReport> {
    let (lo, hi) = f.band();
    let mut weighted = BTreeMap::new();
    for &m in weights {
        if !(m >= 0.0) {
            return Err(Error::invalid(format!("weight exponent must be nonnegative, got {m}")));
        }
        let s = (lo..=hi)
            .map(|k| (k.unsigned_abs() as f64).powf(m).max(1.0) * matrix_norm(&f.coefficient(k), norm))
            .sum();
        weighted.insert(format!("{m}"), s);
    }
    let mut annulus = BTreeMap::new();
    for &n in annuli {
        annulus.insert(n, matrix_annulus_norm(f, n, norm)?);
    }
    let count = samples.max(4 * f.width());
    Ok(NormReport {
        wiener: matrix_wiener_norm(f, norm),
        weighted,
        sup_circle: f
            .samples(count)
            .iter()
            .map(|m| matrix_norm(m, norm))
            .fold(0.0, f64::max),
        annulus,
    })
}

/// Outcome of the invertibility test: the minimum modulus (scalar) or
/// minimum smallest singular value (matrix) over the circle samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invertibility {
    pub invertible: bool,
    pub margin: f64,
}

/// Loop types sharing the splitting and functional-calculus operations.
pub trait CircleLoop: Sized + Clone {
    /// Keeps exponents `k >= 0`.
    fn project_plus(&self) -> Self;
    /// Keeps exponents `k <= -1`.
    fn project_ominus(&self) -> Self;
    fn wiener(&self, norm: MatrixNorm) -> f64;
    fn width(&self) -> usize;
    fn invertibility(&self, samples: usize, floor: f64) -> Invertibility;
    fn invert(&self, cfg: &Settings) -> Result<Self>;
    fn exp_loop(&self, cfg: &Settings) -> Result<Self>;
    fn log_loop(&self, cfg: &Settings) -> Result<Self>;
}

pub fn project_plus<L: CircleLoop>(f: &L) -> L {
    f.project_plus()
}

pub fn project_ominus<L: CircleLoop>(f: &L) -> L {
    f.project_ominus()
}

/// Samples at `max(samples, 4·width)` roots of unity and compares against the floor.
pub fn is_invertible_on_circle<L: CircleLoop>(g: &L, samples: usize, floor: f64) -> Invertibility {
    g.invertibility(samples, floor)
}

pub fn invert<L: CircleLoop>(g: &L, cfg: &Settings) -> Result<L> {
    g.invert(cfg)
}

pub fn exp_loop<L: CircleLoop>(f: &L, cfg: &Settings) -> Result<L> {
    f.exp_loop(cfg)
}

pub fn log_loop<L: CircleLoop>(g: &L, cfg: &Settings) -> Result<L> {
    g.log_loop(cfg)
}

fn sample_grid(width: usize, requested: usize) -> usize {
    requested.max(4 * width).max(8)
}

/// Bands tried by the sampling-based inverse and logarithm: centred at
/// `center`, doubling in width until the cap.
fn band_schedule(center: i64, start_half: usize, cap: usize) -> Vec<(i64, i64)> {
    let max_half = (cap.saturating_sub(1) / 2).max(1);
    let mut half = start_half.clamp(1, max_half);
    let mut out = Vec::new();
    loop {
        out.push((center - half as i64, center + half as i64));
        if half >= max_half {
            break;
        }
        half = (half * 2).min(max_half);
    }
    out
}

fn grid_for_band(lo: i64, hi: i64) -> usize {
    (((hi - lo + 1) as usize) * 2).next_power_of_two()
}

impl CircleLoop for LaurentSeries {
    fn project_plus(&self) -> Self {
        self.restrict(0, i64::MAX)
    }

    fn project_ominus(&self) -> Self {
        self.restrict(i64::MIN, -1)
    }

    fn wiener(&self, _norm: MatrixNorm) -> f64 {
        self.l1()
    }

    fn width(&self) -> usize {
        LaurentSeries::width(self)
    }

    fn invertibility(&self, samples: usize, floor: f64) -> Invertibility {
        let count = sample_grid(self.width(), samples);
        let margin = self
            .samples(count)
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min);
        Invertibility {
            invertible: margin > floor,
            margin,
        }
    }

    fn invert(&self, cfg: &Settings) -> Result<Self> {
        let inv = self.invertibility(cfg.samples, cfg.invertibility_floor);
        if !inv.invertible {
            return Err(Error::NotInvertible { margin: inv.margin });
        }
        let center = -(self.kmin() + self.kmax()).div_euclid(2);
        let one = LaurentSeries::one();
        let mut best = f64::INFINITY;
        for (lo, hi) in band_schedule(center, 8.max(self.width()), cfg.truncation.band_cap) {
            let count = grid_for_band(lo, hi);
            let vals: Vec<Complex64> = self.samples(count).into_iter().map(|v| v.inv()).collect();
            let h = LaurentSeries::from_samples(&vals, lo, hi)?;
            let residual = self.mul_with(&h, &Truncation::UNBOUNDED)?.sub(&one).l1();
            if residual <= cfg.inversion_tol {
                return Ok(h);
            }
            best = best.min(residual);
        }
        Err(Error::Truncation {
            tail_mass: best,
            tolerance: cfg.inversion_tol,
        })
    }

    fn exp_loop(&self, cfg: &Settings) -> Result<Self> {
        let mut sum = LaurentSeries::one();
        let mut term = LaurentSeries::one();
        for k in 1..=MAX_SERIES_TERMS {
            term = term
                .mul_with(self, &cfg.truncation)?
                .scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            if term.l1() <= EXP_TERM_TOL * sum.l1().max(1.0) {
                return sum.capped(&cfg.truncation);
            }
        }
        Err(Error::numeric("exponential series did not converge", term.l1()))
    }

    fn log_loop(&self, cfg: &Settings) -> Result<Self> {
        let inv = self.invertibility(cfg.samples, cfg.invertibility_floor);
        if !inv.invertible {
            return Err(Error::NotInvertible { margin: inv.margin });
        }
        let mut best = f64::INFINITY;
        for (lo, hi) in band_schedule(0, 16.max(2 * self.width()), cfg.truncation.band_cap) {
            let count = grid_for_band(lo, hi).max(sample_grid(self.width(), 0));
            let vals = self.samples(count);
            let logs = unwrapped_log(&vals)?;
            let h = LaurentSeries::from_samples(&logs, lo, hi)?;
            // check the fit between the grid points
            let err = (0..count)
                .map(|j| {
                    let z = Complex64::from_polar(1.0, TAU * (j as f64 + 0.5) / count as f64);
                    let fit = h.eval_at(z);
                    let mut d = self.eval_at(z).ln() - fit;
                    d.im = (d.im + PI).rem_euclid(TAU) - PI;
                    d.norm()
                })
                .fold(0.0, f64::max);
            if err <= LOG_FIT_TOL * h.l1().max(1.0) {
                return Ok(h);
            }
            best = best.min(err);
        }
        Err(Error::Truncation {
            tail_mass: best,
            tolerance: LOG_FIT_TOL,
        })
    }
}

/// Continuous logarithm along circle samples: principal branch at the first
/// sample, then accumulated argument increments. Fails if an increment
/// reaches π (under-sampled) or the total winding is nonzero.
fn unwrapped_log(vals: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut theta = vals[0].arg();
    let mut out = Vec::with_capacity(vals.len());
    out.push(Complex64::new(vals[0].norm().ln(), theta));
    for w in vals.windows(2) {
        let step = (w[1] / w[0]).arg();
        if step.abs() >= PI * 0.999 {
            return Err(Error::numeric("argument increment too large; increase samples", step));
        }
        theta += step;
        out.push(Complex64::new(w[1].norm().ln(), theta));
    }
    let closing = (vals[0] / vals[vals.len() - 1]).arg();
    let total = theta + closing - vals[0].arg();
    let winding = (total / TAU).round();
    if winding != 0.0 {
        return Err(Error::domain(format!(
            "no continuous logarithm: loop winds {winding} times around the origin"
        )));
    }
    Ok(out)
}

impl CircleLoop for MatrixLoop {
    fn project_plus(&self) -> Self {
        self.restrict(0, i64::MAX)
    }

    fn project_ominus(&self) -> Self {
        self.restrict(i64::MIN, -1)
    }

    fn wiener(&self, norm: MatrixNorm) -> f64 {
        matrix_wiener_norm(self, norm)
    }

    fn width(&self) -> usize {
        MatrixLoop::width(self)
    }

    fn invertibility(&self, samples: usize, floor: f64) -> Invertibility {
        let count = sample_grid(MatrixLoop::width(self), samples);
        let margin = self
            .samples(count)
            .iter()
            .map(smallest_singular_value)
            .fold(f64::INFINITY, f64::min);
        Invertibility {
            invertible: margin > floor,
            margin,
        }
    }

    fn invert(&self, cfg: &Settings) -> Result<Self> {
        let inv = self.invertibility(cfg.samples, cfg.invertibility_floor);
        if !inv.invertible {
            return Err(Error::NotInvertible { margin: inv.margin });
        }
        let (lo, hi) = self.band();
        let center = -(lo + hi).div_euclid(2);
        let id = MatrixLoop::identity(self.n());
        let mut best = f64::INFINITY;
        for (blo, bhi) in band_schedule(center, 8.max(2 * MatrixLoop::width(self)), cfg.truncation.band_cap) {
            let count = grid_for_band(blo, bhi);
            let vals = self
                .samples(count)
                .into_iter()
                .map(|m| m.try_inverse().ok_or(Error::NotInvertible { margin: 0.0 }))
                .collect::<Result<Vec<CMatrix>>>()?;
            let h = MatrixLoop::from_samples(&vals, blo, bhi)?;
            let residual = matrix_wiener_norm(&self.mul_with(&h, &Truncation::UNBOUNDED)?.sub(&id), cfg.matrix_norm);
            if residual <= cfg.inversion_tol {
                return Ok(h);
            }
            best = best.min(residual);
        }
        Err(Error::Truncation {
            tail_mass: best,
            tolerance: cfg.inversion_tol,
        })
    }

    fn exp_loop(&self, cfg: &Settings) -> Result<Self> {
        let n = self.n();
        let mut sum = MatrixLoop::identity(n);
        let mut term = MatrixLoop::identity(n);
        for k in 1..=MAX_SERIES_TERMS {
            term = term
                .mul_with(self, &cfg.truncation)?
                .scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            let t = matrix_wiener_norm(&term, MatrixNorm::Frobenius);
            if t <= EXP_TERM_TOL * matrix_wiener_norm(&sum, MatrixNorm::Frobenius).max(1.0) {
                return sum.try_map_entries(|e| e.clone().capped(&cfg.truncation));
            }
        }
        Err(Error::numeric("exponential series did not converge", f64::NAN))
    }

    /// Mercator series `Σ (-1)^{k+1} (g - I)^k / k`.
    fn log_loop(&self, cfg: &Settings) -> Result<Self> {
        let n = self.n();
        let id = MatrixLoop::identity(n);
        let a = self.sub(&id);
        let count = sample_grid(MatrixLoop::width(&a), cfg.samples);
        let radius = a.samples(count).iter().map(spectral_radius).fold(0.0, f64::max);
        if radius >= 1.0 {
            return Err(Error::domain(format!(
                "Mercator series diverges: spectral radius of g - I reaches {radius:.3}"
            )));
        }
        let mut sum = MatrixLoop::zeros(n);
        let mut power = id;
        let mut last = f64::INFINITY;
        for k in 1..=MAX_SERIES_TERMS {
            power = power.mul_with(&a, &cfg.truncation)?;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = power.scale(Complex64::new(sign / k as f64, 0.0));
            sum = sum.add(&term);
            last = matrix_wiener_norm(&term, MatrixNorm::Frobenius);
            if last <= EXP_TERM_TOL * matrix_wiener_norm(&sum, MatrixNorm::Frobenius).max(1.0) {
                return Ok(sum);
            }
        }
        Err(Error::domain(format!(
            "Mercator series did not converge (last term {last:.3e})"
        )))
    }
}

fn spectral_radius(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    match m.clone().eigenvalues() {
        Some(ev) => ev.iter().map(|c| c.norm()).fold(0.0, f64::max),
        None => matrix_norm(m, MatrixNorm::Operator2),
    }
}

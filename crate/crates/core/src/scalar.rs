//! Winding number and the scalar factorization `g = g₊ · z^κ · g₋`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentSeries;
use crate::norms::CircleLoop;
use crate::settings::{Settings, Truncation, COEFF_EPS};

/// Roots closer than this to the unit circle make a Laurent polynomial
/// non-invertible for the root route.
const ROOT_CIRCLE_GAP: f64 = 1e-8;
/// Largest polynomial degree handed to the companion-matrix root finder.
const MAX_ROOT_DEGREE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarRoute {
    /// `log`, split by the projections, `exp` of each half.
    ExpLog,
    /// Companion-matrix roots sorted by modulus.
    Roots,
}

/// `g = plus · z^kappa · minus`, with `minus(∞) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFactorization {
    pub plus: LaurentSeries,
    pub kappa: i64,
    pub minus: LaurentSeries,
    /// `‖g - plus · z^κ · minus‖_W`.
    pub residual: f64,
    pub plus_margin: f64,
    pub minus_margin: f64,
    pub route: ScalarRoute,
}

impl ScalarFactorization {
    pub fn reconstruct(&self) -> Result<LaurentSeries> {
        self.plus
            .mul_with(&self.minus, &Truncation::UNBOUNDED)
            .map(|p| p.shift(self.kappa))
    }
}

/// Winding number of `g` about the origin, from the unwrapped argument
/// increments over `max(samples, 8·width)` circle samples.
pub fn winding_number(g: &LaurentSeries, samples: usize) -> Result<i64> {
    let mut count = samples.max(8 * g.width()).max(16);
    loop {
        let vals = g.samples(count);
        let margin = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if !(margin > 0.0) || !margin.is_finite() {
            return Err(Error::NotInvertible { margin });
        }
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for j in 0..count {
            let step = (vals[(j + 1) % count] / vals[j]).arg();
            max_step = max_step.max(step.abs());
            total += step;
        }
        if max_step < PI / 2.0 {
            let w = total / TAU;
            let rounded = w.round();
            if (w - rounded).abs() > 0.01 {
                return Err(Error::numeric(
                    "ambiguous winding number; increase samples or margin",
                    (w - rounded).abs(),
                ));
            }
            return Ok(rounded as i64);
        }
        if count >= 1 << 20 {
            return Err(Error::numeric(
                "argument increments stay large; increase samples or margin",
                max_step,
            ));
        }
        count *= 2;
    }
}

/// Roots of `Σ_i c_i x^i` (ascending coefficients, nonzero leading term)
/// as eigenvalues of the companion matrix, polished by Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    if lead == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("leading coefficient is zero"));
    }
    let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let eig = companion
        .eigenvalues()
        .ok_or_else(|| Error::numeric("companion eigenvalue iteration failed", f64::NAN))?;
    let eval = |x: Complex64| {
        coeffs
            .iter()
            .rev()
            .fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(p, dp), &c| {
                (p * x + c, dp * x + p)
            })
    };
    Ok(eig
        .iter()
        .map(|&r| {
            let mut x = r;
            let mut fx = eval(x).0.norm();
            for _ in 0..4 {
                let (p, dp) = eval(x);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = x - p / dp;
                let fc = eval(cand).0.norm();
                if fc < fx {
                    x = cand;
                    fx = fc;
                } else {
                    break;
                }
            }
            x
        })
        .collect())
}

fn product_of_linear(mut factors: impl Iterator<Item = LaurentSeries>) -> Result<LaurentSeries> {
    factors.try_fold(LaurentSeries::one(), |acc, f| acc.mul_with(&f, &Truncation::UNBOUNDED))
}

fn residual_of(g: &LaurentSeries, plus: &LaurentSeries, kappa: i64, minus: &LaurentSeries) -> Result<f64> {
    Ok(g.sub(&plus.mul_with(minus, &Truncation::UNBOUNDED)?.shift(kappa)).l1())
}

fn finish(
    g: &LaurentSeries,
    plus: LaurentSeries,
    kappa: i64,
    minus: LaurentSeries,
    route: ScalarRoute,
    cfg: &Settings,
) -> Result<ScalarFactorization> {
    let residual = residual_of(g, &plus, kappa, &minus)?;
    Ok(ScalarFactorization {
        plus_margin: plus.invertibility(cfg.samples, cfg.invertibility_floor).margin,
        minus_margin: minus.invertibility(cfg.samples, cfg.invertibility_floor).margin,
        plus,
        kappa,
        minus,
        residual,
        route,
    })
}

/// Factors a Laurent polynomial through the roots of `p`, where `g = z^{kmin} p`:
/// roots outside the disk go to the plus factor, roots inside to the minus
/// factor as `(1 - w z^{-1})`.
pub fn factor_laurent_poly(g: &LaurentSeries, cfg: &Settings) -> Result<ScalarFactorization> {
    if g.is_zero() {
        return Err(Error::NotInvertible { margin: 0.0 });
    }
    if g.width() > MAX_ROOT_DEGREE + 1 {
        return Err(Error::invalid(format!(
            "degree {} exceeds the root-finder limit {MAX_ROOT_DEGREE}",
            g.width() - 1
        )));
    }
    let inv = g.invertibility(cfg.samples, cfg.invertibility_floor);
    if !inv.invertible {
        return Err(Error::NotInvertible { margin: inv.margin });
    }
    let coeffs = g.coeffs();
    let lead = coeffs[coeffs.len() - 1];
    let mut roots = polynomial_roots(coeffs)?;
    if let Some(r) = roots.iter().find(|r| (r.norm() - 1.0).abs() < ROOT_CIRCLE_GAP) {
        return Err(Error::NotInvertible {
            margin: (r.norm() - 1.0).abs(),
        });
    }
    // deterministic product order
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    let one = Complex64::new(1.0, 0.0);
    let outside = roots.iter().filter(|r| r.norm() > 1.0);
    let inside: Vec<_> = roots.iter().filter(|r| r.norm() < 1.0).collect();
    let plus = product_of_linear(outside.map(|&w| LaurentSeries::new(0, vec![-w, one]).unwrap()))?.scale(lead);
    let minus = product_of_linear(inside.iter().map(|&&w| LaurentSeries::new(-1, vec![-w, one]).unwrap()))?;
    let kappa = g.kmin() + inside.len() as i64;
    finish(g, plus, kappa, minus, ScalarRoute::Roots, cfg)
}

/// The logarithm route alone, with no fallback: `κ` from the winding number,
/// then `log`, split and `exp` of `z^{-κ} g`.
pub fn factor_by_log(g: &LaurentSeries, cfg: &Settings) -> Result<ScalarFactorization> {
    let inv = g.invertibility(cfg.samples, cfg.invertibility_floor);
    if !inv.invertible {
        return Err(Error::NotInvertible { margin: inv.margin });
    }
    factor_exp_log(g, winding_number(g, cfg.samples)?, cfg)
}

fn factor_exp_log(g: &LaurentSeries, kappa: i64, cfg: &Settings) -> Result<ScalarFactorization> {
    let h = g.shift(-kappa);
    let x = h.log_loop(cfg)?;
    let plus = x.project_plus().exp_loop(cfg)?;
    let mut minus = x.project_ominus().exp_loop(cfg)?;
    let c0 = minus.fourier_coeff(0);
    let plus = denoise(&plus.scale(c0));
    minus = denoise(&minus.scale(c0.inv()));
    finish(g, plus, kappa, minus, ScalarRoute::ExpLog, cfg)
}

/// Zeroes coefficients below the coefficient epsilon relative to the Wiener
/// norm; sampling leaves such dust across the whole band.
fn denoise(f: &LaurentSeries) -> LaurentSeries {
    let floor = COEFF_EPS * f.l1();
    f.map_coeffs(|c| if c.norm() <= floor { Complex64::new(0.0, 0.0) } else { c })
}

/// `g = plus · z^κ · minus` with `κ` the winding number of `g`.
///
/// Uses the logarithm route after removing the index; falls back to the
/// root route when that route fails or misses the residual tolerance.
pub fn scalar_factorize(g: &LaurentSeries, cfg: &Settings) -> Result<ScalarFactorization> {
    let inv = g.invertibility(cfg.samples, cfg.invertibility_floor);
    if !inv.invertible {
        return Err(Error::NotInvertible { margin: inv.margin });
    }
    let kappa = winding_number(g, cfg.samples)?;
    let primary = factor_exp_log(g, kappa, cfg);
    let mut best = match &primary {
        Ok(f) if f.residual <= cfg.residual_tol => return primary,
        Ok(f) => f.residual,
        Err(_) => f64::INFINITY,
    };
    if g.width() <= MAX_ROOT_DEGREE + 1 {
        match factor_laurent_poly(g, cfg) {
            Ok(f) if f.residual <= cfg.residual_tol => {
                if f.kappa != kappa {
                    return Err(Error::InvariantViolation(format!(
                        "root count gives index {} but winding number is {kappa}",
                        f.kappa
                    )));
                }
                return Ok(f);
            }
            Ok(f) => best = best.min(f.residual),
            Err(_) => {}
        }
    }
    match primary {
        Err(e) if best.is_infinite() => Err(e),
        _ => Err(Error::Truncation {
            tail_mass: best,
            tolerance: cfg.residual_tol,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn z(k: i64) -> LaurentSeries {
        LaurentSeries::monomial(re(1.0), k)
    }

    /// Argument-principle oracle: index of `z^kmin · c · Π (z - w)` is
    /// `kmin` plus the number of roots inside the disk.
    fn root_count_index(kmin: i64, roots: &[Complex64]) -> i64 {
        kmin + roots.iter().filter(|r| r.norm() < 1.0).count() as i64
    }

    fn from_roots(kmin: i64, lead: Complex64, roots: &[Complex64]) -> LaurentSeries {
        roots
            .iter()
            .fold(LaurentSeries::constant(lead), |acc, &w| {
                acc.mul(&LaurentSeries::new(0, vec![-w, re(1.0)]).unwrap()).unwrap()
            })
            .shift(kmin)
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&z(5), 64).unwrap(), 5);
        let a = LaurentSeries::from_real(0, &[-0.5, 1.0]);
        assert_eq!(winding_number(&a, 64).unwrap(), root_count_index(0, &[re(0.5)]));
        let b = LaurentSeries::from_real(0, &[-2.0, 1.0]);
        assert_eq!(winding_number(&b, 64).unwrap(), root_count_index(0, &[re(2.0)]));
        let e = z(1).add(&z(-1)).exp_loop(&Settings::default()).unwrap();
        assert_eq!(winding_number(&e, 64).unwrap(), 0);
        assert!(matches!(
            winding_number(&LaurentSeries::from_real(0, &[1.0, -1.0]), 64),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn constant_factorization() {
        let cfg = Settings::default();
        let c = LaurentSeries::constant(Complex64::new(2.0, -1.0));
        for f in [
            factor_laurent_poly(&c, &cfg).unwrap(),
            scalar_factorize(&c, &cfg).unwrap(),
        ] {
            assert!(f.plus.sub(&c).l1() < 1e-14);
            assert_eq!(f.kappa, 0);
            assert_eq!(f.minus, LaurentSeries::one());
        }
    }

    #[test]
    fn single_outside_root() {
        let cfg = Settings::default();
        let g = LaurentSeries::from_real(0, &[-2.0, 1.0]);
        let f = factor_laurent_poly(&g, &cfg).unwrap();
        assert!(f.plus.sub(&g).l1() < 1e-14);
        assert_eq!(f.kappa, 0);
        assert_eq!(f.minus, LaurentSeries::one());
        let e = scalar_factorize(&g, &cfg).unwrap();
        assert!(e.plus.sub(&f.plus).l1() <= 1e-9);
        assert!(e.minus.sub(&f.minus).l1() <= 1e-9);
    }

    #[test]
    fn two_inside_roots() {
        // 6z^2 - 5z + 1 = 6 (z - 1/2)(z - 1/3) = 6 · z^2 · (1 - z^{-1}/2)(1 - z^{-1}/3)
        let cfg = Settings::default();
        let g = LaurentSeries::from_real(0, &[1.0, -5.0, 6.0]);
        let f = factor_laurent_poly(&g, &cfg).unwrap();
        assert!(f.plus.sub(&LaurentSeries::constant(re(6.0))).l1() < 1e-13);
        assert_eq!(f.kappa, 2);
        let expect = LaurentSeries::from_real(-1, &[-0.5, 1.0])
            .mul(&LaurentSeries::from_real(-1, &[-1.0 / 3.0, 1.0]))
            .unwrap();
        assert!(f.minus.sub(&expect).l1() < 1e-13);
        assert!(f.residual < 1e-13);
    }

    #[test]
    fn exp_split_is_exact_for_commuting_factors() {
        let cfg = Settings::default();
        let plus_x = LaurentSeries::from_real(1, &[0.2]);
        let minus_x = LaurentSeries::from_real(-1, &[0.1]);
        let g = plus_x.add(&minus_x).exp_loop(&cfg).unwrap();
        let f = scalar_factorize(&g, &cfg).unwrap();
        assert_eq!(f.kappa, 0);
        assert!(f.plus.sub(&plus_x.exp_loop(&cfg).unwrap()).l1() < 1e-12);
        assert!(f.minus.sub(&minus_x.exp_loop(&cfg).unwrap()).l1() < 1e-12);
        assert_eq!(f.route, ScalarRoute::ExpLog);
    }

    #[test]
    fn trivial_loop() {
        let f = scalar_factorize(&LaurentSeries::one(), &Settings::default()).unwrap();
        assert_eq!(f.plus, LaurentSeries::one());
        assert_eq!(f.kappa, 0);
        assert_eq!(f.minus, LaurentSeries::one());
    }

    #[test]
    fn routes_agree_on_mixed_roots() {
        let cfg = Settings::default();
        let roots = [Complex64::new(0.3, 0.2), re(-1.8), Complex64::new(0.1, -2.5), re(0.6)];
        let g = from_roots(-1, Complex64::new(0.8, 0.3), &roots);
        let a = factor_laurent_poly(&g, &cfg).unwrap();
        let b = scalar_factorize(&g, &cfg).unwrap();
        assert_eq!(a.kappa, root_count_index(-1, &roots));
        assert_eq!(b.kappa, a.kappa);
        assert!(a.plus.sub(&b.plus).l1() < 1e-8);
        assert!(a.minus.sub(&b.minus).l1() < 1e-8);
        assert_eq!(a.minus.fourier_coeff(0), re(1.0));
        assert!(a.minus.kmax() <= 0 && a.plus.kmin() >= 0);
    }

    #[test]
    fn root_on_circle_is_rejected() {
        let g = LaurentSeries::from_real(0, &[1.0, 1.0]);
        assert!(matches!(
            factor_laurent_poly(&g, &Settings::default()),
            Err(Error::NotInvertible { .. })
        ));
        assert!(matches!(
            scalar_factorize(&g, &Settings::default()),
            Err(Error::NotInvertible { .. })
        ));
    }
}

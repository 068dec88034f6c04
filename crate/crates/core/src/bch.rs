//! Baker–Campbell–Hausdorff products of loops in a matrix Lie algebra, the
//! contraction solver for `P₊x * P⊖x = y`, and near-identity group
//! factorization `g = exp(P₊x) · exp(P⊖x)`.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutator, CMatrix};
use crate::matrix::MatrixLoop;
use crate::norms::{matrix_wiener_norm, CircleLoop};
use crate::sample::complex_normal;
use crate::settings::{MatrixNorm, Settings, Truncation};

pub const MAX_BCH_ORDER: usize = 8;
/// Tolerance for span membership of basis brackets and loop coefficients.
const SPAN_TOL: f64 = 1e-10;
/// Looser membership tolerance for loops produced by `log`.
const LOG_SPAN_TOL: f64 = 1e-8;

/// A complex matrix Lie algebra given by a basis of `n × n` matrices.
#[derive(Debug, Clone)]
pub struct LieAlgebraRep {
    n: usize,
    basis: Vec<CMatrix>,
    norm: MatrixNorm,
    /// Pseudo-inverse of the `n² × d` matrix whose columns are the basis.
    coord_map: CMatrix,
    /// Orthogonal projector onto the span, acting on vectorized matrices.
    projector: CMatrix,
}

impl LieAlgebraRep {
    /// Checks linear independence and closure under the commutator.
    pub fn new(basis: Vec<CMatrix>, norm: MatrixNorm) -> Result<Self> {
        let n = basis
            .first()
            .map(|b| b.nrows())
            .ok_or_else(|| Error::invalid("empty Lie algebra basis"))?;
        if basis.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::invalid("basis matrices must all be n x n"));
        }
        let d = basis.len();
        let columns = DMatrix::from_fn(n * n, d, |r, c| basis[c][(r / n, r % n)]);
        let svd = columns.clone().svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
        if rank < d {
            return Err(Error::invalid(format!(
                "basis is linearly dependent (rank {rank} < {d})"
            )));
        }
        let coord_map = svd
            .pseudo_inverse(1e-12 * smax)
            .map_err(|e| Error::numeric(e.to_string(), f64::NAN))?;
        let projector = &columns * &coord_map;
        let rep = Self {
            n,
            basis,
            norm,
            coord_map,
            projector,
        };
        for i in 0..d {
            for j in i + 1..d {
                let br = commutator(&rep.basis[i], &rep.basis[j]);
                let res = rep.span_residual(&br);
                if res > SPAN_TOL * br.norm().max(1.0) {
                    return Err(Error::invalid(format!(
                        "basis is not closed under brackets: [b{i}, b{j}] leaves the span by {res:.3e}"
                    )));
                }
            }
        }
        Ok(rep)
    }

    /// `sl₂` with basis `E, F, H`.
    pub fn sl2() -> Self {
        let c = |a: f64| Complex64::new(a, 0.0);
        let e = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let f = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        Self::new(vec![e, f, h], MatrixNorm::Operator2).expect("sl2 basis is valid")
    }

    /// All `n × n` matrices (matrix units `E_ij`).
    pub fn gl(n: usize) -> Self {
        let basis = (0..n * n)
            .map(|k| {
                let mut m = DMatrix::zeros(n, n);
                m[(k / n, k % n)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Self::new(basis, MatrixNorm::Operator2).expect("gl basis is valid")
    }

    /// Strictly upper-triangular `n × n` matrices (nilpotent).
    pub fn strictly_upper(n: usize) -> Self {
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = Complex64::new(1.0, 0.0);
                basis.push(m);
            }
        }
        Self::new(basis, MatrixNorm::Operator2).expect("nilpotent basis is valid")
    }

    /// The one-dimensional algebra spanned by the identity.
    pub fn scalars(n: usize) -> Self {
        Self::new(vec![DMatrix::identity(n, n)], MatrixNorm::Operator2).expect("identity basis is valid")
    }

    pub fn with_norm(mut self, norm: MatrixNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn norm(&self) -> MatrixNorm {
        self.norm
    }

    fn vectorize(&self, m: &CMatrix) -> nalgebra::DVector<Complex64> {
        let n = self.n;
        nalgebra::DVector::from_fn(n * n, |r, _| m[(r / n, r % n)])
    }

    /// Coordinates of the orthogonal projection of `m` onto the span.
    pub fn coordinates(&self, m: &CMatrix) -> Vec<Complex64> {
        (&self.coord_map * self.vectorize(m)).iter().copied().collect()
    }

    pub fn from_coordinates(&self, coords: &[Complex64]) -> CMatrix {
        self.basis
            .iter()
            .zip(coords)
            .fold(DMatrix::zeros(self.n, self.n), |acc, (b, &c)| acc + b * c)
    }

    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let v = &self.projector * self.vectorize(m);
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| v[i * n + j])
    }

    /// Frobenius distance from `m` to the span.
    pub fn span_residual(&self, m: &CMatrix) -> f64 {
        (m - self.project(m)).norm()
    }
}

/// A loop with every Fourier coefficient in the span of a Lie algebra basis.
#[derive(Debug, Clone)]
pub struct LoopAlgebraElement {
    rep: Arc<LieAlgebraRep>,
    series: MatrixLoop,
}

impl LoopAlgebraElement {
    pub fn new(rep: Arc<LieAlgebraRep>, series: MatrixLoop) -> Result<Self> {
        let worst = membership_residual(&rep, &series)?;
        if worst > SPAN_TOL {
            return Err(Error::domain(format!(
                "loop coefficients leave the Lie algebra by {worst:.3e}"
            )));
        }
        Ok(Self { rep, series })
    }

    /// Builds `Σ_k Σ_i coords[k - kmin][i] · b_i · z^k`.
    pub fn from_coordinates(rep: Arc<LieAlgebraRep>, kmin: i64, coords: &[Vec<Complex64>]) -> Result<Self> {
        let mats: Vec<CMatrix> = coords.iter().map(|c| rep.from_coordinates(c)).collect();
        let series = MatrixLoop::from_coefficients(kmin, &mats)?;
        Ok(Self { rep, series })
    }

    pub fn zero(rep: Arc<LieAlgebraRep>) -> Self {
        let n = rep.n;
        Self {
            rep,
            series: MatrixLoop::zeros(n),
        }
    }

    pub(crate) fn from_parts(rep: Arc<LieAlgebraRep>, series: MatrixLoop) -> Self {
        Self { rep, series }
    }

    pub fn rep(&self) -> &Arc<LieAlgebraRep> {
        &self.rep
    }

    pub fn series(&self) -> &MatrixLoop {
        &self.series
    }

    pub fn into_series(self) -> MatrixLoop {
        self.series
    }

    /// Wiener norm with the representation's matrix norm.
    pub fn norm(&self) -> f64 {
        matrix_wiener_norm(&self.series, self.rep.norm)
    }

    fn with_series(&self, series: MatrixLoop) -> Self {
        Self {
            rep: self.rep.clone(),
            series,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.with_series(self.series.add(&other.series))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.with_series(self.series.sub(&other.series))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.with_series(self.series.scale(Complex64::new(c, 0.0)))
    }

    pub fn project_plus(&self) -> Self {
        self.with_series(self.series.project_plus())
    }

    pub fn project_ominus(&self) -> Self {
        self.with_series(self.series.project_ominus())
    }

    /// Pointwise commutator `[x, y](z) = x(z) y(z) - y(z) x(z)`.
    pub fn bracket(&self, other: &Self, trunc: &Truncation) -> Result<Self> {
        let a = self.series.mul_with(&other.series, &Truncation::UNBOUNDED)?;
        let b = other.series.mul_with(&self.series, &Truncation::UNBOUNDED)?;
        Ok(self.with_series(a.sub(&b).try_map_entries(|e| e.clone().capped(trunc))?))
    }
}

fn membership_residual(rep: &LieAlgebraRep, series: &MatrixLoop) -> Result<f64> {
    if series.n() != rep.n {
        return Err(Error::invalid(format!(
            "loop is {}x{} but the Lie algebra acts on dimension {}",
            series.n(),
            series.n(),
            rep.n
        )));
    }
    let (lo, hi) = series.band();
    Ok((lo..=hi)
        .map(|k| rep.span_residual(&series.coefficient(k)))
        .fold(0.0, f64::max))
}

/// Dynkin coefficients `a(w)/|w|` for every word `w` over `{x, y}` of
/// length at most [`MAX_BCH_ORDER`], so that the degree-`m` part of
/// `log(e^x e^y)` is `Σ_{|w|=m} a(w)/m · [w]` with right-nested brackets.
///
/// `a(w)` is the coefficient of `w` in `Σ_k (-1)^{k-1}/k (e^x e^y - 1)^k`:
/// a sum over splittings of `w` into `k` blocks of the form `x^r y^s`.
struct DynkinTable {
    /// Indexed by `(1 << len) + bits`, bit `i` (from the left) set for `y`.
    coeffs: Vec<f64>,
}

impl DynkinTable {
    fn get() -> &'static DynkinTable {
        static TABLE: OnceLock<DynkinTable> = OnceLock::new();
        TABLE.get_or_init(Self::build)
    }

    fn index(len: usize, bits: usize) -> usize {
        (1 << len) + bits
    }

    fn build() -> Self {
        let mut coeffs = vec![0.0; 1 << (MAX_BCH_ORDER + 1)];
        let mut fact = [1.0f64; MAX_BCH_ORDER + 1];
        for i in 1..=MAX_BCH_ORDER {
            fact[i] = fact[i - 1] * i as f64;
        }
        for len in 1..=MAX_BCH_ORDER {
            for bits in 0..(1usize << len) {
                let letter = |i: usize| (bits >> (len - 1 - i)) & 1;
                // weight of the block w[i..j] if it has the form x^r y^s
                let block = |i: usize, j: usize| -> Option<f64> {
                    let mut r = 0;
                    let mut s = 0;
                    for t in i..j {
                        if letter(t) == 0 {
                            if s > 0 {
                                return None;
                            }
                            r += 1;
                        } else {
                            s += 1;
                        }
                    }
                    Some(1.0 / (fact[r] * fact[s]))
                };
                // dp[j][k]: sum over splittings of w[..j] into k blocks
                let mut dp = vec![vec![0.0f64; len + 1]; len + 1];
                dp[0][0] = 1.0;
                for j in 1..=len {
                    for i in 0..j {
                        if let Some(wt) = block(i, j) {
                            for k in 0..j {
                                if dp[i][k] != 0.0 {
                                    dp[j][k + 1] += dp[i][k] * wt;
                                }
                            }
                        }
                    }
                }
                let a: f64 = (1..=len)
                    .map(|k| {
                        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                        sign / k as f64 * dp[len][k]
                    })
                    .sum();
                coeffs[Self::index(len, bits)] = a / len as f64;
            }
        }
        Self { coeffs }
    }

    fn coeff(&self, len: usize, bits: usize) -> f64 {
        self.coeffs[Self::index(len, bits)]
    }
}

/// Σ over words with prefix `(len, bits)` of their Dynkin coefficient times the
/// right-nested bracket of the remaining letters, grouped along the prefix tree:
/// `F(p) = Σ_ℓ c(pℓ) ℓ + [ℓ, F(pℓ)]`.
fn dynkin_tail(
    table: &DynkinTable,
    len: usize,
    bits: usize,
    order: usize,
    letters: [&LoopAlgebraElement; 2],
    trunc: &Truncation,
) -> Result<Option<LoopAlgebraElement>> {
    if len >= order {
        return Ok(None);
    }
    let mut acc: Option<LoopAlgebraElement> = None;
    for (l, letter) in letters.iter().enumerate() {
        let (qlen, qbits) = (len + 1, (bits << 1) | l);
        let c = table.coeff(qlen, qbits);
        let mut part: Option<LoopAlgebraElement> = None;
        if c != 0.0 && len > 0 {
            part = Some(letter.scale(c));
        }
        if let Some(rest) = dynkin_tail(table, qlen, qbits, order, letters, trunc)? {
            let br = letter.bracket(&rest, trunc)?;
            part = Some(match part {
                Some(p) => p.add(&br),
                None => br,
            });
        }
        if let Some(p) = part {
            acc = Some(match acc {
                Some(a) => a.add(&p),
                None => p,
            });
        }
    }
    Ok(acc)
}

fn check_ball(x: &LoopAlgebraElement, radius: f64, name: &str) -> Result<()> {
    let nx = x.norm();
    if nx > radius * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "‖{name}‖_W = {nx:.4e} lies outside the BCH ball of radius {radius}"
        )));
    }
    Ok(())
}

/// `x * y - x - y`, the nonlinear part of the BCH series through degree `order`.
pub fn bch_remainder(
    x: &LoopAlgebraElement,
    y: &LoopAlgebraElement,
    order: usize,
    cfg: &Settings,
) -> Result<LoopAlgebraElement> {
    if !(1..=MAX_BCH_ORDER).contains(&order) {
        return Err(Error::invalid(format!(
            "BCH order must lie in 1..={MAX_BCH_ORDER}, got {order}"
        )));
    }
    if !Arc::ptr_eq(&x.rep, &y.rep) && x.rep.basis != y.rep.basis {
        return Err(Error::invalid("arguments belong to different Lie algebras"));
    }
    check_ball(x, cfg.bch_radius, "x")?;
    check_ball(y, cfg.bch_radius, "y")?;
    let table = DynkinTable::get();
    let tail = dynkin_tail(table, 0, 0, order, [x, y], &cfg.truncation)?;
    Ok(tail.unwrap_or_else(|| LoopAlgebraElement::zero(x.rep.clone())))
}

/// Partial sum of the BCH series `x + y + ½[x, y] + …` through degree `order`.
pub fn bch_multiply(
    x: &LoopAlgebraElement,
    y: &LoopAlgebraElement,
    order: usize,
    cfg: &Settings,
) -> Result<LoopAlgebraElement> {
    Ok(x.add(y).add(&bch_remainder(x, y, order, cfg)?))
}

/// A vector space with a norm, as needed by [`lipschitz_estimate`].
pub trait NormedSpace: Clone {
    fn norm(&self) -> f64;
    fn sub(&self, other: &Self) -> Self;
    /// `self + t · other`.
    fn add_scaled(&self, t: f64, other: &Self) -> Self;
}

impl NormedSpace for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn add_scaled(&self, t: f64, other: &Self) -> Self {
        self + t * other
    }
}

impl NormedSpace for Complex64 {
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn add_scaled(&self, t: f64, other: &Self) -> Self {
        self + other * t
    }
}

impl NormedSpace for LoopAlgebraElement {
    fn norm(&self) -> f64 {
        LoopAlgebraElement::norm(self)
    }
    fn sub(&self, other: &Self) -> Self {
        LoopAlgebraElement::sub(self, other)
    }
    fn add_scaled(&self, t: f64, other: &Self) -> Self {
        self.add(&other.scale(t))
    }
}

/// Pairs carry the maximum norm.
impl<A: NormedSpace, B: NormedSpace> NormedSpace for (A, B) {
    fn norm(&self) -> f64 {
        self.0.norm().max(self.1.norm())
    }
    fn sub(&self, other: &Self) -> Self {
        (self.0.sub(&other.0), self.1.sub(&other.1))
    }
    fn add_scaled(&self, t: f64, other: &Self) -> Self {
        (self.0.add_scaled(t, &other.0), self.1.add_scaled(t, &other.1))
    }
}

/// Sampled lower bound on the Lipschitz constant of `map` on the open ball
/// of `radius` about `center`: the largest difference quotient over
/// `samples` pairs. Half the pairs are independent points of the ball, half
/// are nearby pairs probing the derivative. `direction` must return
/// unit-norm directions.
pub fn lipschitz_estimate<V, W, R>(
    map: impl Fn(&V) -> Result<W>,
    center: &V,
    radius: f64,
    samples: usize,
    mut direction: impl FnMut(&mut R) -> V,
    rng: &mut R,
) -> Result<f64>
where
    V: NormedSpace,
    W: NormedSpace,
    R: Rng + ?Sized,
{
    if samples < 100 {
        return Err(Error::invalid(format!("at least 100 samples required, got {samples}")));
    }
    let inner = radius * 0.999;
    let mut best = 0.0f64;
    for s in 0..samples {
        let x = center.add_scaled(inner * rng.random::<f64>(), &direction(rng));
        let y = if s % 2 == 0 {
            center.add_scaled(inner * rng.random::<f64>(), &direction(rng))
        } else {
            let near = x.add_scaled(1e-4 * radius, &direction(rng));
            if near.sub(center).norm() < radius {
                near
            } else {
                // step back towards the center instead
                let back = x.sub(center);
                x.add_scaled(-1e-4 * radius / back.norm().max(f64::MIN_POSITIVE), &back)
            }
        };
        let dx = x.sub(&y).norm();
        if dx == 0.0 {
            continue;
        }
        let dm = map(&x)?.sub(&map(&y)?).norm();
        best = best.max(dm / dx);
    }
    Ok(best)
}

/// A random element with band `lo..=hi`, Gaussian coordinates, scaled to unit norm.
pub fn random_unit_element<R: Rng + ?Sized>(
    rep: &Arc<LieAlgebraRep>,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> LoopAlgebraElement {
    let d = rep.dim();
    loop {
        let coords: Vec<Vec<Complex64>> = (lo..=hi)
            .map(|_| (0..d).map(|_| complex_normal(rng)).collect())
            .collect();
        let e = LoopAlgebraElement::from_coordinates(rep.clone(), lo, &coords).expect("shapes agree");
        let nrm = e.norm();
        if nrm > 0.0 {
            return e.scale(1.0 / nrm);
        }
    }
}

/// The composite remainder `x ↦ R(P₊x, P⊖x)` driving the split solver.
pub fn split_remainder(x: &LoopAlgebraElement, cfg: &Settings) -> Result<LoopAlgebraElement> {
    bch_remainder(&x.project_plus(), &x.project_ominus(), cfg.bch_order, cfg)
}

#[derive(Debug, Clone)]
pub struct SplitSolution {
    pub x: LoopAlgebraElement,
    pub iterations: usize,
    /// Largest ratio of consecutive step norms observed.
    pub contraction: f64,
    /// `‖P₊x * P⊖x - y‖_W`.
    pub residual: f64,
    /// Step norms, one per iteration.
    pub steps: Vec<f64>,
}

/// Solves `P₊x * P⊖x = y` by the fixed-point iteration `x ← y - R(P₊x, P⊖x)`.
pub fn split_solve(y: &LoopAlgebraElement, cfg: &Settings) -> Result<SplitSolution> {
    let limit = cfg.bch_radius / 4.0;
    let ny = y.norm();
    if ny > limit * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "‖y‖_W = {ny:.4e} exceeds the guaranteed solvable radius {limit}"
        )));
    }
    let mut x = y.clone();
    let mut steps = Vec::new();
    let mut contraction = 0.0f64;
    let mut converged = false;
    for _ in 0..cfg.solver_max_iter {
        let next = y.sub(&split_remainder(&x, cfg)?);
        let step = next.sub(&x).norm();
        if let Some(&prev) = steps.last() {
            if prev > 1e-13 && step > 1e-13 {
                contraction = contraction.max(step / prev);
            }
        }
        steps.push(step);
        x = next;
        if step < cfg.solver_step_tol {
            converged = true;
            break;
        }
    }
    let residual = x.add(&split_remainder(&x, cfg)?).sub(y).norm();
    if !converged {
        return Err(Error::numeric(
            format!("split iteration did not converge in {} steps", cfg.solver_max_iter),
            residual,
        ));
    }
    if residual > cfg.solver_tol {
        return Err(Error::numeric("split solution misses the solver tolerance", residual));
    }
    Ok(SplitSolution {
        x,
        iterations: steps.len(),
        contraction,
        residual,
        steps,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFactorizationStats {
    pub iterations: usize,
    pub contraction: f64,
    pub solver_residual: f64,
    /// Sup over circle samples of `‖g(z) - plus(z) minus(z)‖₂`.
    pub sup_residual: f64,
    pub log_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GroupFactorization {
    pub plus: MatrixLoop,
    pub minus: MatrixLoop,
    pub x: LoopAlgebraElement,
    pub stats: GroupFactorizationStats,
}

/// Factors a loop near the identity of the group generated by `rep` as
/// `g = exp(P₊x) · exp(P⊖x)` where `P₊x * P⊖x = log g`.
pub fn group_factorize_local(g: &MatrixLoop, rep: &Arc<LieAlgebraRep>, cfg: &Settings) -> Result<GroupFactorization> {
    if g.n() != rep.n {
        return Err(Error::invalid(format!(
            "loop dimension {} does not match the Lie algebra dimension {}",
            g.n(),
            rep.n
        )));
    }
    let log_g = g.log_loop(cfg)?;
    let off = membership_residual(rep, &log_g)?;
    if off > LOG_SPAN_TOL {
        return Err(Error::domain(format!("log g leaves the Lie algebra by {off:.3e}")));
    }
    let (lo, hi) = log_g.band();
    let coeffs: Vec<CMatrix> = (lo..=hi).map(|k| rep.project(&log_g.coefficient(k))).collect();
    let y = LoopAlgebraElement::from_parts(rep.clone(), MatrixLoop::from_coefficients(lo, &coeffs)?);
    let sol = split_solve(&y, cfg)?;
    let plus = sol.x.project_plus().series.exp_loop(cfg)?;
    let minus = sol.x.project_ominus().series.exp_loop(cfg)?;
    let count = cfg.samples.max(4 * g.width());
    let prod = plus.mul_with(&minus, &Truncation::UNBOUNDED)?;
    let sup_residual = g.sub(&prod).sup_circle(count);
    if sup_residual > cfg.residual_tol {
        return Err(Error::numeric(
            "group factors miss the reconstruction tolerance",
            sup_residual,
        ));
    }
    Ok(GroupFactorization {
        plus,
        minus,
        stats: GroupFactorizationStats {
            iterations: sol.iterations,
            contraction: sol.contraction,
            solver_residual: sol.residual,
            sup_residual,
            log_norm: y.norm(),
        },
        x: sol.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Dense matrix logarithm near the identity by the Mercator series.
    fn dense_log(m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let a = m - CMatrix::identity(n, n);
        let mut power = CMatrix::identity(n, n);
        let mut sum = CMatrix::zeros(n, n);
        for k in 1..400 {
            power = &power * &a;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += &power * c(sign / k as f64);
            if power.norm() < 1e-18 {
                break;
            }
        }
        sum
    }

    fn constant_elem(rep: &Arc<LieAlgebraRep>, coords: &[f64]) -> LoopAlgebraElement {
        let cs: Vec<Complex64> = coords.iter().map(|&x| c(x)).collect();
        LoopAlgebraElement::from_coordinates(rep.clone(), 0, &[cs]).unwrap()
    }

    #[test]
    fn dynkin_low_orders() {
        let t = DynkinTable::get();
        // degree 2: ½[x, y] = ½ · (½[xy] - ½[yx]) with the 1/|w| factor
        assert!((t.coeff(2, 0b01) - 0.25).abs() < 1e-15);
        assert!((t.coeff(2, 0b10) + 0.25).abs() < 1e-15);
        assert!(t.coeff(2, 0b00).abs() < 1e-15);
        assert_eq!(t.coeff(1, 0), 1.0);
    }

    #[test]
    fn rejects_bad_bases() {
        let e = LieAlgebraRep::sl2().basis()[0].clone();
        assert!(LieAlgebraRep::new(vec![e.clone(), e.clone() * c(2.0)], MatrixNorm::Operator2).is_err());
        let f = LieAlgebraRep::sl2().basis()[1].clone();
        // span{E, F} is not closed: [E, F] = H
        assert!(LieAlgebraRep::new(vec![e, f], MatrixNorm::Operator2).is_err());
    }

    #[test]
    fn commuting_and_zero_arguments() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let x = constant_elem(&rep, &[0.0, 0.0, 0.05]);
        let y = constant_elem(&rep, &[0.0, 0.0, -0.03]);
        for order in 1..=MAX_BCH_ORDER {
            let z = bch_multiply(&x, &y, order, &cfg).unwrap();
            assert!(z.sub(&x.add(&y)).norm() == 0.0);
        }
        let zero = LoopAlgebraElement::zero(rep.clone());
        assert!(bch_multiply(&x, &zero, 6, &cfg).unwrap().sub(&x).norm() == 0.0);
        let xs = random_unit_element(&rep, -2, 2, &mut ChaCha8Rng::seed_from_u64(3)).scale(0.1);
        assert!(bch_remainder(&xs, &xs, 6, &cfg).unwrap().norm() < 1e-15);
    }

    #[test]
    fn leading_remainder_term() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let eps = 0.01;
        let x = constant_elem(&rep, &[eps, 0.0, 0.0]);
        let y = constant_elem(&rep, &[0.0, eps, 0.0]);
        let r = bch_remainder(&x, &y, 2, &cfg).unwrap();
        let expect = constant_elem(&rep, &[0.0, 0.0, eps * eps / 2.0]);
        assert!(r.sub(&expect).norm() < 1e-18);
    }

    #[test]
    fn matches_dense_exp_log() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let eps = 0.05;
        let x = constant_elem(&rep, &[eps, 0.0, 0.0]);
        let y = constant_elem(&rep, &[0.0, eps, 0.0]);
        let z = bch_multiply(&x, &y, 6, &cfg).unwrap();
        let xm = x.series().coefficient(0);
        let ym = y.series().coefficient(0);
        let oracle = dense_log(&(xm.exp() * ym.exp()));
        assert!((z.series().coefficient(0) - oracle).norm() < 1e-10);
    }

    #[test]
    fn outside_ball_is_rejected() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let x = constant_elem(&rep, &[1.0, 0.0, 0.0]);
        assert!(matches!(bch_multiply(&x, &x, 2, &cfg), Err(Error::Domain(_))));
        assert!(bch_multiply(&x.scale(0.01), &x.scale(0.01), 9, &cfg).is_err());
    }

    #[test]
    fn lipschitz_of_linear_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dir = |r: &mut ChaCha8Rng| Complex64::from_polar(1.0, r.random::<f64>() * std::f64::consts::TAU);
        let id = lipschitz_estimate(|x: &Complex64| Ok(*x), &c(0.0), 1.0, 200, dir, &mut rng).unwrap();
        assert!((1.0 - 1e-9..=1.0 + 1e-12).contains(&id));
        let two = lipschitz_estimate(|x: &Complex64| Ok(*x * 2.0), &c(0.3), 0.5, 200, dir, &mut rng).unwrap();
        assert!((two - 2.0).abs() < 1e-9);
        assert!(lipschitz_estimate(|x: &Complex64| Ok(*x), &c(0.0), 1.0, 10, dir, &mut rng).is_err());
    }

    #[test]
    fn split_solver_trivial_cases() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = random_unit_element(&rep, 0, 3, &mut rng).scale(0.02);
        let sol = split_solve(&y, &cfg).unwrap();
        assert!(sol.x.sub(&y).norm() == 0.0);

        let abelian = Arc::new(LieAlgebraRep::scalars(2));
        let y = random_unit_element(&abelian, -2, 2, &mut rng).scale(0.03);
        let sol = split_solve(&y, &cfg).unwrap();
        assert!(sol.x.sub(&y).norm() == 0.0);

        let too_big = random_unit_element(&rep, -1, 1, &mut rng).scale(0.05);
        assert!(matches!(split_solve(&too_big, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn split_solution_reproduces_exponential() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = random_unit_element(&rep, -2, 2, &mut rng).scale(0.02);
        let sol = split_solve(&y, &cfg).unwrap();
        assert!(sol.contraction <= 0.55);
        let plus = sol.x.project_plus();
        let minus = sol.x.project_ominus();
        for z in crate::matrix::circle_points(256) {
            let lhs = plus.series().eval_at(z).exp() * minus.series().eval_at(z).exp();
            let rhs = y.series().eval_at(z).exp();
            assert!((lhs - rhs).norm() <= 1e-9);
        }
    }

    #[test]
    fn group_factorization_examples() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        let id = MatrixLoop::identity(2);
        let f = group_factorize_local(&id, &rep, &cfg).unwrap();
        assert_eq!(f.plus, id);
        assert_eq!(f.minus, id);

        let a = LoopAlgebraElement::from_coordinates(rep.clone(), 1, &[vec![c(0.01), c(-0.005), c(0.015)]]).unwrap();
        let g = a.series().exp_loop(&cfg).unwrap();
        let f = group_factorize_local(&g, &rep, &cfg).unwrap();
        assert!(matrix_wiener_norm(&f.plus.sub(&g), MatrixNorm::Operator2) < 1e-12);
        assert!(matrix_wiener_norm(&f.minus.sub(&id), MatrixNorm::Operator2) < 1e-12);

        let x = LoopAlgebraElement::from_coordinates(
            rep.clone(),
            -1,
            &[
                vec![c(0.0), c(0.02), c(0.0)],
                vec![c(0.0); 3],
                vec![c(0.02), c(0.0), c(0.0)],
            ],
        )
        .unwrap();
        // ‖log g‖ = 0.04 lies beyond r/4 for the default radius
        let wide = Settings {
            bch_radius: 0.2,
            ..Settings::default()
        };
        let g = x.series().exp_loop(&wide).unwrap();
        let f = group_factorize_local(&g, &rep, &wide).unwrap();
        assert!(matches!(group_factorize_local(&g, &rep, &cfg), Err(Error::Domain(_))));
        assert!(f.stats.sup_residual <= 1e-9);
        assert_eq!(f.minus.coefficient(0), CMatrix::identity(2, 2));
        assert!(f.plus.band().0 >= 0 && f.minus.band().1 <= 0);
    }

    #[test]
    fn group_factorization_rejects_foreign_loops() {
        let cfg = Settings::default();
        let rep = Arc::new(LieAlgebraRep::sl2());
        // log of diag(1.01, 1.01) is 0.00995·I, not traceless
        let g = MatrixLoop::constant(&(CMatrix::identity(2, 2) * c(1.01)));
        assert!(matches!(group_factorize_local(&g, &rep, &cfg), Err(Error::Domain(_))));
    }
}

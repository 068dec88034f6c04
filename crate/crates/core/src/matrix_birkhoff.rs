//! Matrix Birkhoff factorization `g = plus · D · minus` with
//! `D = diag(z^κ₁, …, z^κₙ)`, `plus` holomorphic inside the disk and `minus`
//! holomorphic outside (including ∞).
//!
//! Rows of `plus⁻¹` are found by finite-section linear algebra: a row vector
//! `u` with nonnegative exponents lies in the row module of index `m` when
//! `u·g` has no exponents above `m`. The ranks of the leading coefficients
//! `(u·g)_m` over these modules determine the partial indices, so a trial
//! tuple is feasible only if it is the true one.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentSeries;
use crate::linalg::{reciprocal_condition, smallest_singular_value, CMatrix};
use crate::matrix::{circle_points, MatrixLoop};
use crate::norms::CircleLoop;
use crate::scalar::winding_number;
use crate::settings::{Settings, Truncation};

/// Relative singular-value threshold for null vectors of a section.
const NULL_TOL: f64 = 1e-9;
/// Relative threshold for a leading coefficient to count as a new direction.
const LEAD_TOL: f64 = 1e-7;
/// Radii of the closed-disk grid used for factor margins.
const DISK_RINGS: usize = 8;

#[derive(Debug, Clone)]
pub struct MatrixFactorization {
    pub plus: MatrixLoop,
    /// Non-increasing.
    pub indices: Vec<i64>,
    pub minus: MatrixLoop,
    /// Sup over circle samples of `‖g - plus·D·minus‖₂`.
    pub residual: f64,
    /// Smallest singular value of `plus` over the closed-disk grid.
    pub plus_margin: f64,
    /// Smallest singular value of `minus` over the exterior grid.
    pub minus_margin: f64,
    /// Whether `minus(∞)` was brought to block unit-lower-triangular form.
    /// When false the factors are canonical only up to an admissible coupling.
    pub normalized: bool,
}

impl MatrixFactorization {
    /// `plus · D · minus` as a loop.
    pub fn reconstruct(&self) -> Result<MatrixLoop> {
        let dm = self.minus.shift_rows(&self.indices);
        self.plus.mul_with(&dm, &Truncation::UNBOUNDED)
    }
}

/// Winding number of `det g`.
pub fn total_index(g: &MatrixLoop, cfg: &Settings) -> Result<i64> {
    let inv = g.invertibility(cfg.samples, cfg.invertibility_floor);
    if !inv.invertible {
        return Err(Error::NotInvertible { margin: inv.margin });
    }
    winding_number(&g.det()?, cfg.samples)
}

fn check_input(g: &MatrixLoop, cfg: &Settings) -> Result<i64> {
    if g.n() == 0 {
        return Err(Error::invalid("empty matrix loop"));
    }
    total_index(g, cfg)
}

/// Coefficient matrices of `g` over its band.
struct Blocks {
    lo: i64,
    hi: i64,
    coeffs: Vec<CMatrix>,
    n: usize,
}

impl Blocks {
    fn new(g: &MatrixLoop) -> Self {
        let (lo, hi) = g.band();
        Self {
            lo,
            hi,
            coeffs: (lo..=hi).map(|k| g.coefficient(k)).collect(),
            n: g.n(),
        }
    }

    fn get(&self, k: i64) -> Option<&CMatrix> {
        if k < self.lo || k > self.hi {
            None
        } else {
            Some(&self.coeffs[(k - self.lo) as usize])
        }
    }
}

/// Matrix loop with nonnegative exponents from stacked row vectors:
/// `rows[j][l·n + a]` is the `z^l` coefficient of entry `(j, a)`.
fn rows_to_loop(rows: &[DVector<Complex64>], n: usize) -> Result<MatrixLoop> {
    let degree = rows.first().map(|r| r.len() / n).unwrap_or(1);
    let coeffs: Vec<CMatrix> = (0..degree)
        .map(|l| DMatrix::from_fn(rows.len(), n, |j, a| rows[j][l * n + a]))
        .collect();
    MatrixLoop::from_coefficients(0, &coeffs)
}

/// Row transform `T` (constant, block upper-triangular for the index blocks)
/// that makes `T·lead` block unit-lower-triangular: identity on each diagonal
/// block, zero to its right. `None` if a trailing principal block is singular.
fn normalizer(lead: &CMatrix, indices: &[i64]) -> Option<CMatrix> {
    let n = indices.len();
    let mut t = CMatrix::zeros(n, n);
    let mut s = 0;
    while s < n {
        let mut e = s + 1;
        while e < n && indices[e] == indices[s] {
            e += 1;
        }
        let trailing = lead.view((s, s), (n - s, n - s)).into_owned();
        if reciprocal_condition(&trailing) < 1e-12 {
            return None;
        }
        let inv = trailing.try_inverse()?;
        for j in s..e {
            for k in s..n {
                t[(j, k)] = inv[(j - s, k - s)];
            }
        }
        s = e;
    }
    Some(t)
}

/// The exact target for `minus(∞)` after normalization: the normalized
/// positions set to identity / zero, the rest left as computed.
fn pin_leading(lead: &CMatrix, indices: &[i64]) -> CMatrix {
    let n = indices.len();
    let mut out = lead.clone();
    for j in 0..n {
        let s = indices.iter().position(|&k| k == indices[j]).unwrap_or(j);
        for k in s..n {
            out[(j, k)] = if j == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    out
}

fn replace_constant(m: &MatrixLoop, c: &CMatrix) -> MatrixLoop {
    let n = m.n();
    let current = m.coefficient(0);
    MatrixLoop::from_fn(n, |i, j| {
        m.entry(i, j)
            .sub(&LaurentSeries::monomial(current[(i, j)], 0))
            .add(&LaurentSeries::monomial(c[(i, j)], 0))
    })
}

fn sample_count(cfg: &Settings, loops: &[&MatrixLoop]) -> usize {
    let w = loops.iter().map(|l| l.width()).max().unwrap_or(1);
    cfg.samples.max(4 * w).next_power_of_two()
}

/// Sup over circle samples of `‖g - plus·D·minus‖₂`.
pub fn reconstruction_residual(
    g: &MatrixLoop,
    plus: &MatrixLoop,
    indices: &[i64],
    minus: &MatrixLoop,
    count: usize,
) -> f64 {
    residual_profile(g, plus, indices, minus, count)
        .into_iter()
        .fold(0.0, f64::max)
}

/// `‖g(z) - plus(z)·D(z)·minus(z)‖₂` at `z = e^{2πij/count}`, `j = 0..count`.
pub fn residual_profile(
    g: &MatrixLoop,
    plus: &MatrixLoop,
    indices: &[i64],
    minus: &MatrixLoop,
    count: usize,
) -> Vec<f64> {
    let gs = g.samples(count);
    let ps = plus.samples(count);
    let ms = minus.samples(count);
    circle_points(count)
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let d = CMatrix::from_diagonal(&DVector::from_iterator(
                indices.len(),
                indices.iter().map(|&k| z.powi(k as i32)),
            ));
            crate::linalg::matrix_norm(&(&gs[i] - &ps[i] * d * &ms[i]), crate::settings::MatrixNorm::Operator2)
        })
        .collect()
}

/// Points of the closed unit disk: `DISK_RINGS` circles plus the origin.
fn disk_grid(angles: usize) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for r in 1..=DISK_RINGS {
        let radius = r as f64 / DISK_RINGS as f64;
        pts.extend(circle_points(angles).into_iter().map(|z| z * radius));
    }
    pts
}

/// Smallest singular value of a loop with nonnegative exponents over the disk grid.
fn disk_margin(f: &MatrixLoop, angles: usize) -> f64 {
    disk_grid(angles)
        .into_iter()
        .map(|z| smallest_singular_value(&f.eval_at(z)))
        .fold(f64::INFINITY, f64::min)
}

/// Builds the factorization from the rows `u` of `plus⁻¹` (already ordered
/// by non-increasing index) and normalizes `minus(∞)`.
fn assemble(g: &MatrixLoop, rows: &MatrixLoop, indices: &[i64], cfg: &Settings) -> Result<MatrixFactorization> {
    let neg: Vec<i64> = indices.iter().map(|k| -k).collect();
    let ug = rows.mul_with(g, &Truncation::UNBOUNDED)?;
    let minus_raw = ug.shift_rows(&neg).restrict(i64::MIN, 0);
    let lead = minus_raw.coefficient(0);
    let (rows, minus, normalized) = match normalizer(&lead, indices) {
        Some(t) => {
            let twist = MatrixLoop::constant(&t).shift_rows(indices).shift_cols(&neg);
            let rows = twist.mul_with(rows, &Truncation::UNBOUNDED)?;
            let minus = minus_raw.left_mul_constant(&t);
            let pinned = pin_leading(&minus.coefficient(0), indices);
            (rows, replace_constant(&minus, &pinned), true)
        }
        None => (rows.clone(), minus_raw, false),
    };
    let plus = rows.invert(cfg)?.project_plus();
    let count = sample_count(cfg, &[g, &plus, &minus]);
    let residual = reconstruction_residual(g, &plus, indices, &minus, count);
    let angles = cfg.samples.max(64);
    Ok(MatrixFactorization {
        plus_margin: disk_margin(&plus, angles),
        minus_margin: disk_margin(&minus.reflect(), angles),
        plus,
        indices: indices.to_vec(),
        minus,
        residual,
        normalized,
    })
}

fn initial_section(g: &MatrixLoop) -> usize {
    g.n() * g.width() + 4
}

/// Factorization with all partial indices zero, `minus(∞) = I`.
///
/// Solves the finite block-Toeplitz section `Σ_l U_l g_{k-l} = δ_{k0} I`,
/// `k = 0..=K`, for the rows of `plus⁻¹`, doubling `K` until the
/// reconstruction residual meets the tolerance.
pub fn canonical_factorize(g: &MatrixLoop, cfg: &Settings) -> Result<MatrixFactorization> {
    let total = check_input(g, cfg)?;
    if total != 0 {
        return Err(Error::IndexObstruction(format!(
            "total index {total} is nonzero, so some partial index is nonzero"
        )));
    }
    let n = g.n();
    let blocks = Blocks::new(g);
    let zeros = vec![0i64; n];
    let mut k_sec = initial_section(g).min(cfg.section_cap);
    let mut ill_streak = 0;
    let mut best = f64::INFINITY;
    loop {
        let size = (k_sec + 1) * n;
        // transpose of the block-Toeplitz section: block (k, l) = g_{k-l}ᵀ
        let mut tt = CMatrix::zeros(size, size);
        for k in 0..=k_sec {
            for l in 0..=k_sec {
                if let Some(c) = blocks.get(k as i64 - l as i64) {
                    for a in 0..n {
                        for b in 0..n {
                            tt[(k * n + b, l * n + a)] = c[(a, b)];
                        }
                    }
                }
            }
        }
        let rcond = reciprocal_condition(&tt);
        if rcond < cfg.rcond_floor {
            ill_streak += 1;
        } else {
            ill_streak = 0;
            let mut rhs = CMatrix::zeros(size, n);
            for a in 0..n {
                rhs[(a, a)] = Complex64::new(1.0, 0.0);
            }
            if let Some(sol) = tt.lu().solve(&rhs) {
                let rows: Vec<DVector<Complex64>> = (0..n).map(|j| sol.column(j).into_owned()).collect();
                match rows_to_loop(&rows, n).and_then(|u| assemble(g, &u, &zeros, cfg)) {
                    Ok(f) if f.residual <= cfg.residual_tol => return Ok(f),
                    Ok(f) => best = best.min(f.residual),
                    Err(Error::NotInvertible { .. }) | Err(Error::Truncation { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if ill_streak >= 2 {
            return Err(Error::IndexObstruction(format!(
                "Toeplitz sections stay ill-conditioned (rcond {rcond:.2e}); nonzero partial indices likely"
            )));
        }
        if k_sec >= cfg.section_cap {
            return Err(Error::IndexObstruction(format!(
                "no well-conditioned section up to size {k_sec} (best residual {best:.2e}); nonzero partial indices likely"
            )));
        }
        k_sec = (2 * k_sec).min(cfg.section_cap);
    }
}

/// Order in which candidate index tuples are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationOrder {
    /// Smallest spread `κ₁ - κₙ` first, ties lexicographically decreasing.
    #[default]
    Balanced,
    /// The balanced order backwards.
    Reverse,
    /// A seeded shuffle.
    Shuffled(u64),
}

/// Non-increasing tuples of length `n` in `[-bound, bound]` summing to `total`.
pub fn candidate_tuples(n: usize, bound: i64, total: i64, order: EnumerationOrder) -> Vec<Vec<i64>> {
    fn rec(n: usize, max: i64, bound: i64, remaining: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let left = (n - cur.len()) as i64;
        for v in (-bound..=max).rev() {
            // the remaining entries lie in [-bound, v]
            if remaining - v > (left - 1) * v || remaining - v < -(left - 1) * bound {
                continue;
            }
            cur.push(v);
            rec(n, v, bound, remaining - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 && bound >= 0 {
        rec(n, bound, bound, total, &mut Vec::with_capacity(n), &mut out);
    }
    let spread = |t: &Vec<i64>| t[0] - t[t.len() - 1];
    out.sort_by(|a, b| spread(a).cmp(&spread(b)).then_with(|| b.cmp(a)));
    match order {
        EnumerationOrder::Balanced => {}
        EnumerationOrder::Reverse => out.reverse(),
        EnumerationOrder::Shuffled(seed) => out.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed)),
    }
    out
}

struct RowModule {
    /// Orthonormal null vectors, one per column, length `(K+1)·n`.
    basis: CMatrix,
    /// Leading coefficient `(u·g)_m` of each basis vector, one per column.
    leading: CMatrix,
}

/// Finite section of degree `K` with cached row modules per index value.
struct Section<'a> {
    blocks: &'a Blocks,
    degree: usize,
    modules: HashMap<i64, RowModule>,
}

impl<'a> Section<'a> {
    fn new(blocks: &'a Blocks, degree: usize) -> Self {
        Self {
            blocks,
            degree,
            modules: HashMap::new(),
        }
    }

    /// Row vectors `u` of degree ≤ K with `(u·g)_k = 0` for all `k > m`.
    fn module(&mut self, m: i64) -> &RowModule {
        let (blocks, degree) = (self.blocks, self.degree);
        self.modules.entry(m).or_insert_with(|| {
            let n = blocks.n;
            let cols = (degree + 1) * n;
            let top = degree as i64 + blocks.hi;
            let eqs = (top - m).max(0) as usize;
            let mut r = CMatrix::zeros((eqs * n).max(cols), cols);
            for (e, k) in (m + 1..=top).enumerate() {
                for l in 0..=degree {
                    if let Some(c) = blocks.get(k - l as i64) {
                        for a in 0..n {
                            for b in 0..n {
                                r[(e * n + b, l * n + a)] = c[(a, b)];
                            }
                        }
                    }
                }
            }
            let basis = nullspace(r);
            let mut leading = CMatrix::zeros(n, basis.ncols());
            for l in 0..=degree {
                if let Some(c) = blocks.get(m - l as i64) {
                    let slice = basis.rows(l * n, n);
                    leading += c.transpose() * slice;
                }
            }
            RowModule { basis, leading }
        })
    }

    /// Rows of `plus⁻¹` realizing `indices`, or `None` if the tuple is infeasible.
    fn trial(&mut self, indices: &[i64]) -> Option<Vec<DVector<Complex64>>> {
        let n = self.blocks.n;
        let mut values: Vec<i64> = indices.to_vec();
        values.dedup();
        values.reverse();
        let mut chosen: Vec<(i64, DVector<Complex64>)> = Vec::new();
        let mut leads: Vec<DVector<Complex64>> = Vec::new();
        for m in values {
            let want = indices.iter().filter(|&&k| k == m).count();
            let module = self.module(m);
            if module.basis.ncols() < want {
                return None;
            }
            let image = &module.leading;
            let mut free = image.clone();
            if !leads.is_empty() {
                let q = CMatrix::from_columns(&leads).qr().q();
                free -= &q * (q.adjoint() * image);
            }
            let scale = image.norm().max(1.0);
            let svd = free.svd(false, true);
            let v_t = svd.v_t?;
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            if order.len() < want || svd.singular_values[order[want - 1]] <= LEAD_TOL * scale {
                return None;
            }
            for &i in order.iter().take(want) {
                let w: DVector<Complex64> = v_t.row(i).adjoint();
                chosen.push((m, &module.basis * &w));
                leads.push(image * &w);
            }
        }
        debug_assert_eq!(chosen.len(), n);
        // non-increasing index order, stable within a block
        chosen.sort_by_key(|&(k, _)| std::cmp::Reverse(k));
        Some(chosen.into_iter().map(|(_, u)| u).collect())
    }
}

/// Columns spanning the (numerical) null space of `r`, which must have at
/// least as many rows as columns.
fn nullspace(r: CMatrix) -> CMatrix {
    let cols = r.ncols();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= NULL_TOL * smax || smax == 0.0)
        .collect();
    CMatrix::from_fn(cols, keep.len(), |i, c| v_t[(keep[c], i)].conj())
}

/// Partial indices of `g`, searching tuples with entries in `[-bound, bound]`.
pub fn partial_indices(g: &MatrixLoop, bound: i64, cfg: &Settings) -> Result<Vec<i64>> {
    full_factorize_ordered(g, bound, EnumerationOrder::Balanced, cfg).map(|f| f.indices)
}

pub fn partial_indices_ordered(
    g: &MatrixLoop,
    bound: i64,
    order: EnumerationOrder,
    cfg: &Settings,
) -> Result<Vec<i64>> {
    full_factorize_ordered(g, bound, order, cfg).map(|f| f.indices)
}

pub fn full_factorize(g: &MatrixLoop, bound: i64, cfg: &Settings) -> Result<MatrixFactorization> {
    full_factorize_ordered(g, bound, EnumerationOrder::Balanced, cfg)
}

/// Tries candidate tuples in `order` on growing finite sections; the first
/// tuple whose factorization verifies wins.
pub fn full_factorize_ordered(
    g: &MatrixLoop,
    bound: i64,
    order: EnumerationOrder,
    cfg: &Settings,
) -> Result<MatrixFactorization> {
    if bound < 0 {
        return Err(Error::invalid(format!("index bound must be nonnegative, got {bound}")));
    }
    let total = check_input(g, cfg)?;
    let n = g.n();
    let tuples = candidate_tuples(n, bound, total, order);
    if tuples.is_empty() {
        return Err(Error::numeric(
            format!("total index {total} is out of reach for {n} indices bounded by {bound}; raise bound"),
            f64::NAN,
        ));
    }
    let blocks = Blocks::new(g);
    let mut degree = (initial_section(g) + 2 * bound as usize).min(cfg.section_cap);
    let mut best = f64::INFINITY;
    loop {
        let mut section = Section::new(&blocks, degree);
        for tuple in &tuples {
            let Some(rows) = section.trial(tuple) else { continue };
            let fact = match rows_to_loop(&rows, n).and_then(|u| assemble(g, &u, tuple, cfg)) {
                Ok(f) => f,
                Err(Error::NotInvertible { .. }) | Err(Error::Truncation { .. }) => continue,
                Err(e) => return Err(e),
            };
            if fact.residual > cfg.residual_tol {
                best = best.min(fact.residual);
                continue;
            }
            let report = verify_factorization(g, &fact, cfg.samples, cfg);
            if report.passed {
                return Ok(fact);
            }
            best = best.min(report.residual);
        }
        if degree >= cfg.section_cap {
            return Err(Error::numeric(
                format!("no index tuple within bound {bound} succeeded; raise bound or truncation budget"),
                best,
            ));
        }
        degree = (2 * degree).min(cfg.section_cap);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub residual: f64,
    pub residual_ok: bool,
    /// Every entry of `plus` has only exponents ≥ 0.
    pub plus_membership: bool,
    /// Every entry of `minus` has only exponents ≤ 0.
    pub minus_membership: bool,
    pub plus_margin: f64,
    pub minus_margin: f64,
    pub margins_ok: bool,
    /// `minus(∞)` is the identity (all indices zero) or block
    /// unit-lower-triangular (normalized nonzero indices).
    pub normalization_ok: bool,
    pub indices_sorted: bool,
    /// `Σ indices` equals the winding number of `det g`.
    pub sum_rule_ok: bool,
    pub passed: bool,
}

/// Independent certification of a factorization at the configured tolerance.
pub fn verify_factorization(
    g: &MatrixLoop,
    fact: &MatrixFactorization,
    samples: usize,
    cfg: &Settings,
) -> VerifyReport {
    let n = g.n();
    let shapes_ok = fact.plus.n() == n && fact.minus.n() == n && fact.indices.len() == n;
    let count = samples.max(4 * g.width().max(fact.plus.width()).max(fact.minus.width()));
    let residual = if shapes_ok {
        reconstruction_residual(g, &fact.plus, &fact.indices, &fact.minus, count)
    } else {
        f64::INFINITY
    };
    let plus_membership = fact.plus.is_zero() || fact.plus.band().0 >= 0;
    let minus_membership = fact.minus.is_zero() || fact.minus.band().1 <= 0;
    let angles = samples.max(64);
    let (plus_margin, minus_margin) = if plus_membership && minus_membership && shapes_ok {
        (
            disk_margin(&fact.plus, angles),
            disk_margin(&fact.minus.reflect(), angles),
        )
    } else {
        (0.0, 0.0)
    };
    let margins_ok = plus_margin > cfg.invertibility_floor && minus_margin > cfg.invertibility_floor;
    let indices_sorted = fact.indices.windows(2).all(|w| w[0] >= w[1]);
    let normalization_ok = shapes_ok && {
        let lead = fact.minus.coefficient(0);
        if fact.indices.iter().all(|&k| k == 0) || fact.normalized {
            let target = pin_leading(&lead, &fact.indices);
            (lead - target).norm() <= cfg.residual_tol
        } else {
            true
        }
    };
    let sum_rule_ok = shapes_ok
        && total_index(g, cfg)
            .map(|t| t == fact.indices.iter().sum::<i64>())
            .unwrap_or(false);
    let residual_ok = residual <= cfg.residual_tol;
    VerifyReport {
        samples: count,
        residual,
        residual_ok,
        plus_membership,
        minus_membership,
        plus_margin,
        minus_margin,
        margins_ok,
        normalization_ok,
        indices_sorted,
        sum_rule_ok,
        passed: residual_ok
            && plus_membership
            && minus_membership
            && margins_ok
            && normalization_ok
            && indices_sorted
            && sum_rule_ok,
    }
}

/// True iff each entry `c_kj` vanishes when `κ_k < κ_j` and is otherwise a
/// polynomial of degree at most `κ_k - κ_j`, up to `tol`.
pub fn coupling_structure_ok(c: &MatrixLoop, indices: &[i64], tol: f64) -> bool {
    let n = c.n();
    if indices.len() != n {
        return false;
    }
    (0..n).all(|k| {
        (0..n).all(|j| {
            let allowed = indices[k] - indices[j];
            c.entry(k, j)
                .terms()
                .all(|(e, v)| v.norm() <= tol || (allowed >= 0 && (0..=allowed).contains(&e)))
        })
    })
}

#[derive(Debug, Clone)]
pub struct Coupling {
    /// `plus₁⁻¹ · plus₂`.
    pub matrix: MatrixLoop,
    /// Degree/vanishing pattern of `matrix` and consistency of the minus factors.
    pub structure_ok: bool,
    /// `‖D⁻¹ C⁻¹ D · minus₁ - minus₂‖_W`.
    pub minus_mismatch: f64,
}

/// Relates two factorizations of the same loop: `plus₂ = plus₁ · C` and
/// `minus₂ = D⁻¹ C⁻¹ D · minus₁`.
pub fn coupling_matrix(first: &MatrixFactorization, second: &MatrixFactorization, cfg: &Settings) -> Result<Coupling> {
    if first.plus.n() != second.plus.n() {
        return Err(Error::invalid("factorizations have different dimensions"));
    }
    if first.indices != second.indices {
        return Err(Error::InvariantViolation(format!(
            "partial indices differ between factorizations: {:?} vs {:?}",
            first.indices, second.indices
        )));
    }
    let kappa = &first.indices;
    let neg: Vec<i64> = kappa.iter().map(|k| -k).collect();
    let c = first
        .plus
        .invert(cfg)?
        .mul_with(&second.plus, &cfg.truncation)?
        .map_entries(|e| trim(e, cfg.residual_tol * 1e-2));
    let c_inv = c.invert(cfg)?;
    let predicted = c_inv
        .shift_rows(&neg)
        .shift_cols(kappa)
        .mul_with(&first.minus, &cfg.truncation)?;
    let minus_mismatch = crate::norms::matrix_wiener_norm(&predicted.sub(&second.minus), cfg.matrix_norm);
    let structure_ok = coupling_structure_ok(&c, kappa, cfg.residual_tol) && minus_mismatch <= cfg.residual_tol;
    Ok(Coupling {
        matrix: c,
        structure_ok,
        minus_mismatch,
    })
}

/// Drops coefficients below `eps` (numerical dust from the inverse).
fn trim(f: &LaurentSeries, eps: f64) -> LaurentSeries {
    f.map_coeffs(|c| if c.norm() <= eps { Complex64::new(0.0, 0.0) } else { c })
}

use std::sync::Arc;

use birkhoff_core::bch::{
    bch_multiply, bch_remainder, group_factorize_local, lipschitz_estimate, random_unit_element, split_remainder,
    split_solve, GroupFactorizationStats, LieAlgebraRep, LoopAlgebraElement,
};
use birkhoff_core::matrix::circle_points;
use birkhoff_core::matrix_birkhoff::{
    full_factorize, partial_indices_ordered, residual_profile, total_index, verify_factorization,
};
use birkhoff_core::norms::matrix_norm_report;
use birkhoff_core::scalar::{scalar_factorize, winding_number};
use birkhoff_core::{
    CircleLoop, EnumerationOrder, Error, LoopSpec, MatrixFactorization, MatrixLoop, NormReport, ScalarRoute, Settings,
    VerifyReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{Command, Common, Mode};
use crate::Input;

pub(crate) struct Outcome {
    pub result: Value,
    pub passed: bool,
    /// Per-sample reconstruction residuals for `--trace-csv`.
    pub trace: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Margins {
    plus: f64,
    minus: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Residuals {
    /// Sup over circle samples of `‖g - plus·D·minus‖₂`.
    reconstruction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wiener: Option<f64>,
}

/// Payload of a successful `factor` run.
#[derive(Debug, Serialize)]
struct FactorPayload {
    mode: Mode,
    indices: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    route: Option<ScalarRoute>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<i64>,
    normalized: bool,
    plus: LoopSpec,
    minus: LoopSpec,
    norms: NormReport,
    residuals: Residuals,
    margins: Margins,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<GroupFactorizationStats>,
    verify: VerifyReport,
}

/// The fields `verify` reads back from a factor report.
#[derive(Debug, Deserialize)]
struct StoredFactors {
    indices: Vec<i64>,
    #[serde(default)]
    normalized: bool,
    plus: LoopSpec,
    minus: LoopSpec,
}

fn parse_error(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

fn require(input: Option<&Input>) -> Result<&Input, Error> {
    input.ok_or_else(|| Error::InvalidArgument("--input is required for this command".into()))
}

fn load_spec(input: &Input) -> Result<LoopSpec, Error> {
    birkhoff_core::parse_loop_spec(&input.text).map_err(|e| match e {
        Error::Parse { context, message } => parse_error(format!("{}: {context}", input.path.display()), message),
        other => other,
    })
}

fn default_bound(g: &MatrixLoop) -> i64 {
    let (lo, hi) = g.band();
    lo.abs().max(hi.abs())
}

fn lie_algebra(spec: Option<&LoopSpec>, n: usize, cfg: &Settings) -> Result<Arc<LieAlgebraRep>, Error> {
    let rep = match spec.and_then(|s| s.lie_basis_matrices()) {
        Some(basis) => LieAlgebraRep::new(basis, cfg.matrix_norm)?,
        None if n == 2 => LieAlgebraRep::sl2(),
        None => LieAlgebraRep::gl(n),
    };
    Ok(Arc::new(rep.with_norm(cfg.matrix_norm)))
}

pub(crate) fn execute(
    command: &Command,
    common: &Common,
    cfg: &Settings,
    input: Option<&Input>,
) -> Result<Outcome, Error> {
    if let Command::BchCheck { pairs, seed } = command {
        let spec = input.map(load_spec).transpose()?;
        let n = spec.as_ref().map(|s| s.n).unwrap_or(2);
        let rep = lie_algebra(spec.as_ref(), n, cfg)?;
        return bch_check(&rep, cfg, *pairs, *seed);
    }
    let input = require(input)?;
    let spec = load_spec(input)?;
    let g = spec.to_loop()?;
    match command {
        Command::Factor { mode } => factor(&g, &spec, *mode, common, cfg),
        Command::Winding => {
            let w = if g.n() == 1 {
                let f = g.entry(0, 0);
                let inv = f.invertibility(cfg.samples, cfg.invertibility_floor);
                if !inv.invertible {
                    return Err(Error::NotInvertible { margin: inv.margin });
                }
                winding_number(f, cfg.samples)?
            } else {
                total_index(&g, cfg)?
            };
            Ok(Outcome {
                result: json!({ "n": g.n(), "winding": w }),
                passed: true,
                trace: None,
            })
        }
        Command::Indices { shuffle } => {
            let bound = common.bound.unwrap_or_else(|| default_bound(&g));
            let order = shuffle.map(EnumerationOrder::Shuffled).unwrap_or_default();
            let indices = partial_indices_ordered(&g, bound, order, cfg)?;
            Ok(Outcome {
                result: json!({ "bound": bound, "indices": indices, "total_index": indices.iter().sum::<i64>() }),
                passed: true,
                trace: None,
            })
        }
        Command::Project => {
            let plus = g.project_plus();
            let ominus = g.project_ominus();
            let exact = plus.add(&ominus) == g;
            Ok(Outcome {
                result: json!({ "plus": LoopSpec::from_loop(&plus), "ominus": LoopSpec::from_loop(&ominus), "exact": exact }),
                passed: exact,
                trace: None,
            })
        }
        Command::Norms { weights, annuli } => {
            let report = matrix_norm_report(&g, weights, annuli, cfg.samples, cfg.matrix_norm)?;
            Ok(Outcome {
                result: serde_json::to_value(report).expect("norms serialize"),
                passed: true,
                trace: None,
            })
        }
        Command::Verify { factors } => verify(&g, factors, cfg),
        Command::BchCheck { .. } => unreachable!("handled above"),
    }
}

fn factor(g: &MatrixLoop, spec: &LoopSpec, mode: Mode, common: &Common, cfg: &Settings) -> Result<Outcome, Error> {
    let mut kappa = None;
    let mut route = None;
    let mut bound = None;
    let mut solver = None;
    let mut wiener = None;
    let fact = match mode {
        Mode::Scalar => {
            let f = spec.to_scalar()?;
            let s = scalar_factorize(&f, cfg)?;
            kappa = Some(s.kappa);
            route = Some(s.route);
            wiener = Some(s.residual);
            MatrixFactorization {
                plus: MatrixLoop::scalar(s.plus),
                indices: vec![s.kappa],
                minus: MatrixLoop::scalar(s.minus),
                residual: f64::NAN,
                plus_margin: s.plus_margin,
                minus_margin: s.minus_margin,
                normalized: true,
            }
        }
        Mode::Matrix => {
            let b = common.bound.unwrap_or_else(|| default_bound(g));
            bound = Some(b);
            full_factorize(g, b, cfg)?
        }
        Mode::Group => {
            let rep = lie_algebra(Some(spec), g.n(), cfg)?;
            let f = group_factorize_local(g, &rep, cfg)?;
            solver = Some(f.stats.clone());
            MatrixFactorization {
                plus: f.plus,
                indices: vec![0; g.n()],
                minus: f.minus,
                residual: f.stats.sup_residual,
                plus_margin: f64::NAN,
                minus_margin: f64::NAN,
                normalized: true,
            }
        }
    };
    let report = verify_factorization(g, &fact, cfg.samples, cfg);
    let trace = residual_profile(g, &fact.plus, &fact.indices, &fact.minus, report.samples);
    let passed = report.passed && wiener.is_none_or(|w| w <= cfg.residual_tol);
    let payload = FactorPayload {
        mode,
        indices: fact.indices.clone(),
        kappa,
        route,
        bound,
        normalized: fact.normalized,
        plus: LoopSpec::from_loop(&fact.plus),
        minus: LoopSpec::from_loop(&fact.minus),
        norms: matrix_norm_report(g, &[0.0, 1.0, 2.0], &[2, 4, 8], cfg.samples, cfg.matrix_norm)?,
        residuals: Residuals {
            reconstruction: report.residual,
            wiener,
        },
        margins: Margins {
            plus: report.plus_margin,
            minus: report.minus_margin,
        },
        solver,
        verify: report,
    };
    Ok(Outcome {
        result: serde_json::to_value(payload).expect("payload serializes"),
        passed,
        trace: Some(trace),
    })
}

fn verify(g: &MatrixLoop, factors: &std::path::Path, cfg: &Settings) -> Result<Outcome, Error> {
    let ctx = factors.display().to_string();
    let text = std::fs::read_to_string(factors).map_err(|e| parse_error(&ctx, e.to_string()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| {
        parse_error(
            format!("{ctx}: line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let result = doc
        .get("result")
        .ok_or_else(|| parse_error(&ctx, "no `result` field; expected a report from `factor`"))?;
    let stored: StoredFactors =
        serde_json::from_value(result.clone()).map_err(|e| parse_error(format!("{ctx}: result"), e.to_string()))?;
    let fact = MatrixFactorization {
        plus: stored.plus.to_loop()?,
        indices: stored.indices,
        minus: stored.minus.to_loop()?,
        residual: f64::NAN,
        plus_margin: f64::NAN,
        minus_margin: f64::NAN,
        normalized: stored.normalized,
    };
    if fact.plus.n() != g.n() || fact.minus.n() != g.n() || fact.indices.len() != g.n() {
        return Err(parse_error(&ctx, "factor dimensions do not match the loop"));
    }
    let report = verify_factorization(g, &fact, cfg.samples, cfg);
    let trace = residual_profile(g, &fact.plus, &fact.indices, &fact.minus, report.samples);
    Ok(Outcome {
        passed: report.passed,
        result: serde_json::to_value(report).expect("report serializes"),
        trace: Some(trace),
    })
}

/// Largest pointwise gap `‖e^x e^y - e^{x*y}‖₂` over the circle samples.
fn exp_oracle_gap(x: &LoopAlgebraElement, y: &LoopAlgebraElement, z: &LoopAlgebraElement, samples: usize) -> f64 {
    circle_points(samples)
        .into_iter()
        .map(|p| {
            let lhs = x.series().eval_at(p).exp() * y.series().eval_at(p).exp();
            (lhs - z.series().eval_at(p).exp()).norm()
        })
        .fold(0.0, f64::max)
}

fn bch_check(rep: &Arc<LieAlgebraRep>, cfg: &Settings, pairs: usize, seed: u64) -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = cfg.bch_radius;
    let arg_norm = 0.05f64.min(r);

    let mut exp_gap = 0.0f64;
    for _ in 0..pairs {
        let x = random_unit_element(rep, -2, 2, &mut rng).scale(arg_norm * rng.random::<f64>());
        let y = random_unit_element(rep, -2, 2, &mut rng).scale(arg_norm * rng.random::<f64>());
        let z = bch_multiply(&x, &y, cfg.bch_order, cfg)?;
        exp_gap = exp_gap.max(exp_oracle_gap(&x, &y, &z, cfg.samples));
    }

    let zero = LoopAlgebraElement::zero(rep.clone());
    let lip_samples = (2 * pairs).max(100);
    let lip_remainder = lipschitz_estimate(
        |(x, y): &(LoopAlgebraElement, LoopAlgebraElement)| bch_remainder(x, y, cfg.bch_order, cfg),
        &(zero.clone(), zero.clone()),
        r,
        lip_samples,
        |rng: &mut ChaCha8Rng| {
            (
                random_unit_element(rep, -2, 2, rng),
                random_unit_element(rep, -2, 2, rng),
            )
        },
        &mut rng,
    )?;
    let lip_split = lipschitz_estimate(
        |x: &LoopAlgebraElement| split_remainder(x, cfg),
        &zero,
        r / 2.0,
        lip_samples,
        |rng: &mut ChaCha8Rng| random_unit_element(rep, -2, 2, rng),
        &mut rng,
    )?;

    let mut worst_contraction = 0.0f64;
    let mut most_iterations = 0;
    for _ in 0..(pairs / 5).max(5) {
        let y = random_unit_element(rep, -2, 2, &mut rng).scale(r / 4.0 * rng.random::<f64>());
        let sol = split_solve(&y, cfg)?;
        worst_contraction = worst_contraction.max(sol.contraction);
        most_iterations = most_iterations.max(sol.iterations);
    }

    let checks = json!({
        "exp_oracle": exp_gap <= 1e-10,
        "remainder_lipschitz": lip_remainder <= 0.27,
        "split_lipschitz": lip_split <= 0.52,
        "split_contraction": worst_contraction <= 0.55,
    });
    let passed = checks
        .as_object()
        .expect("object")
        .values()
        .all(|v| v.as_bool() == Some(true));
    Ok(Outcome {
        result: json!({
            "lie_algebra_dim": rep.dim(),
            "n": rep.n(),
            "exp_oracle_gap": exp_gap,
            "remainder_lipschitz": lip_remainder,
            "split_lipschitz": lip_split,
            "split_contraction": worst_contraction,
            "split_iterations": most_iterations,
            "checks": checks,
        }),
        passed,
        trace: None,
    })
}

//! The loop-spec text format: a JSON document
//!
//! ```json
//! {"version": 1, "n": 2, "kmin": -1, "kmax": 1,
//!  "entries": [[[[re, im], ...], ...], ...],
//!  "lie_basis": [[[[re, im], ...], ...], ...]}
//! ```
//!
//! `entries[i][j][t]` is the coefficient of `z^(kmin + t)` in entry `(i, j)`.
//! `lie_basis` is optional. Numbers use shortest round-trip decimals, so
//! `parse(emit(s)) == s` bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentSeries;
use crate::linalg::CMatrix;
use crate::matrix::MatrixLoop;

pub const FORMAT_VERSION: u32 = 1;

pub type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub version: u32,
    pub n: usize,
    pub kmin: i64,
    pub kmax: i64,
    pub entries: Vec<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_basis: Option<Vec<Vec<Vec<Pair>>>>,
}

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

fn pair(c: Complex64) -> Pair {
    [c.re, c.im]
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl LoopSpec {
    pub fn from_loop(g: &MatrixLoop) -> Self {
        let (kmin, kmax) = if g.is_zero() { (0, 0) } else { g.band() };
        let n = g.n();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (kmin..=kmax).map(|k| pair(g.entry(i, j).fourier_coeff(k))).collect())
                    .collect()
            })
            .collect();
        Self {
            version: FORMAT_VERSION,
            n,
            kmin,
            kmax,
            entries,
            lie_basis: None,
        }
    }

    pub fn from_scalar(f: &LaurentSeries) -> Self {
        Self::from_loop(&MatrixLoop::scalar(f.clone()))
    }

    pub fn with_lie_basis(mut self, basis: &[CMatrix]) -> Self {
        self.lie_basis = Some(
            basis
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
                        .collect()
                })
                .collect(),
        );
        self
    }

    /// Structural checks beyond what the JSON shape enforces.
    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(parse_err(
                "version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.version),
            ));
        }
        if self.n == 0 {
            return Err(parse_err("n", "matrix dimension must be positive"));
        }
        if self.kmax < self.kmin {
            return Err(parse_err(
                "kmax",
                format!("kmax {} is below kmin {}", self.kmax, self.kmin),
            ));
        }
        let len = (self.kmax - self.kmin + 1) as usize;
        if self.entries.len() != self.n {
            return Err(parse_err(
                "entries",
                format!("{} rows declared by n, {} provided", self.n, self.entries.len()),
            ));
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.n {
                return Err(parse_err(
                    format!("entries[{i}]"),
                    format!("{} columns declared by n, {} provided", self.n, row.len()),
                ));
            }
            for (j, coeffs) in row.iter().enumerate() {
                if coeffs.len() != len {
                    return Err(parse_err(
                        format!("entries[{i}][{j}]"),
                        format!("{len} coefficients declared by the band, {} provided", coeffs.len()),
                    ));
                }
                if let Some(t) = coeffs.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(parse_err(format!("entries[{i}][{j}][{t}]"), "non-finite coefficient"));
                }
            }
        }
        if let Some(basis) = &self.lie_basis {
            for (b, m) in basis.iter().enumerate() {
                if m.len() != self.n || m.iter().any(|r| r.len() != self.n) {
                    return Err(parse_err(
                        format!("lie_basis[{b}]"),
                        format!("expected a {0}x{0} matrix", self.n),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_loop(&self) -> Result<MatrixLoop> {
        self.validate()?;
        let entries = self
            .entries
            .iter()
            .flatten()
            .map(|coeffs| LaurentSeries::new(self.kmin, coeffs.iter().map(complex).collect()))
            .collect::<Result<Vec<_>>>()?;
        MatrixLoop::new(self.n, entries)
    }

    /// The `(0, 0)` entry, for scalar commands.
    pub fn to_scalar(&self) -> Result<LaurentSeries> {
        let g = self.to_loop()?;
        if g.n() != 1 {
            return Err(Error::invalid(format!(
                "expected a scalar loop (n = 1), got n = {}",
                g.n()
            )));
        }
        Ok(g.entry(0, 0).clone())
    }

    pub fn lie_basis_matrices(&self) -> Option<Vec<CMatrix>> {
        self.lie_basis.as_ref().map(|basis| {
            basis
                .iter()
                .map(|m| DMatrix::from_fn(self.n, self.n, |i, j| complex(&m[i][j])))
                .collect()
        })
    }
}

/// Parses and validates a loop spec, reporting the line and column of
/// syntax errors and the offending field for structural ones.
pub fn parse_loop_spec(text: &str) -> Result<LoopSpec> {
    let spec: LoopSpec = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn emit_loop_spec(spec: &LoopSpec) -> String {
    let mut out = serde_json::to_string_pretty(spec).expect("loop specs serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scalar_spec() {
        let spec = parse_loop_spec(r#"{"version":1,"n":1,"kmin":0,"kmax":0,"entries":[[[[1,0]]]]}"#).unwrap();
        assert_eq!(spec.to_scalar().unwrap(), LaurentSeries::one());
    }

    #[test]
    fn band_mismatch_is_reported() {
        let text = r#"{"version":1,"n":1,"kmin":0,"kmax":2,"entries":[[[[1,0],[2,0]]]]}"#;
        match parse_loop_spec(text) {
            Err(Error::Parse { context, .. }) => assert_eq!(context, "entries[0][0]"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "{\"version\":1,\n\"n\":1,\n\"kmin\":0 \"kmax\":0}";
        match parse_loop_spec(text) {
            Err(Error::Parse { context, .. }) => assert!(context.starts_with("line 3"), "{context}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_loop_spec(r#"{"version":2,"n":1,"kmin":0,"kmax":0,"entries":[[[[1,0]]]]}"#).is_err());
        assert!(parse_loop_spec(r#"{"version":1,"n":1,"kmin":0,"kmax":0,"entries":[[[[1,0]]]],"extra":1}"#).is_err());
    }

    #[test]
    fn diagonal_round_trip() {
        let g = MatrixLoop::diag_monomials(&[2, -1]);
        let spec = LoopSpec::from_loop(&g);
        let text = emit_loop_spec(&spec);
        let back = parse_loop_spec(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_loop().unwrap(), g);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let coeffs = vec![[0.1, -1e-300], [std::f64::consts::PI, 5e-324], [-0.0, 1.0 / 3.0]];
        let spec = LoopSpec {
            version: 1,
            n: 1,
            kmin: -1,
            kmax: 1,
            entries: vec![vec![coeffs]],
            lie_basis: None,
        };
        let back = parse_loop_spec(&emit_loop_spec(&spec)).unwrap();
        for (a, b) in back.entries[0][0].iter().zip(&spec.entries[0][0]) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }
}

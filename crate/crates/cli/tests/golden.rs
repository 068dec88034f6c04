//! The golden loop-spec corpus under `tests/golden`. The files are generated
//! from the definitions below; run with `BIRKHOFF_BLESS=1` to rewrite them.

use std::path::PathBuf;

use birkhoff_core::bch::LieAlgebraRep;
use birkhoff_core::{
    emit_loop_spec, parse_loop_spec, CMatrix, CircleLoop, Complex64, LaurentSeries, LoopSpec, MatrixLoop, Settings,
};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn scalar(kmin: i64, coeffs: &[f64]) -> LoopSpec {
    LoopSpec::from_scalar(&LaurentSeries::from_real(kmin, coeffs))
}

fn corpus() -> Vec<(&'static str, LoopSpec)> {
    let one = LaurentSeries::one;
    let planted = {
        let a_plus = MatrixLoop::new(
            2,
            vec![
                one(),
                LaurentSeries::from_real(0, &[0.5, -0.3]),
                LaurentSeries::zero(),
                one(),
            ],
        )
        .unwrap();
        let a_minus = MatrixLoop::new(
            2,
            vec![
                one(),
                LaurentSeries::zero(),
                LaurentSeries::from_real(-2, &[0.2, 0.7, 0.0]),
                one(),
            ],
        )
        .unwrap();
        a_plus
            .mul(&MatrixLoop::diag_monomials(&[1, -1]))
            .unwrap()
            .mul(&a_minus)
            .unwrap()
    };
    let sl2 = LieAlgebraRep::sl2();
    let near_identity = {
        let e = &sl2.basis()[0];
        let f = &sl2.basis()[1];
        let c = Complex64::new(0.02, 0.0);
        let x = MatrixLoop::from_coefficients(-1, &[f * c, CMatrix::zeros(2, 2), e * c]).unwrap();
        let cfg = Settings {
            bch_radius: 0.2,
            ..Settings::default()
        };
        x.exp_loop(&cfg).unwrap()
    };
    let small_sl2 = {
        let e = &sl2.basis()[0];
        let h = &sl2.basis()[2];
        let x = MatrixLoop::from_coefficients(
            -1,
            &[
                h * Complex64::new(0.005, 0.0),
                CMatrix::zeros(2, 2),
                e * Complex64::new(0.01, 0.0),
            ],
        )
        .unwrap();
        x.exp_loop(&Settings::default()).unwrap()
    };
    let constant = real_matrix(2, &[2.0, 1.0, 1.0, 3.0]);
    vec![
        ("scalar_one", scalar(0, &[1.0])),
        ("z_minus_2", scalar(0, &[-2.0, 1.0])),
        ("z5", scalar(5, &[1.0])),
        ("one_minus_z", scalar(0, &[1.0, -1.0])),
        ("quadratic", scalar(0, &[1.0, -5.0, 6.0])),
        ("mixed_scalar", scalar(-1, &[0.3, 2.0, 0.5])),
        (
            "diag_z2_zinv",
            LoopSpec::from_loop(&MatrixLoop::diag_monomials(&[2, -1])),
        ),
        ("constant_2x2", LoopSpec::from_loop(&MatrixLoop::constant(&constant))),
        ("planted_1_m1", LoopSpec::from_loop(&planted)),
        (
            "sl2_near_identity",
            LoopSpec::from_loop(&near_identity).with_lie_basis(sl2.basis()),
        ),
        ("sl2_small", LoopSpec::from_loop(&small_sl2).with_lie_basis(sl2.basis())),
    ]
}

fn real_matrix(n: usize, vals: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(n, n, &vals.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
}

#[test]
fn golden_files_match_definitions() {
    let bless = std::env::var_os("BIRKHOFF_BLESS").is_some();
    for (name, spec) in corpus() {
        let path = dir().join(format!("{name}.loop"));
        let text = emit_loop_spec(&spec);
        if bless {
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, text, "{name} is stale; rerun with BIRKHOFF_BLESS=1");
    }
}

#[test]
fn golden_files_round_trip() {
    for entry in std::fs::read_dir(dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "loop") {
            let text = std::fs::read_to_string(&path).unwrap();
            let spec = parse_loop_spec(&text).unwrap();
            assert_eq!(emit_loop_spec(&spec), text, "{}", path.display());
            let g = spec.to_loop().unwrap();
            let again = LoopSpec {
                lie_basis: spec.lie_basis.clone(),
                ..LoopSpec::from_loop(&g)
            };
            assert_eq!(again, spec, "{}", path.display());
        }
    }
}

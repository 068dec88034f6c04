use std::sync::Arc;

use birkhoff_core::bch::{group_factorize_local, LieAlgebraRep, LoopAlgebraElement};
use birkhoff_core::matrix_birkhoff::{
    canonical_factorize, coupling_matrix, coupling_structure_ok, full_factorize, full_factorize_ordered, total_index,
    verify_factorization,
};
use birkhoff_core::norms::matrix_wiener_norm;
use birkhoff_core::sample::{admissible_coupling, laurent_poly_off_circle, planted, random_indices};
use birkhoff_core::scalar::{factor_by_log, factor_laurent_poly, scalar_factorize, winding_number};
use birkhoff_core::{
    CircleLoop, Complex64, EnumerationOrder, LaurentSeries, MatrixFactorization, MatrixLoop, MatrixNorm, Settings,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Winding number by the argument principle on a fine grid, independent of
/// the library's adaptive sampler.
fn dense_winding(g: &LaurentSeries) -> i64 {
    let n = 1 << 14;
    let mut total = 0.0;
    let mut prev = g.eval_at(Complex64::new(1.0, 0.0)).arg();
    for j in 1..=n {
        let z = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
        let a = g.eval_at(z).arg();
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        total += d;
        prev = a;
    }
    (total / std::f64::consts::TAU).round() as i64
}

#[test]
fn winding_matches_root_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = Settings::default();
    for _ in 0..40 {
        let kmin = rand::Rng::random_range(&mut rng, -4..=2);
        let (g, inside) = laurent_poly_off_circle(&mut rng, kmin, 5, 1e-2);
        let w = winding_number(&g, cfg.samples).unwrap();
        assert_eq!(w, kmin + inside as i64);
        assert_eq!(w, dense_winding(&g));
    }
}

#[test]
fn scalar_routes_agree_and_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = Settings::default();
    for _ in 0..20 {
        let (g, _) = laurent_poly_off_circle(&mut rng, -2, 4, 0.1);
        let a = factor_by_log(&g, &cfg).unwrap();
        let b = factor_laurent_poly(&g, &cfg).unwrap();
        assert_eq!(a.kappa, b.kappa);
        assert!(a.plus.sub(&b.plus).l1() <= 1e-8 * a.plus.l1().max(1.0));
        assert!(a.minus.sub(&b.minus).l1() <= 1e-8);
        assert!(g.sub(&a.reconstruct().unwrap()).l1() <= 1e-8 * g.l1().max(1.0));
        assert_eq!(a.minus.fourier_coeff(0), c(1.0));
    }
}

#[test]
fn canonical_agrees_with_group_route() {
    let cfg = Settings {
        bch_radius: 0.2,
        ..Settings::default()
    };
    let rep = Arc::new(LieAlgebraRep::sl2());
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
    let g = x.series().exp_loop(&cfg).unwrap();
    let a = canonical_factorize(&g, &cfg).unwrap();
    let b = group_factorize_local(&g, &rep, &cfg).unwrap();
    assert!(a.plus.sub(&b.plus).sup_circle(256) <= 1e-8);
    assert!(a.minus.sub(&b.minus).sup_circle(256) <= 1e-8);
    assert_eq!(total_index(&g, &cfg).unwrap(), 0);
}

#[test]
fn planted_indices_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = Settings::default();
    for n in [2usize, 3] {
        for _ in 0..4 {
            let kappa = random_indices(&mut rng, n, 3);
            let p = planted(&mut rng, &kappa, 1, 0.5);
            for order in [EnumerationOrder::Balanced, EnumerationOrder::Shuffled(9)] {
                let f = full_factorize_ordered(&p.g, 3, order, &cfg).unwrap();
                assert_eq!(f.indices, kappa);
                let report = verify_factorization(&p.g, &f, 256, &cfg);
                assert!(report.passed, "{report:?}");
                // det(plus) · z^Σκ · det(minus) = det(g)
                let lhs = f
                    .plus
                    .det()
                    .unwrap()
                    .mul(&f.minus.det().unwrap())
                    .unwrap()
                    .shift(kappa.iter().sum());
                assert!(lhs.sub(&p.g.det().unwrap()).l1() <= 1e-8 * p.g.det().unwrap().l1().max(1.0));
            }
        }
    }
}

#[test]
fn scalar_embedding_matches_scalar_factorization() {
    let cfg = Settings::default();
    let g = LaurentSeries::from_real(-1, &[0.3, 2.0, 0.5]).shift(2);
    let s = scalar_factorize(&g, &cfg).unwrap();
    let bound = 3;
    let m = full_factorize(&MatrixLoop::scalar(g.clone()), bound, &cfg).unwrap();
    assert_eq!(m.indices, vec![s.kappa]);
    assert!(m.plus.entry(0, 0).sub(&s.plus).l1() <= 1e-8);
    assert!(m.minus.entry(0, 0).sub(&s.minus).l1() <= 1e-8);
}

#[test]
fn couplings_are_admissible_and_closed_under_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = Settings::default();
    for _ in 0..5 {
        let kappa = random_indices(&mut rng, 3, 2);
        let p = planted(&mut rng, &kappa, 1, 0.4);
        let f1 = full_factorize(&p.g, 2, &cfg).unwrap();
        let cm = admissible_coupling(&mut rng, &kappa, 0.3);
        assert!(coupling_structure_ok(&cm, &kappa, 1e-12));
        let cinv = cm.invert(&cfg).unwrap();
        assert!(coupling_structure_ok(&cinv, &kappa, 1e-8));
        let neg: Vec<i64> = kappa.iter().map(|k| -k).collect();
        let f2 = MatrixFactorization {
            plus: f1.plus.mul(&cm).unwrap(),
            minus: cinv.shift_rows(&neg).shift_cols(&kappa).mul(&f1.minus).unwrap(),
            normalized: false,
            ..f1.clone()
        };
        let report = verify_factorization(&p.g, &f2, 256, &cfg);
        assert!(report.residual_ok && report.margins_ok && report.plus_membership && report.minus_membership);
        let cp = coupling_matrix(&f1, &f2, &cfg).unwrap();
        assert!(cp.structure_ok);
        assert!(matrix_wiener_norm(&cp.matrix.sub(&cm), MatrixNorm::Operator2) <= 1e-8);
    }
}

//! Seeded inputs shared by the benchmarks, so every run times the same work.

use std::sync::Arc;

use birkhoff_core::bch::{random_unit_element, LieAlgebraRep, LoopAlgebraElement};
use birkhoff_core::sample::{gaussian_series, laurent_poly_off_circle, planted, with_wiener_norm};
use birkhoff_core::{CircleLoop, LaurentSeries, MatrixLoop, Settings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

/// Two Gaussian series on `[-width/2, width/2]`.
pub fn series_pair(width: i64) -> (LaurentSeries, LaurentSeries) {
    let mut rng = rng();
    let half = width / 2;
    (
        gaussian_series(&mut rng, -half, half),
        gaussian_series(&mut rng, -half, half),
    )
}

/// `z^k · exp(h)` with `‖h‖_W = 0.4` on band `[-4, 4]`.
pub fn scalar_loop(k: i64) -> LaurentSeries {
    let mut rng = rng();
    let h = with_wiener_norm(&gaussian_series(&mut rng, -4, 4), 0.4);
    h.exp_loop(&Settings::default()).expect("small exponent").shift(k)
}

/// A degree-6 Laurent polynomial with roots at least 0.1 from the circle.
pub fn laurent_poly() -> LaurentSeries {
    laurent_poly_off_circle(&mut rng(), -3, 6, 0.1).0
}

/// `exp(x)` for a random `sl2` loop with `‖x‖ = 0.03`.
pub fn near_identity_sl2() -> (MatrixLoop, Arc<LieAlgebraRep>) {
    let rep = Arc::new(LieAlgebraRep::sl2());
    let x = random_unit_element(&rep, -2, 2, &mut rng()).scale(0.03);
    (x.series().exp_loop(&Settings::default()).expect("small exponent"), rep)
}

/// A planted `n × n` loop with the given partial indices.
pub fn planted_loop(indices: &[i64]) -> MatrixLoop {
    planted(&mut rng(), indices, 1, 0.5).g
}

/// A pair of `sl2` loops of norm `scale`.
pub fn sl2_pair(scale: f64) -> (LoopAlgebraElement, LoopAlgebraElement) {
    let rep = Arc::new(LieAlgebraRep::sl2());
    let mut rng = rng();
    (
        random_unit_element(&rep, -2, 2, &mut rng).scale(scale),
        random_unit_element(&rep, -2, 2, &mut rng).scale(scale),
    )
}

use std::f64::consts::PI;

use mml_core::quadrature::composite_gl;
use mml_core::test_functions::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// ∫ exp(−1/((x−1)(2−x))) dx over [1, 2], 40 digits.
const PLAIN_C: f64 = 0.007029858406609656239241270530353956076155;
/// ∫ V(ξ)·½log(ξ/2π) dξ for the plain bump.
const PLAIN_LOG_WEIGHTED: f64 = -0.005049921488004936115668918326157022604578;
/// Ṽ(10i) for the plain bump.
const PLAIN_MELLIN_10I: (f64, f64) = (-0.002069166569758275732308740277743367841573, -0.002157712815979053181804145277438004615082);

#[test]
fn pointwise_examples() {
    let plain = BumpFunction::plain();
    assert!((plain.eval(1.5, 0).unwrap() - (-4.0f64).exp()).abs() < 1e-17);
    assert_eq!(plain.eval(1.5, 0).unwrap(), plain.value(1.5));
    for v in [plain, BumpFunction::plateau(10.0)] {
        for i in 0..=MAX_DERIVATIVE {
            assert_eq!(v.eval(0.5, i).unwrap(), 0.0);
            assert_eq!(v.eval(2.0, i).unwrap(), 0.0);
        }
        assert!(v.eval(1.5, MAX_DERIVATIVE + 1).unwrap_err().is_validation());
    }
    assert_eq!(BumpFunction::plateau(10.0).eval(1.5, 0).unwrap(), 1.0);
    assert_eq!(BumpFunction::plateau(10.0).eval(1.5, 1).unwrap(), 0.0);
}

#[test]
fn support_and_plateau_on_a_grid() {
    for v in [BumpFunction::plain(), BumpFunction::plateau(10.0), BumpFunction::plateau(100.0)] {
        for k in 0..=10_000 {
            let x = 0.9 + 1.2 * k as f64 / 10_000.0;
            let y = v.value(x);
            assert!(y >= 0.0 && y <= 1.0);
            if !(1.0 < x && x < 2.0) {
                assert_eq!(y, 0.0);
            }
            if v.kind == BumpKind::Plateau && (1.0 + 1.0 / v.delta..=2.0 - 1.0 / v.delta).contains(&x) {
                assert_eq!(y, 1.0, "x = {x}, Δ = {}", v.delta);
            }
        }
    }
}

#[test]
fn plateau_derivative_bounds_on_a_grid() {
    for delta in [10.0, 100.0] {
        let v = BumpFunction::plateau(delta);
        for k in 1..10_000 {
            let x = 1.0 + k as f64 / 10_000.0;
            for i in 0..=MAX_DERIVATIVE {
                let d = v.eval(x, i).unwrap().abs();
                let bound = PLATEAU_DERIVATIVE_BOUNDS[i] * delta.powi(i as i32);
                assert!(d <= bound, "Δ = {delta}, i = {i}, x = {x}: {d} > {bound}");
            }
        }
    }
}

#[test]
fn integral_c_examples() {
    let c = integral_c(&BumpFunction::plain()).unwrap();
    assert!((c - PLAIN_C).abs() <= 1e-12);
    let gl = composite_gl(|x| BumpFunction::plain().value(x), 1.0, 2.0, 400, 20);
    assert!((c - gl).abs() <= 1e-12);

    for delta in [10.0, 100.0, 1000.0] {
        let p = integral_c(&BumpFunction::plateau(delta)).unwrap();
        // The smooth step is antisymmetric about its midpoint.
        assert!((p - (1.0 - 1.0 / delta)).abs() <= 1e-12);
        assert!((p - 1.0).abs() <= 2.0 / delta);
    }

    let stretched = integral_c(&BumpFunction::plain().with_support(3.0, 6.0)).unwrap();
    assert!((stretched - 3.0 * PLAIN_C).abs() <= 1e-12);
    let doubled = integral_c(&BumpFunction::plain().scaled(2.0)).unwrap();
    assert!((doubled - 2.0 * PLAIN_C).abs() <= 1e-12);
}

#[test]
fn log_weighted_examples() {
    let plain = BumpFunction::plain();
    let l = log_weighted_integral(&plain).unwrap();
    assert!((l.re - PLAIN_LOG_WEIGHTED).abs() <= 1e-12);
    assert!(l.re < 0.0);
    assert!((l.im - PI / 4.0 * integral_c(&plain).unwrap()).abs() <= 1e-15);

    let delta = 100.0;
    let p = log_weighted_integral(&BumpFunction::plateau(delta)).unwrap();
    let anti = |x: f64| x * x.ln() - x - x * (2.0 * PI).ln();
    let indicator = 0.5 * (anti(2.0) - anti(1.0));
    assert!((p.re - indicator).abs() <= 3.0 / delta);
    assert!((p.im - PI / 4.0 * (1.0 - 1.0 / delta)).abs() <= 1e-12);
}

#[test]
fn mellin_examples() {
    let plain = BumpFunction::plain();
    let one = mellin_v(&plain, Complex64::new(1.0, 0.0)).unwrap();
    assert!((one.re - integral_c(&plain).unwrap()).abs() <= 1e-14 && one.im == 0.0);

    let m = mellin_v(&plain, Complex64::new(0.0, 10.0)).unwrap();
    assert!((m - Complex64::new(PLAIN_MELLIN_10I.0, PLAIN_MELLIN_10I.1)).norm() <= 1e-12);

    let s = Complex64::new(0.3, 7.0);
    assert!((mellin_v(&plain, s.conj()).unwrap() - mellin_v(&plain, s).unwrap().conj()).norm() <= 1e-15);

    // K_A = |Ṽ(iA)|(1+A)³ stays bounded along A = 10, 20, 40 (about 4.0, 4.9, 2.7).
    let k: Vec<f64> = [10.0f64, 20.0, 40.0]
        .iter()
        .map(|&a| mellin_v(&plain, Complex64::new(0.0, a)).unwrap().norm() * (1.0 + a).powi(3))
        .collect();
    assert!(k.iter().all(|&x| x <= 6.0) && k[2] < k[0], "{k:?}");
}

#[test]
fn validation() {
    assert!(BumpFunction::plateau(1.5).validate().is_err());
    assert!(BumpFunction::plain().with_support(2.0, 1.0).validate().is_err());
    assert!(BumpFunction::plain().scaled(f64::NAN).validate().is_err());
    assert!(integral_c(&BumpFunction::plateau(1.0)).is_err());
    assert!((max_plateau_delta(1000.0) - 1000f64.sqrt() / 1000f64.ln()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn plain_bump_is_symmetric(y in 0.0f64..0.5) {
        let v = BumpFunction::plain();
        prop_assert!((v.value(1.5 - y) - v.value(1.5 + y)).abs() <= 1e-15);
        prop_assert!((v.eval(1.5 - y, 1).unwrap() + v.eval(1.5 + y, 1).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn plateau_transitions_are_monotone(delta in 2.0f64..200.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let v = BumpFunction::plateau(delta);
        let h = 1.0 / delta;
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(v.value(1.0 + lo * h) <= v.value(1.0 + hi * h));
        prop_assert!(v.value(2.0 - lo * h) <= v.value(2.0 - hi * h));
    }
}

use std::f64::consts::PI;
use std::sync::OnceLock;

use mml_core::asymptotics::*;
use mml_core::hecke_coeffs::{generate_tau_table, CoefficientTable, FormDescriptor};
use mml_core::lfun_eval::lfun_near_one;
use mml_core::moments::{Cutoff, MomentBundle, MomentEngine, QuadratureConfig, Variant};
use mml_core::special_functions::CutoffKernel;
use mml_core::test_functions::{integral_c, BumpFunction};
use mml_core::MmlError;
use num_complex::Complex64;
use proptest::prelude::*;

/// ∫ V(ξ)·½log(ξ/2π) dξ for the plain bump, 40 digits.
const PLAIN_LOG_WEIGHTED: f64 = -0.005049921488004936115668918326157022604578;

fn wide_plans() -> [CfPlan; 3] {
    [
        CfPlan { epsilon: 0.05, v_max: 12.0, ..Default::default() },
        CfPlan { epsilon: 0.2, v_max: 12.0, ..Default::default() },
        CfPlan { v_max: 12.0, ..Default::default() },
    ]
}

fn table() -> &'static CoefficientTable {
    static T: OnceLock<CoefficientTable> = OnceLock::new();
    T.get_or_init(|| {
        let delta = FormDescriptor::delta();
        let n = wide_plans().iter().map(|p| cf_required_n_max(&delta, p)).max().unwrap();
        let n = n.max(MomentEngine::required_n_max(&delta, CutoffKernel::gauss(), 280.0));
        generate_tau_table(n).unwrap()
    })
}

fn inputs() -> &'static PredictionInputs {
    static I: OnceLock<PredictionInputs> = OnceLock::new();
    I.get_or_init(|| PredictionInputs::compute(&BumpFunction::plain(), &FormDescriptor::delta(), table()).unwrap())
}

#[test]
fn constant_cf_is_stable_under_contour_changes() {
    let delta = FormDescriptor::delta();
    let v = BumpFunction::plain();
    let base = constant_cf(&v, &delta, table()).unwrap();
    assert!(base.quad_error <= 1e-10);
    for plan in &wide_plans()[..2] {
        let other = constant_cf_with(&v, &delta, table(), plan).unwrap();
        assert!((other.term1 - base.term1).norm() <= 1e-8, "ε = {}: {} vs {}", plan.epsilon, other.term1, base.term1);
    }
    let longer = constant_cf_with(&v, &delta, table(), &wide_plans()[2]).unwrap();
    assert!((longer.term1 - base.term1).norm() <= 1e-12);
    assert!(constant_cf_with(&v, &delta, table(), &CfPlan { epsilon: 0.6, ..Default::default() }).unwrap_err().is_validation());
}

#[test]
fn constant_cf_term2() {
    let delta = FormDescriptor::delta();
    let v = BumpFunction::plain();
    let cf = constant_cf(&v, &delta, table()).unwrap();
    let c = integral_c(&v).unwrap();
    let l1 = l_at_one(&delta, table()).unwrap();
    assert_eq!(cf.c_f, cf.term1 + cf.term2);
    assert!((cf.term2.im - PI / 4.0 * c * l1).abs() <= 1e-16);
    assert!((cf.term2.re - PLAIN_LOG_WEIGHTED * l1).abs() <= 1e-13);
    let via_near_one = lfun_near_one(Complex64::new(0.0, 0.0), &delta, table()).unwrap().value;
    assert_eq!(l1, via_near_one.re);
}

#[test]
fn predict_formulas() {
    let delta = FormDescriptor::delta();
    let v = BumpFunction::plain();
    let inp = inputs();
    let lin = predict(1000.0, Variant::ZetaLinear, &v, &delta, table()).unwrap();
    assert!((lin.main_term - Complex64::new(1000.0 * inp.c * inp.l_one, 0.0)).norm() <= 1e-15);
    assert_eq!(lin.c_f, inp.c_f);
    for t in [100.0, 777.0, 4000.0] {
        let a = inp.predict(t, Variant::ZetaLinear).main_term;
        let b = inp.predict(2.0 * t, Variant::ZetaLinear).main_term;
        assert!((b - 2.0 * a).norm() <= 1e-14 * b.norm());
        let a = inp.predict(t, Variant::ZetaSquare).main_term;
        let b = inp.predict(2.0 * t, Variant::ZetaSquare).main_term;
        let identity = inp.c * inp.l_one * t * 2f64.ln();
        assert!((b - 2.0 * a - identity).norm() <= 1e-12 * b.norm(), "T = {t}");
    }
    assert!(predict(99.0, Variant::ZetaSquare, &v, &delta, table()).unwrap_err().is_validation());
}

#[test]
fn prediction_is_linear_in_the_weight() {
    let delta = FormDescriptor::delta();
    let alpha = 3.0;
    let one = constant_cf(&BumpFunction::plain(), &delta, table()).unwrap();
    let three = constant_cf(&BumpFunction::plain().scaled(alpha), &delta, table()).unwrap();
    assert!((three.term1 - alpha * one.term1).norm() <= 1e-14);
    assert!((three.term2 - alpha * one.term2).norm() <= 1e-14);
    let scaled = PredictionInputs::compute(&BumpFunction::plain().scaled(alpha), &delta, table()).unwrap();
    assert!((scaled.c - alpha * inputs().c).abs() <= 1e-15);
    for variant in Variant::ALL {
        let a = inputs().predict(1000.0, variant).main_term;
        let b = scaled.predict(1000.0, variant).main_term;
        assert!((b - alpha * a).norm() <= 1e-12 * b.norm());
    }
}

#[test]
fn synthetic_controls() {
    let t_list = [500.0, 1000.0, 2000.0, 4000.0];
    for variant in Variant::ALL {
        let s = synthetic_scan(variant, inputs(), &t_list, Some(0.5)).unwrap();
        assert!((s.slope.unwrap() - 0.5).abs() <= 1e-6);
        assert!(!s.not_a_fit);
        let z = synthetic_scan(variant, inputs(), &t_list, None).unwrap();
        assert!(z.not_a_fit && z.slope.is_none());
        assert!(z.rows.iter().all(|r| r.at_noise_floor()));
    }
    let s = synthetic_scan(Variant::ZetaSquare, inputs(), &t_list, Some(0.5)).unwrap();
    let r = &s.rows[1];
    assert!((r.scaled_half - 1.0).abs() < 1e-9);
    assert!((r.scaled_two_thirds - 1000f64.powf(0.5 - 2.0 / 3.0)).abs() < 1e-9);
}

#[test]
fn degenerate_fits() {
    let row = |t: f64, r: f64| ResidualRow::new(t, Complex64::new(r, 0.0), Complex64::new(0.0, 0.0), 0.0);
    assert!(matches!(fit_exponent(&[row(100.0, 1.0), row(200.0, 2.0)]), Err(MmlError::DegenerateFit(_))));
    assert!(matches!(fit_exponent(&[row(100.0, 1.0), row(100.0, 2.0), row(300.0, 3.0)]), Err(MmlError::DegenerateFit(_))));
    assert!(matches!(fit_exponent(&[row(100.0, 1.0), row(200.0, 0.0), row(300.0, 3.0)]), Err(MmlError::DegenerateFit(_))));
    let (slope, intercept) = fit_exponent(&[row(100.0, 10.0), row(400.0, 20.0), row(1600.0, 40.0)]).unwrap();
    assert!((slope - 0.5).abs() < 1e-12 && intercept.abs() < 1e-12);
    assert!(matches!(
        synthetic_scan(Variant::ZetaLinear, inputs(), &[500.0, 1000.0], None),
        Err(MmlError::DegenerateFit(_))
    ));
}

#[test]
fn residual_scan_small_heights() {
    let delta = FormDescriptor::delta();
    let engine = MomentEngine::new(&delta, table(), CutoffKernel::gauss(), 280.0).unwrap();
    let quad = QuadratureConfig { workers: 1, ..Default::default() };
    let t_list = [100.0, 120.0, 140.0];
    let cutoff = Cutoff::Smoothed { weight: BumpFunction::plain() };
    let scan = residual_scan(&t_list, Variant::ZetaLinear, &cutoff, inputs(), &engine, &quad).unwrap();
    assert_eq!(scan.rows.len(), 3);
    let bundle = MomentBundle::compute(120.0, &engine, &quad).unwrap();
    let m = bundle.smoothed(Variant::ZetaLinear, &BumpFunction::plain()).unwrap();
    let row = scan.rows[1];
    assert_eq!(row.measured, m.value);
    assert_eq!(row.predicted, inputs().predict(120.0, Variant::ZetaLinear).main_term);
    assert_eq!(row.residual, row.measured - row.predicted);
    assert!(scan.slope.is_some() || scan.not_a_fit);

    for bad in [&[100.0, 120.0][..], &[100.0, 100.0, 140.0], &[50.0, 120.0, 140.0]] {
        assert!(residual_scan(bad, Variant::ZetaLinear, &cutoff, inputs(), &engine, &quad).unwrap_err().is_validation());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn planted_exponents_are_recovered(e in 0.3f64..0.95, t0 in 100.0f64..1000.0) {
        let t_list = [t0, 2.0 * t0, 4.0 * t0, 8.0 * t0];
        for variant in Variant::ALL {
            let s = synthetic_scan(variant, inputs(), &t_list, Some(e)).unwrap();
            prop_assert!((s.slope.unwrap() - e).abs() <= 1e-6);
        }
    }
}

use std::sync::OnceLock;

use mml_core::hecke_coeffs::{generate_tau_table, CoefficientTable, FormDescriptor};
use mml_core::lfun_eval::{lfun_afe, zeta_oracle};
use mml_core::moments::*;
use mml_core::special_functions::CutoffKernel;
use mml_core::test_functions::BumpFunction;
use mml_core::MmlError;
use num_complex::Complex64;

const T_MAX: f64 = 1000.0;

fn table() -> &'static CoefficientTable {
    static T: OnceLock<CoefficientTable> = OnceLock::new();
    T.get_or_init(|| {
        let n = MomentEngine::required_n_max(&FormDescriptor::delta(), CutoffKernel::gauss(), T_MAX);
        generate_tau_table(n).unwrap()
    })
}

fn engine() -> &'static MomentEngine {
    static E: OnceLock<MomentEngine> = OnceLock::new();
    E.get_or_init(|| MomentEngine::new(&FormDescriptor::delta(), table(), CutoffKernel::gauss(), T_MAX).unwrap())
}

fn quad() -> QuadratureConfig {
    QuadratureConfig { workers: 1, ..Default::default() }
}

fn smoothed(t_big: f64, variant: Variant, weight: BumpFunction, quadrature: QuadratureConfig) -> Result<MomentResult, MmlError> {
    let req = MomentRequest { t_big, variant, cutoff: Cutoff::Smoothed { weight }, quadrature };
    smoothed_moment(&req, engine())
}

#[test]
fn integrand_examples() {
    let delta = FormDescriptor::delta();
    let g = CutoffKernel::gauss();
    for t in [100.0, 333.3] {
        let sq = integrand(t, Variant::ZetaSquare, &delta, table(), g).unwrap();
        let l = lfun_afe(t, &delta, table(), g).unwrap().value;
        assert!((sq.arg() - l.arg()).abs() < 1e-12);
        let back = integrand(-t, Variant::ZetaSquare, &delta, table(), g).unwrap();
        assert!((back - sq.conj()).norm() <= 1e-10 * sq.norm());
        assert!((engine().integrand(t, Variant::ZetaSquare).unwrap() - sq).norm() <= 1e-12 * sq.norm());
    }
    // Recompose at t = 100 from the ζ oracle and the other kernel.
    let t = 100.0;
    let l = lfun_afe(t, &delta, table(), CutoffKernel::quartic()).unwrap().value;
    let z = zeta_oracle(Complex64::new(0.5, t)).unwrap();
    let want_sq = l * z.norm_sqr();
    let want_lin = l * z.conj();
    let sq = integrand(t, Variant::ZetaSquare, &delta, table(), g).unwrap();
    let lin = integrand(t, Variant::ZetaLinear, &delta, table(), g).unwrap();
    assert!((sq - want_sq).norm() <= 1e-6 * want_sq.norm());
    assert!((lin - want_lin).norm() <= 1e-6 * want_lin.norm());
}

#[test]
fn smoothed_linearity_and_narrow_support() {
    let plain = BumpFunction::plain();
    let one = smoothed(150.0, Variant::ZetaLinear, plain, quad()).unwrap();
    let two = smoothed(150.0, Variant::ZetaLinear, plain.scaled(2.0), quad()).unwrap();
    assert_eq!(two.value, 2.0 * one.value);

    let bundle = MomentBundle::compute(150.0, engine(), &quad()).unwrap();
    let narrow = plain.with_support(1.4, 1.6);
    let direct = smoothed(150.0, Variant::ZetaLinear, narrow, quad()).unwrap();
    assert!(direct.eval_count < one.eval_count / 3);
    let via_bundle = bundle.smoothed(Variant::ZetaLinear, &narrow).unwrap();
    assert!(
        (direct.value - via_bundle.value).norm() <= direct.quad_error + via_bundle.quad_error + 1e-12,
        "{} vs {}",
        direct.value,
        via_bundle.value
    );
    // The bundle reproduces the standalone smoothed moment exactly.
    assert_eq!(bundle.smoothed(Variant::ZetaLinear, &plain).unwrap().value, one.value);
}

#[test]
fn halving_at_t_500() {
    let base = MomentBundle::compute(500.0, engine(), &quad()).unwrap();
    let fine = MomentBundle::compute(500.0, engine(), &quad().halved()).unwrap();
    for variant in Variant::ALL {
        let pairs = [
            (base.smoothed(variant, &BumpFunction::plain()).unwrap(), fine.smoothed(variant, &BumpFunction::plain()).unwrap()),
            (base.sharp(variant).unwrap(), fine.sharp(variant).unwrap()),
        ];
        for (a, b) in pairs {
            let gap = (a.value - b.value).norm();
            assert!(gap <= 3.0 * a.quad_error, "{}: gap {gap:e}, quad_error {:e}", variant.name(), a.quad_error);
            assert!(a.quad_error > 0.0);
        }
    }
}

#[test]
fn sharp_additivity_and_sandwich() {
    let t = 200.0;
    for variant in Variant::ALL {
        let whole = sharp_moment(t, variant, engine(), &quad()).unwrap();
        let left = sharp_moment_on(t, 1.5 * t, variant, engine(), &quad()).unwrap();
        let right = sharp_moment_on(1.5 * t, 2.0 * t, variant, engine(), &quad()).unwrap();
        let err = whole.quad_error + left.quad_error + right.quad_error;
        assert!((whole.value - left.value - right.value).norm() <= err, "{}", variant.name());
    }
    let bundle = MomentBundle::compute(t, engine(), &quad()).unwrap();
    for delta in [2.0, 5.0, 20.0] {
        for variant in Variant::ALL {
            let s = sandwich(&bundle, variant, delta).unwrap();
            assert!(s.holds, "{s:?}");
            assert!((s.strip_measure - 2.0 * t / delta).abs() < 1e-9);
        }
    }
}

#[test]
fn conjugate_range() {
    let t = 200.0;
    let pos = sharp_moment_on(t, 2.0 * t, Variant::ZetaSquare, engine(), &quad()).unwrap();
    let neg = sharp_moment_on(-2.0 * t, -t, Variant::ZetaSquare, engine(), &quad()).unwrap();
    assert!((pos.value - neg.value.conj()).norm() <= pos.quad_error + neg.quad_error + 1e-9 * pos.value.norm());
}

#[test]
fn deterministic_across_workers() {
    let one = MomentBundle::compute(120.0, engine(), &quad()).unwrap();
    let three = MomentBundle::compute(120.0, engine(), &QuadratureConfig { workers: 3, ..quad() }).unwrap();
    for variant in Variant::ALL {
        let (a, b) = (one.sharp(variant).unwrap(), three.sharp(variant).unwrap());
        assert_eq!(a.value, b.value);
        assert_eq!(a.quad_error, b.quad_error);
    }
}

#[test]
fn validation_and_budget() {
    assert!(smoothed(50.0, Variant::ZetaSquare, BumpFunction::plain(), quad()).unwrap_err().is_validation());
    assert!(sharp_moment(99.0, Variant::ZetaSquare, engine(), &quad()).unwrap_err().is_validation());
    // Beyond the engine's range.
    assert!(sharp_moment(600.0, Variant::ZetaSquare, engine(), &quad()).is_err());
    let bad = QuadratureConfig { nodes_per_oscillation: 2.0, ..quad() };
    assert!(sharp_moment(100.0, Variant::ZetaSquare, engine(), &bad).unwrap_err().is_validation());

    let capped = QuadratureConfig { max_evaluations: Some(100), ..quad() };
    match sharp_moment(100.0, Variant::ZetaLinear, engine(), &capped) {
        Err(MmlError::BudgetExceeded { cap, panels_done, panels_total, evals_done, .. }) => {
            assert_eq!(cap, 100);
            assert!(panels_done < panels_total);
            assert!(evals_done <= 100);
        }
        other => panic!("{other:?}"),
    }

    let mut warned = smoothed(100.0, Variant::ZetaLinear, BumpFunction::plateau(10.0), quad()).unwrap();
    assert_eq!(warned.warnings.len(), 1);
    warned = smoothed(100.0, Variant::ZetaLinear, BumpFunction::plateau(2.0), quad()).unwrap();
    assert!(warned.warnings.is_empty());
}

fn real(a: &[f64]) -> Vec<Complex64> {
    a.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

#[test]
fn mean_value_examples() {
    let m = mean_value_check(&real(&[1.0]), 10.0).unwrap();
    assert!((m.lhs - 10.0).abs() <= 1e-12);
    assert_eq!(m.rhs, 11.0);

    let t = 10.0;
    let ln2 = 2f64.ln();
    let exact = 2.0 * t + 2.0 * (t * ln2).sin() / ln2;
    let m = mean_value_check(&real(&[1.0, 1.0]), t).unwrap();
    assert!((m.lhs - exact).abs() <= 1e-10, "{} vs {exact}", m.lhs);
    assert_eq!(m.rhs, 24.0);
    assert!(m.lhs <= 3.0 * m.rhs);

    // Deterministic pseudo-random draws from Weyl sequences.
    let golden = 0.618_033_988_749_894_9;
    let root2 = 0.414_213_562_373_095_1;
    for trial in 0..20 {
        let n = if trial % 2 == 0 { 100 } else { 1000 };
        let t_big = if trial % 4 < 2 { 100.0 } else { 1000.0 };
        let a: Vec<Complex64> = (0..n)
            .map(|k| {
                let j = (trial * 1000 + k) as f64;
                Complex64::new(2.0 * (0.5 + j * golden).fract() - 1.0, 2.0 * (0.5 + j * root2).fract() - 1.0)
            })
            .collect();
        let m = mean_value_check(&a, t_big).unwrap();
        assert!(m.lhs <= 3.0 * m.rhs, "trial {trial}: {} > 3·{}", m.lhs, m.rhs);
    }

    assert!(matches!(mean_value_check(&[], 10.0), Err(MmlError::Budget(_))));
    assert!(matches!(mean_value_check(&real(&vec![1.0; 10_001]), 10.0), Err(MmlError::Budget(_))));
    assert!(matches!(mean_value_check(&real(&[1.0]), 1e5), Err(MmlError::Budget(_))));
}

use std::f64::consts::PI;

use mml_core::oscillatory_lab::*;
use mml_core::test_functions::{BumpFunction, PLATEAU_DERIVATIVE_BOUNDS};
use mml_core::MmlError;
use num_complex::Complex64;
use proptest::prelude::*;

/// ∫ exp(−1/((x−1)(2−x))) dx over [1, 2], 40 digits.
const PLAIN_C: f64 = 0.007029858406609656239241270530353956076155;
/// ∫ V(ξ) e^{200iξ} dξ for the plain bump, multiprecision.
const PLAIN_FT_200: (f64, f64) = (1.014490263444166e-12, 4.59003503028888808e-11);

fn linear(lambda: f64) -> PhaseProblem {
    PhaseProblem::new(BumpFunction::plain(), Phase::Linear { lambda })
}

fn quadratic(lambda: f64, center: f64) -> PhaseProblem {
    PhaseProblem::new(BumpFunction::plain(), Phase::Quadratic { lambda, center })
}

#[test]
fn direct_integral_examples() {
    let flat = direct_oscillatory_integral(&linear(0.0)).unwrap();
    assert!((flat.value.re - PLAIN_C).abs() <= 1e-15 && flat.value.im == 0.0);

    let ft = direct_oscillatory_integral(&linear(200.0)).unwrap();
    let want = Complex64::new(PLAIN_FT_200.0, PLAIN_FT_200.1);
    assert!((ft.value - want).norm() <= 1e-16, "{} vs {want}", ft.value);
    assert!(ft.error <= 1e-16);

    for p in [linear(200.0), quadratic(3000.0, 1.3)] {
        let a = direct_oscillatory_integral(&p).unwrap().value;
        let b = direct_oscillatory_integral(&p.conjugated()).unwrap().value;
        assert!((a - b.conj()).norm() <= 1e-15 * a.norm().max(1e-300) + 1e-30);
    }
}

#[test]
fn panel_budget_is_enforced() {
    assert!(matches!(direct_oscillatory_integral(&linear(1e12)), Err(MmlError::Resolution(_))));
    assert!(direct_oscillatory_integral(&linear(f64::NAN)).unwrap_err().is_validation());
}

#[test]
fn linear_phase_decay() {
    let cert = decay_certificate(&linear(100.0), &[100.0, 200.0, 400.0, 800.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(cert.slope.unwrap() <= -3.0, "{cert:?}");
    assert!(cert.exponents.iter().all(|&(_, ok)| ok));
    for pt in &cert.points {
        assert_eq!(pt.y_over_x, pt.lambda);
        assert_eq!(pt.underflow, pt.abs_integral < NOISE_FLOOR);
    }
    let flipped = decay_certificate(&linear(-100.0), &[-100.0, -200.0, -400.0, -800.0], &[3.0]).unwrap();
    for (a, b) in cert.points.iter().zip(&flipped.points) {
        assert!((a.abs_integral - b.abs_integral).abs() <= 1e-15 * a.abs_integral + 1e-300);
    }
}

#[test]
fn plateau_decay_is_measured_in_y_over_x() {
    let delta = 10.0;
    let p = PhaseProblem::new(BumpFunction::plateau(delta), Phase::Linear { lambda: 20.0 });
    assert_eq!(p.inertness(), delta);
    let cert = decay_certificate(&p, &[20.0, 40.0, 80.0, 160.0], &[1.0, 2.0]).unwrap();
    for pt in &cert.points {
        assert!((pt.y_over_x - pt.lambda / delta).abs() <= 1e-12 * pt.lambda);
        assert!(pt.y_over_x >= 1.0);
    }
    assert!(cert.slope.unwrap() <= -2.0, "{cert:?}");
    let r = p.inertness_ratios(2000).unwrap();
    for j in 0..4 {
        assert!(r[j] <= PLATEAU_DERIVATIVE_BOUNDS[j], "j = {j}: {}", r[j]);
    }
}

#[test]
fn decay_rejects_stationary_families() {
    let err = decay_certificate(&quadratic(100.0, 1.5), &[100.0, 200.0], &[1.0]).unwrap_err();
    assert!(err.is_validation());
    assert!(decay_certificate(&linear(100.0), &[100.0], &[1.0]).unwrap_err().is_validation());
}

#[test]
fn stationary_quadratic_example() {
    let lambda = 1e4;
    let p = quadratic(lambda, 1.5);
    let st = stationary_leading_term(&p).unwrap();
    assert!((st.xi0 - 1.5).abs() <= 1e-12 * 1.5);
    assert!((st.h2 - 2.0 * lambda).abs() <= 1e-9);
    let want = (PI / lambda).sqrt() * (-4.0f64).exp();
    assert!((st.leading.norm() - want).abs() <= 1e-12 * want);
    assert!((st.leading.arg() - PI / 4.0).abs() <= 1e-6);
    let direct = direct_oscillatory_integral(&p).unwrap().value;
    assert!((direct - st.leading).norm() <= 1e-2 * direct.norm());

    let scan = stationary_scan(&p, &[1e3, 4e3, 1.6e4]).unwrap();
    assert!(scan.slope <= -1.4, "slope {}", scan.slope);
    for r in &scan.rows {
        assert!(r.relative_difference * r.lambda <= 10.0, "λ·rel = {}", r.relative_difference * r.lambda);
    }
}

#[test]
fn stationary_concave_phase_is_conjugated() {
    let up = quadratic(5000.0, 1.4);
    let down = up.conjugated();
    let a = stationary_leading_term(&up).unwrap();
    let b = stationary_leading_term(&down).unwrap();
    assert_eq!(b.xi0, a.xi0);
    assert_eq!(b.h2, -a.h2);
    assert!((b.leading - a.leading.conj()).norm() <= 1e-15 * a.leading.norm());
}

#[test]
fn stationary_log_linear() {
    let lambda = 1e4;
    let p = PhaseProblem::new(BumpFunction::plain(), Phase::LogLinear { lambda, center: 1.5 });
    let st = stationary_leading_term(&p).unwrap();
    assert!((st.xi0 - 1.5).abs() <= 1e-11);
    assert!((st.h2 - lambda / 1.5).abs() <= 1e-6);
    let direct = direct_oscillatory_integral(&p).unwrap().value;
    assert!((direct - st.leading).norm() <= 1e-2 * direct.norm());
}

#[test]
fn stationary_errors() {
    assert!(matches!(stationary_leading_term(&linear(100.0)), Err(MmlError::NoStationaryPoint)));
    assert!(matches!(stationary_leading_term(&quadratic(100.0, 3.0)), Err(MmlError::NoStationaryPoint)));
    match stationary_leading_term(&quadratic(100.0, 1.0005)) {
        Err(MmlError::BoundaryStationaryPoint { xi0, gap }) => {
            assert!((xi0 - 1.0005).abs() < 1e-9);
            assert!(gap < BOUNDARY_FRACTION);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(stationary_leading_term(&quadratic(100.0, 1.0)), Err(MmlError::BoundaryStationaryPoint { .. })));
}

#[test]
fn translation_covariance() {
    let p = quadratic(4000.0, 1.45);
    let q = p.translated(0.1);
    let (a, b) = (direct_oscillatory_integral(&p).unwrap().value, direct_oscillatory_integral(&q).unwrap().value);
    assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm());
    let (sa, sb) = (stationary_leading_term(&p).unwrap(), stationary_leading_term(&q).unwrap());
    assert!((sb.xi0 - sa.xi0 - 0.1).abs() <= 1e-11);
    assert!((sa.leading.norm() - sb.leading.norm()).abs() <= 1e-12 * sa.leading.norm());
    let l = linear(50.0);
    let (a, b) = (
        direct_oscillatory_integral(&l).unwrap().value,
        direct_oscillatory_integral(&l.translated(0.1)).unwrap().value,
    );
    assert!((a.norm() - b.norm()).abs() <= 1e-10 * a.norm());
}

#[test]
fn normalization_scales_both_sides() {
    let p = quadratic(2000.0, 1.5);
    let q = PhaseProblem { weight: p.weight.scaled(2.5), ..p };
    let (a, b) = (direct_oscillatory_integral(&p).unwrap().value, direct_oscillatory_integral(&q).unwrap().value);
    assert!((b - 2.5 * a).norm() <= 1e-14 * b.norm());
    let (sa, sb) = (stationary_leading_term(&p).unwrap(), stationary_leading_term(&q).unwrap());
    assert!((sb.leading - 2.5 * sa.leading).norm() <= 1e-14 * sb.leading.norm());
}

#[test]
fn phase_derivatives_match_differences() {
    for phase in [
        Phase::Linear { lambda: 3.0 },
        Phase::Quadratic { lambda: 3.0, center: 1.4 },
        Phase::LogLinear { lambda: 3.0, center: 1.4 },
    ] {
        for x in [1.1, 1.5, 1.9] {
            let h = 1e-4;
            for j in 1..=3 {
                let fd = (phase.derivative(x + h, j - 1) - phase.derivative(x - h, j - 1)) / (2.0 * h);
                assert!((fd - phase.derivative(x, j)).abs() <= 1e-6, "{phase:?} j = {j} at {x}");
            }
        }
    }
}

const GOOD: &str = r#"
[[problem]]
name = "q"
phase = "quadratic"
scales = [1000.0, 4000.0, 16000.0]
center = 1.5
slope_threshold = -1.4

[[problem]]
name = "lin"
phase = "linear"
scales = [100.0, 200.0, 400.0]
weight = "plateau"
delta = 4.0
exponents = [1.0]
"#;

#[test]
fn problem_files() {
    let file = parse_problem_file(GOOD).unwrap();
    assert_eq!(file.problem.len(), 2);
    let (p, mode) = file.problem[0].build().unwrap();
    assert_eq!(mode, ProblemMode::Stationary);
    assert_eq!(p.phase, Phase::Quadratic { lambda: 1000.0, center: 1.5 });
    let (p, mode) = file.problem[1].build().unwrap();
    assert_eq!(mode, ProblemMode::Decay);
    assert_eq!(p.inertness(), 4.0);

    for bad in [
        "",
        "[[problem]]\nname = \"x\"\nphase = \"cubic\"\nscales = [1.0]\n",
        "[[problem]]\nname = \"x\"\nphase = \"linear\"\nscales = [1.0]\ncolour = 3\n",
        "[[problem]]\nphase = \"linear\"\nscales = [1.0]\n",
        "problem = 3",
        "[[problem]\n",
    ] {
        assert_eq!(parse_problem_file(bad).unwrap_err().code(), "PARSE_ERROR", "{bad:?}");
    }
    for bad in [
        "[[problem]]\nname = \"x\"\nphase = \"linear\"\nscales = []\n",
        "[[problem]]\nname = \"x\"\nphase = \"linear\"\nscales = [1.0]\nweight = \"plateau\"\n",
        "[[problem]]\nname = \"x\"\nphase = \"log_linear\"\nscales = [1.0]\ncenter = -1.0\n",
    ] {
        assert!(parse_problem_file(bad).unwrap_err().is_validation(), "{bad:?}");
    }
    assert_eq!(load_problem_file(std::path::Path::new("/nonexistent/p.toml")).unwrap_err().code(), "IO_ERROR");
}

#[test]
fn default_problems_pass_and_tabulate() {
    let outcomes: Vec<ProblemOutcome> = default_problems().problem.iter().map(|s| run_problem(s).unwrap()).collect();
    assert!(outcomes.iter().all(ProblemOutcome::pass));
    let csv = outcomes_csv(&outcomes).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "problem,mode,lambda,abs_integral_or_difference,direct_re,direct_im,leading_re,leading_im"
    );
    assert_eq!(lines.count(), 3 + 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn conjugation_holds_for_random_phases(lambda in 10.0f64..2000.0, center in 1.1f64..1.9) {
        let p = quadratic(lambda, center);
        let a = direct_oscillatory_integral(&p).unwrap().value;
        let b = direct_oscillatory_integral(&p.conjugated()).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-15);
    }
}

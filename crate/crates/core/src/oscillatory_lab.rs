//! Stationary-phase experiments: ∫w(ξ)e^{ih(ξ)}dξ computed directly, its
//! decay when h has no stationary point, and the leading term when it has
//! one.
//!
//! Problems can be described in a TOML problem file:
//!
//! ```toml
//! [[problem]]
//! name = "quadratic"
//! phase = "quadratic"        # linear | quadratic | log_linear
//! scales = [1000.0, 4000.0, 16000.0]
//! center = 1.5
//! weight = "plain"           # plain | plateau
//! support = [1.0, 2.0]
//! ```

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::test_functions::{BumpFunction, BumpKind};

/// |I| below this is reported as underflow rather than fitted.
pub const NOISE_FLOOR: f64 = 1e-14;
/// Stationary points closer than this fraction of Z to an edge are rejected.
pub const BOUNDARY_FRACTION: f64 = 1e-3;
const BISECTION_STEPS: usize = 200;
const PANEL_ORDER: usize = 16;
const MIN_PANELS: usize = 64;
const MAX_PANELS: usize = 1 << 22;

/// The phase h(ξ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Phase {
    /// λξ
    Linear { lambda: f64 },
    /// λ(ξ − center)²
    Quadratic { lambda: f64, center: f64 },
    /// λ·ξ·(log(ξ/center) − 1), so h′ = λ log(ξ/center); the t·log(t/m)
    /// shape of the moment phases.
    LogLinear { lambda: f64, center: f64 },
}

impl Phase {
    pub fn lambda(&self) -> f64 {
        match *self {
            Phase::Linear { lambda } | Phase::Quadratic { lambda, .. } | Phase::LogLinear { lambda, .. } => lambda,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        match self {
            Phase::Linear { .. } => Phase::Linear { lambda },
            Phase::Quadratic { center, .. } => Phase::Quadratic { lambda, center },
            Phase::LogLinear { center, .. } => Phase::LogLinear { lambda, center },
        }
    }

    /// h^(j)(ξ) for j ≤ 3.
    pub fn derivative(&self, xi: f64, j: usize) -> f64 {
        match (*self, j) {
            (Phase::Linear { lambda }, 0) => lambda * xi,
            (Phase::Linear { lambda }, 1) => lambda,
            (Phase::Linear { .. }, _) => 0.0,
            (Phase::Quadratic { lambda, center }, 0) => lambda * (xi - center).powi(2),
            (Phase::Quadratic { lambda, center }, 1) => 2.0 * lambda * (xi - center),
            (Phase::Quadratic { lambda, .. }, 2) => 2.0 * lambda,
            (Phase::Quadratic { .. }, _) => 0.0,
            (Phase::LogLinear { lambda, center }, 0) => lambda * xi * ((xi / center).ln() - 1.0),
            (Phase::LogLinear { lambda, center }, 1) => lambda * (xi / center).ln(),
            (Phase::LogLinear { lambda, .. }, 2) => lambda / xi,
            (Phase::LogLinear { lambda, .. }, _) => -lambda / (xi * xi),
        }
    }

    fn shifted(self, by: f64) -> Self {
        match self {
            Phase::Linear { .. } => self,
            Phase::Quadratic { lambda, center } => Phase::Quadratic { lambda, center: center + by },
            Phase::LogLinear { .. } => self,
        }
    }

    fn negated(self) -> Self {
        self.with_lambda(-self.lambda())
    }
}

/// ∫w(ξ)e^{ih(ξ)}dξ with w a bump on [a, b]; Z = b − a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseProblem {
    pub weight: BumpFunction,
    pub phase: Phase,
}

impl PhaseProblem {
    pub fn new(weight: BumpFunction, phase: Phase) -> Self {
        PhaseProblem { weight, phase }
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        let lam = self.phase.lambda();
        if !lam.is_finite() {
            return Err(MmlError::Validation(format!("phase scale λ = {lam} must be finite")));
        }
        if let Phase::LogLinear { center, .. } = self.phase {
            if !(center > 0.0 && center.is_finite()) {
                return Err(MmlError::Validation(format!("log-linear center {center} must be positive")));
            }
        }
        if let Phase::Quadratic { center, .. } = self.phase {
            if !center.is_finite() {
                return Err(MmlError::Validation("quadratic center must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn z(&self) -> f64 {
        self.weight.support.1 - self.weight.support.0
    }

    /// Inertness scale X: 1 for the plain bump, Δ for the plateau.
    pub fn inertness(&self) -> f64 {
        match self.weight.kind {
            BumpKind::PlainBump => 1.0,
            BumpKind::Plateau => self.weight.delta,
        }
    }

    /// Y with Y/Z = max |h′| on the support (h′ is monotone for every kind).
    pub fn y_scale(&self) -> f64 {
        let (a, b) = self.weight.support;
        self.z() * self.phase.derivative(a, 1).abs().max(self.phase.derivative(b, 1).abs())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        PhaseProblem { phase: self.phase.with_lambda(lambda), ..self }
    }

    /// The same problem moved by ξ → ξ + by (weight and phase together).
    pub fn translated(self, by: f64) -> Self {
        let (a, b) = self.weight.support;
        PhaseProblem { weight: self.weight.with_support(a + by, b + by), phase: self.phase.shifted(by) }
    }

    pub fn conjugated(self) -> Self {
        PhaseProblem { phase: self.phase.negated(), ..self }
    }

    /// max over a grid of |w^(j)|·(Z/X)^j for j = 0..=3.
    pub fn inertness_ratios(&self, grid: usize) -> Result<[f64; 4]> {
        let (a, b) = self.weight.support;
        let scale = self.z() / self.inertness();
        let mut out = [0.0; 4];
        for k in 1..grid {
            let x = a + (b - a) * k as f64 / grid as f64;
            for (j, o) in out.iter_mut().enumerate() {
                let v = self.weight.eval(x, j)?.abs() * scale.powi(j as i32);
                *o = f64::max(*o, v);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillatory {
    pub value: Complex64,
    /// Change under panel halving.
    pub error: f64,
    pub panels: usize,
}

/// Direct quadrature with panels no wider than 2πZ/(8Y), refined by
/// halving until the change is at rounding level.
pub fn direct_oscillatory_integral(p: &PhaseProblem) -> Result<Oscillatory> {
    p.validate()?;
    let (a, b) = p.weight.support;
    let z = p.z();
    let y = p.y_scale();
    let max_width = if y > 0.0 { 2.0 * PI * z / (8.0 * y) } else { f64::INFINITY };
    let mut panels = ((z / max_width).ceil() as usize).max(MIN_PANELS);
    if panels > MAX_PANELS {
        return Err(MmlError::Resolution(format!(
            "{panels} panels of width ≤ {max_width:e} needed on [{a}, {b}], budget {MAX_PANELS}"
        )));
    }
    let breaks = p.weight.breakpoints();
    let integrate = |panels: usize| -> (Complex64, f64) {
        let rule = GaussLegendre::get(PANEL_ORDER);
        let mut sums = Vec::with_capacity(panels + breaks.len());
        let mut mass = 0.0;
        for seg in breaks.windows(2) {
            let n = ((panels as f64 * (seg[1] - seg[0]) / z).ceil() as usize).max(1);
            let h = (seg[1] - seg[0]) / n as f64;
            for k in 0..n {
                let lo = seg[0] + h * k as f64;
                let hi = if k + 1 == n { seg[1] } else { lo + h };
                let terms: Vec<Complex64> = rule
                    .mapped(lo, hi)
                    .map(|(x, w)| {
                        let v = p.weight.value(x) * w;
                        mass += v.abs();
                        let (s, c) = p.phase.derivative(x, 0).sin_cos();
                        Complex64::new(c * v, s * v)
                    })
                    .collect();
                sums.push(pairwise_sum(&terms));
            }
        }
        (pairwise_sum(&sums), mass)
    };
    let (mut prev, _) = integrate(panels);
    loop {
        let next_panels = 2 * panels;
        let (next, mass) = integrate(next_panels);
        let change = (next - prev).norm();
        if change <= 64.0 * f64::EPSILON * mass.max(f64::MIN_POSITIVE) || next_panels >= MAX_PANELS {
            if change > 64.0 * f64::EPSILON * mass && next_panels >= MAX_PANELS {
                return Err(MmlError::Resolution(format!("no convergence within {MAX_PANELS} panels (change {change:e})")));
            }
            return Ok(Oscillatory { value: next, error: change, panels: next_panels });
        }
        prev = next;
        panels = next_panels;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub lambda: f64,
    pub y_over_x: f64,
    pub abs_integral: f64,
    pub underflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub points: Vec<DecayPoint>,
    /// Slope of log|I| against log(Y/X) over the points above the floor.
    pub slope: Option<f64>,
    /// Fewer than two points stayed above the floor: decay is certified by
    /// the integral vanishing to rounding level.
    pub success_by_underflow: bool,
    /// For each requested A: whether the fitted decay is at least as steep
    /// as (Y/X)^{−A}.
    pub exponents: Vec<(f64, bool)>,
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// |I| over the family with phase scales `lambdas` (no stationary point
/// allowed) and the fitted decay exponent in Y/X.
pub fn decay_certificate(p: &PhaseProblem, lambdas: &[f64], a_list: &[f64]) -> Result<DecayCertificate> {
    if lambdas.len() < 2 {
        return Err(MmlError::Validation("decay certificate needs at least two scales".into()));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let q = p.with_lambda(lam);
        q.validate()?;
        let (a, b) = q.weight.support;
        let y = q.y_scale();
        let z = q.z();
        let min_slope = (0..=256)
            .map(|k| q.phase.derivative(a + (b - a) * k as f64 / 256.0, 1).abs())
            .fold(f64::INFINITY, f64::min);
        if !(min_slope >= y / (2.0 * z)) {
            return Err(MmlError::Validation(format!(
                "min |h′| = {min_slope:e} is below Y/(2Z) = {:e} at λ = {lam}",
                y / (2.0 * z)
            )));
        }
        let i = direct_oscillatory_integral(&q)?.value.norm();
        points.push(DecayPoint { lambda: lam, y_over_x: y / q.inertness(), abs_integral: i, underflow: i < NOISE_FLOOR });
    }
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| !pt.underflow)
        .map(|pt| (pt.y_over_x.ln(), pt.abs_integral.ln()))
        .collect();
    let slope = (fit.len() >= 2).then(|| least_squares_slope(&fit));
    let success_by_underflow = slope.is_none();
    let exponents = a_list
        .iter()
        .map(|&a| (a, slope.map_or(success_by_underflow, |s| s <= -a)))
        .collect();
    Ok(DecayCertificate { points, slope, success_by_underflow, exponents })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryTerm {
    pub xi0: f64,
    pub h2: f64,
    /// √(2π) e^{i h(ξ₀) ± iπ/4} w(ξ₀) / √|h″(ξ₀)|, sign of h″.
    pub leading: Complex64,
}

/// The classical first-order stationary-phase term at the interior
/// stationary point ξ₀, located by bisection on h′.
pub fn stationary_leading_term(p: &PhaseProblem) -> Result<StationaryTerm> {
    p.validate()?;
    if p.phase.derivative(0.5 * (p.weight.support.0 + p.weight.support.1), 2) < 0.0 {
        // One code path: conjugate the problem, then the answer.
        let t = stationary_leading_term(&p.conjugated())?;
        return Ok(StationaryTerm { xi0: t.xi0, h2: -t.h2, leading: t.leading.conj() });
    }
    let (a, b) = p.weight.support;
    let d = |x: f64| p.phase.derivative(x, 1);
    let (mut lo, mut hi) = (a, b);
    let (flo, fhi) = (d(lo), d(hi));
    if flo == 0.0 || fhi == 0.0 || flo.signum() == fhi.signum() {
        if flo == 0.0 || fhi == 0.0 {
            let xi0 = if flo == 0.0 { a } else { b };
            return Err(MmlError::BoundaryStationaryPoint { xi0, gap: 0.0 });
        }
        return Err(MmlError::NoStationaryPoint);
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if d(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xi0 = 0.5 * (lo + hi);
    let gap = (xi0 - a).min(b - xi0);
    if gap < BOUNDARY_FRACTION * p.z() {
        return Err(MmlError::BoundaryStationaryPoint { xi0, gap });
    }
    let h2 = p.phase.derivative(xi0, 2);
    let w0 = p.weight.eval(xi0, 0)?;
    let arg = p.phase.derivative(xi0, 0) + PI / 4.0;
    let leading = Complex64::from_polar((2.0 * PI).sqrt() * w0 / h2.sqrt(), arg);
    Ok(StationaryTerm { xi0, h2, leading })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryRow {
    pub lambda: f64,
    pub direct: Complex64,
    pub leading: Complex64,
    pub abs_difference: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryScan {
    pub rows: Vec<StationaryRow>,
    /// Slope of log|direct − leading| against log λ.
    pub slope: f64,
}

/// direct vs leading over a family of phase scales.
pub fn stationary_scan(p: &PhaseProblem, lambdas: &[f64]) -> Result<StationaryScan> {
    if lambdas.len() < 2 {
        return Err(MmlError::Validation("stationary scan needs at least two scales".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let q = p.with_lambda(lam);
        let direct = direct_oscillatory_integral(&q)?.value;
        let leading = stationary_leading_term(&q)?.leading;
        let diff = (direct - leading).norm();
        rows.push(StationaryRow { lambda: lam, direct, leading, abs_difference: diff, relative_difference: diff / leading.norm() });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda.ln(), r.abs_difference.ln())).collect();
    Ok(StationaryScan { slope: least_squares_slope(&pts), rows })
}

/// What the lab does with a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemMode {
    /// Fit the decay of |I| (needs a phase without stationary point).
    Decay,
    /// Compare the direct integral with the stationary-phase term.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKindSpec {
    Linear,
    Quadratic,
    LogLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    Plain,
    Plateau,
}

/// One entry of a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub phase: PhaseKindSpec,
    pub scales: Vec<f64>,
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default = "default_weight")]
    pub weight: WeightSpec,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_support")]
    pub support: [f64; 2],
    #[serde(default)]
    pub mode: Option<ProblemMode>,
    /// Decay exponents A to compare against (decay mode).
    #[serde(default)]
    pub exponents: Vec<f64>,
    /// Pass threshold on the fitted slope (slope ≤ threshold).
    #[serde(default)]
    pub slope_threshold: Option<f64>,
}

fn default_weight() -> WeightSpec {
    WeightSpec::Plain
}

fn default_support() -> [f64; 2] {
    [1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub problem: Vec<ProblemSpec>,
}

impl ProblemSpec {
    /// The problem at the first scale, plus its mode.
    pub fn build(&self) -> Result<(PhaseProblem, ProblemMode)> {
        if self.scales.is_empty() || self.scales.iter().any(|s| !s.is_finite()) {
            return Err(MmlError::Validation(format!("problem {}: scales must be finite and non-empty", self.name)));
        }
        let [a, b] = self.support;
        let weight = match self.weight {
            WeightSpec::Plain => BumpFunction::plain(),
            WeightSpec::Plateau => BumpFunction::plateau(self.delta.ok_or_else(|| {
                MmlError::Validation(format!("problem {}: plateau weight needs delta", self.name))
            })?),
        }
        .with_support(a, b);
        let lambda = self.scales[0];
        let mid = 0.5 * (a + b);
        let phase = match self.phase {
            PhaseKindSpec::Linear => Phase::Linear { lambda },
            PhaseKindSpec::Quadratic => Phase::Quadratic { lambda, center: self.center.unwrap_or(mid) },
            PhaseKindSpec::LogLinear => Phase::LogLinear { lambda, center: self.center.unwrap_or(mid) },
        };
        let p = PhaseProblem::new(weight, phase);
        p.validate()?;
        let mode = self.mode.unwrap_or(match self.phase {
            PhaseKindSpec::Linear => ProblemMode::Decay,
            _ => ProblemMode::Stationary,
        });
        Ok((p, mode))
    }
}

pub fn parse_problem_file(text: &str) -> Result<ProblemFile> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| MmlError::Parse(format!("problem file: {e}")))?;
    if file.problem.is_empty() {
        return Err(MmlError::Parse("problem file has no [[problem]] entries".into()));
    }
    for p in &file.problem {
        p.build()?;
    }
    Ok(file)
}

pub fn load_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|e| MmlError::Io(format!("{}: {e}", path.display())))?;
    parse_problem_file(&text)
}

/// The built-in problems: the quadratic-phase family and the linear-phase
/// decay family.
pub fn default_problems() -> ProblemFile {
    ProblemFile {
        problem: vec![
            ProblemSpec {
                name: "quadratic".into(),
                phase: PhaseKindSpec::Quadratic,
                scales: vec![1e3, 4e3, 1.6e4],
                center: Some(1.5),
                weight: WeightSpec::Plain,
                delta: None,
                support: [1.0, 2.0],
                mode: Some(ProblemMode::Stationary),
                exponents: Vec::new(),
                slope_threshold: Some(-1.4),
            },
            ProblemSpec {
                name: "linear".into(),
                phase: PhaseKindSpec::Linear,
                scales: vec![100.0, 200.0, 400.0, 800.0],
                center: None,
                weight: WeightSpec::Plain,
                delta: None,
                support: [1.0, 2.0],
                mode: Some(ProblemMode::Decay),
                exponents: vec![1.0, 2.0, 3.0],
                slope_threshold: Some(-3.0),
            },
        ],
    }
}

/// Result of running one problem-file entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ProblemOutcome {
    Decay { name: String, certificate: DecayCertificate, slope_threshold: Option<f64>, pass: bool },
    Stationary { name: String, scan: StationaryScan, slope_threshold: Option<f64>, pass: bool },
}

impl ProblemOutcome {
    pub fn pass(&self) -> bool {
        match self {
            ProblemOutcome::Decay { pass, .. } | ProblemOutcome::Stationary { pass, .. } => *pass,
        }
    }
}

pub fn run_problem(spec: &ProblemSpec) -> Result<ProblemOutcome> {
    let (p, mode) = spec.build()?;
    Ok(match mode {
        ProblemMode::Decay => {
            let certificate = decay_certificate(&p, &spec.scales, &spec.exponents)?;
            let pass = match (spec.slope_threshold, certificate.slope) {
                (Some(th), Some(s)) => s <= th,
                (_, None) => certificate.success_by_underflow,
                (None, Some(_)) => true,
            };
            ProblemOutcome::Decay { name: spec.name.clone(), certificate, slope_threshold: spec.slope_threshold, pass }
        }
        ProblemMode::Stationary => {
            let scan = stationary_scan(&p, &spec.scales)?;
            let pass = spec.slope_threshold.map_or(true, |th| scan.slope <= th);
            ProblemOutcome::Stationary { name: spec.name.clone(), scan, slope_threshold: spec.slope_threshold, pass }
        }
    })
}

/// CSV of the per-scale rows of a set of outcomes.
pub fn outcomes_csv(outcomes: &[ProblemOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["problem", "mode", "lambda", "abs_integral_or_difference", "direct_re", "direct_im", "leading_re", "leading_im"])
        .map_err(|e| MmlError::Io(e.to_string()))?;
    for o in outcomes {
        match o {
            ProblemOutcome::Decay { name, certificate, .. } => {
                for pt in &certificate.points {
                    w.write_record([name.as_str(), "decay", &format!("{:?}", pt.lambda), &format!("{:e}", pt.abs_integral), "", "", "", ""])
                        .map_err(|e| MmlError::Io(e.to_string()))?;
                }
            }
            ProblemOutcome::Stationary { name, scan, .. } => {
                for r in &scan.rows {
                    w.write_record([
                        name.as_str(),
                        "stationary",
                        &format!("{:?}", r.lambda),
                        &format!("{:e}", r.abs_difference),
                        &format!("{:e}", r.direct.re),
                        &format!("{:e}", r.direct.im),
                        &format!("{:e}", r.leading.re),
                        &format!("{:e}", r.leading.im),
                    ])
                    .map_err(|e| MmlError::Io(e.to_string()))?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| MmlError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| MmlError::Io(e.to_string()))
}

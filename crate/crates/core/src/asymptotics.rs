//! Predicted main terms of the mixed moments, the constant c_f, and
//! log-log residual fits against measured moments.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::hecke_coeffs::{CoefficientTable, FormDescriptor};
use crate::lfun_eval::{required_n_max, AfeEvaluator};
use crate::moments::{Cutoff, MomentBundle, MomentEngine, QuadratureConfig, Variant};
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::special_functions::CutoffKernel;
use crate::test_functions::{integral_c, log_weighted_integral, BumpFunction};

/// Contour and panel settings of the c_f integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfPlan {
    /// Abscissa ε of the line Re w = ε.
    pub epsilon: f64,
    /// The integral runs over |Im w| ≤ v_max.
    pub v_max: f64,
    /// Gauss–Legendre panels per unit of Im w.
    pub panels_per_unit: usize,
    pub order: usize,
}

impl Default for CfPlan {
    fn default() -> Self {
        CfPlan { epsilon: 0.1, v_max: 8.0, panels_per_unit: 1, order: 16 }
    }
}

/// Largest panel-halving change accepted for the c_f contour integral.
pub const CF_TOLERANCE: f64 = 1e-10;

impl CfPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(MmlError::Validation(format!("c_f abscissa ε = {} must lie in (0, 1/2)", self.epsilon)));
        }
        if !(self.v_max >= 1.0 && self.v_max <= 30.0) {
            return Err(MmlError::Validation(format!("c_f truncation {} must lie in [1, 30]", self.v_max)));
        }
        if self.panels_per_unit == 0 || !(2..=64).contains(&self.order) {
            return Err(MmlError::Validation("c_f panels_per_unit must be positive and order in 2..=64".into()));
        }
        Ok(())
    }
}

/// The two pieces of c_f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantCf {
    pub c_f: Complex64,
    /// c · (1/2πi)∫_{(ε)} L(1−w)(−w⁻²) e^{2w²+iπw/2} dw
    pub term1: Complex64,
    /// L(1) · ∫V(ξ)[iπ/4 + ½log(ξ/2π)]dξ
    pub term2: Complex64,
    /// Panel-halving change of the contour integral.
    pub quad_error: f64,
}

/// Coefficients the c_f contour and L(1) need under `plan`.
pub fn cf_required_n_max(form: &FormDescriptor, plan: &CfPlan) -> usize {
    let kernel = CutoffKernel::gauss();
    let corner = Complex64::new(1.0 - plan.epsilon, plan.v_max);
    required_n_max(form, &kernel, corner).max(required_n_max(form, &kernel, Complex64::new(1.0, 0.0)))
}

fn near_one_evaluator(form: &FormDescriptor, table: &CoefficientTable, plan: &CfPlan) -> Result<AfeEvaluator> {
    let kernel = CutoffKernel::gauss();
    let required = cf_required_n_max(form, plan);
    if required > table.n_max() {
        return Err(MmlError::InsufficientCoefficients { required, available: table.n_max() });
    }
    AfeEvaluator::new(form, &table.values()[..required], kernel)
}

/// L(1, f) through the AFE at s = 1.
pub fn l_at_one(form: &FormDescriptor, table: &CoefficientTable) -> Result<f64> {
    let ev = near_one_evaluator(form, table, &CfPlan::default())?;
    Ok(ev.at(Complex64::new(1.0, 0.0))?.value.re)
}

/// Panel edges on [−v_max, v_max]: the double pole of w⁻² sits ε away
/// from the line, so panels are graded geometrically from width ε/2 near
/// v = 0 up to 1/panels_per_unit.
fn contour_edges(plan: &CfPlan) -> Vec<f64> {
    let unit = 1.0 / plan.panels_per_unit as f64;
    let mut right = vec![0.0, 0.5 * plan.epsilon, plan.epsilon];
    let mut v = plan.epsilon;
    while v < plan.v_max {
        let step = v.min(unit);
        v = if v + 1.5 * step >= plan.v_max { plan.v_max } else { v + step };
        right.push(v);
    }
    let mut edges: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    edges.extend_from_slice(&right[1..]);
    edges
}

/// (1/2πi)∫_{Re w = ε, |Im w| ≤ v_max} L(1−w)(−w⁻²) e^{2w²+iπw/2} dw
/// and its panel-halving change.
fn contour_integral(ev: &AfeEvaluator, plan: &CfPlan) -> Result<(Complex64, f64)> {
    let integrand = |v: f64| -> Result<Complex64> {
        let w = Complex64::new(plan.epsilon, v);
        let l = ev.at(Complex64::new(1.0, 0.0) - w)?.value;
        let phase = w * w * 2.0 + Complex64::new(0.0, PI / 2.0) * w;
        // dw = i dv cancels the i of 1/2πi.
        Ok(-l / (w * w) * phase.exp() / (2.0 * PI))
    };
    let edges = contour_edges(plan);
    let run = |split: usize| -> Result<Complex64> {
        let rule = GaussLegendre::get(plan.order);
        let mut sums = Vec::new();
        for e in edges.windows(2) {
            let h = (e[1] - e[0]) / split as f64;
            for k in 0..split {
                let lo = e[0] + h * k as f64;
                let mut terms = Vec::with_capacity(plan.order);
                for (v, wt) in rule.mapped(lo, lo + h) {
                    terms.push(integrand(v)? * wt);
                }
                sums.push(pairwise_sum(&terms));
            }
        }
        Ok(pairwise_sum(&sums))
    };
    let coarse = run(1)?;
    let fine = run(2)?;
    let change = (fine - coarse).norm();
    if change > CF_TOLERANCE {
        return Err(MmlError::NonConvergence {
            what: "c_f contour integral under panel halving".into(),
            discrepancy: change,
            tolerance: CF_TOLERANCE,
        });
    }
    Ok((fine, change))
}

/// c_f with the literal kernel factor e^{2w²} (G(u) = e^{u²}).
pub fn constant_cf(v: &BumpFunction, form: &FormDescriptor, table: &CoefficientTable) -> Result<ConstantCf> {
    constant_cf_with(v, form, table, &CfPlan::default())
}

pub fn constant_cf_with(v: &BumpFunction, form: &FormDescriptor, table: &CoefficientTable, plan: &CfPlan) -> Result<ConstantCf> {
    plan.validate()?;
    let ev = near_one_evaluator(form, table, plan)?;
    let c = integral_c(v)?;
    let (contour, quad_error) = contour_integral(&ev, plan)?;
    let l1 = ev.at(Complex64::new(1.0, 0.0))?.value.re;
    let term1 = contour * c;
    let term2 = log_weighted_integral(v)? * l1;
    Ok(ConstantCf { c_f: term1 + term2, term1, term2, quad_error: quad_error * c.abs() })
}

/// The constants a prediction is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInputs {
    pub c: f64,
    pub c_f: Complex64,
    pub l_one: f64,
}

impl PredictionInputs {
    pub fn compute(v: &BumpFunction, form: &FormDescriptor, table: &CoefficientTable) -> Result<Self> {
        let cf = constant_cf(v, form, table)?;
        Ok(PredictionInputs { c: integral_c(v)?, c_f: cf.c_f, l_one: l_at_one(form, table)? })
    }

    pub fn predict(&self, t_big: f64, variant: Variant) -> Prediction {
        let main_term = match variant {
            Variant::ZetaSquare => Complex64::new(0.5 * self.c * self.l_one * t_big * t_big.ln(), 0.0) + self.c_f * t_big,
            Variant::ZetaLinear => Complex64::new(self.c * t_big * self.l_one, 0.0),
        };
        Prediction { c: self.c, c_f: self.c_f, t_big, main_term, variant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub c: f64,
    pub c_f: Complex64,
    pub t_big: f64,
    pub main_term: Complex64,
    pub variant: Variant,
}

/// zeta_square: (c/2)L(1)T log T + c_f T; zeta_linear: c T L(1).
pub fn predict(t_big: f64, variant: Variant, v: &BumpFunction, form: &FormDescriptor, table: &CoefficientTable) -> Result<Prediction> {
    if !(t_big >= 100.0) {
        return Err(MmlError::Validation(format!("T = {t_big} must be at least 100")));
    }
    Ok(PredictionInputs::compute(v, form, table)?.predict(t_big, variant))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub t_big: f64,
    pub measured: Complex64,
    pub predicted: Complex64,
    pub residual: Complex64,
    pub abs_residual: f64,
    /// |R| / T^{1/2}
    pub scaled_half: f64,
    /// |R| / T^{2/3}
    pub scaled_two_thirds: f64,
    pub quad_error: f64,
}

impl ResidualRow {
    pub fn new(t_big: f64, measured: Complex64, predicted: Complex64, quad_error: f64) -> Self {
        let residual = measured - predicted;
        let abs = residual.norm();
        ResidualRow {
            t_big,
            measured,
            predicted,
            residual,
            abs_residual: abs,
            scaled_half: abs / t_big.sqrt(),
            scaled_two_thirds: abs / t_big.powf(2.0 / 3.0),
            quad_error,
        }
    }

    /// True when |R| cannot be told apart from quadrature and rounding noise.
    pub fn at_noise_floor(&self) -> bool {
        self.abs_residual <= (3.0 * self.quad_error).max(64.0 * f64::EPSILON * self.predicted.norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualScan {
    pub variant: Variant,
    pub rows: Vec<ResidualRow>,
    /// Least-squares slope of log|R| against log T; absent when not a fit.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Set when some residual sits at the noise floor, so no exponent is
    /// meaningful.
    pub not_a_fit: bool,
}

/// Unweighted least squares of log|R| on log T.
pub fn fit_exponent(rows: &[ResidualRow]) -> Result<(f64, f64)> {
    if rows.len() < 3 {
        return Err(MmlError::DegenerateFit(format!("{} points; at least 3 are needed", rows.len())));
    }
    if rows.windows(2).any(|w| !(w[1].t_big > w[0].t_big)) {
        return Err(MmlError::DegenerateFit("T values must be strictly increasing".into()));
    }
    let mut pts = Vec::with_capacity(rows.len());
    for r in rows {
        if !(r.abs_residual > 0.0 && r.abs_residual.is_finite()) {
            return Err(MmlError::DegenerateFit(format!("|R| = {} at T = {} has no logarithm", r.abs_residual, r.t_big)));
        }
        pts.push((r.t_big.ln(), r.abs_residual.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Residual table and fit from already measured values (value, quad_error).
pub fn residual_table(variant: Variant, inputs: &PredictionInputs, t_list: &[f64], measured: &[(Complex64, f64)]) -> Result<ResidualScan> {
    if t_list.len() != measured.len() {
        return Err(MmlError::Validation("one measurement per T is required".into()));
    }
    let rows: Vec<ResidualRow> = t_list
        .iter()
        .zip(measured)
        .map(|(&t, &(m, q))| ResidualRow::new(t, m, inputs.predict(t, variant).main_term, q))
        .collect();
    let not_a_fit = rows.iter().any(ResidualRow::at_noise_floor);
    let (slope, intercept) = if not_a_fit {
        if rows.len() < 3 {
            return Err(MmlError::DegenerateFit(format!("{} points; at least 3 are needed", rows.len())));
        }
        (None, None)
    } else {
        let (s, i) = fit_exponent(&rows)?;
        (Some(s), Some(i))
    };
    Ok(ResidualScan { variant, rows, slope, intercept, not_a_fit })
}

/// Planted control: measured = main_term + T^exponent.
pub fn synthetic_scan(variant: Variant, inputs: &PredictionInputs, t_list: &[f64], exponent: Option<f64>) -> Result<ResidualScan> {
    let measured: Vec<(Complex64, f64)> = t_list
        .iter()
        .map(|&t| {
            let main = inputs.predict(t, variant).main_term;
            (main + exponent.map_or(0.0, |e| t.powf(e)), 0.0)
        })
        .collect();
    residual_table(variant, inputs, t_list, &measured)
}

fn check_t_list(t_list: &[f64]) -> Result<()> {
    if t_list.len() < 3 {
        return Err(MmlError::Validation(format!("T list needs at least 3 values, got {}", t_list.len())));
    }
    if t_list.iter().any(|t| !(*t >= 100.0 && t.is_finite())) || t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MmlError::Validation("T list must be increasing with every T >= 100".into()));
    }
    Ok(())
}

/// Measured moments for every T of a scan, one sampling per T shared by
/// both variants and all cutoffs.
pub fn measure_bundles(t_list: &[f64], engine: &MomentEngine, quad: &QuadratureConfig) -> Result<Vec<MomentBundle>> {
    check_t_list(t_list)?;
    t_list.iter().map(|&t| MomentBundle::compute(t, engine, quad)).collect()
}

/// Residual scan of one variant/cutoff over the given bundles.
pub fn scan_bundles(bundles: &[MomentBundle], variant: Variant, cutoff: &Cutoff, inputs: &PredictionInputs) -> Result<ResidualScan> {
    let mut measured = Vec::with_capacity(bundles.len());
    for b in bundles {
        let r = match cutoff {
            Cutoff::Smoothed { weight } => b.smoothed(variant, weight)?,
            Cutoff::Sharp => b.sharp(variant)?,
        };
        measured.push((r.value, r.quad_error));
    }
    let t_list: Vec<f64> = bundles.iter().map(|b| b.t_big).collect();
    residual_table(variant, inputs, &t_list, &measured)
}

/// Run the moments at every T and fit the residual exponent.
pub fn residual_scan(
    t_list: &[f64],
    variant: Variant,
    cutoff: &Cutoff,
    inputs: &PredictionInputs,
    engine: &MomentEngine,
    quad: &QuadratureConfig,
) -> Result<ResidualScan> {
    let bundles = measure_bundles(t_list, engine, quad)?;
    scan_bundles(&bundles, variant, cutoff, inputs)
}

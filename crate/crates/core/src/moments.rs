//! Mixed moments ∫V(t/T) L(1/2+it) |ζ(1/2−it)|² dt (and the linear variant
//! with ζ(1/2−it) alone), sharp-cutoff versions, and the mean-value
//! diagnostic.
//!
//! The integral is sampled once on a panel layout whose width follows the
//! local oscillation of the integrand; every weight and both variants are
//! then read off the same samples. Panels are evaluated in parallel but
//! reduced in a fixed pairwise tree, so results do not depend on the number
//! of workers.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::hecke_coeffs::{CoefficientTable, FormDescriptor};
use crate::lfun_eval::{required_n_max, AfeEvaluator};
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::special_functions::CutoffKernel;
use crate::test_functions::{max_plateau_delta, BumpFunction, BumpKind};

/// Smallest T the moment operations accept.
pub const MIN_T: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// L(1/2+it) |ζ(1/2−it)|²
    ZetaSquare,
    /// L(1/2+it) ζ(1/2−it)
    ZetaLinear,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::ZetaSquare, Variant::ZetaLinear];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ZetaSquare => "zeta_square",
            Variant::ZetaLinear => "zeta_linear",
        }
    }

    fn combine(self, l: Complex64, z: Complex64) -> Complex64 {
        match self {
            Variant::ZetaSquare => l * z.norm_sqr(),
            Variant::ZetaLinear => l * z.conj(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Cutoff {
    Smoothed { weight: BumpFunction },
    Sharp,
}

/// Panel quadrature knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per local oscillation of the integrand.
    pub nodes_per_oscillation: f64,
    /// Gauss–Legendre order of one panel.
    pub panel_order: usize,
    /// Fixed panel width; when absent the width follows the oscillation.
    pub panel_width: Option<f64>,
    /// Every panel is split into 2^refinement equal panels.
    pub refinement: u32,
    /// One panel in `spot_stride` is re-integrated with halved panels.
    pub spot_stride: usize,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    /// Cap on integrand evaluations (each is one L and one ζ value).
    pub max_evaluations: Option<usize>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_oscillation: 6.0,
            panel_order: 8,
            panel_width: None,
            refinement: 0,
            spot_stride: 10,
            workers: 0,
            max_evaluations: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nodes_per_oscillation >= 4.0 && self.nodes_per_oscillation.is_finite()) {
            return Err(MmlError::Validation(format!(
                "nodes_per_oscillation = {} must be at least 4",
                self.nodes_per_oscillation
            )));
        }
        if !(2..=64).contains(&self.panel_order) {
            return Err(MmlError::Validation(format!("panel_order = {} must be in 2..=64", self.panel_order)));
        }
        if let Some(w) = self.panel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(MmlError::Validation(format!("panel_width = {w} must be positive")));
            }
        }
        if self.refinement > 8 {
            return Err(MmlError::Validation(format!("refinement = {} exceeds 8", self.refinement)));
        }
        if self.spot_stride == 0 {
            return Err(MmlError::Validation("spot_stride must be positive".into()));
        }
        if self.max_evaluations == Some(0) {
            return Err(MmlError::Validation("max_evaluations must be positive".into()));
        }
        Ok(())
    }

    /// The same configuration with every panel halved.
    pub fn halved(self) -> Self {
        QuadratureConfig { refinement: self.refinement + 1, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub t_big: f64,
    pub variant: Variant,
    pub cutoff: Cutoff,
    pub quadrature: QuadratureConfig,
}

impl MomentRequest {
    pub fn validate(&self) -> Result<()> {
        check_t(self.t_big)?;
        self.quadrature.validate()?;
        if let Cutoff::Smoothed { weight } = &self.cutoff {
            weight.validate()?;
        }
        Ok(())
    }

    /// Largest |t| the request touches.
    pub fn t_max(&self) -> f64 {
        match self.cutoff {
            Cutoff::Smoothed { weight } => weight.support.1 * self.t_big,
            Cutoff::Sharp => 2.0 * self.t_big,
        }
    }
}

fn check_t(t_big: f64) -> Result<()> {
    if !(t_big >= MIN_T && t_big.is_finite()) {
        return Err(MmlError::Validation(format!("T = {t_big} must be at least {MIN_T}")));
    }
    Ok(())
}

/// A computed moment. `wall_time` is not serialized so that result
/// payloads are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub value: Complex64,
    pub quad_error: f64,
    pub eval_count: usize,
    pub panels: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_time: f64,
}

/// Evaluators for L and ζ sized for |t| ≤ t_max.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    l: AfeEvaluator,
    zeta: AfeEvaluator,
    t_max: f64,
}

impl MomentEngine {
    pub fn new(form: &FormDescriptor, table: &CoefficientTable, kernel: CutoffKernel, t_max: f64) -> Result<Self> {
        let s = Complex64::new(0.5, t_max.abs().max(10.0));
        let required = required_n_max(form, &kernel, s);
        if required > table.n_max() {
            return Err(MmlError::InsufficientCoefficients { required, available: table.n_max() });
        }
        Ok(MomentEngine {
            l: AfeEvaluator::new(form, &table.values()[..required], kernel)?,
            zeta: AfeEvaluator::zeta_up_to(t_max, kernel)?,
            t_max: t_max.abs(),
        })
    }

    /// Coefficients a Δ engine up to t_max needs.
    pub fn required_n_max(form: &FormDescriptor, kernel: CutoffKernel, t_max: f64) -> usize {
        required_n_max(form, &kernel, Complex64::new(0.5, t_max.abs().max(10.0)))
    }

    pub fn form(&self) -> &FormDescriptor {
        self.l.form()
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// (L(1/2+it), ζ(1/2+it)).
    pub fn values(&self, t: f64) -> Result<(Complex64, Complex64)> {
        let l = self.l.critical(t).map_err(|e| e.at(t))?;
        let z = self.zeta.critical(t).map_err(|e| e.at(t))?;
        Ok((l.value, z.value))
    }

    pub fn integrand(&self, t: f64, variant: Variant) -> Result<Complex64> {
        let (l, z) = self.values(t)?;
        Ok(variant.combine(l, z))
    }

    /// Local angular frequency of the integrand's fastest phase:
    /// (d_total/2)·log(t/2π) with d_total = deg L + 2.
    pub fn oscillation(&self, t: f64) -> f64 {
        let d_total = (self.form().degree + 2) as f64;
        (0.5 * d_total * (t.abs() / (2.0 * PI)).ln()).max(1.0)
    }

    /// Panel layout of [a, b], marched from a.
    pub fn layout(&self, a: f64, b: f64, quad: &QuadratureConfig) -> Vec<(f64, f64)> {
        let mut edges = vec![a];
        let mut t = a;
        while t < b {
            let w = match quad.panel_width {
                Some(w) => w,
                None => {
                    let width = |x: f64| quad.panel_order as f64 * 2.0 * PI / (quad.nodes_per_oscillation * self.oscillation(x));
                    // The frequency grows with |t|; size the panel for its far end.
                    let w0 = width(t);
                    width(t.abs().max((t + w0).abs()))
                }
            };
            let next = if t + 1.5 * w >= b { b } else { t + w };
            edges.push(next);
            t = next;
        }
        let split = 1usize << quad.refinement;
        let mut panels = Vec::with_capacity((edges.len() - 1) * split);
        for e in edges.windows(2) {
            let h = (e[1] - e[0]) / split as f64;
            for k in 0..split {
                let lo = e[0] + h * k as f64;
                let hi = if k + 1 == split { e[1] } else { lo + h };
                panels.push((lo, hi));
            }
        }
        panels
    }

    /// Sample the integrand on [a, b]. On hitting the evaluation cap the
    /// returned samples are incomplete (`complete == false`).
    pub fn sample(&self, a: f64, b: f64, quad: &QuadratureConfig) -> Result<Samples> {
        quad.validate()?;
        if !(a < b) || a.abs().max(b.abs()) > self.t_max * (1.0 + 1e-12) {
            return Err(MmlError::Validation(format!(
                "sample range [{a}, {b}] must be increasing and inside |t| <= {}",
                self.t_max
            )));
        }
        if a.abs().min(b.abs()) < 10.0 || (a < 0.0 && b > 0.0) {
            return Err(MmlError::Validation(format!("sample range [{a}, {b}] must stay in |t| >= 10")));
        }
        let layout = self.layout(a, b, quad);
        let order = quad.panel_order;
        let offset = (quad.spot_stride / 2).min(layout.len() - 1);
        let spot_ids: Vec<usize> = (offset..layout.len()).step_by(quad.spot_stride).collect();
        let planned = (layout.len() + 2 * spot_ids.len()) * order;
        let cap = quad.max_evaluations.unwrap_or(usize::MAX);
        let (coarse_count, spot_count) = if planned <= cap {
            (layout.len(), spot_ids.len())
        } else {
            ((cap / order).min(layout.len()), 0)
        };
        let mut jobs: Vec<(f64, f64)> = layout[..coarse_count].to_vec();
        for &k in &spot_ids[..spot_count] {
            let (lo, hi) = layout[k];
            let mid = 0.5 * (lo + hi);
            jobs.push((lo, mid));
            jobs.push((mid, hi));
        }
        let rule = GaussLegendre::get(order);
        let run = |&(lo, hi): &(f64, f64)| -> Result<PanelSamples> {
            let mut p = PanelSamples::default();
            for (t, w) in rule.mapped(lo, hi) {
                let (l, z) = self.values(t)?;
                p.t.push(t);
                p.w.push(w);
                p.l.push(l);
                p.z.push(z);
            }
            Ok(p)
        };
        let results: Vec<Result<PanelSamples>> = if quad.workers == 1 {
            jobs.iter().map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(quad.workers)
                .build()
                .map_err(|e| MmlError::Validation(format!("cannot start worker pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(run).collect())
        };
        let mut done = Vec::with_capacity(results.len());
        for r in results {
            done.push(r?);
        }
        let halves = done.split_off(coarse_count);
        let spots = spot_ids[..spot_count]
            .iter()
            .zip(halves.chunks(2))
            .map(|(&k, pair)| (k, [pair[0].clone(), pair[1].clone()]))
            .collect();
        Ok(Samples {
            range: (a, b),
            panels_total: layout.len(),
            panels: done,
            spots,
            complete: coarse_count == layout.len(),
            cap,
        })
    }
}

/// Integrand values at the Gauss–Legendre nodes of one panel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanelSamples {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub l: Vec<Complex64>,
    pub z: Vec<Complex64>,
}

impl PanelSamples {
    fn integrate(&self, variant: Variant, weight: &dyn Fn(f64) -> f64) -> Complex64 {
        let terms: Vec<Complex64> = (0..self.t.len())
            .map(|i| variant.combine(self.l[i], self.z[i]) * (self.w[i] * weight(self.t[i])))
            .collect();
        pairwise_sum(&terms)
    }

    fn max_abs(&self, variant: Variant, lo: f64, hi: f64) -> f64 {
        (0..self.t.len())
            .filter(|&i| self.t[i] >= lo && self.t[i] <= hi)
            .map(|i| variant.combine(self.l[i], self.z[i]).norm())
            .fold(0.0, f64::max)
    }
}

/// Integrand samples over one range, reusable for any weight and variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub range: (f64, f64),
    pub panels_total: usize,
    pub panels: Vec<PanelSamples>,
    /// (panel index, its two halves).
    pub spots: Vec<(usize, [PanelSamples; 2])>,
    pub complete: bool,
    cap: usize,
}

impl Samples {
    pub fn eval_count(&self) -> usize {
        self.panels.iter().map(|p| p.t.len()).sum::<usize>()
            + self.spots.iter().map(|(_, h)| h[0].t.len() + h[1].t.len()).sum::<usize>()
    }

    /// ∫ weight(t)·integrand(t) dt over the sampled range, with the
    /// spot-check error estimate.
    pub fn integrate(&self, variant: Variant, weight: &dyn Fn(f64) -> f64) -> Result<(Complex64, f64)> {
        let sums: Vec<Complex64> = self.panels.iter().map(|p| p.integrate(variant, weight)).collect();
        let value = pairwise_sum(&sums);
        if !self.complete {
            return Err(MmlError::BudgetExceeded {
                cap: self.cap,
                panels_done: self.panels.len(),
                panels_total: self.panels_total,
                evals_done: self.eval_count(),
                partial_re: value.re,
                partial_im: value.im,
            });
        }
        let diffs: Vec<f64> = self
            .spots
            .iter()
            .map(|(k, h)| (h[0].integrate(variant, weight) + h[1].integrate(variant, weight) - sums[*k]).norm())
            .collect();
        let quad_error = if diffs.is_empty() {
            0.0
        } else {
            diffs.iter().sum::<f64>() * self.panels.len() as f64 / diffs.len() as f64
        };
        Ok((value, quad_error))
    }

    /// Largest sampled |integrand| with t in [lo, hi].
    pub fn max_abs_on(&self, variant: Variant, lo: f64, hi: f64) -> f64 {
        self.panels.iter().map(|p| p.max_abs(variant, lo, hi)).fold(0.0, f64::max)
    }

    fn result(&self, variant: Variant, weight: &dyn Fn(f64) -> f64, started: Instant, warnings: Vec<String>) -> Result<MomentResult> {
        let (value, quad_error) = self.integrate(variant, weight)?;
        Ok(MomentResult {
            value,
            quad_error,
            eval_count: self.eval_count(),
            panels: self.panels.len(),
            warnings,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }
}

/// Warning for a plateau Δ above √T/log T, where the moment asymptotics
/// are not claimed to hold. The moment itself is still computed.
pub fn plateau_warning(weight: &BumpFunction, t_big: f64) -> Option<String> {
    let limit = max_plateau_delta(t_big);
    (weight.kind == BumpKind::Plateau && weight.delta > limit)
        .then(|| format!("plateau Δ = {} exceeds √T/log T = {limit:.4} at T = {t_big}", weight.delta))
}

/// ∫V(t/T)·integrand(t)dt over the support of V(·/T).
pub fn smoothed_moment(req: &MomentRequest, engine: &MomentEngine) -> Result<MomentResult> {
    req.validate()?;
    let Cutoff::Smoothed { weight } = req.cutoff else {
        return Err(MmlError::Validation("smoothed_moment needs a smoothed cutoff".into()));
    };
    let started = Instant::now();
    let (a, b) = weight.support;
    let samples = engine.sample(a * req.t_big, b * req.t_big, &req.quadrature)?;
    let warnings = plateau_warning(&weight, req.t_big).into_iter().collect();
    samples.result(req.variant, &|t| weight.value(t / req.t_big), started, warnings)
}

/// ∫_T^{2T} integrand(t)dt.
pub fn sharp_moment(t_big: f64, variant: Variant, engine: &MomentEngine, quad: &QuadratureConfig) -> Result<MomentResult> {
    check_t(t_big)?;
    sharp_moment_on(t_big, 2.0 * t_big, variant, engine, quad)
}

/// ∫_a^b integrand(t)dt with no weight.
pub fn sharp_moment_on(a: f64, b: f64, variant: Variant, engine: &MomentEngine, quad: &QuadratureConfig) -> Result<MomentResult> {
    let started = Instant::now();
    let samples = engine.sample(a, b, quad)?;
    samples.result(variant, &|_| 1.0, started, Vec::new())
}

/// Every moment that can be read off one sampling of [T, 2T]: both
/// variants for each of the given weights (support inside [1, 2]) and the
/// sharp cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBundle {
    pub t_big: f64,
    pub samples: Samples,
    pub wall_time: f64,
}

impl MomentBundle {
    pub fn compute(t_big: f64, engine: &MomentEngine, quad: &QuadratureConfig) -> Result<Self> {
        check_t(t_big)?;
        let started = Instant::now();
        let samples = engine.sample(t_big, 2.0 * t_big, quad)?;
        Ok(MomentBundle { t_big, samples, wall_time: started.elapsed().as_secs_f64() })
    }

    pub fn smoothed(&self, variant: Variant, weight: &BumpFunction) -> Result<MomentResult> {
        weight.validate()?;
        if weight.support.0 < 1.0 || weight.support.1 > 2.0 {
            return Err(MmlError::Validation("bundle weights must be supported in [1, 2]".into()));
        }
        let warnings = plateau_warning(weight, self.t_big).into_iter().collect();
        let t_big = self.t_big;
        let mut r = self.samples.result(variant, &|t| weight.value(t / t_big), Instant::now(), warnings)?;
        r.wall_time = self.wall_time;
        Ok(r)
    }

    pub fn sharp(&self, variant: Variant) -> Result<MomentResult> {
        let mut r = self.samples.result(variant, &|_| 1.0, Instant::now(), Vec::new())?;
        r.wall_time = self.wall_time;
        Ok(r)
    }
}

/// Sharp-versus-plateau comparison on [T, 2T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub sharp: Complex64,
    pub smoothed: Complex64,
    /// Total measure of the two transition strips, 2T/Δ.
    pub strip_measure: f64,
    pub strip_max: f64,
    /// strip_measure · strip_max.
    pub bound: f64,
    pub gap: f64,
    pub quad_error: f64,
    pub holds: bool,
}

/// Compare the sharp moment with the plateau-smoothed one: they can only
/// differ on the strips where V < 1, so the gap is at most the strip
/// measure times the largest sampled |integrand| there (plus quadrature
/// error).
pub fn sandwich(bundle: &MomentBundle, variant: Variant, delta: f64) -> Result<Sandwich> {
    let weight = BumpFunction::plateau(delta);
    let sharp = bundle.sharp(variant)?;
    let smoothed = bundle.smoothed(variant, &weight)?;
    let t_big = bundle.t_big;
    let strip = t_big / delta;
    let strip_max = bundle
        .samples
        .max_abs_on(variant, t_big, t_big + strip)
        .max(bundle.samples.max_abs_on(variant, 2.0 * t_big - strip, 2.0 * t_big));
    let bound = 2.0 * strip * strip_max;
    let gap = (sharp.value - smoothed.value).norm();
    let quad_error = sharp.quad_error + smoothed.quad_error;
    Ok(Sandwich {
        sharp: sharp.value,
        smoothed: smoothed.value,
        strip_measure: 2.0 * strip,
        strip_max,
        bound,
        gap,
        quad_error,
        holds: gap <= bound + quad_error,
    })
}

/// integrand(t) with freshly built evaluators; for spot checks.
pub fn integrand(t: f64, variant: Variant, form: &FormDescriptor, table: &CoefficientTable, kernel: CutoffKernel) -> Result<Complex64> {
    let l = crate::lfun_eval::lfun_afe(t, form, table, kernel)?;
    let z = crate::lfun_eval::zeta_afe(t, kernel)?;
    Ok(variant.combine(l.value, z.value))
}

/// Budget of [`mean_value_check`].
pub const MEAN_VALUE_MAX_N: usize = 10_000;
pub const MEAN_VALUE_MAX_T: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    pub lhs: f64,
    pub rhs: f64,
    /// Change of lhs under panel halving.
    pub lhs_error: f64,
}

/// lhs = ∫₀^T |Σ a_n n^{it}|² dt by quadrature, rhs = (T+N)Σ|a_n|².
pub fn mean_value_check(a: &[Complex64], t_big: f64) -> Result<MeanValue> {
    let n = a.len();
    if n == 0 || n > MEAN_VALUE_MAX_N {
        return Err(MmlError::Budget(format!("N = {n} must be in 1..={MEAN_VALUE_MAX_N}")));
    }
    if !(t_big > 0.0 && t_big <= MEAN_VALUE_MAX_T) {
        return Err(MmlError::Budget(format!("T = {t_big} must be in (0, {MEAN_VALUE_MAX_T}]")));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MmlError::Validation("coefficients must be finite".into()));
    }
    let mut spf = vec![0usize; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            for m in (i..=n).step_by(i) {
                if spf[m] == 0 {
                    spf[m] = i;
                }
            }
        }
    }
    let poly = |t: f64| -> f64 {
        let mut z = vec![Complex64::new(1.0, 0.0); n + 1];
        let mut acc = a[0];
        for k in 2..=n {
            let p = spf[k];
            z[k] = if p == k {
                let (s, c) = (t * (k as f64).ln()).sin_cos();
                Complex64::new(c, s)
            } else {
                z[p] * z[k / p]
            };
            acc += a[k - 1] * z[k];
        }
        acc.norm_sqr()
    };
    const ORDER: usize = 16;
    let freq = (n as f64).ln().max(1.0);
    let panels = ((t_big * freq * 8.0 / (2.0 * PI * ORDER as f64)).ceil() as usize).max(1);
    let integrate = |panels: usize| -> f64 {
        let rule = GaussLegendre::get(ORDER);
        let h = t_big / panels as f64;
        let sums: Vec<f64> = (0..panels)
            .into_par_iter()
            .map(|k| {
                let lo = h * k as f64;
                let terms: Vec<f64> = rule.mapped(lo, lo + h).map(|(t, w)| poly(t) * w).collect();
                pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&sums)
    };
    let coarse = integrate(panels);
    let fine = integrate(2 * panels);
    let energy: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    Ok(MeanValue { lhs: fine, rhs: (t_big + n as f64) * energy, lhs_error: (fine - coarse).abs() })
}

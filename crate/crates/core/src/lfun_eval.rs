//! Smoothed approximate functional equation for ζ and degree-d L-functions,
//! with an Euler–Maclaurin ζ oracle.
//!
//! For one evaluation point s the weight W_s is needed at every y = log n
//! up to the truncation length. Rather than running a contour integral per
//! n, the integral is discretized by the trapezoidal rule on Re u = c (the
//! integrand is analytic and Gaussian-damped, so the rule is spectrally
//! accurate) and evaluated on a uniform y-grid with one FFT. W at log n is
//! then read off by 8-point Lagrange interpolation whose weights depend only
//! on n and are precomputed in a [`DirichletPlan`].
//!
//! Each sum is carried to twice its nominal length N₀; the reported value
//! uses all 2N₀ terms and the error estimate is the change from N₀ to 2N₀.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::hecke_coeffs::{CoefficientTable, FormDescriptor};
use crate::quadrature::CompensatedSum;
use crate::special_functions::{log_gamma, log_gamma_ratio, ROUNDOFF_FACTOR, CutoffKernel, GammaFactorPlan, KernelKind};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// FFT length of the W grid.
const GRID_LEN: usize = 8192;
/// Spacing of the W grid in y = log x.
const GRID_DY: f64 = 1.0 / 192.0;
/// Nodes used on each side of the interpolation point (8-point Lagrange).
const INTERP_LEFT: usize = 3;
const INTERP_POINTS: usize = 8;
/// Contour abscissa of the trapezoidal W integral.
const CONTOUR_C: f64 = 1.0;
/// Largest doubling discrepancy accepted before reporting non-convergence.
pub const AFE_TOLERANCE: f64 = 1e-8;
/// Target log-decay of W at the nominal truncation point.
const TAIL_EXPONENT: f64 = 27.0;

fn grid_dv() -> f64 {
    2.0 * PI / (GRID_LEN as f64 * GRID_DY)
}

fn fft() -> Arc<dyn Fft<f64>> {
    static FFT: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    FFT.get_or_init(|| FftPlanner::new().plan_fft_forward(GRID_LEN)).clone()
}

/// A computed L-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LValue {
    pub s: Complex64,
    pub value: Complex64,
    pub error_estimate: f64,
    pub terms_used: usize,
    pub kernel: KernelKind,
}

/// Effective length scale of the AFE sums at s:
/// √q ∏_j max(|s−κ_j|/2π, 1)^{1/2}.
pub fn analytic_scale(form: &FormDescriptor, s: Complex64) -> f64 {
    let mut x = (form.conductor as f64).sqrt();
    for &k in &form.kappa {
        x *= ((s - k).norm() / (2.0 * PI)).max(1.0).sqrt();
    }
    x
}

/// Nominal truncation N₀: the point where the Gaussian-in-log tail of W
/// has decayed by e^{−27} after allowing for the e^{(πdw/8)²} growth of
/// the gamma ratio along the contour.
pub fn nominal_length(form: &FormDescriptor, kernel: &CutoffKernel, s: Complex64) -> usize {
    let b = PI * form.degree as f64 * kernel.width / 8.0;
    let log_factor = 2.0 / kernel.width * (TAIL_EXPONENT + b * b).sqrt();
    let n0 = analytic_scale(form, s) * log_factor.exp();
    (n0.ceil() as usize).max(16)
}

/// Coefficients an evaluation at s needs (the doubled length).
pub fn required_n_max(form: &FormDescriptor, kernel: &CutoffKernel, s: Complex64) -> usize {
    let mut n = 2 * nominal_length(form, kernel, s);
    if s.re != 0.5 {
        n = n.max(2 * nominal_length(form, kernel, Complex64::new(1.0, 0.0) - s));
    }
    n
}

/// Per-n data shared by every evaluation: factorization for the
/// multiplicative phase table and the fixed W-interpolation stencil.
#[derive(Debug, Clone)]
pub struct DirichletPlan {
    y0: f64,
    spf: Vec<u32>,
    /// n / spf(n), precomputed to keep integer division out of the sums.
    cofactor: Vec<u32>,
    ln_n: Vec<f64>,
    base: Vec<u32>,
    weights: Vec<[f64; INTERP_POINTS]>,
}

impl DirichletPlan {
    pub fn new(n_max: usize, conductor: u64) -> Self {
        let y0 = -0.5 * (conductor as f64).ln() - (INTERP_LEFT + 1) as f64 * GRID_DY;
        let mut spf = vec![0u32; n_max + 1];
        for i in 2..=n_max {
            if spf[i] == 0 {
                for m in (i..=n_max).step_by(i) {
                    if spf[m] == 0 {
                        spf[m] = i as u32;
                    }
                }
            }
        }
        let cofactor = (0..=n_max).map(|n| if n < 2 { 1 } else { (n / spf[n] as usize) as u32 }).collect();
        let mut ln_n = Vec::with_capacity(n_max + 1);
        let mut base = Vec::with_capacity(n_max + 1);
        let mut weights = Vec::with_capacity(n_max + 1);
        ln_n.push(f64::NEG_INFINITY);
        base.push(0);
        weights.push([0.0; INTERP_POINTS]);
        let half_ln_q = 0.5 * (conductor as f64).ln();
        for n in 1..=n_max {
            let l = (n as f64).ln();
            ln_n.push(l);
            let r = (l - half_ln_q - y0) / GRID_DY;
            let j = r.floor();
            let f = r - j;
            base.push(j as u32 - INTERP_LEFT as u32);
            weights.push(lagrange_weights(f));
        }
        DirichletPlan { y0, spf, cofactor, ln_n, base, weights }
    }

    pub fn n_max(&self) -> usize {
        self.spf.len() - 1
    }

    /// Highest grid index the stencil of n touches.
    fn grid_extent(&self, n: usize) -> usize {
        self.base[n] as usize + INTERP_POINTS
    }

    #[inline]
    fn interpolate(&self, n: usize, grid: &[Complex64]) -> Complex64 {
        let b = self.base[n] as usize;
        let w = &self.weights[n];
        let g = &grid[b..b + INTERP_POINTS];
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..INTERP_POINTS {
            re += w[i] * g[i].re;
            im += w[i] * g[i].im;
        }
        Complex64::new(re, im)
    }

    /// Fill `z[n] = n^{−it}` for 1 ≤ n ≤ upto using complete multiplicativity.
    fn phases(&self, t: f64, upto: usize, z: &mut Vec<Complex64>) {
        z.clear();
        z.resize(upto + 1, Complex64::new(0.0, 0.0));
        if upto == 0 {
            return;
        }
        z[1] = Complex64::new(1.0, 0.0);
        for n in 2..=upto {
            let p = self.spf[n] as usize;
            z[n] = if p == n {
                let (s, c) = (-t * self.ln_n[n]).sin_cos();
                Complex64::new(c, s)
            } else {
                z[p] * z[self.cofactor[n] as usize]
            };
        }
    }
}

fn lagrange_weights(f: f64) -> [f64; INTERP_POINTS] {
    let mut w = [0.0; INTERP_POINTS];
    for (i, wi) in w.iter_mut().enumerate() {
        let oi = i as f64 - INTERP_LEFT as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..INTERP_POINTS {
            if m != i {
                let om = m as f64 - INTERP_LEFT as f64;
                num *= f - om;
                den *= oi - om;
            }
        }
        *wi = num / den;
    }
    w
}

#[derive(Default)]
struct Scratch {
    fft_buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
    grid_a: Vec<Complex64>,
    grid_b: Vec<Complex64>,
    /// Roundoff bound of each grid at y = 0; it scales like e^{−cy}.
    noise_a: f64,
    noise_b: f64,
    phases: Vec<Complex64>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// A reusable AFE evaluator over a fixed coefficient sequence.
#[derive(Debug, Clone)]
pub struct AfeEvaluator {
    form: FormDescriptor,
    kernel: CutoffKernel,
    plan: GammaFactorPlan,
    lambda: Vec<f64>,
    lambda_half: Vec<f64>,
    /// Prefix sums of |λ(n)| n^{−1/2} e^{−c·y_n}: how grid roundoff reaches
    /// the critical-line sum.
    noise_gain: Vec<f64>,
    dirichlet: DirichletPlan,
    has_pole: bool,
    conj_closed: bool,
}

impl AfeEvaluator {
    /// Evaluator for `form` with coefficients λ(1..=lambda.len()).
    pub fn new(form: &FormDescriptor, lambda: &[f64], kernel: CutoffKernel) -> Result<Self> {
        form.validate()?;
        kernel.validate()?;
        if !form.self_dual {
            return Err(MmlError::Validation(format!("form {} is not self-dual", form.name)));
        }
        if lambda.is_empty() || lambda[0] != 1.0 {
            return Err(MmlError::Validation("coefficients must start with λ(1) = 1".into()));
        }
        let plan = GammaFactorPlan::for_kernel(&kernel, form.degree);
        let conj_closed = form.kappa.iter().all(|k| form.kappa.iter().any(|m| (*m - k.conj()).norm() < 1e-12));
        let has_pole = form.degree == 1 && form.kappa[0].norm() == 0.0 && form.conductor == 1;
        let lambda_half: Vec<f64> = lambda.iter().enumerate().map(|(i, v)| v / ((i + 1) as f64).sqrt()).collect();
        let q_c = (form.conductor as f64).powf(CONTOUR_C / 2.0);
        let mut noise_gain = Vec::with_capacity(lambda.len() + 1);
        noise_gain.push(0.0);
        let mut acc = 0.0;
        for (i, v) in lambda_half.iter().enumerate() {
            acc += v.abs() * q_c * ((i + 1) as f64).powf(-CONTOUR_C);
            noise_gain.push(acc);
        }
        Ok(AfeEvaluator {
            form: form.clone(),
            kernel,
            plan,
            lambda: lambda.to_vec(),
            lambda_half,
            noise_gain,
            dirichlet: DirichletPlan::new(lambda.len(), form.conductor),
            has_pole,
            conj_closed,
        })
    }

    /// ζ with Dirichlet coefficients 1 up to `n_max`.
    pub fn zeta(n_max: usize, kernel: CutoffKernel) -> Result<Self> {
        Self::new(&FormDescriptor::zeta(), &vec![1.0; n_max.max(1)], kernel)
    }

    /// Evaluator sized for every critical-line point with |t| ≤ t_max.
    pub fn zeta_up_to(t_max: f64, kernel: CutoffKernel) -> Result<Self> {
        let s = Complex64::new(0.5, t_max.abs().max(10.0));
        Self::zeta(required_n_max(&FormDescriptor::zeta(), &kernel, s), kernel)
    }

    pub fn n_max(&self) -> usize {
        self.lambda.len()
    }

    pub fn form(&self) -> &FormDescriptor {
        &self.form
    }

    pub fn kernel(&self) -> CutoffKernel {
        self.kernel
    }

    fn check_capacity(&self, s: Complex64) -> Result<usize> {
        let required = required_n_max(&self.form, &self.kernel, s);
        if required > self.n_max() {
            return Err(MmlError::InsufficientCoefficients { required, available: self.n_max() });
        }
        Ok(required)
    }

    /// W_s on the grid y_j = y0 + j·dy for j ≤ j_max.
    fn cutoff_grid(&self, s: Complex64, j_max: usize, scratch: &mut Scratch, which: bool) -> Result<()> {
        let dv = grid_dv();
        let k_max = (self.plan.v_max / dv).ceil() as i64;
        let y0 = self.dirichlet.y0;
        let buf = &mut scratch.fft_buf;
        buf.clear();
        buf.resize(GRID_LEN, Complex64::new(0.0, 0.0));
        let mut mass = 0.0;
        for k in -k_max..=k_max {
            let v = k as f64 * dv;
            let u = Complex64::new(CONTOUR_C, v);
            let log = self.kernel.log_eval(u) + log_gamma_ratio(&self.form, s, u)? - Complex64::new(0.0, v * y0);
            let x = log.exp() / u;
            mass += x.norm();
            buf[k.rem_euclid(GRID_LEN as i64) as usize] = x;
        }
        let plan = fft();
        scratch.fft_scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        plan.process_with_scratch(buf, &mut scratch.fft_scratch);
        let scale = dv / (2.0 * PI);
        // Interpolation weights have |w|₁ < 2, hence the extra factor.
        let noise = 2.0 * ROUNDOFF_FACTOR * f64::EPSILON * mass * scale;
        let grid = if which {
            scratch.noise_b = noise;
            &mut scratch.grid_b
        } else {
            scratch.noise_a = noise;
            &mut scratch.grid_a
        };
        grid.clear();
        for (j, x) in buf.iter().enumerate().take(j_max + 1) {
            let y = y0 + j as f64 * GRID_DY;
            grid.push(*x * ((-CONTOUR_C * y).exp() * scale));
        }
        Ok(())
    }

    /// Residue terms of Λ(s+u)G(u)/u at u = 1−s and u = −s (ζ only).
    fn pole_terms(&self, s: Complex64) -> Result<Complex64> {
        if !self.has_pole {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let one = Complex64::new(1.0, 0.0);
        let log_gamma_s = log_gamma(s * 0.5)? - s * (LN_PI * 0.5);
        let a = (self.kernel.log_eval(one - s) - log_gamma_s).exp() / (one - s);
        let b = (self.kernel.log_eval(s) - log_gamma_s).exp() / s;
        Ok(-(a + b))
    }

    /// ε q^{1/2−s} γ(1−s)/γ(s).
    fn reflection_factor(&self, s: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut log = (one - s * 2.0) * (0.5 * (self.form.conductor as f64).ln())
            - (one - s * 2.0) * (self.form.degree as f64 * LN_PI * 0.5);
        for &k in &self.form.kappa {
            log += log_gamma((one - s - k) * 0.5)? - log_gamma((s - k) * 0.5)?;
        }
        Ok(self.form.root_number * log.exp())
    }

    /// Interpolated W_s(n/√q) for 1 ≤ n ≤ upto, as used by the sums.
    #[doc(hidden)]
    pub fn weights_at(&self, s: Complex64, upto: usize) -> Result<Vec<Complex64>> {
        let upto = upto.min(self.n_max());
        SCRATCH.with(|cell| {
            let scratch = &mut *cell.borrow_mut();
            self.cutoff_grid(s, self.dirichlet.grid_extent(upto), scratch, false)?;
            Ok((1..=upto).map(|n| self.dirichlet.interpolate(n, &scratch.grid_a)).collect())
        })
    }

    /// L(1/2+it) via the critical-line form L = S + χ·conj(S) + residues.
    pub fn critical(&self, t: f64) -> Result<LValue> {
        if !(t.abs() >= 10.0) {
            return Err(MmlError::Domain(format!("critical-line evaluation needs |t| >= 10, got {t}")));
        }
        let s = Complex64::new(0.5, t);
        if !self.conj_closed {
            return self.at(s);
        }
        let total = self.check_capacity(s)?;
        let nominal = total / 2;
        let (sum_full, sum_half, noise) = SCRATCH.with(|cell| -> Result<(Complex64, Complex64, f64)> {
            let scratch = &mut *cell.borrow_mut();
            let j_max = self.dirichlet.grid_extent(total);
            self.cutoff_grid(s, j_max, scratch, false)?;
            let grid = &scratch.grid_a;
            let z = &mut scratch.phases;
            z.clear();
            z.resize(total + 1, Complex64::new(0.0, 0.0));
            let spf = &self.dirichlet.spf;
            let cofactor = &self.dirichlet.cofactor;
            let ln_n = &self.dirichlet.ln_n;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut half = acc;
            for n in 1..=total {
                // n^{−it} by complete multiplicativity, fused with the sum.
                let p = spf[n] as usize;
                let zn = if n == 1 {
                    Complex64::new(1.0, 0.0)
                } else if p == n {
                    let (sn, cs) = (-t * ln_n[n]).sin_cos();
                    Complex64::new(cs, sn)
                } else {
                    z[p] * z[cofactor[n] as usize]
                };
                z[n] = zn;
                let w = self.dirichlet.interpolate(n, grid);
                acc += zn * w * self.lambda_half[n - 1];
                if n == nominal {
                    half = acc;
                }
            }
            Ok((acc, half, scratch.noise_a * self.noise_gain[total]))
        })?;
        let chi = self.reflection_factor(s)?;
        let pole = self.pole_terms(s)?;
        let value = sum_full + chi * sum_full.conj() + pole;
        let error = ((sum_full - sum_half).norm() + noise) * (1.0 + chi.norm());
        self.finish(s, value, error, total)
    }

    /// L(s) at a general point with both sums and both W tables.
    pub fn at(&self, s: Complex64) -> Result<LValue> {
        let one = Complex64::new(1.0, 0.0);
        let sr = one - s;
        let n_s = 2 * nominal_length(&self.form, &self.kernel, s);
        let n_r = 2 * nominal_length(&self.form, &self.kernel, sr);
        let total = self.check_capacity(s)?;
        let ((direct, direct_half, noise_s), (dual, dual_half, noise_r)) =
            SCRATCH.with(|cell| -> Result<_> {
                let scratch = &mut *cell.borrow_mut();
                self.cutoff_grid(s, self.dirichlet.grid_extent(n_s), scratch, false)?;
                self.cutoff_grid(sr, self.dirichlet.grid_extent(n_r), scratch, true)?;
                self.dirichlet.phases(s.im, total, &mut scratch.phases);
                let z = &scratch.phases;
                let q_c = (self.form.conductor as f64).powf(CONTOUR_C / 2.0);
                let sum = |len: usize, sigma: f64, conj: bool, grid: &[Complex64], noise: f64| {
                    let mut acc = CompensatedSum::new();
                    let mut half = Complex64::new(0.0, 0.0);
                    let mut gain = 0.0;
                    for n in 1..=len {
                        let w = self.dirichlet.interpolate(n, grid);
                        let ph = if conj { z[n].conj() } else { z[n] };
                        let mag = self.lambda[n - 1] * (-sigma * self.dirichlet.ln_n[n]).exp();
                        acc.add(ph * w * mag);
                        gain += mag.abs() * (-CONTOUR_C * self.dirichlet.ln_n[n]).exp();
                        if n == len / 2 {
                            half = acc.value();
                        }
                    }
                    (acc.value(), half, noise * gain * q_c)
                };
                Ok((
                    sum(n_s, s.re, false, &scratch.grid_a, scratch.noise_a),
                    sum(n_r, sr.re, true, &scratch.grid_b, scratch.noise_b),
                ))
            })?;
        let chi = self.reflection_factor(s)?;
        let pole = self.pole_terms(s)?;
        let value = direct + chi * dual + pole;
        let error = (direct - direct_half).norm() + noise_s + chi.norm() * ((dual - dual_half).norm() + noise_r);
        self.finish(s, value, error, n_s.max(n_r))
    }

    fn finish(&self, s: Complex64, value: Complex64, error: f64, terms: usize) -> Result<LValue> {
        if !(error <= AFE_TOLERANCE) || !value.re.is_finite() || !value.im.is_finite() {
            return Err(MmlError::NonConvergence {
                what: format!("AFE at s = {s}"),
                discrepancy: error,
                tolerance: AFE_TOLERANCE,
            });
        }
        Ok(LValue { s, value, error_estimate: error, terms_used: terms, kernel: self.kernel.kind })
    }
}

/// ζ(1/2+it) through the smoothed AFE.
pub fn zeta_afe(t: f64, kernel: CutoffKernel) -> Result<LValue> {
    if !(t.abs() >= 10.0) {
        return Err(MmlError::Domain(format!("zeta_afe needs |t| >= 10, got {t}")));
    }
    AfeEvaluator::zeta_up_to(t, kernel)?.critical(t)
}

fn evaluator_for(form: &FormDescriptor, table: &CoefficientTable, kernel: CutoffKernel, s: Complex64) -> Result<AfeEvaluator> {
    kernel.validate()?;
    let required = required_n_max(form, &kernel, s);
    if required > table.n_max() {
        return Err(MmlError::InsufficientCoefficients { required, available: table.n_max() });
    }
    AfeEvaluator::new(form, &table.values()[..required], kernel)
}

/// L(1/2+it, f) through the smoothed AFE with exact gamma ratios.
pub fn lfun_afe(t: f64, form: &FormDescriptor, table: &CoefficientTable, kernel: CutoffKernel) -> Result<LValue> {
    if !(t.abs() >= 10.0) {
        return Err(MmlError::Domain(format!("lfun_afe needs |t| >= 10, got {t}")));
    }
    let s = Complex64::new(0.5, t);
    evaluator_for(form, table, kernel, s)?.critical(t)
}

/// L(s, f) at a general point through the two-sided AFE.
pub fn lfun_at(s: Complex64, form: &FormDescriptor, table: &CoefficientTable, kernel: CutoffKernel) -> Result<LValue> {
    evaluator_for(form, table, kernel, s)?.at(s)
}

/// L(1−w, f) for Re(1−w) ∈ [1/2, 3/2], with the default gauss kernel.
pub fn lfun_near_one(w: Complex64, form: &FormDescriptor, table: &CoefficientTable) -> Result<LValue> {
    lfun_near_one_with(w, form, table, CutoffKernel::gauss())
}

pub fn lfun_near_one_with(
    w: Complex64,
    form: &FormDescriptor,
    table: &CoefficientTable,
    kernel: CutoffKernel,
) -> Result<LValue> {
    let s = Complex64::new(1.0, 0.0) - w;
    let v_max = GammaFactorPlan::for_kernel(&kernel, form.degree).v_max;
    if !(0.5..=1.5).contains(&s.re) || !(w.im.abs() <= v_max) {
        return Err(MmlError::Domain(format!("lfun_near_one needs Re(1-w) in [1/2, 3/2] and |Im w| <= {v_max}, got w = {w}")));
    }
    lfun_at(s, form, table, kernel)
}

/// ln of the Δ completing factor (2π)^{−(s+11/2)} Γ(s+11/2).
pub fn log_delta_factor(s: Complex64) -> Result<Complex64> {
    let a = s + 5.5;
    Ok(log_gamma(a)? - a * (2.0 * PI).ln())
}

/// Λ(s) = (2π)^{−(s+11/2)} Γ(s+11/2) L(s), the completed Δ function.
/// Overflows to zero/infinity for |Im s| beyond a few hundred; use
/// [`log_delta_factor`] there.
pub fn completed_delta(s: Complex64, l_value: Complex64) -> Result<Complex64> {
    Ok(log_delta_factor(s)?.exp() * l_value)
}

/// ln of q^{s/2} γ(s), the completing factor of a general form.
pub fn log_completing_factor(form: &FormDescriptor, s: Complex64) -> Result<Complex64> {
    let mut acc = s * (0.5 * (form.conductor as f64).ln() - 0.5 * form.degree as f64 * LN_PI);
    for &k in &form.kappa {
        acc += log_gamma((s - k) * 0.5)?;
    }
    Ok(acc)
}

/// Relative symmetry defects of the completed Δ function at 1/2 ± it,
/// computed from two independent critical-line evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub t: f64,
    /// | |Λ(1/2+it)| / |Λ(1/2−it)| − 1 |
    pub modulus_gap: f64,
    /// |Λ(1/2−it)/Λ(1/2+it) − ε̄|, the full functional equation.
    pub equation_gap: f64,
    pub error_estimate: f64,
}

pub fn delta_symmetry(t: f64, table: &CoefficientTable, kernel: CutoffKernel) -> Result<SymmetryCheck> {
    let form = FormDescriptor::delta();
    let plus = lfun_afe(t, &form, table, kernel)?;
    let minus = lfun_afe(-t, &form, table, kernel)?;
    let s = Complex64::new(0.5, t);
    let one = Complex64::new(1.0, 0.0);
    let log_ratio = log_delta_factor(one - s)? - log_delta_factor(s)? + (minus.value / plus.value).ln();
    Ok(SymmetryCheck {
        t,
        modulus_gap: log_ratio.re.exp_m1().abs(),
        equation_gap: (log_ratio.exp() - form.root_number.conj()).norm(),
        error_estimate: (plus.error_estimate + minus.error_estimate) / plus.value.norm(),
    })
}

/// B_{2k}/(2k)! for k = 1..=8.
const EM_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

/// ζ(s) by Euler–Maclaurin with N = ⌈10 + 2|Im s|⌉ and corrections through B₁₆.
pub fn zeta_oracle(s: Complex64) -> Result<Complex64> {
    zeta_euler_maclaurin(s, (10.0 + 2.0 * s.im.abs()).ceil() as usize)
}

/// Euler–Maclaurin ζ with an explicit number of initial terms.
pub fn zeta_euler_maclaurin(s: Complex64, n: usize) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if s == one {
        return Err(MmlError::Pole("s = 1 (zeta)".into()));
    }
    if !(s.im.abs() <= 1e4) {
        return Err(MmlError::Budget(format!("zeta oracle is verified for |Im s| <= 1e4, got {}", s.im)));
    }
    let mut sum = CompensatedSum::new();
    for k in 1..n {
        sum.add((-s * (k as f64).ln()).exp());
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    sum.add(n_pow * nf / (s - 1.0));
    sum.add(n_pow * 0.5);
    // Σ B_{2k}/(2k)! · s(s+1)…(s+2k−2) · N^{−s−2k+1}
    let mut rising = s;
    let mut npow = n_pow / nf;
    for (k, &coef) in EM_COEFFS.iter().enumerate() {
        sum.add(rising * npow * coef);
        let m = 2.0 * k as f64;
        rising = rising * (s + m + 1.0) * (s + m + 2.0);
        npow /= nf * nf;
    }
    Ok(sum.value())
}

//! Complex log-gamma, gamma-factor ratios, the cutoff kernels G and the AFE
//! weight W_s, plus the Stirling shortcuts used only as cross-checks.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::hecke_coeffs::FormDescriptor;
use crate::quadrature::{pairwise_sum, GaussLegendre};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// B_{2k} / (2k(2k−1)) for k = 1..=10.
const STIRLING_COEFFS: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = c(0.0, 0.0);
    let mut pow = inv;
    for coef in STIRLING_COEFFS {
        series += pow * coef;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// log sin(πz), principal branch, without overflow for large |Im z|.
fn log_sinpi(z: Complex64) -> Complex64 {
    // sin(πz) has period 2 in Re z; reduce first so π·x stays small.
    let x = z.re - 2.0 * (z.re / 2.0).round();
    let y = z.im;
    let raw = if y.abs() < 20.0 {
        c(PI * x, PI * y).sin().ln()
    } else {
        // sin(πw) = −e^{−iπw}(1 − e^{2πiw})/(2i) for Im w > 0; mirror otherwise.
        let (w, flip) = if y > 0.0 { (c(x, y), false) } else { (c(x, -y), true) };
        let e2 = (c(0.0, 2.0 * PI) * w).exp();
        let v = c(0.0, -PI) * w + (c(1.0, 0.0) - e2).ln() - c(LN_2, PI / 2.0) + c(0.0, PI);
        if flip {
            v.conj()
        } else {
            v
        }
    };
    let im = raw.im - 2.0 * PI * ((raw.im + PI) / (2.0 * PI)).floor();
    let im = if im <= -PI { im + 2.0 * PI } else { im };
    c(raw.re, im)
}

/// Principal-branch log Γ(z), analytic off the non-positive real axis.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(MmlError::Domain(format!("log_gamma argument {z} is not finite")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(MmlError::Pole(format!("{z}")));
    }
    Ok(log_gamma_unchecked(z))
}

fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re >= 7.0 || (z.re >= 0.0 && z.im.abs() >= 15.0) {
        return stirling(z);
    }
    if z.re >= -30.0 {
        let shift = (7.0 - z.re).ceil() as usize;
        let mut logs = c(0.0, 0.0);
        for k in 0..shift {
            logs += (z + k as f64).ln();
        }
        return stirling(z + shift as f64) - logs;
    }
    // Reflection with the branch correction that keeps the result on the
    // same sheet as the recurrence.
    let tmp = (2.0 * PI).copysign(z.im) * (0.5 * z.re + 0.25).floor();
    c(LN_PI, tmp) - log_sinpi(z) - log_gamma_unchecked(c(1.0, 0.0) - z)
}

/// ln(1+w) without cancellation for small |w|.
fn ln_1p(w: Complex64) -> Complex64 {
    let u = c(1.0, 0.0) + w;
    let d = u - 1.0;
    if d == c(0.0, 0.0) {
        w
    } else {
        u.ln() * (w / d)
    }
}

fn in_stirling_region(z: Complex64) -> bool {
    z.re >= 7.0 || (z.re >= 0.0 && z.im.abs() >= 15.0)
}

fn stirling_increment(z: Complex64, delta: Complex64) -> Complex64 {
    let zd = z + delta;
    let mut acc = (z - 0.5) * ln_1p(delta / z) + delta * zd.ln() - delta;
    let (iz, izd) = (z.inv(), zd.inv());
    let (iz2, izd2) = (iz * iz, izd * izd);
    let (mut pz, mut pzd) = (iz, izd);
    for coef in STIRLING_COEFFS {
        acc += (pzd - pz) * coef;
        pz *= iz2;
        pzd *= izd2;
    }
    acc
}

/// ln Γ(z+δ) − ln Γ(z), computed without the cancellation that the plain
/// difference suffers when |z| is large and |δ| is moderate.
pub fn log_gamma_increment(z: Complex64, delta: Complex64) -> Result<Complex64> {
    let zd = z + delta;
    for w in [z, zd] {
        if w.im == 0.0 && w.re <= 0.0 && w.re == w.re.floor() {
            return Err(MmlError::Pole(format!("{w}")));
        }
    }
    if in_stirling_region(z) && in_stirling_region(zd) {
        return Ok(stirling_increment(z, delta));
    }
    let low = z.re.min(zd.re);
    if low < -30.0 {
        return Ok(log_gamma_unchecked(zd) - log_gamma_unchecked(z));
    }
    let shift = (7.0 - low).ceil().max(0.0) as usize;
    let mut acc = stirling_increment(z + shift as f64, delta);
    for k in 0..shift {
        acc -= ln_1p(delta / (z + k as f64));
    }
    Ok(acc)
}

/// log of γ(s+u)/γ(s) with γ(s) = π^{−ds/2} ∏ Γ((s−κ_j)/2).
pub fn log_gamma_ratio(form: &FormDescriptor, s: Complex64, u: Complex64) -> Result<Complex64> {
    let mut acc = c(0.0, 0.0);
    for &k in &form.kappa {
        acc += log_gamma_increment((s - k) * 0.5, u * 0.5)?;
    }
    Ok(acc - u * (form.degree as f64 * LN_PI * 0.5))
}

/// γ(s+u)/γ(s).
pub fn gamma_ratio(form: &FormDescriptor, s: Complex64, u: Complex64) -> Result<Complex64> {
    if u == c(0.0, 0.0) {
        return Ok(c(1.0, 0.0));
    }
    Ok(log_gamma_ratio(form, s, u)?.exp())
}

fn require_large_t(t: f64) -> Result<()> {
    if !(t.abs() >= 10.0) {
        return Err(MmlError::Domain(format!("|t| = {} is below 10", t.abs())));
    }
    Ok(())
}

/// Stirling approximation of γ(1/2+it+w)/γ(1/2+it):
/// ∏_j (|t|/2)^{w/2} e^{i sgn(t) πw/4}, times π^{−dw/2}.
pub fn stirling_ratio_first(t: f64, w: Complex64, form: &FormDescriptor) -> Result<Complex64> {
    require_large_t(t)?;
    let d = form.degree as f64;
    let per = w * 0.5 * (t.abs() / 2.0).ln() + c(0.0, t.signum() * PI / 4.0) * w;
    Ok((per * d - w * (d * LN_PI * 0.5)).exp())
}

/// Stirling approximation of the unitary factor γ(1/2−it)/γ(1/2+it):
/// ∏_j (|t|/2πe)^{−it} e^{iπ sgn(t)(1/4+κ_j/2)}.
pub fn stirling_ratio_second(t: f64, form: &FormDescriptor) -> Result<Complex64> {
    require_large_t(t)?;
    let d = form.degree as f64;
    let mut log = c(0.0, -t * d * ((t.abs() / (2.0 * PI)).ln() - 1.0));
    for &k in &form.kappa {
        log += c(0.0, PI * t.signum()) * (k * 0.5 + 0.25);
    }
    Ok(log.exp())
}

/// Which mollifier G the AFE uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gauss,
    Quartic,
}

/// Even entire mollifier with G(0) = 1, scaled by `width`:
/// gauss G(u) = e^{(u/w)²}, quartic G(u) = e^{(u/w)² − (u/w)⁴/100}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffKernel {
    pub kind: KernelKind,
    pub width: f64,
}

/// Width used by the AFE evaluators unless configured otherwise.
pub const DEFAULT_KERNEL_WIDTH: f64 = 3.0;

impl CutoffKernel {
    pub fn gauss() -> Self {
        CutoffKernel { kind: KernelKind::Gauss, width: DEFAULT_KERNEL_WIDTH }
    }

    pub fn quartic() -> Self {
        CutoffKernel { kind: KernelKind::Quartic, width: DEFAULT_KERNEL_WIDTH }
    }

    /// The unscaled e^{u²}.
    pub fn unit_gauss() -> Self {
        CutoffKernel { kind: KernelKind::Gauss, width: 1.0 }
    }

    pub fn with_width(self, width: f64) -> Self {
        CutoffKernel { width, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width >= 0.5 && self.width <= 10.0) {
            return Err(MmlError::Validation(format!("kernel width {} outside [0.5, 10]", self.width)));
        }
        Ok(())
    }

    pub fn log_eval(&self, u: Complex64) -> Complex64 {
        let z = u / self.width;
        let z2 = z * z;
        match self.kind {
            KernelKind::Gauss => z2,
            KernelKind::Quartic => z2 - z2 * z2 / 100.0,
        }
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.log_eval(u).exp()
    }
}

/// Contour data for [`cutoff_w`]: the abscissa c, the truncation height
/// v_max and the Gauss–Legendre order per unit-length panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFactorPlan {
    pub c: f64,
    pub v_max: f64,
    pub nodes_per_unit: usize,
}

impl Default for GammaFactorPlan {
    fn default() -> Self {
        GammaFactorPlan { c: 1.0, v_max: 8.0, nodes_per_unit: 12 }
    }
}

impl GammaFactorPlan {
    /// Plan for a degree-`degree` gamma factor. On Re u = c the gamma ratio
    /// grows like e^{πd|v|/4} on one side, so v_max is where
    /// e^{−v²/w² + πd|v|/4} has fallen to e^{−55}.
    pub fn for_kernel(kernel: &CutoffKernel, degree: usize) -> Self {
        let w = kernel.width;
        let a = PI * degree as f64 / 4.0;
        let v = a * w * w / 2.0 + w * (a * a * w * w / 4.0 + 55.0).sqrt();
        GammaFactorPlan { v_max: v.max(8.0), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 4.0) {
            return Err(MmlError::Validation(format!("contour abscissa c = {} outside (0, 4)", self.c)));
        }
        if !(self.v_max >= 8.0 && self.v_max.is_finite()) {
            return Err(MmlError::Validation(format!("v_max = {} must be at least 8", self.v_max)));
        }
        if self.nodes_per_unit == 0 {
            return Err(MmlError::Validation("nodes_per_unit must be positive".into()));
        }
        Ok(())
    }
}

/// A contour integral value with its node-doubling discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

const CUTOFF_TOL: f64 = 1e-12;
const CUTOFF_MAX_DOUBLINGS: usize = 5;
/// Multiple of ε·∫|integrand| below which node doubling cannot resolve anything.
pub(crate) const ROUNDOFF_FACTOR: f64 = 64.0;

/// W_s(x) = (1/2πi)∫_{(c)} x^{−u} G(u) γ(s+u)/γ(s) du/u on |Im u| ≤ v_max.
///
/// The per-unit Gauss–Legendre order is doubled until two successive
/// values agree to 1e-12 (absolute, or relative once |W| > 1), or to the
/// roundoff floor 64ε∫|integrand| when that is larger.
pub fn cutoff_w(
    form: &FormDescriptor,
    s: Complex64,
    x: f64,
    plan: &GammaFactorPlan,
    kernel: &CutoffKernel,
) -> Result<Estimate> {
    plan.validate()?;
    kernel.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(MmlError::Domain(format!("cutoff_W needs x > 0, got {x}")));
    }
    let log_x = x.ln();
    let integrand = |v: f64| -> Result<Complex64> {
        let u = c(plan.c, v);
        let log = kernel.log_eval(u) - u * log_x + log_gamma_ratio(form, s, u)?;
        Ok(log.exp() / u)
    };
    let panels = (2.0 * plan.v_max).ceil() as usize;
    // Returns the integral and ∫|integrand|, which sets the roundoff floor.
    let eval = |order: usize| -> Result<(Complex64, f64)> {
        let rule = GaussLegendre::get(order);
        let width = 2.0 * plan.v_max / panels as f64;
        let mut sums = Vec::with_capacity(panels);
        let mut mass = 0.0;
        for p in 0..panels {
            let lo = -plan.v_max + width * p as f64;
            let terms = rule
                .mapped(lo, lo + width)
                .map(|(v, w)| integrand(v).map(|f| f * w))
                .collect::<Result<Vec<_>>>()?;
            mass += terms.iter().map(|z| z.norm()).sum::<f64>();
            sums.push(pairwise_sum(&terms));
        }
        Ok((pairwise_sum(&sums) / (2.0 * PI), mass / (2.0 * PI)))
    };
    let mut order = plan.nodes_per_unit;
    let (mut prev, _) = eval(order)?;
    let mut last_gap = f64::INFINITY;
    let mut tolerance = CUTOFF_TOL;
    for _ in 0..CUTOFF_MAX_DOUBLINGS {
        order *= 2;
        let (next, mass) = eval(order)?;
        let gap = (next - prev).norm();
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * mass;
        tolerance = (CUTOFF_TOL * next.norm().max(1.0)).max(floor);
        if gap <= tolerance {
            return Ok(Estimate { value: next, error: gap.max(floor) });
        }
        last_gap = gap;
        prev = next;
    }
    Err(MmlError::NonConvergence {
        what: format!("cutoff_W at s = {s}, x = {x}"),
        discrepancy: last_gap,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_poles_are_errors() {
        for z in [0.0, -1.0, -7.0, -40.0] {
            assert!(matches!(log_gamma(c(z, 0.0)), Err(MmlError::Pole(_))));
        }
    }

    #[test]
    fn log_gamma_recurrence_consistency() {
        for &z in &[c(0.3, 0.2), c(2.5, -4.0), c(-3.7, 1.1), c(12.0, 30.0), c(-45.2, 2.0)] {
            let lhs = log_gamma(z + 1.0).unwrap();
            let rhs = log_gamma(z).unwrap() + z.ln();
            // Equal modulo 2πi; the principal branch makes them equal exactly
            // except across the negative real axis.
            let d = lhs - rhs;
            let k = (d.im / (2.0 * PI)).round();
            assert!((d - c(0.0, 2.0 * PI * k)).norm() < 1e-11 * lhs.norm().max(1.0), "z={z}");
        }
    }

    #[test]
    fn kernel_basics() {
        for k in [CutoffKernel::gauss(), CutoffKernel::quartic(), CutoffKernel::unit_gauss()] {
            assert_eq!(k.eval(c(0.0, 0.0)), c(1.0, 0.0));
            let u = c(0.7, 2.3);
            assert!((k.eval(u) - k.eval(-u)).norm() < 1e-15);
            assert!(k.eval(c(1.0, 8.0 * k.width)).norm() < 1e-20);
        }
    }
}

//! The smooth weights V: the plain bump on [1, 2] and the plateau weight
//! that equals 1 on [1+1/Δ, 2−1/Δ], with derivatives, ∫V, the log-weighted
//! integral and the Mellin transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::quadrature::adaptive_integrate;

/// Highest derivative order [`BumpFunction::eval`] supports.
pub const MAX_DERIVATIVE: usize = 4;

/// Absolute tolerance of the weight integrals.
pub const INTEGRAL_TOL: f64 = 1e-12;

const MAX_INTERVALS: usize = 4096;

/// C_i with |V^(i)| ≤ C_i Δ^i for the plateau weight, i = 0..=4, Δ ≥ 2.
/// These are sup |S^(i)| of the smooth step (1, 2.0, 9.84, 110.6, 2280.4,
/// from a 30-digit evaluation) rounded up by about 5%.
pub const PLATEAU_DERIVATIVE_BOUNDS: [f64; 5] = [1.0, 2.1, 10.4, 116.0, 2400.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    PlainBump,
    Plateau,
}

/// A weight V. `support` is [1, 2] unless narrowed; `normalization`
/// multiplies every value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub kind: BumpKind,
    pub delta: f64,
    pub normalization: f64,
    pub support: (f64, f64),
}

impl BumpFunction {
    /// exp(−1/((x−1)(2−x))) on (1, 2).
    pub fn plain() -> Self {
        BumpFunction { kind: BumpKind::PlainBump, delta: 2.0, normalization: 1.0, support: (1.0, 2.0) }
    }

    /// Smooth-step plateau with transition width 1/Δ at both ends of [1, 2].
    pub fn plateau(delta: f64) -> Self {
        BumpFunction { kind: BumpKind::Plateau, delta, normalization: 1.0, support: (1.0, 2.0) }
    }

    pub fn scaled(self, factor: f64) -> Self {
        BumpFunction { normalization: self.normalization * factor, ..self }
    }

    /// The same shape squeezed into [a, b].
    pub fn with_support(self, a: f64, b: f64) -> Self {
        BumpFunction { support: (a, b), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support;
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > a) {
            return Err(MmlError::Validation(format!("weight support [{a}, {b}] must satisfy 0 < a < b")));
        }
        if !self.normalization.is_finite() {
            return Err(MmlError::Validation("weight normalization must be finite".into()));
        }
        if self.kind == BumpKind::Plateau && !(self.delta >= 2.0 && self.delta.is_finite()) {
            return Err(MmlError::Validation(format!("plateau Δ = {} must be at least 2", self.delta)));
        }
        Ok(())
    }

    fn width(&self) -> f64 {
        self.support.1 - self.support.0
    }

    /// Breakpoints where V is not analytic, for the quadratures.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.support;
        match self.kind {
            BumpKind::PlainBump => vec![a, 0.5 * (a + b), b],
            BumpKind::Plateau => {
                let h = self.width() / self.delta;
                let mut pts = vec![a, a + h, b - h, b];
                pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
                pts
            }
        }
    }

    /// V^(i)(x), exactly 0 outside the support.
    pub fn eval(&self, x: f64, i: usize) -> Result<f64> {
        if i > MAX_DERIVATIVE {
            return Err(MmlError::Validation(format!("derivative order {i} exceeds {MAX_DERIVATIVE}")));
        }
        let (a, b) = self.support;
        if !(x > a && x < b) {
            return Ok(0.0);
        }
        let v = match i {
            0..=2 => self.closed_form(x)[i],
            _ => self.richardson(x, i),
        };
        Ok(v * self.normalization)
    }

    /// V(x) for x anywhere, derivative order 0; the hot path of the moments.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let (a, b) = self.support;
        if !(x > a && x < b) {
            return 0.0;
        }
        self.closed_form(x)[0] * self.normalization
    }

    /// Unnormalized (V, V′, V″) inside the support.
    fn closed_form(&self, x: f64) -> [f64; 3] {
        let (a, b) = self.support;
        let len = self.width();
        match self.kind {
            BumpKind::PlainBump => {
                let u = (x - a) / len;
                let g = u * (1.0 - u);
                let g1 = 1.0 - 2.0 * u;
                let v = (-1.0 / g).exp();
                if v == 0.0 {
                    return [0.0; 3];
                }
                // φ = −1/g, V = e^φ, derivatives in u then rescaled to x.
                let p1 = g1 / (g * g);
                let p2 = (-2.0 * g - 2.0 * g1 * g1) / (g * g * g);
                [v, v * p1 / len, v * (p2 + p1 * p1) / (len * len)]
            }
            BumpKind::Plateau => {
                let k = self.delta / len;
                let l = smooth_step((x - a) * k);
                let r = smooth_step((b - x) * k);
                [
                    l[0] * r[0],
                    k * (l[1] * r[0] - l[0] * r[1]),
                    k * k * (l[2] * r[0] - 2.0 * l[1] * r[1] + l[0] * r[2]),
                ]
            }
        }
    }

    /// Orders 3 and 4 from central differences of the closed-form V″ with
    /// one Richardson step.
    fn richardson(&self, x: f64, i: usize) -> f64 {
        let scale = match self.kind {
            BumpKind::PlainBump => self.width(),
            BumpKind::Plateau => self.width() / self.delta,
        };
        let second = |y: f64| {
            let (a, b) = self.support;
            if y > a && y < b {
                self.closed_form(y)[2]
            } else {
                0.0
            }
        };
        let diff = |h: f64| {
            if i == 3 {
                (second(x + h) - second(x - h)) / (2.0 * h)
            } else {
                (second(x + h) - 2.0 * second(x) + second(x - h)) / (h * h)
            }
        };
        let h = 2e-3 * scale;
        let coarse = diff(h);
        let fine = diff(0.5 * h);
        fine + (fine - coarse) / 3.0
    }
}

/// S(y) = B(y)/(B(y)+B(1−y)) with B(y) = e^{−1/y}, and S′, S″.
fn smooth_step(y: f64) -> [f64; 3] {
    if y <= 0.0 {
        return [0.0; 3];
    }
    if y >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    // S = 1/(1+e^ψ), ψ = 1/y − 1/(1−y).
    let z = 1.0 - y;
    let psi = 1.0 / y - 1.0 / z;
    let s = if psi > 0.0 {
        let e = (-psi).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + psi.exp())
    };
    let q = s * (1.0 - s);
    if q == 0.0 {
        return [s, 0.0, 0.0];
    }
    let p1 = -1.0 / (y * y) - 1.0 / (z * z);
    let p2 = 2.0 / (y * y * y) - 2.0 / (z * z * z);
    let s1 = -q * p1;
    let s2 = -(s1 * (1.0 - 2.0 * s) * p1 + q * p2);
    [s, s1, s2]
}

/// c = ∫V(ξ)dξ.
pub fn integral_c(v: &BumpFunction) -> Result<f64> {
    v.validate()?;
    let r = adaptive_integrate(|x| v.value(x), &v.breakpoints(), INTEGRAL_TOL, MAX_INTERVALS);
    if !r.converged {
        return Err(MmlError::NonConvergence {
            what: "integral of V".into(),
            discrepancy: r.error,
            tolerance: INTEGRAL_TOL,
        });
    }
    Ok(r.value)
}

/// ∫V(ξ)[iπ/4 + ½ log(ξ/2π)]dξ.
pub fn log_weighted_integral(v: &BumpFunction) -> Result<Complex64> {
    let c = integral_c(v)?;
    let ln_2pi = (2.0 * PI).ln();
    let r = adaptive_integrate(|x| v.value(x) * 0.5 * (x.ln() - ln_2pi), &v.breakpoints(), INTEGRAL_TOL, MAX_INTERVALS);
    if !r.converged {
        return Err(MmlError::NonConvergence {
            what: "log-weighted integral of V".into(),
            discrepancy: r.error,
            tolerance: INTEGRAL_TOL,
        });
    }
    Ok(Complex64::new(r.value, PI / 4.0 * c))
}

/// Ṽ(s) = ∫V(x)x^{s−1}dx.
pub fn mellin_v(v: &BumpFunction, s: Complex64) -> Result<Complex64> {
    v.validate()?;
    let one = Complex64::new(1.0, 0.0);
    let (a, b) = v.support;
    // Split so every piece sees at most about one radian of phase.
    let pieces = ((s.im.abs() * (b / a).ln()).ceil() as usize).max(1);
    let mut pts = v.breakpoints();
    for k in 1..pieces {
        pts.push(a * (b / a).powf(k as f64 / pieces as f64));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let r = adaptive_integrate(
        |x| {
            let w = v.value(x);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                ((s - one) * x.ln()).exp() * w
            }
        },
        &pts,
        INTEGRAL_TOL,
        MAX_INTERVALS.max(4 * pts.len()),
    );
    if !r.converged {
        return Err(MmlError::NonConvergence {
            what: format!("Mellin transform of V at s = {s}"),
            discrepancy: r.error,
            tolerance: INTEGRAL_TOL,
        });
    }
    Ok(r.value)
}

/// Largest Δ the smoothed moment accepts at height T: √T / log T.
pub fn max_plateau_delta(t_big: f64) -> f64 {
    t_big.sqrt() / t_big.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_symmetry() {
        for k in 1..100 {
            let y = k as f64 / 100.0;
            let a = smooth_step(y);
            let b = smooth_step(1.0 - y);
            assert!((a[0] + b[0] - 1.0).abs() < 1e-15);
            assert!((a[1] - b[1]).abs() < 1e-10 * a[1].abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        for v in [BumpFunction::plain(), BumpFunction::plateau(10.0), BumpFunction::plain().with_support(1.4, 1.6)] {
            let (a, b) = v.support;
            for k in 1..20 {
                let x = a + (b - a) * k as f64 / 20.0 + 1e-3 * (b - a);
                let h = 1e-5 * (b - a);
                for i in 0..2 {
                    let fd = (v.eval(x + h, i).unwrap() - v.eval(x - h, i).unwrap()) / (2.0 * h);
                    let exact = v.eval(x, i + 1).unwrap();
                    let scale = v.eval(x, i + 1).unwrap().abs().max(1.0);
                    assert!((fd - exact).abs() < 1e-5 * scale, "{v:?} x={x} i={i}: {fd} vs {exact}");
                }
            }
        }
    }
}

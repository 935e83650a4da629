//! Volterra kernels `K(t, s)` of the supported Gaussian fields.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::quad::GaussLegendre;
use crate::error::{Error, Result};

/// Profile `ρ` of a kernel `K(t,s) = ρ((t−s)^α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RhoFn {
    /// `e^{rate·x}`
    Exp { rate: f64 },
    /// `c0 + c1·x`
    Linear { c0: f64, c1: f64 },
    /// `(1 + x)^{−p}`
    Power { p: f64 },
}

impl RhoFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RhoFn::Exp { rate } => (rate * x).exp(),
            RhoFn::Linear { c0, c1 } => c0 + c1 * x,
            RhoFn::Power { p } => (1.0 + x).powf(-p),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            RhoFn::Exp { rate } => rate * (rate * x).exp(),
            RhoFn::Linear { c1, .. } => c1,
            RhoFn::Power { p } => -p * (1.0 + x).powf(-p - 1.0),
        }
    }
}

/// Caller-declared monotonicity of `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Wiener,
    Fbm {
        #[serde(rename = "H")]
        hurst: f64,
    },
    OuStable {
        b: f64,
    },
    OuUnstable {
        b: f64,
    },
    Rho {
        rho: RhoFn,
        alpha: f64,
        #[serde(default)]
        monotone: Option<Monotonicity>,
    },
}

/// `(K_0, K_1, (K_0 + K_1)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBound {
    pub k0: f64,
    pub k1: f64,
    pub bound: f64,
}

/// `C_H = √(2H Γ(3/2−H) / (Γ(H+1/2) Γ(2−2H)))`.
pub fn fbm_constant(h: f64) -> f64 {
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// `K_1²(T) = 2H·2^{1−2H}·T^{2H−1}`.
pub fn fbm_k1_squared(h: f64, t_end: f64) -> f64 {
    2.0 * h * 2f64.powf(1.0 - 2.0 * h) * t_end.powf(2.0 * h - 1.0)
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            KernelSpec::Wiener => Ok(()),
            KernelSpec::Fbm { hurst } if (0.5..1.0).contains(&hurst) => Ok(()),
            KernelSpec::Fbm { hurst } => bad(format!("Hurst index must lie in [1/2, 1), got {hurst}")),
            KernelSpec::OuStable { b } | KernelSpec::OuUnstable { b } if b > 0.0 && b.is_finite() => {
                Ok(())
            }
            KernelSpec::OuStable { b } | KernelSpec::OuUnstable { b } => {
                bad(format!("OU rate must be positive, got {b}"))
            }
            KernelSpec::Rho { alpha, .. } if alpha > 0.0 && alpha.is_finite() => Ok(()),
            KernelSpec::Rho { alpha, .. } => bad(format!("exponent must be positive, got {alpha}")),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            KernelSpec::Wiener => "wiener".into(),
            KernelSpec::Fbm { hurst } => format!("fbm(H={hurst})"),
            KernelSpec::OuStable { b } => format!("ou_stable(b={b})"),
            KernelSpec::OuUnstable { b } => format!("ou_unstable(b={b})"),
            KernelSpec::Rho { alpha, .. } => format!("rho(alpha={alpha})"),
        }
    }

    fn is_brownian(&self) -> bool {
        matches!(self, KernelSpec::Wiener) || matches!(self, KernelSpec::Fbm { hurst } if *hurst == 0.5)
    }

    /// `K(t, s)`; zero for `s > t`, the diagonal limit for `s = t`.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        if s > t {
            return 0.0;
        }
        if self.is_brownian() {
            return 1.0;
        }
        match *self {
            KernelSpec::Fbm { hurst } => {
                if s == t {
                    0.0
                } else {
                    fbm_kernel(hurst, t, s)
                }
            }
            KernelSpec::OuStable { b } => (-b * (t - s)).exp(),
            KernelSpec::OuUnstable { b } => (b * (t - s)).exp(),
            KernelSpec::Rho { rho, alpha, .. } => rho.eval((t - s).powf(alpha)),
            KernelSpec::Wiener => unreachable!(),
        }
    }

    /// `∂K(t,s)/∂t` for `s < t`.
    pub fn dt(&self, t: f64, s: f64) -> Result<f64> {
        if s > t || self.is_brownian() {
            return Ok(0.0);
        }
        match *self {
            KernelSpec::Fbm { hurst } => {
                if s == t {
                    return Err(Error::SingularDiagonal(s));
                }
                let c = fbm_constant(hurst) * (hurst - 0.5);
                Ok(c * s.powf(0.5 - hurst) * (t - s).powf(hurst - 1.5) * t.powf(hurst - 0.5))
            }
            KernelSpec::OuStable { b } => Ok(-b * (-b * (t - s)).exp()),
            KernelSpec::OuUnstable { b } => Ok(b * (b * (t - s)).exp()),
            KernelSpec::Rho { rho, alpha, .. } => {
                if s == t {
                    return if alpha < 1.0 {
                        Err(Error::SingularDiagonal(s))
                    } else if alpha == 1.0 {
                        Ok(rho.deriv(0.0))
                    } else {
                        Ok(0.0)
                    };
                }
                let x = t - s;
                Ok(rho.deriv(x.powf(alpha)) * alpha * x.powf(alpha - 1.0))
            }
            KernelSpec::Wiener => unreachable!(),
        }
    }

    /// `K(s⁺, s)`.
    pub fn diag(&self, _s: f64) -> f64 {
        if self.is_brownian() {
            return 1.0;
        }
        match *self {
            KernelSpec::Fbm { .. } => 0.0,
            KernelSpec::Rho { rho, .. } => rho.eval(0.0),
            _ => 1.0,
        }
    }

    /// Exponent `e` with `K(t, s) ~ s^e` as `s → 0`.
    pub fn origin_exponent(&self) -> f64 {
        match *self {
            KernelSpec::Fbm { hurst } if hurst > 0.5 => 0.5 - hurst,
            _ => 0.0,
        }
    }

    /// Exponent of the non-smooth part of `K(t, s)` as `s → t`.
    pub fn diagonal_exponent(&self) -> f64 {
        match *self {
            KernelSpec::Fbm { hurst } if hurst > 0.5 => hurst - 0.5,
            KernelSpec::Rho { alpha, .. } if alpha.fract() != 0.0 => alpha,
            _ => 0.0,
        }
    }

    /// Exponent `e` with `∂K/∂t(t, s) ~ (t − s)^e` as `t → s`.
    pub fn dt_diagonal_exponent(&self) -> f64 {
        match *self {
            KernelSpec::Fbm { hurst } if hurst > 0.5 => hurst - 1.5,
            KernelSpec::Rho { alpha, .. } if alpha.fract() != 0.0 => alpha - 1.0,
            _ => 0.0,
        }
    }

    /// `∂K/∂t(t, s) / (t − s)^e` with `e` from [`Self::dt_diagonal_exponent`];
    /// bounded as `t → s`.
    pub fn dt_regular(&self, t: f64, s: f64) -> f64 {
        match *self {
            KernelSpec::Fbm { hurst } if hurst > 0.5 => {
                fbm_constant(hurst) * (hurst - 0.5) * s.powf(0.5 - hurst) * t.powf(hurst - 0.5)
            }
            KernelSpec::Rho { rho, alpha, .. } if alpha.fract() != 0.0 => {
                if s >= t {
                    // ρ'(x)·α·x^{α−1} with x^{α−1} factored out
                    rho.deriv(0.0) * alpha
                } else {
                    rho.deriv((t - s).powf(alpha)) * alpha
                }
            }
            _ => self.dt(t, s).unwrap_or(0.0),
        }
    }

    /// Kernels of semimartingales (Brownian motion and OU processes).
    pub fn is_semimartingale(&self) -> bool {
        matches!(self, KernelSpec::Wiener | KernelSpec::OuStable { .. } | KernelSpec::OuUnstable { .. })
            || self.is_brownian()
    }

    /// `(K_0, K_1, (K_0+K_1)²)` with the closed-form `K_1` of each family.
    pub fn norm_bound(&self, t_end: f64) -> Result<NormBound> {
        let (k0, k1sq) = match *self {
            KernelSpec::Wiener => (1.0, 0.0),
            KernelSpec::Fbm { hurst } if hurst == 0.5 => (1.0, 0.0),
            KernelSpec::Fbm { hurst } => (0.0, fbm_k1_squared(hurst, t_end)),
            KernelSpec::OuStable { b } => (1.0, 1.0 - (-b * t_end).exp()),
            KernelSpec::OuUnstable { b } => {
                let e = (b * t_end).exp();
                (1.0, e * (e - 1.0))
            }
            KernelSpec::Rho { rho, alpha, monotone } => {
                let r0 = rho.eval(0.0);
                let rt = rho.eval(t_end.powf(alpha));
                match monotone {
                    Some(Monotonicity::NonIncreasing) => (r0, r0 * (r0 - rt)),
                    Some(Monotonicity::NonDecreasing) => (r0, rt * (rt - r0)),
                    None => {
                        return Err(Error::HypothesesUnverifiable(
                            "monotonicity of rho was not declared".into(),
                        ))
                    }
                }
            }
        };
        let k1 = k1sq.max(0.0).sqrt();
        Ok(NormBound { k0, k1, bound: k0 * k0 + 2.0 * k0 * k1 + k1sq.max(0.0) })
    }

    /// Closed-form `R(t, s)` where one is known.
    pub fn exact_covariance(&self, t: f64, s: f64) -> Option<f64> {
        let (hi, lo) = if t >= s { (t, s) } else { (s, t) };
        match *self {
            KernelSpec::Wiener => Some(lo),
            KernelSpec::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                Some(0.5 * (hi.powf(h2) + lo.powf(h2) - (hi - lo).powf(h2)))
            }
            KernelSpec::OuStable { b } => {
                Some((-b * (hi - lo)).exp() * (1.0 - (-2.0 * b * lo).exp()) / (2.0 * b))
            }
            KernelSpec::OuUnstable { b } => {
                Some((b * (hi + lo)).exp() * (1.0 - (-2.0 * b * lo).exp()) / (2.0 * b))
            }
            KernelSpec::Rho { .. } => None,
        }
    }
}

/// `K(t,s) = C_H (H−½) s^{½−H} ∫_s^t (τ−s)^{H−3/2} τ^{H−½} dτ`, evaluated as
/// `C_H s^{½−H} (t−s)^{H−½} ∫_0^1 (s + (t−s)w^p)^{H−½} dw` with `p = 1/(H−½)`.
fn fbm_kernel(h: f64, t: f64, s: f64) -> f64 {
    let g = h - 0.5;
    let p = 1.0 / g;
    let d = t - s;
    let f = |w: f64| (s + d * w.powf(p)).powf(g);
    let gl = GaussLegendre::gl8();
    // the integrand turns from ~s^g to ~d^g·w around w* = (s/d)^{1/p};
    // panels double in width from there
    let wstar = if s > 0.0 { (s / d).powf(g).max(1e-8) } else { 1e-8 };
    let mut j = 0.0;
    if wstar >= 0.5 {
        j += gl.integrate(f, 0.0, 0.5) + gl.integrate(f, 0.5, 1.0);
    } else {
        j += gl.integrate(f, 0.0, wstar);
        let mut lo = wstar;
        while lo < 1.0 {
            let hi = (2.0 * lo).min(1.0);
            j += gl.integrate(f, lo, hi);
            lo = hi;
        }
    }
    fbm_constant(h) * s.powf(-g) * d.powf(g) * j
}

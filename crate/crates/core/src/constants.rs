//! Closed-form constants of the normalized Talenti bubble
//! `B(x) = c_d (1 + |x|²)^{−(d−2s)/2}`.
//!
//! The sharp constant `S_d` is not tabulated anywhere in closed form for
//! general `s`; it is derived here from the bubble equation
//! `(−Δ)ˢB = S_d B^{2*−1}` together with the classical identity
//! `(−Δ)ˢ(1 + |x|²)^{−(d−2s)/2} = A_{d,s} (1 + |x|²)^{−(d+2s)/2}`,
//! `A_{d,s} = 2^{2s} Γ((d+2s)/2)/Γ((d−2s)/2)`. Matching both sides gives
//! `S_d = A_{d,s} c_d^{2−2*}`. For `s = 1` this is checked against a direct
//! quadrature of `‖∇B‖₂²` in the tests.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Dimension `d` and fractional order `s ∈ (0, d/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmbientRaw")]
pub struct Ambient {
    d: usize,
    s: f64,
}

#[derive(Deserialize)]
struct AmbientRaw {
    d: usize,
    s: f64,
}

impl TryFrom<AmbientRaw> for Ambient {
    type Error = Error;
    fn try_from(raw: AmbientRaw) -> Result<Self> {
        Ambient::new(raw.d, raw.s)
    }
}

impl Ambient {
    pub fn new(d: usize, s: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::Parameter(format!(
                "dimension d must be >= 1, got {d}"
            )));
        }
        if !(s.is_finite() && s > 0.0 && s < d as f64 / 2.0) {
            return Err(Error::Parameter(format!(
                "fractional order s must lie in (0, d/2) = (0, {}), got {s}",
                d as f64 / 2.0
            )));
        }
        Ok(Self { d, s })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Critical exponent `2* = 2d/(d − 2s)`.
    pub fn two_star(&self) -> f64 {
        2.0 * self.d as f64 / (self.d as f64 - 2.0 * self.s)
    }

    /// `(d − 2s)/2`, the decay/scaling exponent of a bubble.
    pub fn bubble_exponent(&self) -> f64 {
        0.5 * (self.d as f64 - 2.0 * self.s)
    }

    /// `(d + 2s)/2`, the exponent of `B^{2*−1}`.
    pub fn dual_exponent(&self) -> f64 {
        0.5 * (self.d as f64 + 2.0 * self.s)
    }
}

/// `|S^{n−1}| = 2π^{n/2}/Γ(n/2)`, the surface area of the unit sphere in
/// `ℝ^n`. `n = 1` gives 2 (two points).
pub fn unit_sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * (half * std::f64::consts::PI.ln() - ln_gamma(half)).exp()
}

/// `∫_0^∞ r^p (1 + r²)^{−q} dr = ½ Γ((p+1)/2) Γ(q − (p+1)/2) / Γ(q)`.
pub fn beta_half_line(p: f64, q: f64) -> Result<f64> {
    let a = 0.5 * (p + 1.0);
    if !(p > -1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!(
            "beta_half_line needs p > -1, got {p}"
        )));
    }
    if !(q > a && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "beta_half_line needs q > (p+1)/2 = {a}, got {q}"
        )));
    }
    Ok(0.5 * (ln_gamma(a) + ln_gamma(q - a) - ln_gamma(q)).exp())
}

/// `c_d` with `‖B‖_{2*} = 1`.
pub fn normalization_c(amb: &Ambient) -> f64 {
    let d = amb.d() as f64;
    let mass = unit_sphere_area(amb.d()) * beta_half_line(d - 1.0, d).expect("admissible");
    mass.powf(-1.0 / amb.two_star())
}

/// `A_{d,s} = 2^{2s} Γ((d+2s)/2)/Γ((d−2s)/2)`.
pub fn eigen_factor(amb: &Ambient) -> f64 {
    let s = amb.s();
    (2.0 * s * std::f64::consts::LN_2 + ln_gamma(amb.dual_exponent())
        - ln_gamma(amb.bubble_exponent()))
    .exp()
}

/// Sharp Sobolev constant `S_d = A_{d,s} c_d^{2−2*}`.
pub fn sharp_constant(amb: &Ambient) -> f64 {
    eigen_factor(amb) * normalization_c(amb).powf(2.0 - amb.two_star())
}

/// `(c0, a_d, b_d)`; `a_d` and `b_d` follow the stated closed forms,
/// see [`SharpConstants::a_d`].
pub fn expansion_constants(amb: &Ambient) -> (f64, f64, f64) {
    let d = amb.d() as f64;
    let s = amb.s();
    let c_pow = normalization_c(amb).powf(amb.two_star());
    let c0 = c_pow
        * unit_sphere_area(amb.d())
        * beta_half_line(d - 1.0, amb.dual_exponent()).expect("admissible");
    let a_d = -c_pow * (d - 2.0 * s) / (2.0 * (d + 1.0))
        * (ln_gamma((d + 2.0) / 2.0) + ln_gamma(d / 2.0) - ln_gamma(d + 1.0)).exp();
    let b_d = -c_pow * (d - 2.0 * s) / (2.0 * (d + 2.0 * s))
        * (ln_gamma(d / 2.0) + ln_gamma(s) - ln_gamma(amb.dual_exponent())).exp();
    (c0, a_d, b_d)
}

/// All constants of one ambient, computed once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpConstants {
    #[serde(skip)]
    pub ambient: Ambient,
    pub c_d: f64,
    #[serde(rename = "A_ds")]
    pub a_ds: f64,
    #[serde(rename = "S_d")]
    pub s_d: f64,
    pub c0: f64,
    /// `−c_d^{2*} (d−2s)/(2(d+1)) Γ((d+2)/2)Γ(d/2)/Γ(d+1)`, the value given
    /// for `F''(1)`. The true second derivative of `μ ↦ (B, B_μ^{2*−1})` at
    /// 1 is [`SharpConstants::f_second_derivative`]; the two differ by the
    /// factor `|S^{d−1}| (d+2s)/2`.
    pub a_d: f64,
    /// `−c_d^{2*} (d−2s)/(2(d+2s)) Γ(d/2)Γ(s)/Γ((d+2s)/2)`, the value given
    /// for the leading coefficient of `G'_λ(1)`. The true coefficient is
    /// [`SharpConstants::g_prime_coefficient`].
    pub b_d: f64,
}

impl SharpConstants {
    pub fn new(amb: &Ambient) -> Self {
        let c_d = normalization_c(amb);
        let a_ds = eigen_factor(amb);
        let (c0, a_d, b_d) = expansion_constants(amb);
        Self {
            ambient: *amb,
            c_d,
            a_ds,
            s_d: a_ds * c_d.powf(2.0 - amb.two_star()),
            c0,
            a_d,
            b_d,
        }
    }

    /// `F''(1) = −(d−2s)(d+2s)/(4(d+1))` for `F(μ) = (B, B_μ^{2*−1})`.
    pub fn f_second_derivative(&self) -> f64 {
        let d = self.ambient.d() as f64;
        let s = self.ambient.s();
        -(d - 2.0 * s) * (d + 2.0 * s) / (4.0 * (d + 1.0))
    }

    /// `lim_{λ→0} G'_λ(1)/λ^{(d−2s)/2} = −((d−2s)/2) c0`.
    pub fn g_prime_coefficient(&self) -> f64 {
        -self.ambient.bubble_exponent() * self.c0
    }

    /// Profile `B(r)` at radius `r`.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        self.c_d * (1.0 + r * r).powf(-self.ambient.bubble_exponent())
    }
}

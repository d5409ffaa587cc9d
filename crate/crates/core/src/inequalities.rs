//! Two elementary facts used when comparing quotients: strict convexity of
//! `t ↦ (1 + t^{p/2})^{2/p}` and the mediant inequalities.

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this `η` the monotone quotient is evaluated from its series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("exponent p must be > 2, got {p}")));
    }
    Ok(())
}

/// `g(t) = (1 + t^{p/2})^{2/p}`.
pub fn convex_g(p: f64, t: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Parameter(format!("t must be > 0, got {t}")));
    }
    Ok((1.0 + t.powf(p / 2.0)).powf(2.0 / p))
}

/// `((1 + η^p)^{2/p} − 1)/η²`.
pub fn monotone_quotient(p: f64, eta: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!("eta must be > 0, got {eta}")));
    }
    let q = 2.0 / p;
    let x = eta.powf(p);
    if eta < SERIES_THRESHOLD {
        // (1+x)^q − 1 = q x + q(q−1)/2 x² + q(q−1)(q−2)/6 x³ + …
        let series = q * x * (1.0 + (q - 1.0) / 2.0 * x * (1.0 + (q - 2.0) / 3.0 * x));
        Ok(series / (eta * eta))
    } else {
        Ok((q * x.ln_1p()).exp_m1() / (eta * eta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotientSextuple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl QuotientSextuple {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b), ("C", c), ("D", d), ("E", e), ("F", f)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self { a, b, c, d, e, f })
    }

    /// `A/B ≥ C/D`, compared exactly by cross-multiplication.
    pub fn first_ordered(&self) -> bool {
        self.a * self.d >= self.c * self.b
    }

    /// `C/D ≥ E/F`.
    pub fn second_ordered(&self) -> bool {
        self.c * self.f >= self.e * self.d
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.first_ordered() && self.second_ordered() && self.d <= self.f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotientVerdict {
    /// `A/B`.
    pub left: f64,
    /// `(A+C)/(B+D)`.
    pub middle: f64,
    /// `(A+E)/(B+F)`.
    pub right: f64,
    /// `A/B > C/D`, which makes the first inequality strict.
    pub first_strict: bool,
    /// `C/D > E/F` or `D < F`, which makes the second inequality strict.
    pub second_strict: bool,
}

pub fn quotient_compare(q: &QuotientSextuple) -> Result<QuotientVerdict> {
    if !q.hypotheses_hold() {
        return Err(Error::Hypothesis(format!(
            "need A/B >= C/D >= E/F and D <= F, got {q:?}"
        )));
    }
    Ok(QuotientVerdict {
        left: q.a / q.b,
        middle: (q.a + q.c) / (q.b + q.d),
        right: (q.a + q.e) / (q.b + q.f),
        first_strict: q.a * q.d > q.c * q.b,
        second_strict: q.c * q.f > q.e * q.d || q.d < q.f,
    })
}

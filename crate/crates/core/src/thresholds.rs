//! The spectral and two-peak upper bounds on the stability constant and
//! the dimension at which one overtakes the other.

use num_rational::Rational64;
use serde::Serialize;

use crate::constants::Ambient;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Binding {
    Spectral,
    TwoPeak,
    Tie,
}

impl Binding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Binding::Spectral => "SPECTRAL",
            Binding::TwoPeak => "TWO_PEAK",
            Binding::Tie => "TIE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub d: usize,
    pub s: f64,
    pub c_spec: f64,
    pub c_two_peak: f64,
    pub binding: Binding,
    #[serde(rename = "upper_bound_on_cBE")]
    pub upper_bound: f64,
    /// In `d = 1` the spectral bound plays no role in the existence
    /// argument.
    pub d1_caveat: bool,
}

const TIE_TOL: f64 = 1e-14;

/// `4s/(d + 2s + 2)`.
pub fn c_spec(amb: &Ambient) -> f64 {
    let (d, s) = (amb.d() as f64, amb.s());
    4.0 * s / (d + 2.0 * s + 2.0)
}

/// Exact spectral threshold for rational `s`.
pub fn c_spec_rational(d: i64, s: Rational64) -> Rational64 {
    let two = Rational64::from_integer(2);
    Rational64::from_integer(4) * s / (Rational64::from_integer(d) + two * s + two)
}

/// `2 − 2^{(d−2s)/d} = 2 − 2^{2/2*}`.
pub fn c_two_peak(amb: &Ambient) -> f64 {
    let (d, s) = (amb.d() as f64, amb.s());
    2.0 - ((d - 2.0 * s) / d).exp2()
}

pub fn compare(amb: &Ambient) -> ThresholdReport {
    let spec = c_spec(amb);
    let peak = c_two_peak(amb);
    let binding = if (spec - peak).abs() < TIE_TOL {
        Binding::Tie
    } else if spec < peak {
        Binding::Spectral
    } else {
        Binding::TwoPeak
    };
    ThresholdReport {
        d: amb.d(),
        s: amb.s(),
        c_spec: spec,
        c_two_peak: peak,
        binding,
        upper_bound: spec.min(peak),
        d1_caveat: amb.d() == 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossoverTable {
    pub s: f64,
    pub rows: Vec<ThresholdReport>,
    /// Largest scanned `d` where the spectral bound binds.
    pub last_spectral_d: Option<usize>,
    /// Only `s = 1` has a known crossover; other orders are exploratory.
    pub exploratory: bool,
    /// Dimensions in the range skipped because `s ≥ d/2`.
    pub skipped: Vec<usize>,
}

pub fn crossover_scan(s: f64, dims: std::ops::RangeInclusive<usize>) -> CrossoverTable {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for d in dims {
        match Ambient::new(d, s) {
            Ok(amb) => rows.push(compare(&amb)),
            Err(_) => skipped.push(d),
        }
    }
    let last_spectral_d = rows
        .iter()
        .filter(|r| r.binding == Binding::Spectral)
        .map(|r| r.d)
        .max();
    CrossoverTable {
        s,
        rows,
        last_spectral_d,
        exploratory: s != 1.0,
        skipped,
    }
}

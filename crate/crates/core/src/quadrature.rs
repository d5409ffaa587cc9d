//! Adaptive Gauss–Kronrod integration on intervals, the half-line, the
//! real line and axisymmetric domains of `ℝ^d`.
//!
//! The integration domain is cut into [`Segment`]s, each mapped onto the
//! parameter interval `[0, 1]`. Panels of all segments share one priority
//! queue ordered by estimated error, so the tolerance is global.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::constants::{unit_sphere_area, Ambient};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum bisection depth of a single panel.
    pub max_subdivisions: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 30,
        }
    }
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: u32) -> Result<Self> {
        let cfg = Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "abs_tol must be > 0, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Parameter("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }

    /// Same configuration with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// A piece of the domain together with its map from `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    /// `x = a + (b − a) t`.
    Linear { a: f64, b: f64 },
    /// `x = a (b/a)^t` with `0 < a < b`; resolves every scale in between.
    Log { a: f64, b: f64 },
    /// `x = a + w t/(1 − t)`, covering `[a, ∞)`.
    UpperTail { a: f64, w: f64 },
    /// `x = b − w t/(1 − t)`, covering `(−∞, b]`.
    LowerTail { b: f64, w: f64 },
}

impl Segment {
    /// Point and Jacobian for parameter `t`.
    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Segment::Linear { a, b } => (a + (b - a) * t, b - a),
            Segment::Log { a, b } => {
                let l = (b / a).ln();
                let x = a * (l * t).exp();
                (x, x * l)
            }
            Segment::UpperTail { a, w } => {
                let u = 1.0 - t;
                (a + w * t / u, w / (u * u))
            }
            Segment::LowerTail { b, w } => {
                let u = 1.0 - t;
                (b - w * t / u, w / (u * u))
            }
        }
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct PanelEstimate {
    value: f64,
    error: f64,
}

/// One G7/K15 pair on `[lo, hi] ⊂ [0, 1]` of segment `seg`, with the
/// QUADPACK error rescaling.
fn gk15<F: Fn(f64) -> f64>(f: &F, seg: &Segment, lo: f64, hi: f64) -> Result<PanelEstimate> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<f64> {
        let (x, jac) = seg.map(t);
        let y = f(x) * jac;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Parameter(format!(
                "integrand is not finite at x = {x:e}"
            )))
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(PanelEstimate { value, error })
}

struct Panel {
    seg: usize,
    lo: f64,
    hi: f64,
    depth: u32,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

const MAX_PANELS: usize = 20_000;

/// Integrates `f` over the union of `segments`.
pub fn integrate_segments<F: Fn(f64) -> f64>(
    f: F,
    segments: &[Segment],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    if segments.is_empty() {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut evaluations = 0usize;
    for (i, seg) in segments.iter().enumerate() {
        let est = gk15(&f, seg, 0.0, 1.0)?;
        evaluations += 15;
        heap.push(Panel {
            seg: i,
            lo: 0.0,
            hi: 1.0,
            depth: 0,
            value: est.value,
            error: est.error,
        });
    }

    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let value = compensated_sum(heap.iter().chain(frozen.iter()).map(|p| p.value));
        let error: f64 = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
        (value, error)
    };

    loop {
        let (value, error) = totals(&heap, &frozen);
        let target = (cfg.rel_tol * value.abs()).max(cfg.abs_tol);
        if error <= target {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                return Err(Error::NonConvergence {
                    value,
                    error_estimate: error,
                    evaluations,
                })
            }
        };
        if worst.depth >= cfg.max_subdivisions || heap.len() + frozen.len() >= MAX_PANELS {
            frozen.push(worst);
            if heap.len() + frozen.len() >= MAX_PANELS {
                let (value, error) = totals(&heap, &frozen);
                return Err(Error::NonConvergence {
                    value,
                    error_estimate: error,
                    evaluations,
                });
            }
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let seg = &segments[worst.seg];
        let left = gk15(&f, seg, worst.lo, mid)?;
        let right = gk15(&f, seg, mid, worst.hi)?;
        evaluations += 30;
        heap.push(Panel {
            seg: worst.seg,
            lo: worst.lo,
            hi: mid,
            depth: worst.depth + 1,
            value: left.value,
            error: left.error,
        });
        heap.push(Panel {
            seg: worst.seg,
            lo: mid,
            hi: worst.hi,
            depth: worst.depth + 1,
            value: right.value,
            error: right.error,
        });
    }
}

/// `∫_a^b f(x) dx` for finite `a < b`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::Parameter(format!("invalid interval [{a}, {b}]")));
    }
    integrate_segments(f, &[Segment::Linear { a, b }], cfg)
}

/// `∫_0^∞ f(r) dr` through the substitution `r = t/(1 − t)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    integrate_segments(f, &[Segment::UpperTail { a: 0.0, w: 1.0 }], cfg)
}

/// Breaks `[0, ∞)` at the given characteristic radii: linear on the first
/// piece, logarithmic between consecutive radii, algebraic tail beyond.
pub fn half_line_segments(scales: &[f64]) -> Vec<Segment> {
    let mut radii: Vec<f64> = scales
        .iter()
        .copied()
        .filter(|r| r.is_finite() && *r > 0.0)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|b, a| *b <= *a * (1.0 + 1e-12));
    if radii.is_empty() {
        return vec![Segment::UpperTail { a: 0.0, w: 1.0 }];
    }
    let mut segs = Vec::with_capacity(radii.len() + 1);
    segs.push(Segment::Linear {
        a: 0.0,
        b: radii[0],
    });
    for w in radii.windows(2) {
        segs.push(Segment::Log { a: w[0], b: w[1] });
    }
    let last = *radii.last().unwrap();
    segs.push(Segment::UpperTail { a: last, w: last });
    segs
}

/// `∫_0^∞ f(r) dr` for integrands with structure at several radii.
pub fn integrate_half_line_scaled<F: Fn(f64) -> f64>(
    f: F,
    scales: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    integrate_segments(f, &half_line_segments(scales), cfg)
}

/// Breaks `ℝ` at the sorted `breaks`; the tails use width `tail_width`.
pub fn real_line_segments(breaks: &[f64], tail_width: f64) -> Vec<Segment> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * (1.0 + a.abs()));
    let w = if tail_width.is_finite() && tail_width > 0.0 {
        tail_width
    } else {
        1.0
    };
    if pts.is_empty() {
        pts.push(0.0);
    }
    let mut segs = Vec::with_capacity(pts.len() + 1);
    segs.push(Segment::LowerTail { b: pts[0], w });
    for p in pts.windows(2) {
        segs.push(Segment::Linear { a: p[0], b: p[1] });
    }
    segs.push(Segment::UpperTail {
        a: *pts.last().unwrap(),
        w,
    });
    segs
}

/// `∫_ℝ f(x) dx`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tail_width: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    integrate_segments(f, &real_line_segments(breaks, tail_width), cfg)
}

/// Where an axisymmetric integrand has structure: axial positions of its
/// centers and the characteristic lengths around them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AxisHints {
    pub centers: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl AxisHints {
    pub fn new(centers: Vec<f64>, lengths: Vec<f64>) -> Self {
        Self { centers, lengths }
    }

    fn axial_breaks(&self) -> Vec<f64> {
        let mut out = self.centers.clone();
        for &c in &self.centers {
            for &l in &self.lengths {
                out.push(c - l);
                out.push(c + l);
            }
        }
        out
    }

    fn radial_scales(&self, t: f64) -> Vec<f64> {
        let mut out = self.lengths.clone();
        for &c in &self.centers {
            let dist = (t - c).abs();
            if dist > 0.0 {
                out.push(dist);
            }
        }
        out
    }

    fn tail_width(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max).max(1e-300)
    }
}

/// `∫_{ℝ^d} f dx` for `f` depending on the axial coordinate `t` and the
/// distance `ρ` to the axis, as `|S^{d−2}| ∫_ℝ ∫_0^∞ f(t, ρ) ρ^{d−2} dρ dt`.
pub fn integrate_axisymmetric<F: Fn(f64, f64) -> f64>(
    f: F,
    amb: &Ambient,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    integrate_axisymmetric_with_hints(f, amb, &AxisHints::new(vec![0.0], vec![1.0]), cfg)
}

pub fn integrate_axisymmetric_with_hints<F: Fn(f64, f64) -> f64>(
    f: F,
    amb: &Ambient,
    hints: &AxisHints,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if amb.d() < 2 {
        return Err(Error::Geometry(
            "axisymmetric reduction needs d >= 2; integrate over the line instead".into(),
        ));
    }
    cfg.validate()?;
    let power = (amb.d() - 2) as i32;
    let inner_cfg = cfg.scaled(0.1);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_evals = RefCell::new(0usize);
    let inner_error = RefCell::new(0.0f64);

    let outer = integrate_real_line(
        |t| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let scales = hints.radial_scales(t);
            match integrate_half_line_scaled(|rho| f(t, rho) * rho.powi(power), &scales, &inner_cfg)
            {
                Ok(r) => {
                    *inner_evals.borrow_mut() += r.evaluations;
                    let mut e = inner_error.borrow_mut();
                    *e = e.max(r.error_estimate);
                    r.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        &hints.axial_breaks(),
        hints.tail_width(),
        cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    let area = unit_sphere_area(amb.d() - 1);
    Ok(QuadratureResult {
        value: area * outer.value,
        error_estimate: area * outer.error_estimate,
        evaluations: outer.evaluations + inner_evals.into_inner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tight() -> QuadratureConfig {
        QuadratureConfig::new(1e-12, 1e-15, 30).unwrap()
    }

    #[test]
    fn rational_half_line() {
        let r = integrate_half_line(|r| r * r * (1.0 + r * r).powi(-3), &tight()).unwrap();
        assert!((r.value - PI / 16.0).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn exponential_half_line() {
        let r = integrate_half_line(|r| (-r).exp(), &tight()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn interval_polynomial_is_exact() {
        let r = integrate_interval(|x| x.powi(5) - 2.0 * x, -1.0, 2.0, &tight()).unwrap();
        assert!((r.value - (64.0 - 1.0) / 6.0 + 3.0).abs() < 1e-13);
    }

    #[test]
    fn scaled_half_line_resolves_distant_scale() {
        // mass at r ~ 1 and r ~ 1e12
        let f = |r: f64| 1.0 / (1.0 + r * r) + 1e-12 / (1.0 + 1e-24 * r * r);
        let r = integrate_half_line_scaled(f, &[1.0, 1e12], &tight()).unwrap();
        assert!((r.value - PI).abs() < 1e-11, "{}", r.value - PI);
    }

    #[test]
    fn real_line_gaussian() {
        let r =
            integrate_real_line(|x| (-(x - 3.0) * (x - 3.0)).exp(), &[3.0], 1.0, &tight()).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn axisymmetric_gaussian_3d() {
        let amb = Ambient::new(3, 1.0).unwrap();
        let r =
            integrate_axisymmetric(|t, rho| (-(t * t + rho * rho)).exp(), &amb, &tight()).unwrap();
        assert!((r.value - PI.powf(1.5)).abs() < 1e-11);
    }

    #[test]
    fn axisymmetric_rejects_line() {
        let amb = Ambient::new(1, 0.25).unwrap();
        let err = integrate_axisymmetric(|_, _| 1.0, &amb, &tight()).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn non_convergence_carries_estimate() {
        let cfg = QuadratureConfig::new(1e-15, 1e-300, 2).unwrap();
        let err = integrate_interval(|x| x.sqrt().recip(), 0.0, 1.0, &cfg).unwrap_err();
        match err {
            Error::NonConvergence {
                value, evaluations, ..
            } => {
                assert!(value > 1.0 && value < 4.0);
                assert!(evaluations > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate_interval(|_| f64::NAN, 0.0, 1.0, &tight()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::new(0.0, 1e-14, 30).is_err());
        assert!(QuadratureConfig::new(1e-10, -1.0, 30).is_err());
        assert!(QuadratureConfig::new(1e-10, 1e-14, 0).is_err());
    }
}

//! The concentric two-bubble family `u_λ = B + B_λ` as `λ → 0`.
//!
//! `F(μ) = (B, B_μ^{2*−1})`, `G_λ(μ) = (B_λ, B_μ^{2*−1})` and
//! `H_λ = F + G_λ = (u_λ, B_μ^{2*−1})` are single radial quadratures.
//! [`sweep`] evaluates the full functional along a `λ` grid and fits the
//! deficit `2 − 2^{2/2*} − E(u_λ)` against `λ` on a log-log scale, whose
//! predicted slope is `(d−2s)/2` and predicted prefactor
//! `(2^{2/2*+1} − 2) c0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bubbles::{BubbleAlgebra, BubbleParam, Superposition};
use crate::constants::{Ambient, SharpConstants};
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::quadrature::QuadratureConfig;
use crate::thresholds::c_two_peak;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// `λ^{(d−2s)/2}` must exceed this multiple of `rel_tol` for the
/// first-order terms to rise above quadrature noise.
pub const CANCELLATION_FLOOR: f64 = 1e3;
/// Points of the default grid per decade of `λ`.
pub const POINTS_PER_DECADE: f64 = 5.0;

fn origin(amb: &Ambient) -> Vec<f64> {
    vec![0.0; amb.d()]
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Parameter(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

/// `F(μ)`.
pub fn f_of(alg: &BubbleAlgebra, mu: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    let o = origin(alg.ambient());
    alg.pair_unit(&o, 1.0, &o, mu)
}

/// `G_λ(μ)`.
pub fn g_of(alg: &BubbleAlgebra, lambda: f64, mu: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    let o = origin(alg.ambient());
    alg.pair_unit(&o, lambda, &o, mu)
}

/// `H_λ(μ) = F(μ) + G_λ(μ)`.
pub fn h_of(alg: &BubbleAlgebra, lambda: f64, mu: f64) -> Result<f64> {
    Ok(f_of(alg, mu)? + g_of(alg, lambda, mu)?)
}

/// `u_λ = B + B_λ`.
pub fn two_bubble(lambda: f64, amb: &Ambient) -> Result<Superposition> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Parameter(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    Superposition::new(
        *amb,
        vec![
            BubbleParam::at_origin(1.0, amb.d(), 1.0),
            BubbleParam::at_origin(1.0, amb.d(), lambda),
        ],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub lambda: f64,
    pub step: f64,
    /// Central difference of `F` at 1.
    pub f_prime: f64,
    /// Second central difference of `F` at 1 with step `h` and `h/2`.
    pub f_second: f64,
    pub f_second_half_step: f64,
    /// Richardson-extrapolated `F''(1)`.
    pub f_second_extrapolated: f64,
    pub a_d: f64,
    pub f_second_rel_err_vs_a_d: f64,
    /// `−(d−2s)(d+2s)/(4(d+1))`.
    pub f_second_closed_form: f64,
    pub f_second_rel_err_vs_closed_form: f64,
    /// `G_λ(1)/λ^{(d−2s)/2}`.
    pub g_scaled: f64,
    pub c0: f64,
    pub g_rel_err_vs_c0: f64,
    /// Central difference of `G_λ` at 1 divided by `λ^{(d−2s)/2}`.
    pub g_prime_scaled: f64,
    pub b_d: f64,
    pub g_prime_rel_err_vs_b_d: f64,
    /// `−((d−2s)/2) c0`.
    pub g_prime_closed_form: f64,
    pub g_prime_rel_err_vs_closed_form: f64,
}

fn rel_err(x: f64, target: f64) -> f64 {
    ((x - target) / target).abs()
}

/// Finite-difference derivatives of `F` and `G_λ` at `μ = 1` against the
/// closed-form constants.
pub fn derivative_check(
    amb: &Ambient,
    lambda: f64,
    step: f64,
    cfg: &QuadratureConfig,
) -> Result<DerivativeReport> {
    if !(lambda > 0.0 && lambda <= 1e-2) {
        return Err(Error::Parameter(format!(
            "lambda must lie in (0, 1e-2], got {lambda}"
        )));
    }
    if !(1e-5..=1e-3).contains(&step) {
        return Err(Error::Parameter(format!(
            "step must lie in [1e-5, 1e-3], got {step}"
        )));
    }
    let alg = BubbleAlgebra::new(amb, *cfg)?;
    let k = *alg.constants();
    let f = |mu: f64| f_of(&alg, mu);
    let g = |mu: f64| g_of(&alg, lambda, mu);

    let f0 = f(1.0)?;
    let (fp, fm) = (f(1.0 + step)?, f(1.0 - step)?);
    let half = 0.5 * step;
    let (fp2, fm2) = (f(1.0 + half)?, f(1.0 - half)?);
    let f_prime = (fp - fm) / (2.0 * step);
    let f_second = (fp - 2.0 * f0 + fm) / (step * step);
    let f_second_half_step = (fp2 - 2.0 * f0 + fm2) / (half * half);
    let f_second_extrapolated = (4.0 * f_second_half_step - f_second) / 3.0;

    let scale = lambda.powf(amb.bubble_exponent());
    let g_scaled = g(1.0)? / scale;
    let g_prime_scaled = (g(1.0 + step)? - g(1.0 - step)?) / (2.0 * step) / scale;

    Ok(DerivativeReport {
        lambda,
        step,
        f_prime,
        f_second,
        f_second_half_step,
        f_second_extrapolated,
        a_d: k.a_d,
        f_second_rel_err_vs_a_d: rel_err(f_second, k.a_d),
        f_second_closed_form: k.f_second_derivative(),
        f_second_rel_err_vs_closed_form: rel_err(f_second, k.f_second_derivative()),
        g_scaled,
        c0: k.c0,
        g_rel_err_vs_c0: rel_err(g_scaled, k.c0),
        g_prime_scaled,
        b_d: k.b_d,
        g_prime_rel_err_vs_b_d: rel_err(g_prime_scaled, k.b_d),
        g_prime_closed_form: k.g_prime_coefficient(),
        g_prime_rel_err_vs_closed_form: rel_err(g_prime_scaled, k.g_prime_coefficient()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionPoint {
    pub lambda: f64,
    pub hs_norm_sq: f64,
    /// `‖u_λ‖_{2*}²`.
    pub lp_norm_sq_2star: f64,
    pub m_value: f64,
    /// Maximizing scale on the branch `μ ≥ √λ` (the one tending to 1).
    pub mu_of_lambda: f64,
    pub dist_sq: f64,
    pub be_value: f64,
    /// `2 − 2^{2/2*} − E(u_λ)`.
    pub deficit: f64,
    pub in_fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub d: usize,
    pub s: f64,
    pub points: Vec<ExpansionPoint>,
    pub fitted_exponent: f64,
    pub fitted_coefficient: f64,
    pub predicted_exponent: f64,
    pub predicted_coefficient: f64,
    /// Largest log-space residual of the fit.
    pub residual_max: f64,
    /// `max |μ(λ) − 1| / λ^{(d−2s)/2}` over the grid.
    pub mu_deviation_constant: f64,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

fn decades(grid: &[f64]) -> f64 {
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    (hi / lo).log10()
}

/// Geometric grid (decreasing) with `POINTS_PER_DECADE` points per decade
/// that places `t = λ^{(d−2s)/2}` in `[1e4·rel_tol, 1e-4]`, where the
/// first-order terms dominate both the quadrature noise and the next-order
/// remainder. The range is widened to two decades of `λ` when the exponent
/// is large, as long as the cancellation floor allows it.
pub fn default_lambda_grid(amb: &Ambient, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let e = amb.bubble_exponent();
    let floor = (CANCELLATION_FLOOR * cfg.rel_tol).powf(1.0 / e);
    let mut lo = (1e4 * cfg.rel_tol).powf(1.0 / e).max(floor);
    let mut hi = 1e-4f64.powf(1.0 / e).min(1e-2);
    if hi / lo < 100.0 {
        hi = (100.0 * lo).min(1e-2);
    }
    if hi / lo < 100.0 {
        lo = (hi / 100.0).max(floor * (1.0 + 1e-9));
    }
    if hi / lo < 100.0 * (1.0 - 1e-12) || lo >= hi {
        return Err(Error::Fit(format!(
            "cannot span two decades of lambda above the cancellation floor {floor:e}; tighten rel_tol"
        )));
    }
    let n = (POINTS_PER_DECADE * (hi / lo).log10()).ceil().max(3.0) as usize;
    let step = (lo / hi).ln() / n as f64;
    Ok((0..=n).map(|i| hi * (step * i as f64).exp()).collect())
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

fn sweep_point(
    func: &Functional,
    amb: &Ambient,
    lambda: f64,
    threshold: f64,
) -> Result<ExpansionPoint> {
    let u = two_bubble(lambda, amb)?;
    let r = func.report(&u)?;
    let root = lambda.sqrt();
    let mu_of_lambda =
        r.m.all_local_maxima
            .iter()
            .filter(|(b, _)| b.scale >= root * (1.0 - 1e-9))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(b, _)| b.scale)
            .unwrap_or(r.m.maximizer.scale);
    let be = r.be_quotient.ok_or_else(|| {
        Error::Parameter(format!(
            "u_lambda at lambda = {lambda} is numerically on the manifold"
        ))
    })?;
    Ok(ExpansionPoint {
        lambda,
        hs_norm_sq: r.hs_norm_sq,
        lp_norm_sq_2star: r.lp_norm * r.lp_norm,
        m_value: r.m.value,
        mu_of_lambda,
        dist_sq: r.dist_sq,
        be_value: be,
        deficit: threshold - be,
        in_fit: false,
    })
}

/// Evaluates `u_λ` along `grid`. Points are computed independently (in
/// parallel when `parallel`) and returned in grid order.
pub fn sweep_points(
    amb: &Ambient,
    grid: &[f64],
    cfg: &QuadratureConfig,
    parallel: bool,
) -> Result<Vec<ExpansionPoint>> {
    if grid.len() < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 lambda values, got {}",
            grid.len()
        )));
    }
    let e = amb.bubble_exponent();
    for &l in grid {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::Parameter(format!(
                "lambda values must lie in (0, 1), got {l}"
            )));
        }
        if l.powf(e) < CANCELLATION_FLOOR * cfg.rel_tol {
            return Err(Error::Parameter(format!(
                "lambda = {l:e} is below the cancellation floor: lambda^{e} < {CANCELLATION_FLOOR}*rel_tol"
            )));
        }
    }
    if decades(grid) < 2.0 - 1e-9 {
        return Err(Error::Parameter(format!(
            "lambda grid spans {:.3} decades, need at least 2",
            decades(grid)
        )));
    }

    let func = Functional::new(amb, *cfg)?;
    let threshold = c_two_peak(amb);
    let results: Vec<Result<ExpansionPoint>> = if parallel {
        grid.par_iter()
            .map(|&l| sweep_point(&func, amb, l, threshold))
            .collect()
    } else {
        grid.iter()
            .map(|&l| sweep_point(&func, amb, l, threshold))
            .collect()
    };
    results.into_iter().collect()
}

/// Log-log fit of the deficit over `points`. Points at or above the
/// threshold, or with a deficit below the noise level, are left out.
pub fn fit_points(
    amb: &Ambient,
    mut points: Vec<ExpansionPoint>,
    cfg: &QuadratureConfig,
) -> Result<ExpansionReport> {
    let e = amb.bubble_exponent();
    let threshold = c_two_peak(amb);
    let mut warnings = Vec::new();
    let noise = CANCELLATION_FLOOR * cfg.rel_tol;
    for p in points.iter_mut() {
        p.in_fit = false;
        if p.deficit <= 0.0 {
            warnings.push(format!(
                "lambda = {:e}: E(u_lambda) = {} is not below 2 - 2^(2/2*) = {threshold}; excluded from fit",
                p.lambda, p.be_value
            ));
        } else if p.deficit < noise {
            warnings.push(format!(
                "lambda = {:e}: deficit {:e} below noise level {noise:e}; excluded from fit",
                p.lambda, p.deficit
            ));
        } else {
            p.in_fit = true;
        }
    }
    let used: Vec<&ExpansionPoint> = points.iter().filter(|p| p.in_fit).collect();
    let lambdas: Vec<f64> = used.iter().map(|p| p.lambda).collect();
    if used.len() < 4 || decades(&lambdas) < 2.0 - 1e-9 {
        return Err(Error::Fit(format!(
            "only {} usable points spanning {:.2} decades",
            used.len(),
            if lambdas.is_empty() {
                0.0
            } else {
                decades(&lambdas)
            }
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.lambda.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.deficit.ln()).collect();
    let (slope, intercept, residual_max) = least_squares(&xs, &ys);

    let k = SharpConstants::new(amb);
    let two_pow = (2.0 / amb.two_star()).exp2();
    let mu_dev = points
        .iter()
        .map(|p| (p.mu_of_lambda - 1.0).abs() / p.lambda.powf(e))
        .fold(0.0, f64::max);
    Ok(ExpansionReport {
        d: amb.d(),
        s: amb.s(),
        points,
        fitted_exponent: slope,
        fitted_coefficient: intercept.exp(),
        predicted_exponent: e,
        predicted_coefficient: (2.0 * two_pow - 2.0) * k.c0,
        residual_max,
        mu_deviation_constant: mu_dev,
        threshold,
        warnings,
    })
}

/// [`sweep_points`] followed by [`fit_points`].
pub fn sweep(
    amb: &Ambient,
    grid: &[f64],
    cfg: &QuadratureConfig,
    parallel: bool,
) -> Result<ExpansionReport> {
    let points = sweep_points(amb, grid, cfg, parallel)?;
    fit_points(amb, points, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tight() -> QuadratureConfig {
        QuadratureConfig::new(1e-13, 1e-16, 30).unwrap()
    }

    fn amb3() -> Ambient {
        Ambient::new(3, 1.0).unwrap()
    }

    #[test]
    fn f_at_one_and_inversion_symmetry() {
        let alg = BubbleAlgebra::new(&amb3(), tight()).unwrap();
        assert!((f_of(&alg, 1.0).unwrap() - 1.0).abs() < 1e-12);
        for mu in [0.01, 0.3, 2.5, 40.0] {
            let a = f_of(&alg, mu).unwrap();
            let b = f_of(&alg, 1.0 / mu).unwrap();
            assert!((a - b).abs() < 1e-10, "mu={mu}: {a} {b}");
        }
    }

    #[test]
    fn f_decays_like_a_power() {
        let alg = BubbleAlgebra::new(&amb3(), tight()).unwrap();
        // F(μ) ≲ min(μ^e, μ^{-e}) with e = 1/2
        let mut worst: f64 = 0.0;
        for k in -16..=16 {
            let mu = 10f64.powf(k as f64 / 4.0);
            let bound = mu.sqrt().min(1.0 / mu.sqrt());
            worst = worst.max(f_of(&alg, mu).unwrap() / bound);
        }
        assert!(worst < 2.0, "{worst}");
    }

    #[test]
    fn h_is_symmetric_about_root_lambda() {
        let alg = BubbleAlgebra::new(&amb3(), tight()).unwrap();
        let lam: f64 = 1e-3;
        for mu in [lam.sqrt(), 0.1, 1.0, 7.0] {
            let a = h_of(&alg, lam, mu).unwrap();
            let b = h_of(&alg, lam, lam / mu).unwrap();
            assert!((a - b).abs() < 1e-9, "mu={mu}");
        }
    }

    #[test]
    fn two_bubble_terms_and_inversion() {
        let amb = amb3();
        let u = two_bubble(0.01, &amb).unwrap();
        assert_eq!(u.terms().len(), 2);
        let inv = u.invert(0.1f64.recip()).unwrap();
        let mut scales: Vec<f64> = inv.terms().iter().map(|t| t.scale).collect();
        scales.sort_by(f64::total_cmp);
        assert!((scales[0] - 0.01).abs() < 1e-15 && (scales[1] - 1.0).abs() < 1e-12);
        assert!(two_bubble(0.0, &amb).is_err());
        assert!(two_bubble(1.5, &amb).is_err());
    }

    #[test]
    fn coincident_two_bubble_is_on_manifold() {
        let amb = amb3();
        let f = Functional::new(&amb, tight()).unwrap();
        let r = f.report(&two_bubble(1.0, &amb).unwrap()).unwrap();
        assert_eq!(r.be_quotient, None);
    }

    #[test]
    fn derivatives_match_corrected_closed_forms() {
        let r = derivative_check(&amb3(), 1e-6, DEFAULT_FD_STEP, &tight()).unwrap();
        assert!(r.f_prime.abs() < 1e-7, "{}", r.f_prime);
        assert!(r.f_second_rel_err_vs_closed_form < 1e-4, "{r:?}");
        assert!((r.f_second_closed_form + 0.3125).abs() < 1e-15);
        assert!(r.g_rel_err_vs_c0 < 5e-3, "{r:?}");
        assert!(r.g_prime_rel_err_vs_closed_form < 1e-3, "{r:?}");
        assert!((r.c0 - 16.0 / (3.0 * PI)).abs() < 1e-13);
        // Richardson: halving the step changes the estimate at second order
        let change = (r.f_second_half_step - r.f_second).abs();
        assert!(change < 1e-5, "{change}");
    }

    #[test]
    fn derivative_check_validates_inputs() {
        assert!(derivative_check(&amb3(), 0.5, 1e-4, &tight()).is_err());
        assert!(derivative_check(&amb3(), 1e-6, 1e-2, &tight()).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let cfg = QuadratureConfig::new(1e-12, 1e-15, 30).unwrap();
        let g = default_lambda_grid(&amb3(), &cfg).unwrap();
        assert!((g[0] - 1e-8).abs() < 1e-20);
        assert!((g.last().unwrap() / 1e-16 - 1.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let g5 = default_lambda_grid(&Ambient::new(5, 1.0).unwrap(), &cfg).unwrap();
        assert!(decades(&g5) >= 2.0 - 1e-9);
        // exponent too large for two decades above the floor
        let steep = Ambient::new(10, 0.25).unwrap();
        assert!(default_lambda_grid(&steep, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let amb = amb3();
        let cfg = QuadratureConfig::default();
        assert!(sweep(&amb, &[1e-2, 1e-3, 1e-4], &cfg, false).is_err());
        assert!(sweep(&amb, &[1e-2, 5e-3, 3e-3, 2e-3], &cfg, false).is_err());
        assert!(sweep(&amb, &[1e-2, 1e-3, 1e-4, 1e-20], &cfg, false).is_err());
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
        let (a, b, r) = least_squares(&xs, &ys);
        assert!((a - 0.5).abs() < 1e-15 && (b + 2.0).abs() < 1e-15 && r < 1e-15);
    }
}

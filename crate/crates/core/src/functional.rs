//! `m(u) = sup_{h∈M₁} (u, h^{2*−1})²`, the distance to the bubble manifold
//! `dist(u, M)² = ‖u‖²_{Ḣˢ} − S_d m(u)`, and the two quotients built on them.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::bubbles::{BubbleAlgebra, BubbleParam, Geometry, Superposition};
use crate::constants::{Ambient, SharpConstants};
use crate::error::{Error, Result};
use crate::optimize::{bracketed_golden_max, nelder_mead_max, SimplexOptions};
use crate::quadrature::QuadratureConfig;

/// Relative size of `dist_sq` below which `u` counts as a point of `M`.
pub const ON_MANIFOLD_RTOL: f64 = 1e-8;
/// Half-width of the `log μ` search window beyond the extreme term scales.
pub const LOG_SCALE_MARGIN: f64 = 12.0;
/// Local maxima closer than this (relative) are treated as tied.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MOptimum {
    pub value: f64,
    pub maximizer: BubbleParam,
    pub all_local_maxima: Vec<(BubbleParam, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub hs_norm_sq: f64,
    pub lp_norm: f64,
    pub m: MOptimum,
    pub dist_sq: f64,
    pub sobolev_quotient: f64,
    pub be_quotient: Option<f64>,
}

/// Candidate maximizer found by one start of the search.
#[derive(Clone, Debug)]
struct Candidate {
    center: Vec<f64>,
    log_scale: f64,
    /// Squared pairing.
    value: f64,
}

#[derive(Clone, Debug)]
pub struct Functional {
    algebra: BubbleAlgebra,
    parallel: bool,
}

impl Functional {
    pub fn new(amb: &Ambient, cfg: QuadratureConfig) -> Result<Self> {
        Ok(Self {
            algebra: BubbleAlgebra::new(amb, cfg)?,
            parallel: false,
        })
    }

    /// Run the starts of the maximizer search on the rayon pool.
    pub fn with_parallel_starts(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn algebra(&self) -> &BubbleAlgebra {
        &self.algebra
    }

    pub fn constants(&self) -> &SharpConstants {
        self.algebra.constants()
    }

    fn scale_window(u: &Superposition) -> (f64, f64) {
        let (lo, hi) = u
            .terms()
            .iter()
            .map(|t| t.scale.ln())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
        (lo - LOG_SCALE_MARGIN, hi + LOG_SCALE_MARGIN)
    }

    /// Global maximum of `(u, B_{x,μ}^{2*−1})²` by multi-start search.
    ///
    /// Concentric configurations with coefficients of one sign only need
    /// `x` at the common center, so the search is one-dimensional in
    /// `log μ` (golden section, started at every `log λ_i` and at the
    /// midpoints between neighbours). Otherwise a Nelder–Mead search over
    /// (axial position, `log μ`) is started at every term.
    pub fn m_value(&self, u: &Superposition) -> Result<MOptimum> {
        let geometry = u.geometry();
        let one_sign =
            u.terms().iter().all(|t| t.coeff > 0.0) || u.terms().iter().all(|t| t.coeff < 0.0);
        let candidates = match (&geometry, one_sign) {
            (Geometry::General, _) => {
                return Err(Error::Geometry(
                    "centers are neither concentric nor collinear".into(),
                ))
            }
            (Geometry::Concentric { center }, true) => self.radial_search(u, center)?,
            (Geometry::Concentric { center }, false) => {
                let mut dir = vec![0.0; u.ambient().d()];
                dir[0] = 1.0;
                self.axial_search(u, center, &dir)?
            }
            (Geometry::Collinear { origin, direction }, _) => {
                self.axial_search(u, origin, direction)?
            }
        };
        Ok(assemble(candidates, u.ambient().d()))
    }

    fn pairing_at(&self, u: &Superposition, center: &[f64], log_scale: f64) -> Result<f64> {
        self.algebra
            .pair_against_bubble(u, &BubbleParam::unit(center.to_vec(), log_scale.exp()))
    }

    fn radial_search(&self, u: &Superposition, center: &[f64]) -> Result<Vec<Candidate>> {
        let sign = u.terms()[0].coeff.signum();
        let (lo, hi) = Self::scale_window(u);
        let mut logs: Vec<f64> = u.terms().iter().map(|t| t.scale.ln()).collect();
        logs.sort_by(f64::total_cmp);
        logs.dedup_by(|b, a| (*b - *a).abs() < 1e-9);
        let mut starts = logs.clone();
        starts.extend(logs.windows(2).map(|w| 0.5 * (w[0] + w[1])));

        let run = |x0: f64| -> Result<Candidate> {
            let mut failure = None;
            let m = bracketed_golden_max(
                |ls| match self.pairing_at(u, center, ls) {
                    Ok(v) => sign * v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                x0,
                0.5,
                lo,
                hi,
                1e-8,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if m.at_boundary {
                return Err(Error::OptimizerNonConvergence {
                    best_value: m.value * m.value,
                });
            }
            Ok(Candidate {
                center: center.to_vec(),
                log_scale: m.x,
                value: m.value * m.value,
            })
        };
        self.run_starts(&starts, run)
    }

    fn axial_search(
        &self,
        u: &Superposition,
        origin: &[f64],
        direction: &[f64],
    ) -> Result<Vec<Candidate>> {
        let (lo, hi) = Self::scale_window(u);
        let at = |a: f64| -> Vec<f64> {
            origin
                .iter()
                .zip(direction)
                .map(|(o, e)| o + a * e)
                .collect()
        };
        let starts: Vec<(f64, f64)> = u
            .terms()
            .iter()
            .map(|t| {
                let a: f64 = t
                    .center
                    .iter()
                    .zip(origin)
                    .zip(direction)
                    .map(|((c, o), e)| (c - o) * e)
                    .sum();
                (a, t.scale)
            })
            .collect();
        let opts = SimplexOptions::default();

        let run = |(a0, scale): (f64, f64)| -> Result<Candidate> {
            let mut failure = None;
            let m = nelder_mead_max(
                |x| {
                    let ls = x[1].clamp(lo, hi);
                    match self.pairing_at(u, &at(x[0]), ls) {
                        Ok(v) => v * v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                [a0, scale.ln()],
                [0.5 / scale, 0.5],
                &opts,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if !m.converged || m.x[1] <= lo || m.x[1] >= hi {
                return Err(Error::OptimizerNonConvergence {
                    best_value: m.value,
                });
            }
            Ok(Candidate {
                center: at(m.x[0]),
                log_scale: m.x[1],
                value: m.value,
            })
        };
        self.run_starts(&starts, run)
    }

    fn run_starts<S, F>(&self, starts: &[S], run: F) -> Result<Vec<Candidate>>
    where
        S: Sync + Copy,
        F: Fn(S) -> Result<Candidate> + Sync,
    {
        let results: Vec<Result<Candidate>> = if self.parallel {
            starts.par_iter().map(|s| run(*s)).collect()
        } else {
            starts.iter().map(|s| run(*s)).collect()
        };
        let mut best_failure: Option<f64> = None;
        let mut out = Vec::new();
        for r in results {
            match r {
                Ok(c) => out.push(c),
                Err(Error::OptimizerNonConvergence { best_value }) => {
                    best_failure =
                        Some(best_failure.map_or(best_value, |b: f64| b.max(best_value)));
                }
                Err(e) => return Err(e),
            }
        }
        if out.is_empty() {
            return Err(Error::OptimizerNonConvergence {
                best_value: best_failure.unwrap_or(0.0),
            });
        }
        if let Some(b) = best_failure {
            let best_ok = out
                .iter()
                .map(|c| c.value)
                .fold(f64::NEG_INFINITY, f64::max);
            if b > best_ok * (1.0 + 1e-8) {
                return Err(Error::OptimizerNonConvergence { best_value: b });
            }
        }
        Ok(out)
    }

    pub fn hs_norm_sq(&self, u: &Superposition) -> Result<f64> {
        self.algebra.hs_norm_sq(u)
    }

    pub fn lp_norm(&self, u: &Superposition) -> Result<f64> {
        self.algebra.lp_norm(u)
    }

    pub fn dist_sq(&self, u: &Superposition) -> Result<f64> {
        let hs = self.hs_norm_sq(u)?;
        let m = self.m_value(u)?;
        Ok(dist_from_parts(hs, m.value, self.constants().s_d))
    }

    pub fn sobolev_quotient(&self, u: &Superposition) -> Result<f64> {
        let hs = self.hs_norm_sq(u)?;
        let lp = self.lp_norm(u)?;
        Ok(hs / (lp * lp))
    }

    pub fn be_quotient(&self, u: &Superposition) -> Result<Option<f64>> {
        Ok(self.report(u)?.be_quotient)
    }

    pub fn report(&self, u: &Superposition) -> Result<FunctionalReport> {
        let s_d = self.constants().s_d;
        let hs = self.hs_norm_sq(u)?;
        let lp = self.lp_norm(u)?;
        let m = self.m_value(u)?;
        let dist_sq = dist_from_parts(hs, m.value, s_d);
        let be = if dist_sq < ON_MANIFOLD_RTOL * hs {
            None
        } else {
            Some((hs - s_d * lp * lp) / dist_sq)
        };
        Ok(FunctionalReport {
            hs_norm_sq: hs,
            lp_norm: lp,
            m,
            dist_sq,
            sobolev_quotient: hs / (lp * lp),
            be_quotient: be,
        })
    }
}

/// `hs − S_d·m`, clamped at zero.
fn dist_from_parts(hs: f64, m: f64, s_d: f64) -> f64 {
    // hs − s_d·m with the product's rounding error folded back in
    let prod = s_d * m;
    let err = s_d.mul_add(m, -prod);
    ((hs - prod) - err).max(0.0)
}

fn assemble(mut cands: Vec<Candidate>, d: usize) -> MOptimum {
    // merge duplicates, keeping the better value
    cands.sort_by(|a, b| a.log_scale.total_cmp(&b.log_scale));
    let mut merged: Vec<Candidate> = Vec::new();
    for c in cands {
        let dup = merged.iter_mut().find(|m| {
            (m.log_scale - c.log_scale).abs() < 1e-5
                && m.center
                    .iter()
                    .zip(&c.center)
                    .all(|(a, b)| (a - b).abs() * c.log_scale.exp() < 1e-5)
        });
        match dup {
            Some(m) => {
                if c.value > m.value {
                    *m = c;
                }
            }
            None => merged.push(c),
        }
    }
    let best = merged
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    // tie-break: smallest log μ among values within TIE_TOL of the best
    let chosen = merged
        .iter()
        .filter(|c| c.value >= best - TIE_TOL * best.abs().max(1.0))
        .min_by(|a, b| {
            a.log_scale
                .partial_cmp(&b.log_scale)
                .unwrap_or(Ordering::Equal)
        })
        .cloned()
        .unwrap_or_else(|| Candidate {
            center: vec![0.0; d],
            log_scale: 0.0,
            value: 0.0,
        });
    let all = merged
        .iter()
        .map(|c| {
            (
                BubbleParam::unit(c.center.clone(), c.log_scale.exp()),
                c.value,
            )
        })
        .collect();
    MOptimum {
        value: best,
        maximizer: BubbleParam::unit(chosen.center, chosen.log_scale.exp()),
        all_local_maxima: all,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn functional(d: usize, s: f64) -> Functional {
        Functional::new(
            &Ambient::new(d, s).unwrap(),
            QuadratureConfig::new(1e-12, 1e-15, 30).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_bubble_is_on_manifold() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let u = Superposition::single(amb, BubbleParam::new(1.3, vec![0.0; 3], 2.0)).unwrap();
        let r = f.report(&u).unwrap();
        assert!((r.m.value - 1.69).abs() < 1e-9, "{}", r.m.value);
        assert!((r.m.maximizer.scale - 2.0).abs() < 1e-6);
        assert!(r.dist_sq < ON_MANIFOLD_RTOL * r.hs_norm_sq);
        assert_eq!(r.be_quotient, None);
        let s = f.constants().s_d;
        assert!((r.sobolev_quotient - s).abs() < 1e-9 * s);
    }

    #[test]
    fn negative_single_bubble() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let u =
            Superposition::single(amb, BubbleParam::new(-0.7, vec![1.0, -2.0, 0.5], 0.3)).unwrap();
        let r = f.report(&u).unwrap();
        assert!((r.m.value - 0.49).abs() < 1e-9);
        assert_eq!(r.be_quotient, None);
    }

    #[test]
    fn two_bubble_m_value_and_branches() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let lam: f64 = 1e-4;
        let u = Superposition::new(
            amb,
            vec![
                BubbleParam::at_origin(1.0, 3, 1.0),
                BubbleParam::at_origin(1.0, 3, lam),
            ],
        )
        .unwrap();
        let m = f.m_value(&u).unwrap();
        let c0 = f.constants().c0;
        let root = m.value.sqrt();
        assert!((root - 1.0 - c0 * lam.sqrt()).abs() < 2.0 * lam, "{root}");
        assert_eq!(m.all_local_maxima.len(), 2);
        let (a, b) = (&m.all_local_maxima[0], &m.all_local_maxima[1]);
        assert!((a.1 - b.1).abs() < 1e-8 * a.1);
        // H(μ) = H(λ/μ)
        assert!((a.0.scale * b.0.scale / lam - 1.0).abs() < 1e-6);
        // tie-break picks the smaller scale
        assert!(m.maximizer.scale < lam.sqrt());
    }

    #[test]
    fn separated_bubbles_have_two_maxima() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let u = Superposition::new(
            amb,
            vec![
                BubbleParam::new(1.0, vec![0.0; 3], 1.0),
                BubbleParam::new(1.0, vec![30.0, 0.0, 0.0], 1.0),
            ],
        )
        .unwrap();
        let m = f.m_value(&u).unwrap();
        assert_eq!(m.all_local_maxima.len(), 2, "{:?}", m.all_local_maxima);
        let (a, b) = (m.all_local_maxima[0].1, m.all_local_maxima[1].1);
        assert!((a - b).abs() < 1e-6 * a);
        // each branch gains the tail of the other bubble
        let tail = f
            .algebra()
            .pair_unit(&[30.0, 0.0, 0.0], 1.0, &[0.0; 3], 1.0)
            .unwrap();
        let gain = (m.value.sqrt() - 1.0) / tail;
        assert!((1.0..1.1).contains(&gain), "{gain}");
    }

    #[test]
    fn dist_identity_against_direct_coefficient_rule() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let u = Superposition::new(
            amb,
            vec![
                BubbleParam::at_origin(1.0, 3, 1.0),
                BubbleParam::at_origin(0.5, 3, 0.1),
            ],
        )
        .unwrap();
        let m = f.m_value(&u).unwrap();
        let h = m.maximizer.clone();
        let c = f.algebra().pair_against_bubble(&u, &h).unwrap();
        let diff = u
            .plus(
                &Superposition::single(amb, BubbleParam::new(-c, h.center.clone(), h.scale))
                    .unwrap(),
            )
            .unwrap();
        let direct = f.hs_norm_sq(&diff).unwrap();
        let via_m = f.dist_sq(&u).unwrap();
        assert!(
            (direct - via_m).abs() < 1e-9 * f.hs_norm_sq(&u).unwrap(),
            "{direct} {via_m}"
        );
    }

    #[test]
    fn sign_changing_uses_simplex() {
        let f = functional(3, 1.0);
        let amb = *f.algebra().ambient();
        let u = Superposition::new(
            amb,
            vec![
                BubbleParam::at_origin(1.0, 3, 1.0),
                BubbleParam::at_origin(-0.3, 3, 0.05),
            ],
        )
        .unwrap();
        let r = f.report(&u).unwrap();
        assert!(r.dist_sq > 0.0 && r.dist_sq <= r.hs_norm_sq);
        assert!(r.be_quotient.unwrap() >= 0.0);
        // the best centered bubble cannot beat the global search
        let centered = f.pairing_at(&u, &[0.0; 3], 0.0).unwrap().powi(2);
        assert!(r.m.value >= centered * (1.0 - 1e-10));
    }

    #[test]
    fn dist_clamps_negative_noise() {
        assert_eq!(dist_from_parts(1.0, 1.0 + 1e-15, 1.0), 0.0);
    }
}

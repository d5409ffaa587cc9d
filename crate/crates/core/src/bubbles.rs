//! Talenti bubbles `B_{x,λ}(y) = λ^{(d−2s)/2} B(λ(x − y))`, their finite
//! superpositions, conformal actions and the pairings behind every norm.
//!
//! `Ḣˢ` inner products never touch a fractional Laplacian: with
//! `(−Δ)ˢB_j = S_d B_j^{2*−1}` one has
//! `⟨B_i, B_j⟩_{Ḣˢ} = S_d (B_i, B_j^{2*−1})`, an ordinary integral.

use serde::{Deserialize, Serialize};

use crate::constants::{unit_sphere_area, Ambient, SharpConstants};
use crate::error::{Error, Result};
use crate::quadrature::{
    compensated_sum, integrate_axisymmetric_with_hints, integrate_half_line_scaled,
    integrate_real_line, AxisHints, QuadratureConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParam {
    pub coeff: f64,
    pub center: Vec<f64>,
    #[serde(rename = "lambda")]
    pub scale: f64,
}

impl BubbleParam {
    pub fn new(coeff: f64, center: Vec<f64>, scale: f64) -> Self {
        Self {
            coeff,
            center,
            scale,
        }
    }

    /// Unit-coefficient bubble, an element of `M₁`.
    pub fn unit(center: Vec<f64>, scale: f64) -> Self {
        Self::new(1.0, center, scale)
    }

    pub fn at_origin(coeff: f64, d: usize, scale: f64) -> Self {
        Self::new(coeff, vec![0.0; d], scale)
    }

    fn validate(&self, d: usize, idx: usize) -> Result<()> {
        if self.center.len() != d {
            return Err(Error::Parameter(format!(
                "terms[{idx}].center has length {}, expected d = {d}",
                self.center.len()
            )));
        }
        if !(self.coeff.is_finite() && self.coeff != 0.0) {
            return Err(Error::Parameter(format!(
                "terms[{idx}].coeff must be finite and non-zero, got {}",
                self.coeff
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Parameter(format!(
                "terms[{idx}].lambda must be finite and > 0, got {}",
                self.scale
            )));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter(format!(
                "terms[{idx}].center is not finite"
            )));
        }
        Ok(())
    }
}

/// How the centers of a configuration are arranged.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Concentric {
        center: Vec<f64>,
    },
    /// All centers on the line `origin + t·direction` (`|direction| = 1`).
    Collinear {
        origin: Vec<f64>,
        direction: Vec<f64>,
    },
    General,
}

impl Geometry {
    pub fn of_points(points: &[&[f64]]) -> Geometry {
        let Some(first) = points.first() else {
            return Geometry::General;
        };
        let d = first.len();
        let extent = points
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        let tol = 1e-12 * (1.0 + extent);

        let (far, far_dist) =
            points
                .iter()
                .map(|p| (p, dist(p, first)))
                .fold(
                    (first, 0.0),
                    |acc, (p, r)| if r > acc.1 { (p, r) } else { acc },
                );
        if far_dist <= tol {
            return Geometry::Concentric {
                center: first.to_vec(),
            };
        }
        let direction: Vec<f64> = far
            .iter()
            .zip(first.iter())
            .map(|(a, b)| (a - b) / far_dist)
            .collect();
        if d == 1 {
            return Geometry::Collinear {
                origin: first.to_vec(),
                direction,
            };
        }
        for p in points {
            let t: f64 = p
                .iter()
                .zip(first.iter())
                .zip(&direction)
                .map(|((a, b), e)| (a - b) * e)
                .sum();
            let off: f64 = p
                .iter()
                .zip(first.iter())
                .zip(&direction)
                .map(|((a, b), e)| (a - b - t * e).powi(2))
                .sum::<f64>()
                .sqrt();
            if off > tol {
                return Geometry::General;
            }
        }
        Geometry::Collinear {
            origin: first.to_vec(),
            direction,
        }
    }

    pub fn is_general(&self) -> bool {
        matches!(self, Geometry::General)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Finite sum of weighted bubbles on a fixed ambient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Superposition {
    #[serde(flatten)]
    ambient: Ambient,
    terms: Vec<BubbleParam>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperpositionRaw {
    d: usize,
    s: f64,
    terms: Vec<BubbleParam>,
}

impl<'de> Deserialize<'de> for Superposition {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = SuperpositionRaw::deserialize(de)?;
        let amb = Ambient::new(raw.d, raw.s).map_err(serde::de::Error::custom)?;
        Superposition::new(amb, raw.terms).map_err(serde::de::Error::custom)
    }
}

impl Superposition {
    pub fn new(ambient: Ambient, terms: Vec<BubbleParam>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter(
                "terms must contain at least one bubble".into(),
            ));
        }
        for (i, t) in terms.iter().enumerate() {
            t.validate(ambient.d(), i)?;
        }
        Ok(Self { ambient, terms })
    }

    pub fn single(ambient: Ambient, term: BubbleParam) -> Result<Self> {
        Self::new(ambient, vec![term])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SuperpositionRaw = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("superposition JSON: {e}")))?;
        Superposition::new(Ambient::new(raw.d, raw.s)?, raw.terms)
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn terms(&self) -> &[BubbleParam] {
        &self.terms
    }

    pub fn geometry(&self) -> Geometry {
        let pts: Vec<&[f64]> = self.terms.iter().map(|t| t.center.as_slice()).collect();
        Geometry::of_points(&pts)
    }

    /// `c · u`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| BubbleParam::new(t.coeff * c, t.center.clone(), t.scale))
            .collect();
        Self::new(self.ambient, terms)
    }

    /// `u + v` as a concatenation of terms.
    pub fn plus(&self, other: &Superposition) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::Parameter(
                "superpositions live on different ambients".into(),
            ));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.ambient, terms)
    }

    /// `D_μ u(y) = μ^{(d−2s)/2} u(μ y)`: `(c, x, λ) ↦ (c, x/μ, μλ)`.
    pub fn dilate(&self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Parameter(format!(
                "dilation factor must be > 0, got {mu}"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                BubbleParam::new(
                    t.coeff,
                    t.center.iter().map(|x| x / mu).collect(),
                    t.scale * mu,
                )
            })
            .collect();
        Self::new(self.ambient, terms)
    }

    /// Inversion about the sphere of radius `τ` centered at the origin:
    /// `(c, 0, λ) ↦ (c, 0, τ^{−2}λ^{−1})`.
    pub fn invert(&self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Parameter(format!(
                "inversion radius must be > 0, got {tau}"
            )));
        }
        if let Some(i) = self
            .terms
            .iter()
            .position(|t| t.center.iter().any(|&c| c != 0.0))
        {
            return Err(Error::Geometry(format!(
                "inversion is implemented for origin-centered bubbles only (terms[{i}] is off-center)"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| BubbleParam::new(t.coeff, t.center.clone(), 1.0 / (tau * tau * t.scale)))
            .collect();
        Self::new(self.ambient, terms)
    }
}

/// Evaluates bubbles, pairings and norms for one ambient and one set of
/// quadrature tolerances.
#[derive(Clone, Debug)]
pub struct BubbleAlgebra {
    consts: SharpConstants,
    cfg: QuadratureConfig,
}

impl BubbleAlgebra {
    pub fn new(amb: &Ambient, cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            consts: SharpConstants::new(amb),
            cfg,
        })
    }

    pub fn constants(&self) -> &SharpConstants {
        &self.consts
    }

    pub fn ambient(&self) -> &Ambient {
        &self.consts.ambient
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    fn check_ambient(&self, u: &Superposition) -> Result<()> {
        if u.ambient() != self.ambient() {
            return Err(Error::Parameter(format!(
                "superposition ambient (d={}, s={}) differs from evaluator ambient (d={}, s={})",
                u.ambient().d(),
                u.ambient().s(),
                self.ambient().d(),
                self.ambient().s()
            )));
        }
        Ok(())
    }

    /// `u(y)`.
    pub fn evaluate(&self, u: &Superposition, y: &[f64]) -> Result<f64> {
        self.check_ambient(u)?;
        if y.len() != self.ambient().d() {
            return Err(Error::Parameter(format!(
                "point has length {}, expected d = {}",
                y.len(),
                self.ambient().d()
            )));
        }
        let e = self.ambient().bubble_exponent();
        Ok(u.terms()
            .iter()
            .map(|t| t.coeff * t.scale.powf(e) * self.consts.profile(t.scale * dist(&t.center, y)))
            .sum())
    }

    /// `ln(λ^{(d−2s)/2} B(λr) / c_d)` for a unit bubble at distance `r`.
    #[inline]
    fn log_bubble(&self, scale: f64, r: f64) -> f64 {
        let e = self.ambient().bubble_exponent();
        e * (scale.ln() - (scale * r).powi(2).ln_1p())
    }

    /// `(B_{x,λ}, B_{z,μ}^{2*−1})` for unit-coefficient bubbles.
    pub fn pair_unit(&self, x: &[f64], lambda: f64, z: &[f64], mu: f64) -> Result<f64> {
        let amb = *self.ambient();
        let d = amb.d();
        let e = amb.bubble_exponent();
        let ed = amb.dual_exponent();
        let log_pref = amb.two_star() * self.consts.c_d.ln();
        let (ln_l, ln_m) = (lambda.ln(), mu.ln());
        let kernel = move |r1: f64, r2: f64| {
            (log_pref
                + e * (ln_l - (lambda * r1).powi(2).ln_1p())
                + ed * (ln_m - (mu * r2).powi(2).ln_1p()))
            .exp()
        };
        let sep = dist(x, z);
        let extent = x.iter().chain(z.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
        let lengths = vec![1.0 / lambda, 1.0 / mu];

        if sep <= 1e-12 * (1.0 + extent) {
            let dm1 = (d - 1) as f64;
            let r = integrate_half_line_scaled(
                |r| {
                    if r == 0.0 {
                        return if d == 1 { kernel(0.0, 0.0) } else { 0.0 };
                    }
                    (dm1 * r.ln()).exp() * kernel(r, r)
                },
                &lengths,
                &self.cfg,
            )?;
            return Ok(unit_sphere_area(d) * r.value);
        }
        if d == 1 {
            let (a, b) = (x[0], z[0]);
            let breaks = [
                a,
                b,
                a - lengths[0],
                a + lengths[0],
                b - lengths[1],
                b + lengths[1],
            ];
            let r = integrate_real_line(
                |t| kernel((t - a).abs(), (t - b).abs()),
                &breaks,
                lengths[0].max(lengths[1]),
                &self.cfg,
            )?;
            return Ok(r.value);
        }
        let hints = AxisHints::new(vec![0.0, sep], lengths);
        let r = integrate_axisymmetric_with_hints(
            |t, rho| {
                let r1 = (t * t + rho * rho).sqrt();
                let r2 = ((t - sep) * (t - sep) + rho * rho).sqrt();
                kernel(r1, r2)
            },
            &amb,
            &hints,
            &self.cfg,
        )?;
        Ok(r.value)
    }

    fn require_supported(&self, points: &[&[f64]]) -> Result<Geometry> {
        let g = Geometry::of_points(points);
        if g.is_general() {
            return Err(Error::Geometry(
                "centers are neither concentric nor collinear".into(),
            ));
        }
        Ok(g)
    }

    /// `(u, h^{2*−1})` for a unit bubble `h`.
    pub fn pair_against_bubble(&self, u: &Superposition, h: &BubbleParam) -> Result<f64> {
        self.check_ambient(u)?;
        if h.center.len() != self.ambient().d() || h.scale.is_nan() || h.scale <= 0.0 {
            return Err(Error::Parameter("invalid test bubble".into()));
        }
        let mut pts: Vec<&[f64]> = u.terms().iter().map(|t| t.center.as_slice()).collect();
        pts.push(&h.center);
        self.require_supported(&pts)?;
        let parts = u
            .terms()
            .iter()
            .map(|t| Ok(t.coeff * self.pair_unit(&t.center, t.scale, &h.center, h.scale)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(compensated_sum(parts))
    }

    /// Matrix `P_ij = (B_i, B_j^{2*−1})` of unit bubbles of `u` against `v`.
    pub fn pairing_matrix(&self, u: &Superposition, v: &Superposition) -> Result<Vec<Vec<f64>>> {
        self.check_ambient(u)?;
        self.check_ambient(v)?;
        let pts: Vec<&[f64]> = u
            .terms()
            .iter()
            .chain(v.terms().iter())
            .map(|t| t.center.as_slice())
            .collect();
        self.require_supported(&pts)?;
        u.terms()
            .iter()
            .map(|a| {
                v.terms()
                    .iter()
                    .map(|b| self.pair_unit(&a.center, a.scale, &b.center, b.scale))
                    .collect()
            })
            .collect()
    }

    /// `⟨u, v⟩_{Ḣˢ} = S_d Σ c_i e_j (B_i, B_j^{2*−1})`.
    pub fn hs_inner(&self, u: &Superposition, v: &Superposition) -> Result<f64> {
        let p = self.pairing_matrix(u, v)?;
        let terms = u.terms().iter().enumerate().flat_map(|(i, a)| {
            let row = &p[i];
            v.terms()
                .iter()
                .enumerate()
                .map(move |(j, b)| a.coeff * b.coeff * row[j])
        });
        Ok(self.consts.s_d * compensated_sum(terms))
    }

    /// `‖(−Δ)^{s/2}u‖₂²`, evaluating each unordered pair of terms once.
    pub fn hs_norm_sq(&self, u: &Superposition) -> Result<f64> {
        self.check_ambient(u)?;
        let pts: Vec<&[f64]> = u.terms().iter().map(|t| t.center.as_slice()).collect();
        self.require_supported(&pts)?;
        let n = u.terms().len();
        let mut parts = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (&u.terms()[i], &u.terms()[j]);
                let p = self.pair_unit(&a.center, a.scale, &b.center, b.scale)?;
                let w = if i == j { 1.0 } else { 2.0 };
                parts.push(w * a.coeff * b.coeff * p);
            }
        }
        Ok(self.consts.s_d * compensated_sum(parts))
    }

    /// `‖u‖_{2*}`.
    pub fn lp_norm(&self, u: &Superposition) -> Result<f64> {
        self.check_ambient(u)?;
        let amb = *self.ambient();
        let d = amb.d();
        let p = amb.two_star();
        let log_cd = self.consts.c_d.ln();
        let lengths: Vec<f64> = u.terms().iter().map(|t| 1.0 / t.scale).collect();

        let value = match u.geometry() {
            Geometry::General => {
                return Err(Error::Geometry(
                    "centers are neither concentric nor collinear".into(),
                ))
            }
            Geometry::Concentric { .. } => {
                let dm1 = (d - 1) as f64;
                let u_at = |r: f64| -> f64 {
                    u.terms()
                        .iter()
                        .map(|t| t.coeff * (log_cd + self.log_bubble(t.scale, r)).exp())
                        .sum()
                };
                let r = integrate_half_line_scaled(
                    |r| {
                        let w = if r == 0.0 {
                            if d == 1 {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            (dm1 * r.ln()).exp()
                        };
                        w * u_at(r).abs().powf(p)
                    },
                    &lengths,
                    &self.cfg,
                )?;
                unit_sphere_area(d) * r.value
            }
            Geometry::Collinear { origin, direction } => {
                let axial: Vec<f64> = u
                    .terms()
                    .iter()
                    .map(|t| {
                        t.center
                            .iter()
                            .zip(&origin)
                            .zip(&direction)
                            .map(|((c, o), e)| (c - o) * e)
                            .sum()
                    })
                    .collect();
                let u_at = |t: f64, rho: f64| -> f64 {
                    u.terms()
                        .iter()
                        .zip(&axial)
                        .map(|(b, &a)| {
                            let r = ((t - a).powi(2) + rho * rho).sqrt();
                            b.coeff * (log_cd + self.log_bubble(b.scale, r)).exp()
                        })
                        .sum()
                };
                if d == 1 {
                    let mut breaks = axial.clone();
                    for (a, l) in axial.iter().zip(&lengths) {
                        breaks.push(a - l);
                        breaks.push(a + l);
                    }
                    let width = lengths.iter().copied().fold(0.0, f64::max);
                    integrate_real_line(|t| u_at(t, 0.0).abs().powf(p), &breaks, width, &self.cfg)?
                        .value
                } else {
                    let hints = AxisHints::new(axial.clone(), lengths.clone());
                    integrate_axisymmetric_with_hints(
                        |t, rho| u_at(t, rho).abs().powf(p),
                        &amb,
                        &hints,
                        &self.cfg,
                    )?
                    .value
                }
            }
        };
        Ok(value.powf(1.0 / p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn amb3() -> Ambient {
        Ambient::new(3, 1.0).unwrap()
    }

    fn algebra(amb: &Ambient) -> BubbleAlgebra {
        BubbleAlgebra::new(amb, QuadratureConfig::new(1e-12, 1e-15, 30).unwrap()).unwrap()
    }

    fn origin_bubble(amb: &Ambient, c: f64, l: f64) -> BubbleParam {
        BubbleParam::at_origin(c, amb.d(), l)
    }

    #[test]
    fn evaluate_at_centers() {
        let amb = amb3();
        let alg = algebra(&amb);
        let u = Superposition::single(amb, origin_bubble(&amb, 1.0, 1.0)).unwrap();
        let v = alg.evaluate(&u, &[0.0; 3]).unwrap();
        assert!((v - (2.0 / PI).powf(1.0 / 3.0)).abs() < 1e-14);

        let b = BubbleParam::new(-2.5, vec![1.0, 2.0, 3.0], 4.0);
        let u = Superposition::single(amb, b.clone()).unwrap();
        let v = alg.evaluate(&u, &b.center).unwrap();
        assert!((v - (-2.5 * 4f64.sqrt() * alg.constants().c_d)).abs() < 1e-13);

        let lam = 0.01;
        let two = Superposition::new(
            amb,
            vec![origin_bubble(&amb, 1.0, 1.0), origin_bubble(&amb, 1.0, lam)],
        )
        .unwrap();
        let v = alg.evaluate(&two, &[0.0; 3]).unwrap();
        assert!((v - alg.constants().c_d * (1.0 + lam.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn dilation_parameters() {
        let amb = amb3();
        let u = Superposition::single(amb, origin_bubble(&amb, 1.0, 2.0)).unwrap();
        let v = u.dilate(3.0).unwrap();
        assert_eq!(v.terms()[0], origin_bubble(&amb, 1.0, 6.0));
        assert_eq!(u.dilate(1.0).unwrap(), u);
        let w =
            Superposition::single(amb, BubbleParam::new(1.0, vec![3.0, 0.0, -6.0], 1.0)).unwrap();
        assert_eq!(
            w.dilate(3.0).unwrap().terms()[0].center,
            vec![1.0, 0.0, -2.0]
        );
    }

    #[test]
    fn inversion_parameters() {
        let amb = amb3();
        let lam = 0.37;
        let u = Superposition::single(amb, origin_bubble(&amb, 1.0, lam)).unwrap();
        assert!((u.invert(1.0).unwrap().terms()[0].scale - 1.0 / lam).abs() < 1e-15);

        let lam = 1e-3;
        let two = Superposition::new(
            amb,
            vec![origin_bubble(&amb, 1.0, 1.0), origin_bubble(&amb, 1.0, lam)],
        )
        .unwrap();
        let inv = two.invert(lam.powf(-0.5)).unwrap();
        assert!((inv.terms()[0].scale - lam).abs() < 1e-15);
        assert!((inv.terms()[1].scale - 1.0).abs() < 1e-12);

        let back = inv.invert(lam.powf(-0.5)).unwrap();
        for (a, b) in back.terms().iter().zip(two.terms()) {
            assert!((a.scale - b.scale).abs() < 1e-12 * b.scale);
        }

        let off =
            Superposition::single(amb, BubbleParam::new(1.0, vec![1.0, 0.0, 0.0], 1.0)).unwrap();
        assert!(matches!(off.invert(1.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn geometry_classification() {
        let c: [&[f64]; 2] = [&[1.0, 2.0], &[1.0, 2.0]];
        assert!(matches!(
            Geometry::of_points(&c),
            Geometry::Concentric { .. }
        ));
        let l: [&[f64]; 3] = [&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[-2.0, -2.0, -2.0]];
        assert!(matches!(
            Geometry::of_points(&l),
            Geometry::Collinear { .. }
        ));
        let g: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        assert!(Geometry::of_points(&g).is_general());
    }

    #[test]
    fn self_pairing_and_norms() {
        let amb = amb3();
        let alg = algebra(&amb);
        let b = Superposition::single(amb, origin_bubble(&amb, 1.0, 1.0)).unwrap();
        let h = BubbleParam::unit(vec![0.0; 3], 1.0);
        assert!((alg.pair_against_bubble(&b, &h).unwrap() - 1.0).abs() < 1e-12);
        assert!((alg.lp_norm(&b).unwrap() - 1.0).abs() < 1e-12);
        let s = alg.constants().s_d;
        assert!((alg.hs_inner(&b, &b).unwrap() - s).abs() < 1e-11 * s);
    }

    #[test]
    fn small_scale_pairing_matches_c0() {
        let amb = amb3();
        let alg = algebra(&amb);
        let lam = 1e-4;
        let p = alg.pair_unit(&[0.0; 3], lam, &[0.0; 3], 1.0).unwrap();
        let c0 = 16.0 / (3.0 * PI);
        assert!(
            (p / (c0 * lam.sqrt()) - 1.0).abs() < 1e-3,
            "{}",
            p / (c0 * lam.sqrt())
        );
    }

    #[test]
    fn off_center_pairing_decreases_with_distance() {
        let amb = amb3();
        let alg = algebra(&amb);
        let near = alg
            .pair_unit(&[0.0; 3], 1.0, &[1e-13, 0.0, 0.0], 1.0)
            .unwrap();
        assert!((near - 1.0).abs() < 1e-10);
        let mut prev = 1.0;
        for r in [0.5, 2.0, 10.0, 40.0] {
            let p = alg.pair_unit(&[0.0; 3], 1.0, &[r, 0.0, 0.0], 1.0).unwrap();
            assert!(p > 0.0 && p < prev, "r={r} p={p}");
            prev = p;
        }
    }

    #[test]
    fn one_dimensional_pairings() {
        let amb = Ambient::new(1, 0.25).unwrap();
        let alg = algebra(&amb);
        let b = Superposition::single(amb, origin_bubble(&amb, 1.0, 1.0)).unwrap();
        assert!((alg.lp_norm(&b).unwrap() - 1.0).abs() < 1e-11);
        // a separated pair in d = 1 reduces to the real line
        let p = alg.pair_unit(&[0.0], 1.0, &[3.0], 2.0).unwrap();
        let q = alg.pair_unit(&[3.0], 2.0, &[0.0], 1.0).unwrap();
        assert!((p - q).abs() < 1e-10, "{p} {q}");
    }

    #[test]
    fn general_geometry_is_rejected() {
        let amb = amb3();
        let alg = algebra(&amb);
        let u = Superposition::new(
            amb,
            vec![
                BubbleParam::new(1.0, vec![0.0, 0.0, 0.0], 1.0),
                BubbleParam::new(1.0, vec![1.0, 0.0, 0.0], 1.0),
                BubbleParam::new(1.0, vec![0.0, 1.0, 0.0], 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(alg.lp_norm(&u), Err(Error::Geometry(_))));
        assert!(matches!(alg.hs_norm_sq(&u), Err(Error::Geometry(_))));
    }

    #[test]
    fn json_schema() {
        let u = Superposition::from_json(
            r#"{"d": 3, "s": 1.0, "terms": [{"coeff": 1.0, "center": [0,0,0], "lambda": 2.0}]}"#,
        )
        .unwrap();
        assert_eq!(u.terms()[0].scale, 2.0);
        let err = Superposition::from_json(
            r#"{"d": 3, "s": 1.0, "terms": [{"coeff": 1.0, "center": [0,0], "lambda": 2.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("terms[0].center"), "{err}");
        let err = Superposition::from_json(
            r#"{"d": 3, "s": 1.0, "terms": [{"coeff": 1.0, "center": [0,0,0]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
        assert!(Superposition::from_json(r#"{"d": 3, "s": 2.0, "terms": []}"#).is_err());
        let back: Superposition =
            serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        assert_eq!(back, u);
    }
}

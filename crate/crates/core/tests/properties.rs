use bestab::constants::{beta_half_line, unit_sphere_area};
use bestab::inequalities::{convex_g, monotone_quotient};
use bestab::quadrature::{
    integrate_axisymmetric, integrate_half_line, integrate_half_line_scaled, integrate_interval,
};
use bestab::{
    Ambient, BubbleAlgebra, BubbleParam, Error, Functional, QuadratureConfig, Superposition,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

fn cfg(rel_tol: f64) -> QuadratureConfig {
    QuadratureConfig::new(rel_tol, 1e-16, 30).unwrap()
}

fn amb3() -> Ambient {
    Ambient::new(3, 1.0).unwrap()
}

fn concentric(coeffs: &[f64], log_scales: &[f64]) -> Superposition {
    let terms = coeffs
        .iter()
        .zip(log_scales)
        .map(|(&c, &l)| BubbleParam::at_origin(c, 3, l.exp()))
        .collect();
    Superposition::new(amb3(), terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beta_matches_quadrature(p in 0u32..10, extra in 1.0f64..4.0, width in 0.01f64..100.0) {
        // radial weights r^{d-1}; tails decay at least like r^{-3}
        let q = 0.5 * (p as f64 + 1.0) + extra;
        let exact = beta_half_line(p as f64, q).unwrap();
        let r = integrate_half_line_scaled(|r| r.powi(p as i32) * (1.0 + r * r).powf(-q), &[width, 1.0], &cfg(1e-12)).unwrap();
        prop_assert!(((r.value - exact) / exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn rational_map_handles_integer_powers(p in 0u32..6, extra in 1.0f64..4.0) {
        let q = 0.5 * (p as f64 + 1.0) + extra;
        let exact = beta_half_line(p as f64, q).unwrap();
        let r = integrate_half_line(|r| r.powi(p as i32) * (1.0 + r * r).powf(-q), &cfg(1e-12)).unwrap();
        prop_assert!(((r.value - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn hard_integrands_fail_honestly(p in 0.0f64..6.0, extra in 0.2f64..4.0) {
        let q = 0.5 * (p + 1.0) + extra;
        let exact = beta_half_line(p, q).unwrap();
        match integrate_half_line(|r| r.powf(p) * (1.0 + r * r).powf(-q), &cfg(1e-12)) {
            Ok(r) => prop_assert!(((r.value - exact) / exact).abs() < 1e-9),
            Err(Error::NonConvergence { value, error_estimate, .. }) => {
                prop_assert!((value - exact).abs() <= 10.0 * error_estimate, "{value} {exact} {error_estimate}")
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn half_line_integral_is_scale_invariant(log_a in -7.0f64..7.0) {
        let a = log_a.exp();
        let r = integrate_half_line_scaled(|r| (1.0 + (r / a).powi(2)).powi(-2) / a, &[a], &cfg(1e-12)).unwrap();
        let exact = std::f64::consts::PI / 4.0;
        prop_assert!(((r.value - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn error_estimates_are_honest(alpha in -0.6f64..4.0) {
        let exact = 1.0 / (alpha + 1.0);
        let (value, estimate) = match integrate_interval(|x| x.powf(alpha), 0.0, 1.0, &cfg(1e-9)) {
            Ok(r) => (r.value, r.error_estimate),
            Err(Error::NonConvergence { value, error_estimate, .. }) => (value, error_estimate),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!((value - exact).abs() <= (10.0 * estimate).max(1e-15),
            "alpha={alpha}: err {} est {}", (value - exact).abs(), estimate);
    }

    #[test]
    fn axisymmetric_agrees_with_radial(d in 2usize..6, width in 0.3f64..3.0) {
        let amb = Ambient::new(d, 0.5).unwrap();
        let k = d as f64 + 1.0;
        let radial = integrate_half_line(
            |r| unit_sphere_area(d) * r.powi(d as i32 - 1) * (1.0 + (r / width).powi(2)).powf(-k),
            &cfg(1e-12),
        ).unwrap().value;
        let axi = integrate_axisymmetric(
            |t, rho| (1.0 + (t * t + rho * rho) / (width * width)).powf(-k),
            &amb,
            &cfg(1e-10),
        ).unwrap().value;
        prop_assert!(((axi - radial) / radial).abs() < 1e-8, "{axi} vs {radial}");
    }

    #[test]
    fn pairing_is_symmetric(x in -3.0f64..3.0, ll in -2.0f64..2.0, lm in -2.0f64..2.0) {
        let alg = BubbleAlgebra::new(&amb3(), cfg(1e-11)).unwrap();
        let a = alg.pair_unit(&[0.0, 0.0, 0.0], ll.exp(), &[x, 0.0, 0.0], lm.exp()).unwrap();
        let b = alg.pair_unit(&[x, 0.0, 0.0], lm.exp(), &[0.0, 0.0, 0.0], ll.exp()).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * a.abs().max(1e-300) + 1e-14, "{a} vs {b}");
    }

    #[test]
    fn cauchy_schwarz(c in prop::collection::vec(-2.0f64..2.0, 2), l in prop::collection::vec(-3.0f64..3.0, 2),
                      c2 in prop::collection::vec(-2.0f64..2.0, 2), l2 in prop::collection::vec(-3.0f64..3.0, 2)) {
        let alg = BubbleAlgebra::new(&amb3(), QuadratureConfig::default()).unwrap();
        let (u, v) = (concentric(&c, &l), concentric(&c2, &l2));
        let uv = alg.hs_inner(&u, &v).unwrap();
        let bound = alg.hs_norm_sq(&u).unwrap() * alg.hs_norm_sq(&v).unwrap();
        prop_assert!(uv * uv <= bound * (1.0 + 1e-9) + 1e-14);
    }

    #[test]
    fn functional_bounds(c in prop::collection::vec(0.2f64..2.0, 1..=3), l in prop::collection::vec(-3.0f64..3.0, 3)) {
        let u = concentric(&c, &l[..c.len()]);
        let f = Functional::new(&amb3(), QuadratureConfig::default()).unwrap();
        let r = f.report(&u).unwrap();
        let s_d = f.constants().s_d;
        // Hölder: m ≤ ‖u‖²_{2*}; Sobolev: ‖u‖² ≥ S_d ‖u‖²_{2*}
        prop_assert!(r.m.value <= r.lp_norm * r.lp_norm * (1.0 + 1e-9));
        prop_assert!(r.sobolev_quotient >= s_d * (1.0 - 1e-9));
        prop_assert!(r.dist_sq >= 0.0);
        if let Some(e) = r.be_quotient {
            prop_assert!(e > 0.0 && e <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn g_is_midpoint_convex(p in 2.01f64..12.0, t1 in 1e-3f64..50.0, t2 in 1e-3f64..50.0) {
        prop_assume!((t1 - t2).abs() > 1e-3 * t1.max(t2));
        let mid = convex_g(p, 0.5 * (t1 + t2)).unwrap();
        let avg = 0.5 * (convex_g(p, t1).unwrap() + convex_g(p, t2).unwrap());
        prop_assert!(mid < avg);
    }

    #[test]
    fn quotient_is_increasing(p in 2.01f64..12.0, eta in 1e-5f64..100.0, ratio in 1.001f64..10.0) {
        prop_assert!(monotone_quotient(p, eta).unwrap() < monotone_quotient(p, eta * ratio).unwrap());
    }
}

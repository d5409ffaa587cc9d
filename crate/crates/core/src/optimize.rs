//! Derivative-free maximization in one and two variables.

use std::cell::Cell;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMaximum {
    pub x: f64,
    pub value: f64,
    /// The maximum sits on the boundary of the search interval.
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// Walks uphill from `x0` with doubling steps until a triple
/// `a < b < c` with `f(b) ≥ max(f(a), f(c))` is found, then refines it by
/// golden-section search down to width `tol`. The walk is confined to
/// `[lo, hi]`.
pub fn bracketed_golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    step: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> LineMaximum {
    let evals = Cell::new(0usize);
    let mut eval = |x: f64| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let x0 = x0.clamp(lo, hi);
    let mut h = step.abs().max(tol);
    let f0 = eval(x0);
    let xr = (x0 + h).min(hi);
    let xl = (x0 - h).max(lo);
    let fr = eval(xr);
    let fl = eval(xl);

    // Orient so that we climb towards `dir`.
    let (mut a, mut b, mut fb, dir) = if fr > f0 && fr >= fl {
        (x0, xr, fr, 1.0)
    } else if fl > f0 {
        (x0, xl, fl, -1.0)
    } else {
        // x0 already brackets a maximum.
        let mut m = golden(&mut eval, xl, x0, xr, f0, tol, lo, hi);
        m.evaluations = evals.get();
        return m;
    };

    let c = loop {
        h *= 2.0;
        let next = if dir > 0.0 {
            (b + h).min(hi)
        } else {
            (b - h).max(lo)
        };
        if next == b {
            // Ran into the boundary while still climbing.
            return LineMaximum {
                x: b,
                value: fb,
                at_boundary: true,
                evaluations: evals.get(),
            };
        }
        let fnext = eval(next);
        if fnext <= fb {
            break next;
        }
        a = b;
        b = next;
        fb = fnext;
    };
    let (left, right) = if a < c { (a, c) } else { (c, a) };
    let mut m = golden(&mut eval, left, b, right, fb, tol, lo, hi);
    m.evaluations = evals.get();
    m
}

#[allow(clippy::too_many_arguments)]
fn golden<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    b: f64,
    mut c: f64,
    fb: f64,
    tol: f64,
    lo: f64,
    hi: f64,
) -> LineMaximum {
    let mut best_x = b;
    let mut best_f = fb;
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (c - a).abs() > tol {
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - INV_PHI * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (c - a);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best_f {
            best_x = x;
            best_f = v;
        }
    }
    let at_boundary = (best_x - lo).abs() <= tol || (hi - best_x).abs() <= tol;
    LineMaximum {
        x: best_x,
        value: best_f,
        at_boundary,
        evaluations: 0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexMaximum {
    pub x: [f64; 2],
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    /// Stop when the spread of simplex values falls below
    /// `f_tol · (1 + |f_best|)` and the simplex is smaller than `x_tol`
    /// (in units of the initial steps).
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evaluations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-13,
            x_tol: 1e-7,
            max_evaluations: 2000,
        }
    }
}

/// Nelder–Mead maximization in two variables with standard coefficients,
/// restarted once from the returned vertex.
pub fn nelder_mead_max<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    steps: [f64; 2],
    opts: &SimplexOptions,
) -> SimplexMaximum {
    let mut total = 0usize;
    let first = nelder_mead_once(&mut f, start, steps, opts, &mut total);
    let second = nelder_mead_once(&mut f, first.x, steps, opts, &mut total);
    let best = if second.value >= first.value {
        second
    } else {
        first
    };
    SimplexMaximum {
        evaluations: total,
        converged: best.converged && total <= 2 * opts.max_evaluations,
        ..best
    }
}

fn nelder_mead_once<F: FnMut([f64; 2]) -> f64>(
    f: &mut F,
    start: [f64; 2],
    steps: [f64; 2],
    opts: &SimplexOptions,
    total: &mut usize,
) -> SimplexMaximum {
    // Work in coordinates scaled by the initial steps; minimize −f.
    let to_x = |y: [f64; 2]| [start[0] + steps[0] * y[0], start[1] + steps[1] * y[1]];
    let mut evals = 0usize;
    let mut g = |y: [f64; 2], evals: &mut usize| {
        *evals += 1;
        let v = -f(to_x(y));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<([f64; 2], f64)> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        .into_iter()
        .map(|y| (y, g(y, &mut evals)))
        .collect();
    let mut converged = false;

    while evals < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[2].1);
        let size = simplex
            .iter()
            .skip(1)
            .map(|(y, _)| {
                (y[0] - simplex[0].0[0])
                    .abs()
                    .max((y[1] - simplex[0].0[1]).abs())
            })
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.f_tol * (1.0 + best.abs()) && size <= opts.x_tol {
            converged = true;
            break;
        }
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                centroid[1] + t * (simplex[2].0[1] - centroid[1]),
            ]
        };
        let xr = along(-1.0);
        let fr = g(xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = g(xe, &mut evals);
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[2].1 {
                let xc = along(-0.5);
                (xc, g(xc, &mut evals))
            } else {
                let xc = along(0.5);
                (xc, g(xc, &mut evals))
            };
            if fc < simplex[2].1.min(fr) {
                simplex[2] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let y = [b[0] + 0.5 * (v.0[0] - b[0]), b[1] + 0.5 * (v.0[1] - b[1])];
                    *v = (y, g(y, &mut evals));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    *total += evals;
    SimplexMaximum {
        x: to_x(simplex[0].0),
        value: -simplex[0].1,
        converged,
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let m = bracketed_golden_max(|x| -(x - 1.3).powi(2) + 2.0, -4.0, 0.5, -10.0, 10.0, 1e-10);
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-15);
        assert!(!m.at_boundary);
    }

    #[test]
    fn golden_climbs_left() {
        let m = bracketed_golden_max(
            |x| (-(x + 7.0).powi(2)).exp(),
            3.0,
            0.25,
            -20.0,
            20.0,
            1e-10,
        );
        assert!((m.x + 7.0).abs() < 1e-7, "{m:?}");
    }

    #[test]
    fn golden_picks_local_peak_near_start() {
        // two peaks at ±2
        let f = |x: f64| (-(x - 2.0).powi(2)).exp() + (-(x + 2.0).powi(2)).exp();
        let right = bracketed_golden_max(f, 1.5, 0.1, -10.0, 10.0, 1e-10);
        let left = bracketed_golden_max(f, -1.5, 0.1, -10.0, 10.0, 1e-10);
        assert!(right.x > 1.9 && left.x < -1.9);
    }

    #[test]
    fn golden_reports_boundary() {
        let m = bracketed_golden_max(|x| x, 0.0, 1.0, -1.0, 5.0, 1e-10);
        assert!(m.at_boundary);
        assert_eq!(m.x, 5.0);
    }

    #[test]
    fn simplex_finds_rosenbrock_max() {
        let f = |x: [f64; 2]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let opts = SimplexOptions {
            max_evaluations: 5000,
            ..Default::default()
        };
        let m = nelder_mead_max(f, [-1.2, 1.0], [0.5, 0.5], &opts);
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5,
            "{m:?}"
        );
    }

    #[test]
    fn simplex_respects_anisotropic_steps() {
        let f = |x: [f64; 2]| -((x[0] - 300.0) / 100.0).powi(2) - (x[1] + 0.01).powi(2) * 1e4;
        let m = nelder_mead_max(f, [0.0, 0.0], [50.0, 0.005], &SimplexOptions::default());
        assert!(
            (m.x[0] - 300.0).abs() < 1e-3 && (m.x[1] + 0.01).abs() < 1e-8,
            "{m:?}"
        );
    }
}

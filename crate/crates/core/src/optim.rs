//! Scalar and low-dimensional optimizers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for a sign change of `f` in `[lo, hi]`; `f(lo)` and `f(hi)` must
/// differ in sign. Returns the bracket midpoint once the width is below `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Two-dimensional Nelder-Mead with every trial point clamped into the box
/// `[lo, hi]`. Minimizes `f`.
pub fn nelder_mead_box<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    step: [f64; 2],
    x_tol: f64,
    max_evals: usize,
) -> NelderMeadResult {
    let clamp = |p: [f64; 2]| [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
    let mut evals = 0usize;
    let mut eval = |p: [f64; 2], evals: &mut usize| {
        *evals += 1;
        f(p)
    };

    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    let p0 = clamp(start);
    simplex.push((p0, eval(p0, &mut evals)));
    for axis in 0..2 {
        let mut p = p0;
        p[axis] += step[axis];
        if p[axis] > hi[axis] {
            p[axis] = p0[axis] - step[axis];
        }
        let p = clamp(p);
        simplex.push((p, eval(p, &mut evals)));
    }

    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| ((p[0] - simplex[0].0[0]) / step[0]).abs().max(((p[1] - simplex[0].0[1]) / step[1]).abs()))
            .fold(0.0, f64::max);
        if size < x_tol {
            converged = true;
            break;
        }
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let worst = simplex[2];
        let along = |t: f64| {
            clamp([
                centroid[0] + t * (worst.0[0] - centroid[0]),
                centroid[1] + t * (worst.0[1] - centroid[1]),
            ])
        };
        let xr = along(-1.0);
        let fr = eval(xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(xe, &mut evals);
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                (x, eval(x, &mut evals))
            } else {
                let x = along(0.5);
                (x, eval(x, &mut evals))
            };
            if fc < worst.1.min(fr) {
                simplex[2] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let p = clamp([
                        best[0] + 0.5 * (v.0[0] - best[0]),
                        best[1] + 0.5 * (v.0[1] - best[1]),
                    ]);
                    *v = (p, eval(p, &mut evals));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NelderMeadResult {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

//! Independent reference computations shared by the integration tests. They
//! use only pointwise pulse evaluation and brute-force rules, never the
//! closed forms under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use fadecap::PulseSpec;
use num_complex::Complex64;

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Simpson on each piece between sorted `breaks`, `n` intervals per piece.
pub fn simpson_pieces<F: FnMut(f64) -> f64>(breaks: &[f64], n: usize, mut f: F) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(w[0], w[1], n, &mut f))
        .sum()
}

/// Composite midpoint rule on each piece between sorted `breaks`; never
/// samples a breakpoint.
pub fn midpoint_pieces<F: FnMut(f64) -> f64>(breaks: &[f64], n: usize, mut f: F) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2).filter(|w| w[1] > w[0]) {
        let h = (w[1] - w[0]) / n as f64;
        total += (0..n).map(|i| f(w[0] + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    }
    total
}

/// Spectral edges of the pulse: `+-f1`, `+-f2`.
pub fn edges(p: &PulseSpec) -> Vec<f64> {
    let c = p.support_len();
    let b = p.rolloff();
    let (f1, f2) = ((1.0 - b) / (2.0 * c), c / 2.0);
    vec![-f2, -f1, f1, f2]
}

/// `int G(f + nu) G(f) e^{j 2 pi f tau} df` by Simpson on the overlap, split
/// at every spectral edge of both factors.
pub fn ambiguity_freq(p: &PulseSpec, tau: f64, nu: f64, n: usize) -> Complex64 {
    let mut breaks: Vec<f64> = edges(p);
    breaks.extend(edges(p).iter().map(|e| e - nu));
    breaks.sort_by(f64::total_cmp);
    let re = simpson_pieces(&breaks, n, |f| {
        p.eval_freq(f + nu) * p.eval_freq(f) * (2.0 * PI * f * tau).cos()
    });
    let im = simpson_pieces(&breaks, n, |f| {
        p.eval_freq(f + nu) * p.eval_freq(f) * (2.0 * PI * f * tau).sin()
    });
    Complex64::new(re, im)
}

/// Seeded generator so that failures reproduce.
pub fn rng(seed: u64) -> rand::rngs::StdRng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Gauss-Legendre of order `order` on `panels` equal panels of each piece
/// between sorted `breaks`; never samples a breakpoint.
pub fn gauss_pieces<F: FnMut(f64) -> f64>(breaks: &[f64], panels: usize, order: usize, mut f: F) -> f64 {
    let rule = gauss_quad::GaussLegendre::new(std::num::NonZeroUsize::new(order).unwrap());
    let mut total = 0.0;
    for w in breaks.windows(2).filter(|w| w[1] > w[0]) {
        let h = (w[1] - w[0]) / panels as f64;
        for i in 0..panels {
            let a = w[0] + i as f64 * h;
            total += rule.integrate(a, a + h, &mut f);
        }
    }
    total
}

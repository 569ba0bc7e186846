//! Ambiguity function of the prototype pulse and its lattice sums.
//!
//! `A(tau, nu) = int g(t) g(t - tau) e^{-j 2 pi nu t} dt
//!             = int G(f + nu) G(f) e^{j 2 pi f tau} df`.
//!
//! `G` is a sum of cosine segments, so every segment-pair overlap integrates
//! in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::pulse::{cos_exp_integral, PulseSpec, WhGrid};
use crate::quad;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityQuery {
    pub tau: f64,
    pub nu: f64,
}

impl AmbiguityQuery {
    pub fn new(tau: f64, nu: f64) -> Self {
        Self { tau, nu }
    }

    /// Physical query on `grid` expressed in the pulse's normalized units.
    pub fn normalized(self, grid: &WhGrid) -> Self {
        let s = grid.scale();
        Self {
            tau: self.tau / s,
            nu: self.nu * s,
        }
    }
}

/// `A_g(tau, nu)` in normalized units.
pub fn ambiguity(pulse: &PulseSpec, q: AmbiguityQuery) -> Complex64 {
    let omega = 2.0 * PI * q.tau;
    let mut acc = Complex64::new(0.0, 0.0);
    for shifted in pulse.segments() {
        // G(f + nu) on [lo - nu, hi - nu] is amp cos(slope f + slope nu + phase)
        let lo_s = shifted.lo - q.nu;
        let hi_s = shifted.hi - q.nu;
        let phase_s = shifted.phase + shifted.slope * q.nu;
        for base in pulse.segments() {
            let lo = lo_s.max(base.lo);
            let hi = hi_s.min(base.hi);
            if hi <= lo {
                continue;
            }
            let amp = 0.5 * shifted.amp * base.amp;
            acc += amp
                * (cos_exp_integral(lo, hi, shifted.slope + base.slope, phase_s + base.phase, omega)
                    + cos_exp_integral(lo, hi, shifted.slope - base.slope, phase_s - base.phase, omega));
        }
    }
    acc
}

/// Ambiguity function of the pulse dilated onto `grid`, queried in physical
/// units.
pub fn ambiguity_on_grid(pulse: &PulseSpec, grid: &WhGrid, q: AmbiguityQuery) -> Complex64 {
    ambiguity(pulse, q.normalized(grid))
}

/// Ambiguity function of `g_beta(t) = sqrt(beta) g(beta t)`, which equals
/// `A_g(beta tau, nu / beta)`.
pub fn ambiguity_dilated(pulse: &PulseSpec, beta: f64, q: AmbiguityQuery) -> Complex64 {
    ambiguity(pulse, AmbiguityQuery::new(beta * q.tau, q.nu / beta))
}

/// `dA/dtau = j 2 pi int f G(f + nu) G(f) e^{j 2 pi f tau} df`.
pub fn delay_derivative(pulse: &PulseSpec, q: AmbiguityQuery) -> Complex64 {
    let omega = 2.0 * PI * q.tau;
    let v = oscillatory_overlap(pulse, q.nu, omega, |f| {
        f * pulse.eval_freq(f + q.nu) * pulse.eval_freq(f)
    });
    Complex64::new(0.0, 2.0 * PI) * v
}

/// `dA/dnu = int G'(f + nu) G(f) e^{j 2 pi f tau} df`.
pub fn doppler_derivative(pulse: &PulseSpec, q: AmbiguityQuery) -> Complex64 {
    let omega = 2.0 * PI * q.tau;
    oscillatory_overlap(pulse, q.nu, omega, |f| {
        pulse.eval_freq_deriv(f + q.nu) * pulse.eval_freq(f)
    })
}

/// `int h(f) e^{j omega f} df` over the overlap of `supp G(. + nu)` and
/// `supp G`, split at the spectral breakpoints and into panels that each hold
/// at most one oscillation.
fn oscillatory_overlap<H: Fn(f64) -> f64>(pulse: &PulseSpec, nu: f64, omega: f64, h: H) -> Complex64 {
    let edge = pulse.band_edge();
    let lo = (-edge - nu).max(-edge);
    let hi = (edge - nu).min(edge);
    if hi <= lo {
        return Complex64::new(0.0, 0.0);
    }
    let base = pulse.breakpoints();
    let breaks = quad::clip_breaks(base.iter().copied().chain(base.iter().map(|b| b - nu)), lo, hi);
    let mut acc = Complex64::new(0.0, 0.0);
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let panels = ((omega.abs() * len / (2.0 * PI)).ceil() as usize).max(1);
        let step = len / panels as f64;
        for p in 0..panels {
            let a = w[0] + p as f64 * step;
            for (f, wt) in quad::mapped(a, a + step, 20) {
                acc += wt * h(f) * Complex64::from_polar(1.0, omega * f);
            }
        }
    }
    acc
}

/// Truncation policy for ring-by-ring lattice sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePolicy {
    /// Stop once a complete ring adds less than this.
    pub ring_tol: f64,
    pub max_ring: u32,
}

impl Default for AdaptivePolicy {
    fn default() -> Self {
        Self {
            ring_tol: 1e-12,
            max_ring: 1000,
        }
    }
}

/// Result of a ring-by-ring lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingSum {
    pub value: f64,
    pub rings: u32,
    pub last_increment: f64,
}

/// `S_g(tau, nu) = sum_{(k,n) != 0} |A(tau - kT, nu - nF)|^2` summed over
/// square rings `max(|k|, |n|) = r` until a ring adds less than
/// `policy.ring_tol`.
pub fn ambiguity_lattice_tail(
    pulse: &PulseSpec,
    grid: &WhGrid,
    q: AmbiguityQuery,
    policy: &AdaptivePolicy,
) -> Result<RingSum> {
    grid.check_orthonormal(pulse)?;
    let q = q.normalized(grid);
    let c = pulse.support_len();
    let term = |k: i64, n: i64| {
        let nu = q.nu - n as f64 * c;
        // supports of G(. + nu) and G are disjoint
        if nu.abs() >= c {
            return 0.0;
        }
        ambiguity(pulse, AmbiguityQuery::new(q.tau - k as f64 * c, nu)).norm_sqr()
    };
    let mut total = 0.0;
    let mut last = f64::INFINITY;
    for r in 1..=policy.max_ring as i64 {
        let mut ring = 0.0;
        for k in -r..=r {
            ring += term(k, r) + term(k, -r);
        }
        for n in (-r + 1)..r {
            ring += term(r, n) + term(-r, n);
        }
        total += ring;
        last = ring;
        if ring < policy.ring_tol {
            return Ok(RingSum {
                value: total,
                rings: r as u32,
                last_increment: ring,
            });
        }
    }
    Err(Error::no_convergence(
        "lattice tail",
        format!(
            "ring {} still adds {last:e} (partial sum {total:e})",
            policy.max_ring
        ),
    ))
}

/// Doppler-only part of the periodized lattice sum.
///
/// For every Doppler offset `nu_n = nu - n c` with `|nu_n| < c`,
/// `sum_k |A(tau - k c, nu_n)|^2 = (E_n + 2 cos(2 pi tau / c) C_n) / c` where
/// `E_n = int P^2`, `C_n = int P(f) P(f + 1/c) df` and
/// `P(f) = G(f + nu_n) G(f)`. The identity needs `supp P` shorter than `2/c`,
/// which holds because `c^2 < 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSlice {
    c: f64,
    nu: f64,
    energy: f64,
    correlation: f64,
}

impl DopplerSlice {
    pub fn new(pulse: &PulseSpec, nu: f64) -> Self {
        let c = pulse.support_len();
        let n_lo = ((nu - c) / c).floor() as i64;
        let n_hi = ((nu + c) / c).ceil() as i64;
        let mut energy = 0.0;
        let mut correlation = 0.0;
        for n in n_lo..=n_hi {
            let nu_n = nu - n as f64 * c;
            if nu_n.abs() >= c {
                continue;
            }
            let (e, cc) = product_moments(pulse, nu_n);
            energy += e;
            correlation += cc;
        }
        Self {
            c,
            nu,
            energy,
            correlation,
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `sum_{k,n} |A(tau - k c, nu - n c)|^2`, all lattice points included.
    pub fn lattice_energy(&self, tau: f64) -> f64 {
        (self.energy + 2.0 * (2.0 * PI * tau / self.c).cos() * self.correlation) / self.c
    }

    /// Lattice energy with the `(0, 0)` term removed.
    pub fn tail(&self, pulse: &PulseSpec, tau: f64) -> f64 {
        let center = ambiguity(pulse, AmbiguityQuery::new(tau, self.nu)).norm_sqr();
        (self.lattice_energy(tau) - center).max(0.0)
    }
}

/// `(int P^2, int P(f) P(f + 1/c) df)` for `P(f) = G(f + nu) G(f)`.
fn product_moments(pulse: &PulseSpec, nu: f64) -> (f64, f64) {
    let edge = pulse.band_edge();
    let lo = (-edge - nu).max(-edge);
    let hi = (edge - nu).min(edge);
    if hi <= lo {
        return (0.0, 0.0);
    }
    let p = |f: f64| pulse.eval_freq(f + nu) * pulse.eval_freq(f);
    let base = pulse.breakpoints();
    let shifted: Vec<f64> = base.iter().copied().chain(base.iter().map(|b| b - nu)).collect();
    let breaks = quad::clip_breaks(shifted.iter().copied(), lo, hi);
    let energy = quad::piecewise(&breaks, 16, |f| p(f).powi(2));

    let d = 1.0 / pulse.support_len();
    let lo2 = lo.max(lo - d);
    let hi2 = hi.min(hi - d);
    let correlation = if hi2 > lo2 {
        let breaks = quad::clip_breaks(shifted.iter().copied().chain(shifted.iter().map(|b| b - d)), lo2, hi2);
        quad::piecewise(&breaks, 16, |f| p(f) * p(f + d))
    } else {
        0.0
    };
    (energy, correlation)
}

/// Periodized `S_g` at a normalized query.
pub fn lattice_tail(pulse: &PulseSpec, q: AmbiguityQuery) -> f64 {
    DopplerSlice::new(pulse, q.nu).tail(pulse, q.tau)
}

/// Periodized `S_g` at a physical query on `grid`.
pub fn lattice_tail_on_grid(pulse: &PulseSpec, grid: &WhGrid, q: AmbiguityQuery) -> Result<f64> {
    grid.check_orthonormal(pulse)?;
    Ok(lattice_tail(pulse, q.normalized(grid)))
}

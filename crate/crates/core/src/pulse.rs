//! Root-raised-cosine prototype pulses and the Weyl-Heisenberg lattice.
//!
//! Units are normalized so that the pulse is orthonormal on the square lattice
//! `T = F = c` with `c = sqrt(TF)`. The spectrum `G` is flat at height
//! `sqrt(c)` on `|f| <= (1 - beta) / (2c)`, rolls off with a quarter cosine up
//! to `c / 2`, and vanishes beyond.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quad;
use crate::{Error, Result};

/// Distance from a removable singularity of the closed-form impulse response
/// below which the segment-integral form is used instead.
const SINGULAR_WINDOW: f64 = 1e-6;

/// Horizon of the sampling pass that re-checks the decay certificate, in
/// units of `c`.
pub const DECAY_SAMPLE_HORIZON: f64 = 1e4;

/// Largest guard-slot count `guard_slots` will report.
pub const GUARD_SLOT_CAP: u64 = 1_000_000_000;

/// One piece of the spectrum, `amp * cos(slope * f + phase)` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub amp: f64,
    pub slope: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    tf: f64,
    c: f64,
    rolloff: f64,
    segments: [Segment; 3],
    n_segments: usize,
}

impl PulseSpec {
    /// Root-raised-cosine pulse for a grid product `1 < tf < 2`.
    pub fn new(tf: f64) -> Result<Self> {
        if !(tf > 1.0 && tf < 2.0) {
            return Err(Error::invalid(format!(
                "grid product must lie in (1, 2), got {tf}"
            )));
        }
        let c = tf.sqrt();
        let rolloff = tf - 1.0;
        let f1 = (1.0 - rolloff) / (2.0 * c);
        let f2 = 0.5 * c;
        let w = PI * c / (2.0 * rolloff);
        let amp = c.sqrt();
        let segments = [
            Segment {
                lo: -f2,
                hi: -f1,
                amp,
                slope: -w,
                phase: -w * f1,
            },
            Segment {
                lo: -f1,
                hi: f1,
                amp,
                slope: 0.0,
                phase: 0.0,
            },
            Segment {
                lo: f1,
                hi: f2,
                amp,
                slope: w,
                phase: -w * f1,
            },
        ];
        Ok(Self {
            tf,
            c,
            rolloff,
            segments,
            n_segments: 3,
        })
    }

    /// The zero-rolloff limit at `TF = 1`: `g(t) = sin(pi t) / (pi t)`.
    pub fn sinc() -> Self {
        let seg = Segment {
            lo: -0.5,
            hi: 0.5,
            amp: 1.0,
            slope: 0.0,
            phase: 0.0,
        };
        Self {
            tf: 1.0,
            c: 1.0,
            rolloff: 0.0,
            segments: [seg; 3],
            n_segments: 1,
        }
    }

    /// `sinc()` for `tf == 1`, otherwise [`PulseSpec::new`].
    pub fn from_tf(tf: f64) -> Result<Self> {
        if tf == 1.0 {
            Ok(Self::sinc())
        } else {
            Self::new(tf)
        }
    }

    pub fn tf_product(&self) -> f64 {
        self.tf
    }

    /// Lattice spacing `c = sqrt(TF)` of the matched square grid.
    pub fn support_len(&self) -> f64 {
        self.c
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn is_sinc(&self) -> bool {
        self.rolloff == 0.0
    }

    pub(crate) fn segments(&self) -> &[Segment] {
        &self.segments[..self.n_segments]
    }

    /// Frequencies where `G` or its derivative is not smooth.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments().iter().map(|s| s.lo).collect();
        b.push(self.segments().last().unwrap().hi);
        b
    }

    fn flat_edge(&self) -> f64 {
        (1.0 - self.rolloff) / (2.0 * self.c)
    }

    pub fn band_edge(&self) -> f64 {
        0.5 * self.c
    }

    /// Spectrum `G(f)`.
    pub fn eval_freq(&self, f: f64) -> f64 {
        let af = f.abs();
        if self.is_sinc() {
            return if af <= 0.5 { 1.0 } else { 0.0 };
        }
        let f1 = self.flat_edge();
        let f2 = self.band_edge();
        if af <= f1 {
            self.c.sqrt()
        } else if af < f2 {
            let w = PI * self.c / (2.0 * self.rolloff);
            self.c.sqrt() * (w * (af - f1)).cos()
        } else {
            0.0
        }
    }

    /// `G'(f)`, taking the one-sided value at the band edge from inside.
    pub fn eval_freq_deriv(&self, f: f64) -> f64 {
        if self.is_sinc() {
            return 0.0;
        }
        let af = f.abs();
        let f1 = self.flat_edge();
        let f2 = self.band_edge();
        if af <= f1 || af > f2 {
            0.0
        } else {
            let w = PI * self.c / (2.0 * self.rolloff);
            -self.c.sqrt() * w * (w * (af - f1)).sin() * f.signum()
        }
    }

    /// Impulse response `g(t)`, the inverse Fourier transform of `G`.
    pub fn eval_time(&self, t: f64) -> f64 {
        if self.is_sinc() {
            let x = PI * t;
            return if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        }
        let beta = self.rolloff;
        let x = t / self.c;
        let q = 4.0 * beta * x;
        if x.abs() < SINGULAR_WINDOW || (q.abs() - 1.0).abs() < SINGULAR_WINDOW {
            return self.eval_time_segments(t);
        }
        let num = (PI * x * (1.0 - beta)).sin() + q * (PI * x * (1.0 + beta)).cos();
        let den = PI * x * (1.0 - q * q);
        num / den / self.c.sqrt()
    }

    /// `g(t)` as a sum of exact segment integrals; stable for every `t`.
    pub(crate) fn eval_time_segments(&self, t: f64) -> f64 {
        let omega = 2.0 * PI * t;
        self.segments()
            .iter()
            .map(|s| s.amp * cos_exp_integral(s.lo, s.hi, s.slope, s.phase, omega).re)
            .sum()
    }

    /// `sum_n G(f - n/c) G(f - n/c - k c) - c [k == 0]`.
    pub fn tight_frame_residual(&self, k: i64, f: f64) -> f64 {
        let c = self.c;
        let shift = k as f64 * c;
        let n_lo = ((f - 0.5 * c) * c).floor() as i64 - 1;
        let n_hi = ((f + 0.5 * c) * c).ceil() as i64 + 1;
        let sum: f64 = (n_lo..=n_hi)
            .map(|n| {
                let g = f - n as f64 / c;
                self.eval_freq(g) * self.eval_freq(g - shift)
            })
            .sum();
        if k == 0 {
            sum - c
        } else {
            sum
        }
    }

    /// Certified constants for `|g(t)| <= c_decay / t^2`, `t >= t0`.
    ///
    /// For `x = t / c >= 1 / beta` the closed form gives
    /// `t^2 |g(t)| <= c^{3/2} x / (pi (4 beta x - 1))`, which decreases in `x`;
    /// its value at `t0 = c / beta` is the constant. A sampling pass out to
    /// `DECAY_SAMPLE_HORIZON * c` re-checks it.
    pub fn decay_constants(&self) -> Result<DecayConstants> {
        if self.is_sinc() {
            return Err(Error::precondition(
                "the sinc pulse decays like 1/t; no 1/t^2 envelope exists",
            ));
        }
        let beta = self.rolloff;
        let c = self.c;
        let t0 = c / beta;
        let c_decay = c.powf(1.5) / (3.0 * PI * beta);
        let horizon = DECAY_SAMPLE_HORIZON * c;
        let step = c / 16.0;
        let n = ((horizon - t0) / step).ceil() as usize;
        for i in 0..=n {
            let t = t0 + i as f64 * step;
            let v = self.eval_time(t).abs() * t * t;
            if v > c_decay * (1.0 + 1e-12) {
                return Err(Error::no_convergence(
                    "decay certificate",
                    format!("|g(t)| t^2 = {v:e} exceeds {c_decay:e} at t = {t}"),
                ));
            }
        }
        Ok(DecayConstants {
            c_decay,
            t0,
            horizon,
        })
    }

    /// Second moments `(int t^2 g^2 dt, int f^2 G^2 df)`.
    ///
    /// The time moment uses `int t^2 g^2 = (1 / 4 pi^2) int G'^2`, which is a
    /// finite integral over the compact spectrum.
    pub fn moments(&self) -> Result<Moments> {
        if self.is_sinc() {
            return Err(Error::precondition(
                "the sinc pulse has an infinite time spread",
            ));
        }
        let breaks = self.breakpoints();
        let tol = 1e-13;
        let freq = quad::adaptive_pieces(&breaks, tol, |f| {
            let g = self.eval_freq(f);
            f * f * g * g
        })?;
        let slope = quad::adaptive_pieces(&breaks, tol, |f| self.eval_freq_deriv(f).powi(2))?;
        Ok(Moments {
            time_spread: slope / (4.0 * PI * PI),
            freq_spread: freq,
        })
    }

    /// Smallest guard-slot count that pushes the leakage bound below `eta`.
    pub fn guard_slots(&self, grid: &WhGrid, eta: f64, n_subcarriers: usize) -> Result<GuardConfig> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        if n_subcarriers == 0 {
            return Err(Error::invalid("need at least one subcarrier"));
        }
        grid.check_orthonormal(self)?;
        let decay = self.decay_constants()?;
        let s = grid.scale();
        let c_decay = decay.c_decay * s.powf(1.5);
        let bound = |k: u64| guard_leakage_bound(c_decay, grid.t, n_subcarriers, k);
        let lead = bound(0) * 0.5; // bound(k) = lead / (k + 1/2)
        let guess = (lead / eta - 0.5).ceil().max(0.0);
        if !guess.is_finite() || guess > GUARD_SLOT_CAP as f64 {
            return Err(Error::no_convergence(
                "guard slots",
                format!("eta = {eta:e} needs more than {GUARD_SLOT_CAP} slots"),
            ));
        }
        let mut k = guess as u64;
        while bound(k) > eta {
            k += 1;
        }
        while k > 0 && bound(k - 1) <= eta {
            k -= 1;
        }
        if k > GUARD_SLOT_CAP {
            return Err(Error::no_convergence(
                "guard slots",
                format!("eta = {eta:e} needs more than {GUARD_SLOT_CAP} slots"),
            ));
        }
        Ok(GuardConfig {
            eta,
            c_decay,
            t0: decay.t0 * s,
            guard_slots: k,
        })
    }
}

/// Leakage bound `2 (2 floor((N-1)/2) + 1) c_decay^2 c' / ((k + 1/2) T)` with
/// `c' = sum_{m >= 1} (m T)^{-2} = pi^2 / (6 T^2)`.
pub fn guard_leakage_bound(c_decay: f64, t: f64, n_subcarriers: usize, k: u64) -> f64 {
    let rows = 2 * ((n_subcarriers.max(1) - 1) / 2) + 1;
    let lattice_sum = PI * PI / (6.0 * t * t);
    2.0 * rows as f64 * c_decay * c_decay * lattice_sum / ((k as f64 + 0.5) * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConstants {
    pub c_decay: f64,
    pub t0: f64,
    /// End of the sampled verification range.
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuardConfig {
    pub eta: f64,
    pub c_decay: f64,
    pub t0: f64,
    pub guard_slots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    /// `int t^2 |g(t)|^2 dt`
    pub time_spread: f64,
    /// `int f^2 |G(f)|^2 df`
    pub freq_spread: f64,
}

/// Lattice `(T, F)` of a Weyl-Heisenberg set, in seconds and hertz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhGrid {
    pub t: f64,
    pub f: f64,
}

impl WhGrid {
    pub fn new(t: f64, f: f64) -> Result<Self> {
        if !(t > 0.0 && f > 0.0 && t.is_finite() && f.is_finite()) {
            return Err(Error::invalid(format!("grid spacings must be positive, got T={t}, F={f}")));
        }
        Ok(Self { t, f })
    }

    /// Square lattice `T = F = sqrt(tf)`.
    pub fn square(tf: f64) -> Self {
        let c = tf.sqrt();
        Self { t: c, f: c }
    }

    pub fn product(&self) -> f64 {
        self.t * self.f
    }

    /// Dilation `sqrt(T / F)` that maps this grid onto the square one.
    pub fn scale(&self) -> f64 {
        (self.t / self.f).sqrt()
    }

    pub fn check_orthonormal(&self, pulse: &PulseSpec) -> Result<()> {
        let tf = pulse.tf_product();
        if (self.product() - tf).abs() > 1e-10 * tf {
            return Err(Error::precondition(format!(
                "grid product {} does not match the pulse's {}",
                self.product(),
                tf
            )));
        }
        Ok(())
    }
}

/// `int_lo^hi cos(a f + b) e^{j omega f} df` in closed form.
pub(crate) fn cos_exp_integral(lo: f64, hi: f64, a: f64, b: f64, omega: f64) -> Complex64 {
    let e = Complex64::from_polar(1.0, b);
    0.5 * (e * exp_integral(lo, hi, omega + a) + e.conj() * exp_integral(lo, hi, omega - a))
}

/// `int_lo^hi e^{j k f} df`.
fn exp_integral(lo: f64, hi: f64, k: f64) -> Complex64 {
    let len = hi - lo;
    Complex64::from_polar(len * sinc(0.5 * k * len), 0.5 * k * (lo + hi))
}

/// `sin(x) / x`.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

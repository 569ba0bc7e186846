//! Fast invariant checks run by `fadecap selftest`.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre};

use crate::ambiguity::{ambiguity, AmbiguityQuery};
use crate::bounds::{expected_log, lower_bound_cor2};
use crate::pulse::{PulseSpec, WhGrid};
use crate::scattering::{grid_match, ScatteringModel};
use crate::stats::{extremal_sir, sigma_g2, sigma_i2, TailMethod};
use crate::Result;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Van der Corput sequence in base `b`, used for reproducible sample points.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut out = 0.0;
    let mut scale = inv;
    while i > 0 {
        out += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    out
}

fn ambiguity_bounded(p: &PulseSpec) -> Result<(bool, String)> {
    let c = p.support_len();
    let mut worst: f64 = 0.0;
    for i in 1..=2000u64 {
        let tau = (radical_inverse(i, 2) - 0.5) * 8.0 * c;
        let nu = (radical_inverse(i, 3) - 0.5) * 4.0 * c;
        worst = worst.max(ambiguity(p, AmbiguityQuery::new(tau, nu)).norm());
    }
    Ok((worst <= 1.0 + 1e-12, format!("max |A| = {worst:.15}")))
}

fn lattice_zeros(p: &PulseSpec) -> Result<(bool, String)> {
    let c = p.support_len();
    let mut worst: f64 = 0.0;
    for k in -4i64..=4 {
        for n in -1i64..=1 {
            if (k, n) != (0, 0) {
                let q = AmbiguityQuery::new(k as f64 * c, n as f64 * c);
                worst = worst.max(ambiguity(p, q).norm());
            }
        }
    }
    Ok((worst < 1e-8, format!("max off-origin |A| = {worst:e}")))
}

fn tight_frame(p: &PulseSpec) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let f = -1.0 + i as f64 / 100.0;
        for k in -2..=2 {
            worst = worst.max(p.tight_frame_residual(k, f).abs());
        }
    }
    Ok((worst < 1e-9, format!("max residual = {worst:e}")))
}

fn bessel(p: &PulseSpec) -> Result<(bool, String)> {
    let g = WhGrid::square(p.tf_product());
    let half = 0.005;
    let m = ScatteringModel::BrickRect { tau0: half, nu0: half };
    let s = sigma_g2(p, &g, &m)? + sigma_i2(p, &g, &m, TailMethod::Periodized)?;
    Ok((s <= 1.0 + 1e-8, format!("sigma_g2 + sigma_i2 = {s:.15}")))
}

fn dilation_invariance(p: &PulseSpec) -> Result<(bool, String)> {
    let tf = p.tf_product();
    let (spread, eps, rho) = (1e-4, 1e-6, 10.0);
    let half = 0.5 * f64::sqrt(spread);
    let square = WhGrid::square(tf);
    let base = lower_bound_cor2(p, &square, rho, half, half, eps, &extremal_sir(p, &square, half, half)?)?;
    // tau0 / nu0 = 1e-8 with the same spread
    let (tau0, nu0) = (half * 1e-4, half * 1e4);
    let g = grid_match(tau0, nu0, tf)?;
    let other = lower_bound_cor2(p, &g, rho, tau0, nu0, eps, &extremal_sir(p, &g, tau0, nu0)?)?;
    let rel = ((other.value - base.value) / base.value).abs();
    Ok((rel <= 1e-9, format!("relative change {rel:e}")))
}

fn expected_log_oracle() -> Result<(bool, String)> {
    let rule = GaussLaguerre::new(NonZeroUsize::new(200).unwrap(), FiniteAboveNegOneF64::new(0.0).unwrap());
    let mut worst: f64 = 0.0;
    for a in [1e-2, 1e-1, 1.0, 3.0] {
        let oracle = rule.integrate(|x| (a * x).ln_1p());
        worst = worst.max(((expected_log(a) - oracle) / oracle).abs());
    }
    Ok((worst < 1e-9, format!("max relative deviation {worst:e}")))
}

/// Run every check; `force_fail` appends a check that always fails.
pub fn run(force_fail: bool) -> Vec<Check> {
    let p = PulseSpec::new(1.02).expect("valid pulse");
    let mut out = vec![
        check("ambiguity bounded by one", ambiguity_bounded(&p)),
        check("lattice zeros", lattice_zeros(&p)),
        check("tight frame residual", tight_frame(&p)),
        check("Bessel bound", bessel(&p)),
        check("dilation invariance", dilation_invariance(&p)),
        check("expected_log oracle", expected_log_oracle()),
    ];
    if force_fail {
        out.push(Check {
            name: "forced failure",
            passed: false,
            detail: "requested with --force-fail".into(),
        });
    }
    out
}

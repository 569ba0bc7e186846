//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::time::Instant;

use common::{edges, gauss_pieces, rng, simpson_pieces};
use fadecap::ambiguity::{ambiguity_dilated, lattice_tail, AdaptivePolicy};
use fadecap::analysis::{db_to_linear, log_grid, range_map, PlateauSetup};
use fadecap::bounds::{
    awgn_upper, expected_log, lower_bound_cor2, lower_bound_thm1, Thm1Options,
};
use fadecap::pulse::guard_leakage_bound;
use fadecap::scattering::grid_match;
use fadecap::stats::{extremal_sir, matrix_psd, scalar_psd, sigma_g2, sigma_i2, taylor_constants, TailMethod};
use fadecap::{ambiguity, AmbiguityQuery, PulseSpec, ScatteringModel, WhGrid};
use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre};
use num_complex::Complex64;
use rand::Rng;

type Outcome = (bool, String);

fn pulse() -> PulseSpec {
    PulseSpec::new(1.02).unwrap()
}

fn square() -> WhGrid {
    WhGrid::square(1.02)
}

fn taylor() -> Outcome {
    let start = Instant::now();
    let t = taylor_constants(&pulse(), &square(), &AdaptivePolicy::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let dm = (t.c_m - 25.87).abs() / 25.87;
    let dmax = (t.c_max - 0.77).abs() / 0.77;
    let ok = dm <= 0.01 && dmax <= 0.05 && secs < 10.0;
    (
        ok,
        format!(
            "c_m = {:.4} ({:.1}% from 25.87, limit 1%), c_M = {:.5} ({:.2}% from 0.77, limit 5%), {} rings, {secs:.2} s",
            t.c_m,
            100.0 * dm,
            t.c_max,
            100.0 * dmax,
            t.rings
        ),
    )
}

fn range_grid() -> Outcome {
    let start = Instant::now();
    let rows = range_map(&log_grid(1e-7, 1e-3, 7), &log_grid(1e-8, 1e-2, 7), 1.02, 0.75);
    let secs = start.elapsed().as_secs_f64();
    let mut bad = Vec::new();
    let (mut lo_span, mut hi_span) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for r in &rows {
        match (r.snr_min_db(), r.snr_max_db()) {
            (Some(lo), Some(hi)) => {
                lo_span = (lo_span.0.min(lo), lo_span.1.max(lo));
                hi_span = (hi_span.0.min(hi), hi_span.1.max(hi));
                if !(-25.0..=-7.0).contains(&lo) || !(30.0..=68.0).contains(&hi) {
                    bad.push(format!("({:.0e}, {:.0e}) -> [{lo:.2}, {hi:.2}]", r.delta_h, r.epsilon));
                }
            }
            _ => bad.push(format!("({:.0e}, {:.0e}) -> empty", r.delta_h, r.epsilon)),
        }
    }
    let ok = bad.is_empty() && secs < 300.0;
    (
        ok,
        format!(
            "rho_min spans [{:.2}, {:.2}] dB, rho_max spans [{:.2}, {:.2}] dB, {} of 49 points outside [-25, -7] x [30, 68]{}, {secs:.2} s",
            lo_span.0,
            lo_span.1,
            hi_span.0,
            hi_span.1,
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(": {}", bad.join(", ")) }
        ),
    )
}

fn plateau() -> Outcome {
    let start = Instant::now();
    let setup = PlateauSetup::new(1.02, 1e-4).unwrap();
    let mut ratios = Vec::new();
    for db in [0.0, 5.0, 10.0, 15.0, 20.0] {
        ratios.push(setup.ratio(db, 1e-6).unwrap().2);
    }
    let secs = start.elapsed().as_secs_f64();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = min >= 0.75 && secs < 30.0;
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    (ok, format!("ratios at 0..20 dB: [{}], min {min:.4}, {secs:.2} s", list.join(", ")))
}

fn tf_ordering() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for spread in [1e-4, 1e-6] {
        let a = PlateauSetup::new(1.02, spread).unwrap().ratio(10.0, 1e-6).unwrap().2;
        let b = PlateauSetup::new(1.0, spread).unwrap().ratio(10.0, 1e-6).unwrap().2;
        ok &= a > b;
        parts.push(format!("spread {spread:.0e}: TF=1.02 {a:.5} vs TF=1 {b:.5}"));
    }
    (ok, parts.join("; "))
}

fn bound_ordering() -> Outcome {
    let p = pulse();
    let g = square();
    let half = 0.5 * 1e-4f64.sqrt();
    let ext = extremal_sir(&p, &g, half, half).unwrap();
    let models = [
        (ScatteringModel::BrickRect { tau0: half, nu0: half }, 0.0),
        (
            ScatteringModel::TwoLevelBrick {
                tau0: half,
                nu0: half,
                epsilon: 1e-6,
                tau_out: 3.0 * half,
                nu_out: 2.0 * half,
            },
            1e-6,
        ),
    ];
    let mut worst = f64::INFINITY;
    let mut points = 0;
    for (m, eps) in &models {
        for n in [4, 8, 16] {
            for db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
                let rho = db_to_linear(db);
                let lo = lower_bound_cor2(&p, &g, rho, half, half, *eps, &ext).unwrap().value;
                let mid = lower_bound_thm1(&p, &g, m, rho, n, &Thm1Options::default()).unwrap().value;
                let up = awgn_upper(1.0, rho, 0.0, 0.0, *eps);
                worst = worst.min(mid - lo).min(up - mid);
                points += 1;
            }
        }
    }
    (worst >= -1e-9, format!("{points} points, smallest slack {worst:.3e}"))
}

fn dilation_invariance() -> Outcome {
    let p = pulse();
    let half = 0.5 * 1e-4f64.sqrt();
    let base_ext = extremal_sir(&p, &square(), half, half).unwrap();
    let mut worst: f64 = 0.0;
    for db in [-10.0, 10.0, 30.0] {
        let rho = db_to_linear(db);
        let base = lower_bound_cor2(&p, &square(), rho, half, half, 1e-6, &base_ext).unwrap().value;
        for beta in [10.0, 1e3, 1e-2] {
            let (tau0, nu0) = (half * beta, half / beta);
            let g = grid_match(tau0, nu0, 1.02).unwrap();
            let ext = extremal_sir(&p, &g, tau0, nu0).unwrap();
            let v = lower_bound_cor2(&p, &g, rho, tau0, nu0, 1e-6, &ext).unwrap().value;
            worst = worst.max(((v - base) / base).abs());
        }
    }
    (worst <= 1e-9, format!("largest relative change {worst:.3e}"))
}

fn statistics_identities() -> Outcome {
    let p = pulse();
    let c = p.support_len();
    let b = p.rolloff();

    let mut bessel: f64 = 0.0;
    for spread in [1e-2, 1e-4, 1e-6] {
        let h = 0.5 * f64::sqrt(spread);
        let m = ScatteringModel::BrickRect { tau0: h, nu0: h };
        let s = sigma_g2(&p, &square(), &m).unwrap() + sigma_i2(&p, &square(), &m, TailMethod::Periodized).unwrap();
        bessel = bessel.max(s);
    }

    let theta_breaks = |h: f64| {
        let mut v = vec![-0.5, -c * h, -b, 0.0, b, c * h, 0.5];
        v.sort_by(f64::total_cmp);
        v
    };
    let h = 0.05;
    let m = ScatteringModel::BrickRect { tau0: h, nu0: h };
    let phis = [-0.5, -c * h, c * h, 0.5];
    let total = gauss_pieces(&theta_breaks(h), 4, 20, |th| {
        gauss_pieces(&phis, 4, 20, |phi| scalar_psd(&p, &square(), &m, th, phi).unwrap())
    });
    let scalar_gap = (total - sigma_g2(&p, &square(), &m).unwrap()).abs();

    let h = 0.5 * 1e-3f64.sqrt();
    let m = ScatteringModel::BrickRect { tau0: h, nu0: h };
    let n = 8;
    let trace = gauss_pieces(&theta_breaks(h), 4, 20, |th| {
        matrix_psd(&p, &square(), &m, th, n).unwrap().trace().re
    });
    let trace_gap = (trace - n as f64 * sigma_g2(&p, &square(), &m).unwrap()).abs();

    let ok = bessel <= 1.0 + 1e-8 && scalar_gap <= 1e-8 && trace_gap <= 1e-6;
    (
        ok,
        format!(
            "max sigma_g2 + sigma_i2 = {bessel:.12}, |int c_H - sigma_g2| = {scalar_gap:.2e}, |int tr Theta - N sigma_g2| = {trace_gap:.2e}"
        ),
    )
}

fn ambiguity_suite() -> Outcome {
    let p = pulse();
    let c = p.support_len();
    let mut r = rng(2024);
    let mut max_a: f64 = 0.0;
    for _ in 0..10_000 {
        let (tau, nu) = (r.gen_range(-20.0..20.0), r.gen_range(-1.1..1.1));
        max_a = max_a.max(ambiguity(&p, AmbiguityQuery::new(tau, nu)).norm());
    }
    let mut zeros: f64 = 0.0;
    for k in -10i64..=10 {
        for n in -1i64..=1 {
            if (k, n) != (0, 0) {
                zeros = zeros.max(ambiguity(&p, AmbiguityQuery::new(k as f64 * c, n as f64 * c)).norm());
            }
        }
    }
    // g_b(t) = sqrt(b) g(b t) has spectrum G(f / b) / sqrt(b)
    let mut dil: f64 = 0.0;
    for beta in [0.1, 3.0, 10.0] {
        for (tau, nu) in [(0.05, 0.2), (0.4, -1.5), (-0.01, 4.0)] {
            let scaled: Vec<f64> = edges(&p).iter().map(|e| e * beta).collect();
            let mut breaks = scaled.clone();
            breaks.extend(scaled.iter().map(|e| e - nu));
            breaks.sort_by(f64::total_cmp);
            let g = |f: f64| p.eval_freq(f / beta) / beta.sqrt();
            let re = simpson_pieces(&breaks, 4000, |f| g(f + nu) * g(f) * (2.0 * PI * f * tau).cos());
            let im = simpson_pieces(&breaks, 4000, |f| g(f + nu) * g(f) * (2.0 * PI * f * tau).sin());
            let a = ambiguity_dilated(&p, beta, AmbiguityQuery::new(tau, nu));
            dil = dil.max((a - Complex64::new(re, im)).norm());
        }
    }
    let mut frame: f64 = 0.0;
    for i in 0..1000 {
        let f = -c + 2.0 * c * i as f64 / 1000.0;
        for k in -3..=3 {
            frame = frame.max(p.tight_frame_residual(k, f).abs());
        }
    }
    let ok = max_a <= 1.0 && zeros < 1e-8 && dil <= 1e-9 && frame < 1e-9;
    (
        ok,
        format!(
            "max |A| = {max_a:.15}, lattice zeros {zeros:.2e}, dilation error {dil:.2e}, tight-frame residual {frame:.2e}"
        ),
    )
}

/// Piecewise Gauss-Legendre reference for `E[log(1 + a |h|^2)]`.
fn expected_log_reference(a: f64) -> f64 {
    let mut breaks = vec![0.0];
    let mut x = (1.0 / a).min(1.0) * 1e-3;
    while x < 1.0 {
        breaks.push(x);
        x *= 4.0;
    }
    breaks.extend([1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0, 80.0]);
    gauss_pieces(&breaks, 2, 30, |x| (a * x).ln_1p() * (-x).exp())
}

fn oracles() -> Outcome {
    let rule = GaussLaguerre::new(NonZeroUsize::new(200).unwrap(), FiniteAboveNegOneF64::new(0.0).unwrap());
    let mut worst_gl: (f64, f64) = (0.0, 0.0);
    let mut worst_ref: f64 = 0.0;
    for a in log_grid(1e-4, 1e4, 17) {
        let v = expected_log(a);
        let gl = rule.integrate(|x| (a * x).ln_1p());
        let d = ((v - gl) / gl).abs();
        if d > worst_gl.0 {
            worst_gl = (d, a);
        }
        let reference = expected_log_reference(a);
        worst_ref = worst_ref.max(((v - reference) / reference).abs());
    }

    let p = pulse();
    let h = 0.5 * 1e-6f64.sqrt();
    let e = extremal_sir(&p, &square(), h, h).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=200 {
        let tau = -h + 2.0 * h * i as f64 / 200.0;
        for j in 0..=200 {
            let nu = -h + 2.0 * h * j as f64 / 200.0;
            lo = lo.min(ambiguity(&p, AmbiguityQuery::new(tau, nu)).norm_sqr());
            hi = hi.max(lattice_tail(&p, AmbiguityQuery::new(tau, nu)));
        }
    }
    let (dm, dmax) = ((e.m_g - lo).abs(), (e.max_tail - hi).abs());
    let ok = worst_gl.0 <= 1e-9 && dm <= 1e-9 && dmax <= 1e-9;
    (
        ok,
        format!(
            "expected_log vs 200-node Gauss-Laguerre: worst relative gap {:.2e} at a = {:.1e} (vs piecewise Gauss-Legendre: {worst_ref:.2e}); extremal_sir vs 201x201 grid: m_g gap {dm:.2e}, M_g gap {dmax:.2e}",
            worst_gl.0, worst_gl.1
        ),
    )
}

fn guard_slots() -> Outcome {
    let p = pulse();
    let g = WhGrid::new(2e-4, 1.02 / 2e-4).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for eta in [1e-2, 1e-4, 1e-6] {
        let cfg = p.guard_slots(&g, eta, 8).unwrap();
        let k = cfg.guard_slots;
        let at = guard_leakage_bound(cfg.c_decay, g.t, 8, k);
        let below = if k > 0 { guard_leakage_bound(cfg.c_decay, g.t, 8, k - 1) } else { f64::INFINITY };
        ok &= at <= eta && below > eta;
        parts.push(format!("eta {eta:.0e}: K_g = {k} (bound {at:.6e}, at K_g-1 {below:.6e})"));
    }
    (ok, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("taylor constants", taylor),
        ("snr range map", range_grid),
        ("plateau check", plateau),
        ("tf ordering", tf_ordering),
        ("bound ordering", bound_ordering),
        ("dilation invariance", dilation_invariance),
        ("statistics identities", statistics_identities),
        ("ambiguity suite", ambiguity_suite),
        ("oracle equivalence", oracles),
        ("guard-slot bound", guard_slots),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(r) => r,
            Err(_) => (false, "panicked".to_string()),
        };
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

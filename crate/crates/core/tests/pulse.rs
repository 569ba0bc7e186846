mod common;

use std::f64::consts::PI;

use common::{edges, midpoint_pieces, rel, simpson_pieces};
use fadecap::pulse::guard_leakage_bound;
use fadecap::{PulseSpec, WhGrid};
use proptest::prelude::*;

#[test]
fn spectrum_has_unit_energy() {
    for tf in [1.005, 1.02, 1.2, 1.5, 1.99] {
        let p = PulseSpec::new(tf).unwrap();
        let e = simpson_pieces(&edges(&p), 4000, |f| p.eval_freq(f).powi(2));
        assert!((e - 1.0).abs() < 1e-12, "tf {tf}: {e}");
    }
}

#[test]
fn spectrum_vanishes_outside_band_and_is_flat_inside() {
    let p = PulseSpec::new(1.02).unwrap();
    let c = p.support_len();
    assert_eq!(p.eval_freq(0.5 * c), 0.0);
    assert_eq!(p.eval_freq(-0.5 * c - 1e-9), 0.0);
    let flat = c.sqrt();
    assert!((p.eval_freq(0.0) - flat).abs() < 1e-15);
    assert!((p.eval_freq(0.45 / c) - flat).abs() < 1e-15);
}

#[test]
fn time_samples_match_inverse_fourier_transform() {
    let p = PulseSpec::new(1.02).unwrap();
    let c = p.support_len();
    let b = p.rolloff();
    // include the removable singularities t = +-c / (4 beta) and t = 0
    let mut ts = vec![0.0, c / (4.0 * b), -c / (4.0 * b), c / (4.0 * b) + 1e-7, 0.37, 3.3, -12.9, 57.1];
    ts.extend((1..6).map(|k| k as f64 * c));
    for t in ts {
        let oracle = simpson_pieces(&edges(&p), 20000, |f| p.eval_freq(f) * (2.0 * PI * f * t).cos());
        let v = p.eval_time(t);
        assert!((v - oracle).abs() < 1e-10, "t {t}: {v} vs {oracle}");
    }
}

#[test]
fn sinc_is_the_unit_product_limit() {
    let s = PulseSpec::sinc();
    assert!(s.is_sinc());
    assert_eq!(PulseSpec::from_tf(1.0).unwrap(), s);
    for t in [0.0, 0.25, 1.0, 2.5, -7.3] {
        let want = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
        assert!((s.eval_time(t) - want).abs() < 1e-14);
    }
    let near = PulseSpec::new(1.0 + 1e-6).unwrap();
    for f in [-0.49, -0.2, 0.0, 0.3, 0.4999] {
        assert!((near.eval_freq(f) - s.eval_freq(f)).abs() < 1e-6, "f {f}");
    }
}

#[test]
fn invalid_products_are_rejected() {
    for tf in [0.5, 1.0, 2.0, 2.5, f64::NAN] {
        assert!(PulseSpec::new(tf).is_err(), "tf {tf}");
    }
    assert!(WhGrid::new(-1.0, 1.0).is_err());
}

#[test]
fn time_spread_matches_closed_form() {
    // G' is a sine on each flank: int G'^2 = pi^2 c^2 / (4 beta)
    for tf in [1.02, 1.1, 1.5] {
        let p = PulseSpec::new(tf).unwrap();
        let m = p.moments().unwrap();
        let want = tf / (16.0 * (tf - 1.0));
        assert!(rel(m.time_spread, want) < 1e-12, "tf {tf}: {} vs {want}", m.time_spread);
    }
}

#[test]
fn time_spread_matches_difference_quotients() {
    let p = PulseSpec::new(1.02).unwrap();
    let h = 1e-7;
    let brute = midpoint_pieces(&edges(&p), 20000, |f| {
        let d = (p.eval_freq(f + h) - p.eval_freq(f - h)) / (2.0 * h);
        d * d
    }) / (4.0 * PI * PI);
    let m = p.moments().unwrap();
    assert!(rel(m.time_spread, brute) < 1e-5, "{} vs {brute}", m.time_spread);
}

#[test]
fn freq_spread_matches_brute_force() {
    let p = PulseSpec::new(1.02).unwrap();
    let brute = simpson_pieces(&edges(&p), 20000, |f| (f * p.eval_freq(f)).powi(2));
    let m = p.moments().unwrap();
    assert!(rel(m.freq_spread, brute) < 1e-12);
    assert!((m.freq_spread - 0.0817179).abs() < 1e-7);
}

#[test]
fn sinc_has_no_second_moment_or_decay_certificate() {
    let s = PulseSpec::sinc();
    assert!(s.moments().is_err());
    assert!(s.decay_constants().is_err());
}

#[test]
fn tight_frame_residual_is_round_off() {
    for tf in [1.02, 1.3] {
        let p = PulseSpec::new(tf).unwrap();
        let c = p.support_len();
        for i in 0..500 {
            let f = -c + 2.0 * c * i as f64 / 500.0;
            for k in -3..=3 {
                assert!(p.tight_frame_residual(k, f).abs() < 1e-9, "tf {tf} k {k} f {f}");
            }
        }
    }
}

#[test]
fn guard_slots_are_minimal() {
    let p = PulseSpec::new(1.02).unwrap();
    let grid = WhGrid::new(2e-4, 1.02 / 2e-4).unwrap();
    for eta in [1e-2, 1e-4, 1e-6] {
        for n in [1, 8, 64] {
            if eta == 1e-6 && n == 64 {
                continue;
            }
            let cfg = p.guard_slots(&grid, eta, n).unwrap();
            let k = cfg.guard_slots;
            assert!(guard_leakage_bound(cfg.c_decay, grid.t, n, k) <= eta);
            if k > 0 {
                assert!(guard_leakage_bound(cfg.c_decay, grid.t, n, k - 1) > eta);
            }
        }
    }
}

#[test]
fn guard_slot_cap_is_reported() {
    let p = PulseSpec::new(1.02).unwrap();
    let g = WhGrid::square(1.02);
    let err = p.guard_slots(&g, 1e-6, 1024).unwrap_err();
    assert!(matches!(err, fadecap::Error::NonConvergence { .. }), "{err}");
}

#[test]
fn guard_slot_decay_constant_scales_with_the_grid() {
    let p = PulseSpec::new(1.02).unwrap();
    let d = p.decay_constants().unwrap();
    let s: f64 = 3.0;
    let grid = WhGrid::new(p.support_len() * s, p.support_len() / s).unwrap();
    let cfg = p.guard_slots(&grid, 1e-3, 8).unwrap();
    assert!(rel(cfg.c_decay, d.c_decay * s.powf(1.5)) < 1e-14);
    assert!(rel(cfg.t0, d.t0 * s) < 1e-14);
}

#[test]
fn guard_slots_reject_bad_inputs() {
    let p = PulseSpec::new(1.02).unwrap();
    let g = WhGrid::square(1.02);
    assert!(p.guard_slots(&g, 0.0, 4).is_err());
    assert!(p.guard_slots(&g, 1e-3, 0).is_err());
    assert!(p.guard_slots(&WhGrid::square(1.1), 1e-3, 4).is_err());
    assert!(PulseSpec::sinc().guard_slots(&WhGrid::square(1.0), 1e-3, 4).is_err());
}

proptest! {
    #[test]
    fn decay_envelope_holds(tf in 1.01f64..1.9, x in 1.0f64..1e3) {
        let p = PulseSpec::new(tf).unwrap();
        let d = p.decay_constants().unwrap();
        let t = d.t0 * x;
        prop_assert!(p.eval_time(t).abs() * t * t <= d.c_decay * (1.0 + 1e-9));
    }

    #[test]
    fn pulse_is_even(tf in 1.01f64..1.99, t in -50.0f64..50.0, f in -1.0f64..1.0) {
        let p = PulseSpec::new(tf).unwrap();
        prop_assert!((p.eval_time(t) - p.eval_time(-t)).abs() < 1e-14);
        prop_assert_eq!(p.eval_freq(f), p.eval_freq(-f));
    }

    #[test]
    fn guard_bound_is_monotone(exp in -6.0f64..-1.0) {
        let eta = 10f64.powf(exp);
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::square(1.02);
        let k1 = p.guard_slots(&g, eta, 4).unwrap().guard_slots;
        let k2 = p.guard_slots(&g, eta / 2.0, 4).unwrap().guard_slots;
        prop_assert!(k2 >= k1);
    }
}

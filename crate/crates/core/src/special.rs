//! Exponential integral and the Rayleigh-fading coherent term.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e^x * E1(x)` for `x > 0`.
///
/// Power series below `x = 1`, Lentz continued fraction above. The scaled form
/// avoids overflow of `e^x` for large arguments.
pub fn scaled_e1(x: f64) -> f64 {
    assert!(x > 0.0, "scaled_e1 needs a positive argument, got {x}");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        (-EULER_GAMMA - x.ln() - sum) * x.exp()
    } else {
        // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// `E1(x)` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    scaled_e1(x) * (-x).exp()
}

/// `E[log(1 + a |h|^2)]` for `h ~ CN(0, 1)`, in nats.
///
/// Equals `e^{1/a} E1(1/a)`; continuous at `a = 0` with value 0.
pub fn expected_log(a: f64) -> f64 {
    assert!(a >= 0.0 && !a.is_nan(), "expected_log needs a >= 0, got {a}");
    if a == 0.0 {
        return 0.0;
    }
    if a.is_infinite() {
        return f64::INFINITY;
    }
    if a < 1e-6 {
        // a - a^2 + 2a^3 - 6a^4
        return a * (1.0 - a * (1.0 - a * (2.0 - 6.0 * a)));
    }
    scaled_e1(1.0 / a)
}

//! Capacity bounds in nats per second per hertz: the AWGN upper bound, the
//! two lower bounds built on the pulse statistics, and the closed-form
//! approximations used to describe the high-capacity SNR plateau.

use std::collections::HashMap;

use serde::Serialize;

use crate::pulse::{PulseSpec, WhGrid};
use crate::quad::{self, AdaptiveRule};
use crate::scattering::ScatteringModel;
use crate::stats::{self, ExtremalSir, Setting, TailMethod};
use crate::{Error, Result};

pub use crate::special::expected_log;

/// Bracket of the noise split `gamma`.
pub const GAMMA_LO: f64 = 1e-6;
pub const GAMMA_HI: f64 = 1.0 - 1e-6;
/// Golden-section tolerance in `gamma`.
pub const GAMMA_TOL: f64 = 1e-10;
/// Seed points of the `gamma` scan, logit-spaced across the bracket.
pub const GAMMA_SEEDS: usize = 50;
/// Absolute tolerance per subinterval of the `theta` integral.
pub const THETA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    /// Raw bound, nat/s/Hz; may be negative at extreme SNR.
    pub value: f64,
    pub clamped_value: f64,
    pub coherent_term: f64,
    pub logdet_penalty: f64,
    pub interference_penalty: f64,
    pub gamma_opt: f64,
}

impl BoundResult {
    fn assemble(coherent: f64, logdet: f64, interference: f64, gamma: f64) -> Self {
        let value = coherent - logdet - interference;
        Self {
            value,
            clamped_value: value.max(0.0),
            coherent_term: coherent,
            logdet_penalty: logdet,
            interference_penalty: interference,
            gamma_opt: gamma,
        }
    }

    /// The bound in nat/s for bandwidth `b` in Hz.
    pub fn per_second(&self, b: f64) -> f64 {
        self.value * b
    }
}

/// AWGN upper bound in nat/s for bandwidth `b`, power `p`, maximum Doppler
/// `nu0`, spillover `eta` and leakage `eps`.
pub fn awgn_upper(b: f64, p: f64, nu0: f64, eta: f64, eps: f64) -> f64 {
    let w = b + 2.0 * nu0;
    w * (1.0 + (1.0 - eta) * (1.0 - eps) * p / w).ln() + (eta + eps - eta * eps) * p
}

/// `B [log(1 + (1 - eps) rho) + eps rho]`, the wideband form of [`awgn_upper`].
pub fn awgn_upper_approx(b: f64, rho: f64, eps: f64) -> f64 {
    b * ((1.0 - eps) * rho).ln_1p() + b * eps * rho
}

/// Minimize `f` over `(GAMMA_LO, GAMMA_HI)`: a logit-spaced seed scan, then
/// golden section around the best seed. Returns `(gamma, f(gamma))`.
pub fn minimize_gamma<F: FnMut(f64) -> f64>(mut f: F) -> (f64, f64) {
    let logit = |g: f64| (g / (1.0 - g)).ln();
    let (x_lo, x_hi) = (logit(GAMMA_LO), logit(GAMMA_HI));
    let seeds: Vec<f64> = (0..GAMMA_SEEDS)
        .map(|i| {
            let x = x_lo + (x_hi - x_lo) * i as f64 / (GAMMA_SEEDS - 1) as f64;
            1.0 / (1.0 + (-x).exp())
        })
        .collect();
    let values: Vec<f64> = seeds.iter().map(|&g| f(g)).collect();
    let best = (0..GAMMA_SEEDS).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let lo = seeds[best.saturating_sub(1)];
    let hi = seeds[(best + 1).min(GAMMA_SEEDS - 1)];
    let (g, v) = crate::optim::golden_section(&mut f, lo, hi, GAMMA_TOL);
    if v <= values[best] {
        (g, v)
    } else {
        (seeds[best], values[best])
    }
}

/// `x log(1 + a / x)`, continuous at `x = 0`.
fn weighted_log(x: f64, a: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (a / x).ln_1p()
    }
}

/// Lower bound from the worst-case box statistics `ext` of the support
/// `[-tau0, tau0] x [-nu0, nu0]`, per hertz. `grid` must satisfy
/// `nu0 T = tau0 F`.
pub fn lower_bound_cor2(
    pulse: &PulseSpec,
    grid: &WhGrid,
    rho: f64,
    tau0: f64,
    nu0: f64,
    eps: f64,
    ext: &ExtremalSir,
) -> Result<BoundResult> {
    grid.check_orthonormal(pulse)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("SNR must be finite and non-negative, got {rho}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid(format!("leakage must lie in [0, 1), got {eps}")));
    }
    if (nu0 * grid.t - tau0 * grid.f).abs() > 1e-9 * (nu0 * grid.t).max(tau0 * grid.f) {
        return Err(Error::precondition(format!(
            "grid is not matched to the support: nu0 T = {:e}, tau0 F = {:e}",
            nu0 * grid.t,
            tau0 * grid.f
        )));
    }
    let dt = 2.0 * nu0 * grid.t;
    if dt >= 1.0 {
        return Err(Error::precondition(format!("2 nu0 T = {dt} must be below 1")));
    }
    let tf = grid.product();
    let x = tf * rho;
    let interference = ext.max_tail + eps;
    let coherent = expected_log(x * (1.0 - eps) * ext.m_g / (1.0 + x * interference)) / tf;
    if rho == 0.0 {
        return Ok(BoundResult::assemble(0.0, 0.0, 0.0, 0.5));
    }
    let logdet = |g: f64| (weighted_log(dt, x / g) + weighted_log(1.0 - dt, x * eps / g)) / tf;
    let penalty = |g: f64| (x * interference / (1.0 - g)).ln_1p() / tf;
    let (g, _) = minimize_gamma(|g| logdet(g) + penalty(g));
    Ok(BoundResult::assemble(coherent, logdet(g), penalty(g), g))
}

/// Options for [`lower_bound_thm1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm1Options {
    pub theta_tol: f64,
    pub tail: TailMethod,
}

impl Default for Thm1Options {
    fn default() -> Self {
        Self {
            theta_tol: THETA_TOL,
            tail: TailMethod::Periodized,
        }
    }
}

/// Quadrature nodes in `theta` with the eigenvalues of `Theta(theta)` at each.
struct SpectrumNodes {
    nodes: Vec<(f64, Vec<f64>)>,
}

impl SpectrumNodes {
    /// Place nodes adaptively for the log-det integrand at `gamma = 1/2`.
    fn build(setting: &Setting, n: usize, x: f64, tol: f64) -> Result<Self> {
        let c = setting.pulse.support_len();
        let mut breaks: Vec<f64> = vec![0.0];
        for nu in setting.normalized_model().doppler_breaks() {
            let th = c * nu;
            breaks.push(th - th.round());
        }
        let breaks = quad::clip_breaks(breaks, -0.5, 0.5);

        let mut cache: HashMap<u64, Vec<f64>> = HashMap::new();
        let mut failure = None;
        let mut eig = |th: f64| -> Vec<f64> {
            cache
                .entry(th.to_bits())
                .or_insert_with(|| match stats::psd_eigenvalues(setting, th, n) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        vec![0.0; n]
                    }
                })
                .clone()
        };
        let rule = AdaptiveRule::new(tol);
        let mut panels = Vec::new();
        for w in breaks.windows(2) {
            quad::adapt(
                w[0],
                w[1],
                &rule,
                |th| eig(th).iter().map(|l| (2.0 * x * l).ln_1p()).sum(),
                |lo, hi, _| panels.push((lo, hi)),
            )?;
        }
        let mut nodes = Vec::new();
        for (lo, hi) in panels {
            let mid = 0.5 * (lo + hi);
            for (a, b) in [(lo, mid), (mid, hi)] {
                for (th, wt) in quad::mapped(a, b, rule.order) {
                    nodes.push((wt, eig(th)));
                }
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(Self { nodes }),
        }
    }

    /// `int sum_i log(1 + x lambda_i(theta) / gamma) dtheta`.
    fn integral(&self, x: f64, gamma: f64) -> f64 {
        let a = x / gamma;
        self.nodes
            .iter()
            .map(|(wt, ev)| wt * ev.iter().map(|l| (a * l).ln_1p()).sum::<f64>())
            .sum()
    }
}

/// Lower bound from the full channel statistics with `n` subcarriers, per
/// hertz.
pub fn lower_bound_thm1(
    pulse: &PulseSpec,
    grid: &WhGrid,
    model: &ScatteringModel,
    rho: f64,
    n: usize,
    opts: &Thm1Options,
) -> Result<BoundResult> {
    if n == 0 {
        return Err(Error::invalid("need at least one subcarrier"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("SNR must be finite and non-negative, got {rho}")));
    }
    let setting = Setting::new(pulse, grid, model)?;
    if rho == 0.0 {
        return Ok(BoundResult::assemble(0.0, 0.0, 0.0, 0.5));
    }
    let tf = grid.product();
    let x = tf * rho;
    let sg = stats::sigma_g2(pulse, grid, model)?;
    let si = stats::sigma_i2(pulse, grid, model, opts.tail)?;
    let coherent = expected_log(sg * x / (1.0 + x * si)) / tf;
    let spectrum = SpectrumNodes::build(&setting, n, x, opts.theta_tol)?;
    let logdet = |g: f64| spectrum.integral(x, g) / (tf * n as f64);
    let penalty = |g: f64| (x * si / (1.0 - g)).ln_1p() / tf;
    let (g, _) = minimize_gamma(|g| logdet(g) + penalty(g));
    Ok(BoundResult::assemble(coherent, logdet(g), penalty(g), g))
}

/// `B {E[log(1 + rho |h|^2)] - sqrt(spread) log(1 + rho / sqrt(spread))}`.
pub fn approx_lb(rho: f64, spread: f64, b: f64) -> f64 {
    b * (expected_log(rho) - weighted_log(spread.sqrt(), rho))
}

/// Nominal plateau `(sqrt(spread), 1 / (spread + eps))`, linear SNR.
pub fn rule_of_thumb(spread: f64, eps: f64) -> Result<(f64, f64)> {
    if spread < 0.0 || eps < 0.0 || (spread == 0.0 && eps == 0.0) {
        return Err(Error::invalid("spread and leakage must be non-negative and not both zero"));
    }
    Ok((spread.sqrt(), 1.0 / (spread + eps)))
}

//! Statistics of the discretized channel: diagonal and interference powers,
//! correlations, scalar and matrix spectra, and the worst-case quantities over
//! the support box.
//!
//! Every routine maps the physical `(grid, model)` pair onto the pulse's
//! normalized square lattice first (`tau' = tau / s`, `nu' = nu s`,
//! `s = sqrt(T / F)`), where `T = F = c`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{LazyLock, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::ambiguity::{
    ambiguity, delay_derivative, doppler_derivative, AdaptivePolicy, AmbiguityQuery, DopplerSlice,
};
use crate::optim::nelder_mead_box;
use crate::pulse::{PulseSpec, WhGrid};
use crate::scattering::ScatteringModel;
use crate::{Error, Result};

/// Gauss-Legendre points per panel for the delay-Doppler integrals.
pub const PANEL_ORDER: usize = 16;
/// Seed grid of the extremal search, points per axis.
pub const SEED_GRID: usize = 64;
/// Full-domain verification grid of the extremal search, points per axis.
pub const VERIFY_GRID: usize = 33;
/// Smallest eigenvalue of `Theta(theta)` accepted as round-off.
pub const PSD_TOL: f64 = -1e-8;

/// How the off-origin lattice sum `S_g` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub enum TailMethod {
    /// Exact periodization identity.
    #[default]
    Periodized,
    /// Ring-by-ring summation.
    Rings(AdaptivePolicy),
}

/// A pulse, a lattice and a channel, checked for compatibility and mapped to
/// normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub pulse: PulseSpec,
    pub grid: WhGrid,
    pub model: ScatteringModel,
    normalized: ScatteringModel,
}

impl Setting {
    pub fn new(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel) -> Result<Self> {
        grid.check_orthonormal(pulse)?;
        model.validate()?;
        Ok(Self {
            pulse: *pulse,
            grid: *grid,
            model: *model,
            normalized: model.dilate(grid.scale()),
        })
    }

    /// The channel in normalized units.
    pub fn normalized_model(&self) -> &ScatteringModel {
        &self.normalized
    }

    fn c(&self) -> f64 {
        self.pulse.support_len()
    }

    /// Panel lengths `(delay, Doppler)` short enough for `A` to be smooth.
    fn panels(&self) -> (f64, f64) {
        let nu = if self.pulse.is_sinc() {
            0.25
        } else {
            0.5 * self.pulse.rolloff() / self.c()
        };
        (0.25, nu)
    }

    /// Doppler values where `A(tau, .)` changes analytic form: differences of
    /// spectral edges, shifted by the lattice.
    fn doppler_kinks(&self) -> Vec<f64> {
        let edges = self.pulse.breakpoints();
        let c = self.c();
        let mut out = Vec::new();
        for a in &edges {
            for b in &edges {
                for n in -1..=1 {
                    out.push(a - b + n as f64 * c);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `int int C_H f` in normalized units, with the Doppler kinks of `A`
    /// split out.
    fn integrate<F: FnMut(f64, f64) -> f64>(&self, nu_panel_cap: f64, f: F) -> f64 {
        let (tp, np) = self.panels();
        self.normalized
            .integrate_split(&self.doppler_kinks(), (tp, np.min(nu_panel_cap)), PANEL_ORDER, f)
    }
}

/// `R_h[dk, dn] = int int C_H |A|^2 e^{j 2 pi (dk T nu - dn F tau)}`.
pub fn corr(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, dk: i64, dn: i64) -> Result<Complex64> {
    let setting = Setting::new(pulse, grid, model)?;
    Ok(corr_in(&setting, dk, dn))
}

type CorrKey = ([u64; 9], i64, i64);

static CORR_MEMO: LazyLock<Mutex<HashMap<CorrKey, Complex64>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn setting_key(s: &Setting) -> [u64; 9] {
    let mut k = [0u64; 9];
    k[0] = s.pulse.tf_product().to_bits();
    k[1] = s.grid.t.to_bits();
    k[2] = s.grid.f.to_bits();
    let (tag, vals): (u64, [f64; 5]) = match s.model {
        ScatteringModel::BrickRect { tau0, nu0 } => (1, [tau0, nu0, 0.0, 0.0, 0.0]),
        ScatteringModel::TwoLevelBrick {
            tau0,
            nu0,
            epsilon,
            tau_out,
            nu_out,
        } => (2, [tau0, nu0, epsilon, tau_out, nu_out]),
        ScatteringModel::SeparableJakesExp {
            nu_d,
            tau_rms,
            tau_cut,
        } => (3, [nu_d, tau_rms, tau_cut, 0.0, 0.0]),
    };
    k[3] = tag;
    for (i, v) in vals.iter().enumerate() {
        k[4 + i] = v.to_bits();
    }
    k
}

fn corr_in(setting: &Setting, dk: i64, dn: i64) -> Complex64 {
    let key = (setting_key(setting), dk, dn);
    if let Some(v) = CORR_MEMO.lock().unwrap().get(&key) {
        return *v;
    }
    let pulse = setting.pulse;
    let c = setting.c();
    let cycles = (dk.unsigned_abs() as f64 * c).max(1e-300);
    let cap = 0.25 / cycles;
    let weight = |tau: f64, nu: f64| ambiguity(&pulse, AmbiguityQuery::new(tau, nu)).norm_sqr();
    let phase = |tau: f64, nu: f64| 2.0 * PI * c * (dk as f64 * nu - dn as f64 * tau);
    let value = if dn == 0 && dk == 0 {
        Complex64::new(setting.integrate(f64::INFINITY, weight), 0.0)
    } else {
        let tau_cap = 0.25 / (dn.unsigned_abs() as f64 * c).max(1e-300);
        let (tp, np) = setting.panels();
        let panel = (tp.min(tau_cap), np.min(cap));
        let kinks = setting.doppler_kinks();
        let m = setting.normalized_model();
        let re = m.integrate_split(&kinks, panel, PANEL_ORDER, |t, n| weight(t, n) * phase(t, n).cos());
        let im = m.integrate_split(&kinks, panel, PANEL_ORDER, |t, n| weight(t, n) * phase(t, n).sin());
        Complex64::new(re, im)
    };
    CORR_MEMO.lock().unwrap().insert(key, value);
    value
}

/// Diagonal channel power `int int C_H |A|^2`.
pub fn sigma_g2(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel) -> Result<f64> {
    Ok(corr(pulse, grid, model, 0, 0)?.re)
}

/// Interference power `int int C_H S_g`.
pub fn sigma_i2(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, method: TailMethod) -> Result<f64> {
    let setting = Setting::new(pulse, grid, model)?;
    sigma_i2_in(&setting, method)
}

fn sigma_i2_in(setting: &Setting, method: TailMethod) -> Result<f64> {
    let pulse = setting.pulse;
    match method {
        TailMethod::Periodized => {
            let mut slice: Option<DopplerSlice> = None;
            Ok(setting.integrate(f64::INFINITY, |tau, nu| {
                if slice.as_ref().map(|s| s.nu()) != Some(nu) {
                    slice = Some(DopplerSlice::new(&pulse, nu));
                }
                slice.as_ref().unwrap().tail(&pulse, tau)
            }))
        }
        TailMethod::Rings(policy) => {
            let square = WhGrid::square(pulse.tf_product());
            let mut failure = None;
            let v = setting.integrate(f64::INFINITY, |tau, nu| {
                match crate::ambiguity::ambiguity_lattice_tail(&pulse, &square, AmbiguityQuery::new(tau, nu), &policy) {
                    Ok(r) => r.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            });
            match failure {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
    }
}

/// Scalar spectrum
/// `c_H(theta, phi) = (1 / TF) sum_{k,n} C_H((phi - n)/F, (theta - k)/T) |A(...)|^2`.
pub fn scalar_psd(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, theta: f64, phi: f64) -> Result<f64> {
    if theta.abs() > 0.5 || phi.abs() > 0.5 {
        return Err(Error::invalid("theta and phi must lie in [-1/2, 1/2]"));
    }
    let setting = Setting::new(pulse, grid, model)?;
    let c = setting.c();
    let m = setting.normalized_model();
    let sup = m.support();
    let n_range = ((phi - c * sup.tau.1).floor() as i64, (phi - c * sup.tau.0).ceil() as i64);
    let k_range = ((theta - c * sup.nu.1).floor() as i64, (theta - c * sup.nu.0).ceil() as i64);
    let mut total = 0.0;
    for n in n_range.0..=n_range.1 {
        let tau = (phi - n as f64) / c;
        for k in k_range.0..=k_range.1 {
            let nu = (theta - k as f64) / c;
            let d = m.density(tau, nu);
            if d > 0.0 {
                total += d * ambiguity(pulse, AmbiguityQuery::new(tau, nu)).norm_sqr();
            }
        }
    }
    Ok(total / (c * c))
}

/// First column `r[d] = Theta(theta)_{d,0}`, `d = 0..n`, of the Toeplitz
/// matrix spectrum, evaluated by Poisson summation in Doppler.
fn psd_column(setting: &Setting, theta: f64, n: usize) -> Vec<Complex64> {
    let pulse = setting.pulse;
    let c = setting.c();
    let m = setting.normalized_model();
    let sup = m.support();
    let k_lo = (c * sup.nu.0 - theta).floor() as i64;
    let k_hi = (c * sup.nu.1 - theta).ceil() as i64;
    let tau_panel = (0.25f64).min(0.25 / (n.max(1) as f64 * c));
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for k in k_lo..=k_hi {
        let nu = (theta + k as f64) / c;
        let breaks = m.delay_breaks(nu);
        for w in breaks.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let panels = ((len / tau_panel).ceil() as usize).max(1);
            let step = len / panels as f64;
            for p in 0..panels {
                let a = w[0] + p as f64 * step;
                for (tau, wt) in crate::quad::mapped(a, a + step, PANEL_ORDER) {
                    let d = m.density(tau, nu);
                    if d == 0.0 {
                        continue;
                    }
                    let weight = wt * d * ambiguity(&pulse, AmbiguityQuery::new(tau, nu)).norm_sqr();
                    let step_phase = Complex64::from_polar(1.0, -2.0 * PI * c * tau);
                    let mut e = Complex64::new(1.0, 0.0);
                    for entry in col.iter_mut() {
                        *entry += weight * e;
                        e *= step_phase;
                    }
                }
            }
        }
    }
    for entry in col.iter_mut() {
        *entry /= c;
    }
    col
}

fn toeplitz(col: &[Complex64]) -> DMatrix<Complex64> {
    let n = col.len();
    DMatrix::from_fn(n, n, |i, j| if i >= j { col[i - j] } else { col[j - i].conj() })
}

/// Matrix spectrum `Theta(theta)` for `n` subcarriers.
pub fn matrix_psd(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, theta: f64, n: usize) -> Result<DMatrix<Complex64>> {
    if theta.abs() > 0.5 {
        return Err(Error::invalid("theta must lie in [-1/2, 1/2]"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one subcarrier"));
    }
    let setting = Setting::new(pulse, grid, model)?;
    Ok(toeplitz(&psd_column(&setting, theta, n)))
}

/// Eigenvalues of `Theta(theta)`, ascending. Fails on eigenvalues below
/// [`PSD_TOL`].
pub(crate) fn psd_eigenvalues(setting: &Setting, theta: f64, n: usize) -> Result<Vec<f64>> {
    let m = toeplitz(&psd_column(setting, theta, n));
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    if eig[0] < PSD_TOL {
        return Err(Error::no_convergence(
            "matrix spectrum",
            format!("eigenvalue {:e} at theta = {theta}", eig[0]),
        ));
    }
    Ok(eig)
}

/// `Theta(theta)` from a truncated correlation series
/// `sum_{|dk| <= k_corr} R[dk] e^{-j 2 pi dk theta}`.
pub fn matrix_psd_truncated(
    pulse: &PulseSpec,
    grid: &WhGrid,
    model: &ScatteringModel,
    theta: f64,
    n: usize,
    k_corr: usize,
) -> Result<DMatrix<Complex64>> {
    if k_corr == 0 {
        return Err(Error::invalid("k_corr must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one subcarrier"));
    }
    let setting = Setting::new(pulse, grid, model)?;
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for dk in -(k_corr as i64)..=(k_corr as i64) {
        let rot = Complex64::from_polar(1.0, -2.0 * PI * dk as f64 * theta);
        for (d, entry) in col.iter_mut().enumerate() {
            *entry += corr_in(&setting, dk, d as i64) * rot;
        }
    }
    Ok(toeplitz(&col))
}

/// Smallest `K` with `max_{|dn| < n} |R_h[K, dn]| < 1e-9 sigma_g^2`, searched
/// up to `cap`.
pub fn default_k_corr(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, n: usize, cap: usize) -> Result<usize> {
    let setting = Setting::new(pulse, grid, model)?;
    let sg = corr_in(&setting, 0, 0).re;
    let mut last = f64::INFINITY;
    for k in 1..=cap {
        last = (0..n.max(1) as i64)
            .map(|d| corr_in(&setting, k as i64, d).norm())
            .fold(0.0, f64::max);
        if last < 1e-9 * sg {
            return Ok(k);
        }
    }
    Err(Error::no_convergence(
        "correlation truncation",
        format!("|R_h[{cap}, .]| = {last:e} is still above 1e-9 sigma_g^2 = {:e}", 1e-9 * sg),
    ))
}

/// Worst-case diagonal power and lattice interference over the support box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalSir {
    /// `min |A|^2` over the box.
    pub m_g: f64,
    /// `max S_g` over the box.
    pub max_tail: f64,
    /// Points `(tau, nu, value)` in physical units that certify each extremum:
    /// best seed, refined point and best verification point.
    pub m_certificate: Vec<[f64; 3]>,
    pub max_certificate: Vec<[f64; 3]>,
    pub evaluations: usize,
}

impl ExtremalSir {
    pub fn sir(&self) -> f64 {
        self.m_g / self.max_tail
    }
}

type SirKey = (u64, u64, u64);

static SIR_MEMO: LazyLock<Mutex<HashMap<SirKey, ExtremalSir>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// `m_g = min_D |A|^2` and `M_g = max_D S_g` over `D = [-tau0, tau0] x [-nu0, nu0]`.
///
/// Both functions are even in delay and in Doppler separately, so the search
/// runs on one quadrant: a `SEED_GRID` square grid, Nelder-Mead refinement
/// clamped to the quadrant, then a `VERIFY_GRID` pass over the full box.
pub fn extremal_sir(pulse: &PulseSpec, grid: &WhGrid, tau0: f64, nu0: f64) -> Result<ExtremalSir> {
    grid.check_orthonormal(pulse)?;
    if !(tau0 >= 0.0 && nu0 >= 0.0 && tau0.is_finite() && nu0.is_finite()) {
        return Err(Error::invalid("box half-widths must be non-negative"));
    }
    let s = grid.scale();
    let (t0, n0) = (tau0 / s, nu0 * s);
    let key = (pulse.tf_product().to_bits(), t0.to_bits(), n0.to_bits());
    if let Some(hit) = SIR_MEMO.lock().unwrap().get(&key) {
        return Ok(rescale_certificates(hit.clone(), s));
    }
    let found = extremal_normalized(pulse, t0, n0)?;
    SIR_MEMO.lock().unwrap().insert(key, found.clone());
    Ok(rescale_certificates(found, s))
}

fn rescale_certificates(mut e: ExtremalSir, s: f64) -> ExtremalSir {
    for p in e.m_certificate.iter_mut().chain(e.max_certificate.iter_mut()) {
        p[0] *= s;
        p[1] /= s;
    }
    e
}

fn extremal_normalized(pulse: &PulseSpec, t0: f64, n0: f64) -> Result<ExtremalSir> {
    let diag = |tau: f64, nu: f64| ambiguity(pulse, AmbiguityQuery::new(tau, nu)).norm_sqr();
    let tail = |tau: f64, nu: f64| DopplerSlice::new(pulse, nu).tail(pulse, tau);
    let mut evals = 0usize;

    if t0 == 0.0 && n0 == 0.0 {
        let m = diag(0.0, 0.0);
        let big = tail(0.0, 0.0);
        return Ok(ExtremalSir {
            m_g: m,
            max_tail: big,
            m_certificate: vec![[0.0, 0.0, m]],
            max_certificate: vec![[0.0, 0.0, big]],
            evaluations: 2,
        });
    }

    let axis = |hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
    };
    let taus = axis(t0, SEED_GRID);
    let nus = axis(n0, SEED_GRID);

    let mut best_m = [0.0, 0.0, f64::INFINITY];
    let mut best_big = [0.0, 0.0, f64::NEG_INFINITY];
    for &nu in &nus {
        let slice = DopplerSlice::new(pulse, nu);
        for &tau in &taus {
            let a = diag(tau, nu);
            let total = slice.lattice_energy(tau);
            let t = (total - a).max(0.0);
            evals += 1;
            if a < best_m[2] {
                best_m = [tau, nu, a];
            }
            if t > best_big[2] {
                best_big = [tau, nu, t];
            }
        }
    }

    let step = [t0.max(1e-300) / (SEED_GRID - 1) as f64, n0.max(1e-300) / (SEED_GRID - 1) as f64];
    let lo = [0.0, 0.0];
    let hi = [t0, n0];
    let refine_m = nelder_mead_box(|p| diag(p[0], p[1]), [best_m[0], best_m[1]], lo, hi, step, 1e-9, 4000);
    let refine_big = nelder_mead_box(|p| -tail(p[0], p[1]), [best_big[0], best_big[1]], lo, hi, step, 1e-9, 4000);
    evals += refine_m.evaluations + refine_big.evaluations;

    let mut m_cert = vec![best_m, [refine_m.x[0], refine_m.x[1], refine_m.value]];
    let mut big_cert = vec![best_big, [refine_big.x[0], refine_big.x[1], -refine_big.value]];
    let mut m_g = best_m[2].min(refine_m.value);
    let mut max_tail = best_big[2].max(-refine_big.value);

    // verification over the full box
    let full = |half: f64| -> Vec<f64> {
        (0..VERIFY_GRID)
            .map(|i| -half + 2.0 * half * i as f64 / (VERIFY_GRID - 1) as f64)
            .collect()
    };
    let mut verify_m = [0.0, 0.0, f64::INFINITY];
    let mut verify_big = [0.0, 0.0, f64::NEG_INFINITY];
    for &nu in &full(n0) {
        let slice = DopplerSlice::new(pulse, nu);
        for &tau in &full(t0) {
            let a = diag(tau, nu);
            let t = (slice.lattice_energy(tau) - a).max(0.0);
            evals += 1;
            if a < verify_m[2] {
                verify_m = [tau, nu, a];
            }
            if t > verify_big[2] {
                verify_big = [tau, nu, t];
            }
        }
    }
    m_cert.push(verify_m);
    big_cert.push(verify_big);
    let slack = 1e-12;
    if verify_m[2] < m_g - slack || verify_big[2] > max_tail * (1.0 + 1e-9) + slack {
        return Err(Error::no_convergence(
            "extremal search",
            format!(
                "verification pass beat the quadrant search: m {} vs {}, M {} vs {}",
                verify_m[2], m_g, verify_big[2], max_tail
            ),
        ));
    }
    m_g = m_g.min(verify_m[2]);
    max_tail = max_tail.max(verify_big[2]);
    Ok(ExtremalSir {
        m_g,
        max_tail,
        m_certificate: m_cert,
        max_certificate: big_cert,
        evaluations: evals,
    })
}

/// First-order constants of `m_g ~ 1 - c_m spread` and `M_g ~ c_M spread`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorConstants {
    pub c_m: f64,
    pub c_max: f64,
    pub time_spread: f64,
    pub freq_spread: f64,
    /// Lattice rings summed for `c_max`.
    pub rings: u32,
}

/// Partial derivatives of `A` at the lattice point `(-k c, -n c)`:
/// `(dA/dnu, dA/dtau)`.
pub fn lattice_derivatives(pulse: &PulseSpec, k: i64, n: i64) -> (Complex64, Complex64) {
    let c = pulse.support_len();
    let q = AmbiguityQuery::new(-(k as f64) * c, -(n as f64) * c);
    (doppler_derivative(pulse, q), delay_derivative(pulse, q))
}

/// `c_m = pi^2 (d_t^2 + d_f^2)` and
/// `c_M = sum_{(k,n) != 0} (|dA/dnu|^2 + |dA/dtau|^2) / 4` at the lattice points.
pub fn taylor_constants(pulse: &PulseSpec, grid: &WhGrid, policy: &AdaptivePolicy) -> Result<TaylorConstants> {
    grid.check_orthonormal(pulse)?;
    if (grid.t - grid.f).abs() > 1e-12 * grid.t {
        return Err(Error::precondition("Taylor constants need the square lattice T = F"));
    }
    let moments = pulse.moments()?;
    let c = pulse.support_len();
    let term = |k: i64, n: i64| {
        // no overlap of G(. - n c) and G
        if n.unsigned_abs() as f64 * c >= c {
            return 0.0;
        }
        let (dnu, dtau) = lattice_derivatives(pulse, k, n);
        dnu.norm_sqr() + dtau.norm_sqr()
    };
    let mut sum = 0.0;
    let mut rings = 0;
    let mut converged = false;
    for r in 1..=policy.max_ring as i64 {
        let mut ring = 0.0;
        for k in -r..=r {
            ring += term(k, r) + term(k, -r);
        }
        for n in (-r + 1)..r {
            ring += term(r, n) + term(-r, n);
        }
        sum += ring;
        rings = r as u32;
        if ring < policy.ring_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::no_convergence(
            "Taylor constant c_M",
            format!("ring {} still above {:e}", policy.max_ring, policy.ring_tol),
        ));
    }
    Ok(TaylorConstants {
        c_m: PI * PI * (moments.time_spread + moments.freq_spread),
        c_max: 0.25 * sum,
        time_spread: moments.time_spread,
        freq_spread: moments.freq_spread,
        rings,
    })
}

/// Derived statistics of one (pulse, grid, channel, box) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStats {
    pub sigma_g2: f64,
    pub sigma_i2: f64,
    pub m_g: f64,
    pub max_tail: f64,
    /// Gauss-Legendre order and panel lengths `(delay, Doppler)` used.
    pub quadrature: (usize, f64, f64),
}

impl ChannelStats {
    pub fn compute(pulse: &PulseSpec, grid: &WhGrid, model: &ScatteringModel, tau0: f64, nu0: f64) -> Result<Self> {
        let setting = Setting::new(pulse, grid, model)?;
        let sigma_g2 = corr_in(&setting, 0, 0).re;
        let sigma_i2 = sigma_i2_in(&setting, TailMethod::Periodized)?;
        let ext = extremal_sir(pulse, grid, tau0, nu0)?;
        let (tp, np) = setting.panels();
        Ok(Self {
            sigma_g2,
            sigma_i2,
            m_g: ext.m_g,
            max_tail: ext.max_tail,
            quadrature: (PANEL_ORDER, tp, np),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brick(spread: f64) -> ScatteringModel {
        let h = 0.5 * spread.sqrt();
        ScatteringModel::BrickRect { tau0: h, nu0: h }
    }

    #[test]
    fn sigma_g2_near_one_for_tiny_spread() {
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::square(1.02);
        let s = sigma_g2(&p, &g, &brick(1e-8)).unwrap();
        assert!(s >= 1.0 - 1e-5 && s <= 1.0, "{s}");
    }

    #[test]
    fn sigma_i2_vanishes_with_spread() {
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::square(1.02);
        let s = sigma_i2(&p, &g, &brick(1e-10), TailMethod::Periodized).unwrap();
        assert!(s <= 1e-6, "{s}");
    }

    #[test]
    fn origin_box_gives_unit_diagonal() {
        let p = PulseSpec::new(1.02).unwrap();
        let e = extremal_sir(&p, &WhGrid::square(1.02), 0.0, 0.0).unwrap();
        assert!((e.m_g - 1.0).abs() < 1e-14);
        assert!(e.max_tail < 1e-12);
    }

    #[test]
    fn unmatched_grid_is_rejected() {
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::square(1.05);
        assert!(matches!(sigma_g2(&p, &g, &brick(1e-4)), Err(Error::Precondition(_))));
        assert!(matches!(extremal_sir(&p, &g, 0.1, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn psd_rejects_out_of_range_theta() {
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::square(1.02);
        assert!(matrix_psd(&p, &g, &brick(1e-4), 0.6, 4).is_err());
        assert!(scalar_psd(&p, &g, &brick(1e-4), 0.1, -0.7).is_err());
    }

    #[test]
    fn taylor_constants_need_square_grid() {
        let p = PulseSpec::new(1.02).unwrap();
        let g = WhGrid::new(2.0, 0.51).unwrap();
        assert!(taylor_constants(&p, &g, &AdaptivePolicy::default()).is_err());
    }
}

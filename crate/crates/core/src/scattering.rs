//! Scattering functions, the underspread box, and grid matching.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::pulse::WhGrid;
use crate::quad;
use crate::{Error, Result};

/// Unit-volume scattering function `C_H(tau, nu)`; delays in seconds, Doppler
/// shifts in hertz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ScatteringModel {
    /// Uniform on `[-tau0, tau0] x [-nu0, nu0]`.
    BrickRect { tau0: f64, nu0: f64 },
    /// Mass `1 - epsilon` uniform on the inner box and `epsilon` uniform on the
    /// rest of the outer box.
    TwoLevelBrick {
        tau0: f64,
        nu0: f64,
        epsilon: f64,
        tau_out: f64,
        nu_out: f64,
    },
    /// Jakes Doppler spectrum times a one-sided exponential delay profile cut
    /// at `tau_cut` and renormalized.
    SeparableJakesExp { nu_d: f64, tau_rms: f64, tau_cut: f64 },
}

/// Axis-aligned rectangle in the delay-Doppler plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub tau: (f64, f64),
    pub nu: (f64, f64),
}

impl Rect {
    fn centered(tau0: f64, nu0: f64) -> Self {
        Self {
            tau: (-tau0, tau0),
            nu: (-nu0, nu0),
        }
    }

    fn intersect(&self, other: &Rect) -> Option<Rect> {
        let tau = (self.tau.0.max(other.tau.0), self.tau.1.min(other.tau.1));
        let nu = (self.nu.0.max(other.nu.0), self.nu.1.min(other.nu.1));
        (tau.1 > tau.0 && nu.1 > nu.0).then_some(Rect { tau, nu })
    }
}

impl ScatteringModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            Self::BrickRect { tau0, nu0 } => {
                positive("tau0", tau0)?;
                positive("nu0", nu0)
            }
            Self::TwoLevelBrick {
                tau0,
                nu0,
                epsilon,
                tau_out,
                nu_out,
            } => {
                positive("tau0", tau0)?;
                positive("nu0", nu0)?;
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(Error::invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
                }
                if !(tau_out > tau0 && nu_out > nu0 && tau_out.is_finite() && nu_out.is_finite()) {
                    return Err(Error::invalid(
                        "outer box must strictly contain the inner box",
                    ));
                }
                Ok(())
            }
            Self::SeparableJakesExp {
                nu_d,
                tau_rms,
                tau_cut,
            } => {
                positive("nu_d", nu_d)?;
                positive("tau_rms", tau_rms)?;
                positive("tau_cut", tau_cut)
            }
        }
    }

    /// `C_H(tau, nu)`; infinite on the Jakes band edge.
    pub fn density(&self, tau: f64, nu: f64) -> f64 {
        match *self {
            Self::BrickRect { tau0, nu0 } => {
                if tau.abs() <= tau0 && nu.abs() <= nu0 {
                    1.0 / (4.0 * tau0 * nu0)
                } else {
                    0.0
                }
            }
            Self::TwoLevelBrick {
                tau0,
                nu0,
                epsilon,
                tau_out,
                nu_out,
            } => {
                if tau.abs() <= tau0 && nu.abs() <= nu0 {
                    (1.0 - epsilon) / (4.0 * tau0 * nu0)
                } else if tau.abs() <= tau_out && nu.abs() <= nu_out {
                    epsilon / (4.0 * (tau_out * nu_out - tau0 * nu0))
                } else {
                    0.0
                }
            }
            Self::SeparableJakesExp { nu_d, .. } => {
                if nu.abs() >= nu_d {
                    return if nu.abs() == nu_d && self.delay_profile(tau) > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                }
                self.delay_profile(tau) / (PI * (nu_d * nu_d - nu * nu).sqrt())
            }
        }
    }

    fn delay_profile(&self, tau: f64) -> f64 {
        match *self {
            Self::SeparableJakesExp { tau_rms, tau_cut, .. } => {
                if (0.0..=tau_cut).contains(&tau) {
                    (-tau / tau_rms).exp() / (tau_rms * -(-tau_cut / tau_rms).exp_m1())
                } else {
                    0.0
                }
            }
            _ => unreachable!("delay profile only exists for the separable model"),
        }
    }

    /// Bounding box of the support.
    pub fn support(&self) -> Rect {
        match *self {
            Self::BrickRect { tau0, nu0 } => Rect::centered(tau0, nu0),
            Self::TwoLevelBrick { tau_out, nu_out, .. } => Rect::centered(tau_out, nu_out),
            Self::SeparableJakesExp { nu_d, tau_cut, .. } => Rect {
                tau: (0.0, tau_cut),
                nu: (-nu_d, nu_d),
            },
        }
    }

    /// Rectangles of constant or smooth density tiling the support, with the
    /// mass density assigned to each.
    fn pieces(&self) -> Vec<(Rect, Option<f64>)> {
        match *self {
            Self::BrickRect { tau0, nu0 } => {
                vec![(Rect::centered(tau0, nu0), Some(1.0 / (4.0 * tau0 * nu0)))]
            }
            Self::TwoLevelBrick {
                tau0,
                nu0,
                epsilon,
                tau_out,
                nu_out,
            } => {
                let outer = epsilon / (4.0 * (tau_out * nu_out - tau0 * nu0));
                let inner = (1.0 - epsilon) / (4.0 * tau0 * nu0);
                let taus = [-tau_out, -tau0, tau0, tau_out];
                let nus = [-nu_out, -nu0, nu0, nu_out];
                let mut out = Vec::with_capacity(9);
                for i in 0..3 {
                    for j in 0..3 {
                        let r = Rect {
                            tau: (taus[i], taus[i + 1]),
                            nu: (nus[j], nus[j + 1]),
                        };
                        let d = if i == 1 && j == 1 { inner } else { outer };
                        out.push((r, Some(d)));
                    }
                }
                out
            }
            Self::SeparableJakesExp { .. } => vec![(self.support(), None)],
        }
    }

    /// Delay breakpoints of `C_H(., nu)` within its support at Doppler `nu`.
    pub fn delay_breaks(&self, nu: f64) -> Vec<f64> {
        match *self {
            Self::BrickRect { tau0, nu0 } => {
                if nu.abs() <= nu0 {
                    vec![-tau0, tau0]
                } else {
                    vec![]
                }
            }
            Self::TwoLevelBrick {
                tau0,
                nu0,
                tau_out,
                nu_out,
                ..
            } => {
                if nu.abs() <= nu0 {
                    vec![-tau_out, -tau0, tau0, tau_out]
                } else if nu.abs() <= nu_out {
                    vec![-tau_out, tau_out]
                } else {
                    vec![]
                }
            }
            Self::SeparableJakesExp { nu_d, tau_cut, .. } => {
                if nu.abs() < nu_d {
                    vec![0.0, tau_cut]
                } else {
                    vec![]
                }
            }
        }
    }

    /// Doppler values where `C_H` changes piece.
    pub fn doppler_breaks(&self) -> Vec<f64> {
        match *self {
            Self::BrickRect { nu0, .. } => vec![-nu0, nu0],
            Self::TwoLevelBrick { nu0, nu_out, .. } => vec![-nu_out, -nu0, nu0, nu_out],
            Self::SeparableJakesExp { nu_d, .. } => vec![-nu_d, nu_d],
        }
    }

    /// Delay values where `C_H` changes piece.
    pub fn delay_edges(&self) -> Vec<f64> {
        match *self {
            Self::BrickRect { tau0, .. } => vec![-tau0, tau0],
            Self::TwoLevelBrick { tau0, tau_out, .. } => vec![-tau_out, -tau0, tau0, tau_out],
            Self::SeparableJakesExp { tau_cut, .. } => vec![0.0, tau_cut],
        }
    }

    /// `int int C_H(tau, nu) f(tau, nu) dtau dnu` with a tensor Gauss-Legendre
    /// rule of `order` points on panels no longer than `panel` in each axis.
    /// The Jakes singularity is removed by `nu = nu_d sin(x)`.
    pub fn integrate<F: FnMut(f64, f64) -> f64>(&self, panel: (f64, f64), order: usize, f: F) -> f64 {
        self.integrate_in(None, &[], panel, order, f)
    }

    /// Like [`integrate`](Self::integrate), with the Doppler axis also split at
    /// `nu_kinks` where `f` is not smooth.
    pub fn integrate_split<F: FnMut(f64, f64) -> f64>(
        &self,
        nu_kinks: &[f64],
        panel: (f64, f64),
        order: usize,
        f: F,
    ) -> f64 {
        self.integrate_in(None, nu_kinks, panel, order, f)
    }

    /// Like [`integrate`](Self::integrate), restricted to `clip`.
    pub fn integrate_in<F: FnMut(f64, f64) -> f64>(
        &self,
        clip: Option<Rect>,
        nu_kinks: &[f64],
        panel: (f64, f64),
        order: usize,
        mut f: F,
    ) -> f64 {
        let mut total = 0.0;
        for (piece, density) in self.pieces() {
            let Some(r) = (match clip {
                Some(c) => piece.intersect(&c),
                None => Some(piece),
            }) else {
                continue;
            };
            let tau_nodes = panel_nodes(r.tau, panel.0, order);
            match (density, *self) {
                (Some(d), _) => {
                    let nu_nodes = split_nodes(r.nu, nu_kinks.iter().copied(), panel.1, order);
                    for &(nu, wn) in &nu_nodes {
                        let mut inner = 0.0;
                        for &(tau, wt) in &tau_nodes {
                            inner += wt * f(tau, nu);
                        }
                        total += d * wn * inner;
                    }
                }
                (None, Self::SeparableJakesExp { nu_d, .. }) => {
                    // nu = nu_d sin(x): C_H dnu = p(tau) dx / pi
                    let x_range = ((r.nu.0 / nu_d).clamp(-1.0, 1.0).asin(), (r.nu.1 / nu_d).clamp(-1.0, 1.0).asin());
                    let x_kinks = nu_kinks.iter().map(|k| (k / nu_d).clamp(-1.0, 1.0).asin());
                    let x_nodes = split_nodes(x_range, x_kinks, panel.1 / nu_d, order);
                    for &(x, wx) in &x_nodes {
                        let nu = nu_d * x.sin();
                        let mut inner = 0.0;
                        for &(tau, wt) in &tau_nodes {
                            inner += wt * self.delay_profile(tau) * f(tau, nu);
                        }
                        total += wx * inner / PI;
                    }
                }
                (None, _) => unreachable!("only the separable model has a non-constant piece"),
            }
        }
        total
    }

    /// Total volume; 1 for a valid model.
    pub fn volume(&self) -> f64 {
        let s = self.support();
        let panel = ((s.tau.1 - s.tau.0) / 8.0, (s.nu.1 - s.nu.0) / 8.0);
        self.integrate(panel, 24, |_, _| 1.0)
    }

    /// The same channel seen on a lattice dilated by `s`:
    /// `C'(tau, nu) = C(s tau, nu / s)`.
    pub fn dilate(&self, s: f64) -> Self {
        match *self {
            Self::BrickRect { tau0, nu0 } => Self::BrickRect {
                tau0: tau0 / s,
                nu0: nu0 * s,
            },
            Self::TwoLevelBrick {
                tau0,
                nu0,
                epsilon,
                tau_out,
                nu_out,
            } => Self::TwoLevelBrick {
                tau0: tau0 / s,
                nu0: nu0 * s,
                epsilon,
                tau_out: tau_out / s,
                nu_out: nu_out * s,
            },
            Self::SeparableJakesExp {
                nu_d,
                tau_rms,
                tau_cut,
            } => Self::SeparableJakesExp {
                nu_d: nu_d * s,
                tau_rms: tau_rms / s,
                tau_cut: tau_cut / s,
            },
        }
    }

    /// The inner box and its leakage for the brick shapes.
    pub fn underspread_params(&self) -> Option<UnderspreadParams> {
        match *self {
            Self::BrickRect { tau0, nu0 } => Some(UnderspreadParams::new(tau0, nu0, 0.0)),
            Self::TwoLevelBrick {
                tau0, nu0, epsilon, ..
            } => Some(UnderspreadParams::new(tau0, nu0, epsilon)),
            Self::SeparableJakesExp { .. } => None,
        }
    }
}

fn split_nodes(range: (f64, f64), kinks: impl Iterator<Item = f64>, max_len: f64, order: usize) -> Vec<(f64, f64)> {
    let breaks = quad::clip_breaks(kinks.chain([range.0, range.1]), range.0, range.1);
    breaks
        .windows(2)
        .flat_map(|w| panel_nodes((w[0], w[1]), max_len, order))
        .collect()
}

fn panel_nodes(range: (f64, f64), max_len: f64, order: usize) -> Vec<(f64, f64)> {
    let len = range.1 - range.0;
    if len <= 0.0 {
        return Vec::new();
    }
    let panels = if max_len > 0.0 && max_len.is_finite() {
        ((len / max_len).ceil() as usize).clamp(1, 100_000)
    } else {
        1
    };
    let step = len / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let a = range.0 + p as f64 * step;
            quad::mapped(a, a + step, order)
        })
        .collect()
}

/// Support box `[-tau0, tau0] x [-nu0, nu0]`, its spread and the mass outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderspreadParams {
    pub tau0: f64,
    pub nu0: f64,
    pub spread: f64,
    pub epsilon: f64,
}

/// Limits below which a channel counts as underspread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderspreadThresholds {
    pub max_spread: f64,
    pub max_epsilon: f64,
}

impl Default for UnderspreadThresholds {
    fn default() -> Self {
        Self {
            max_spread: 1e-2,
            max_epsilon: 1e-2,
        }
    }
}

impl UnderspreadParams {
    pub fn new(tau0: f64, nu0: f64, epsilon: f64) -> Self {
        Self {
            tau0,
            nu0,
            spread: 4.0 * tau0 * nu0,
            epsilon,
        }
    }

    /// Square box of spread `spread` in normalized units.
    pub fn square(spread: f64, epsilon: f64) -> Self {
        let half = 0.5 * spread.sqrt();
        Self::new(half, half, epsilon)
    }

    pub fn is_underspread(&self, limits: &UnderspreadThresholds) -> bool {
        self.spread <= limits.max_spread && self.epsilon <= limits.max_epsilon
    }
}

/// `1 - int int_{[-tau0,tau0] x [-nu0,nu0]} C_H`, clamped to `[0, 1]`.
pub fn leakage(model: &ScatteringModel, tau0: f64, nu0: f64) -> Result<f64> {
    model.validate()?;
    if !(tau0 >= 0.0 && nu0 >= 0.0) {
        return Err(Error::invalid("box half-widths must be non-negative"));
    }
    let clip = Rect::centered(tau0, nu0);
    let s = model.support();
    let panel = ((s.tau.1 - s.tau.0) / 16.0, (s.nu.1 - s.nu.0) / 16.0);
    let inside = model.integrate_in(Some(clip), &[], panel, 32, |_, _| 1.0);
    Ok((1.0 - inside).clamp(0.0, 1.0))
}

/// Lattice with `nu0 T = tau0 F` and `T F = tf`.
pub fn grid_match(tau0: f64, nu0: f64, tf: f64) -> Result<WhGrid> {
    if !(tau0 > 0.0 && nu0 > 0.0) {
        return Err(Error::invalid("tau0 and nu0 must be positive"));
    }
    if !(tf > 1.0 && tf < 2.0) {
        return Err(Error::invalid(format!("grid product must lie in (1, 2), got {tf}")));
    }
    WhGrid::new((tf * tau0 / nu0).sqrt(), (tf * nu0 / tau0).sqrt())
}

/// A matched problem rescaled onto the square lattice `sqrt(TF) x sqrt(TF)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSquare {
    pub model: ScatteringModel,
    pub grid: WhGrid,
    /// `sqrt(spread) / 2`, both delay and Doppler half-width.
    pub half_side: f64,
    /// The dilation applied, `sqrt(tau0 / nu0)`.
    pub beta: f64,
}

/// Dilate a matched (model, grid, box) onto the square lattice.
pub fn canonical_square(model: &ScatteringModel, grid: &WhGrid, tau0: f64, nu0: f64) -> Result<CanonicalSquare> {
    if !(tau0 > 0.0 && nu0 > 0.0) {
        return Err(Error::invalid("tau0 and nu0 must be positive"));
    }
    let lhs = nu0 * grid.t;
    let rhs = tau0 * grid.f;
    if (lhs - rhs).abs() > 1e-9 * lhs.abs().max(rhs.abs()) {
        return Err(Error::precondition(format!(
            "grid is not matched to the box: nu0 T = {lhs:e}, tau0 F = {rhs:e}"
        )));
    }
    let beta = (tau0 / nu0).sqrt();
    Ok(CanonicalSquare {
        model: model.dilate(beta),
        grid: WhGrid::square(grid.product()),
        half_side: (tau0 * nu0).sqrt(),
        beta,
    })
}

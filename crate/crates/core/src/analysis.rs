//! Finite-SNR studies: lower-to-upper bound ratio curves, the SNR interval
//! where the ratio clears a threshold, and the SIR trade-off against `TF`.
//!
//! All studies use the square support `[-sqrt(D)/2, sqrt(D)/2]^2` of spread `D`
//! on the matched square lattice, bandwidth 1 and no spillover.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{awgn_upper_approx, lower_bound_cor2, BoundResult};
use crate::optim::bisect;
use crate::pulse::{PulseSpec, WhGrid};
use crate::stats::{extremal_sir, ExtremalSir};
use crate::{Error, Result};

/// SNR scan used by [`snr_range`], in dB.
pub const SCAN_LO_DB: f64 = -40.0;
pub const SCAN_HI_DB: f64 = 80.0;
pub const SCAN_STEP_DB: f64 = 0.25;
/// Width to which each threshold crossing is bisected, in dB.
pub const CROSSING_TOL_DB: f64 = 0.01;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Axes of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub snr_db: Vec<f64>,
    pub tf: Vec<f64>,
    pub spread: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub threshold: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("snr_db", &self.snr_db),
            ("tf", &self.tf),
            ("delta_h", &self.spread),
            ("epsilon", &self.epsilon),
        ] {
            if axis.is_empty() {
                return Err(Error::invalid(format!("{name} grid is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} grid has non-finite entries")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(format!("{name} grid must be strictly increasing")));
            }
        }
        if self.tf.iter().any(|&t| !(1.0..2.0).contains(&t)) {
            return Err(Error::invalid("tf values must lie in [1, 2)"));
        }
        if self.spread.iter().any(|&d| d <= 0.0) || self.epsilon.iter().any(|&e| !(0.0..1.0).contains(&e)) {
            return Err(Error::invalid("delta_h must be positive and epsilon in [0, 1)"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Pulse, lattice and box statistics for one `(tf, spread)` pair, reused across
/// SNR and leakage values.
#[derive(Debug, Clone)]
pub struct PlateauSetup {
    pub pulse: PulseSpec,
    pub grid: WhGrid,
    pub half: f64,
    pub ext: ExtremalSir,
}

impl PlateauSetup {
    pub fn new(tf: f64, spread: f64) -> Result<Self> {
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::invalid(format!("spread must be positive, got {spread}")));
        }
        let pulse = PulseSpec::from_tf(tf)?;
        let grid = WhGrid::square(tf);
        let half = 0.5 * spread.sqrt();
        let ext = extremal_sir(&pulse, &grid, half, half)?;
        Ok(Self { pulse, grid, half, ext })
    }

    pub fn bound(&self, rho: f64, eps: f64) -> Result<BoundResult> {
        lower_bound_cor2(&self.pulse, &self.grid, rho, self.half, self.half, eps, &self.ext)
    }

    /// `(lower bound, upper bound, ratio)` per hertz at `snr_db`.
    pub fn ratio(&self, snr_db: f64, eps: f64) -> Result<(BoundResult, f64, f64)> {
        let rho = db_to_linear(snr_db);
        let lb = self.bound(rho, eps)?;
        let ub = awgn_upper_approx(1.0, rho, eps);
        Ok((lb, ub, lb.value / ub))
    }
}

/// SNR interval over which the ratio stays at or above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrRange {
    /// Outermost `(min, max)` crossings in dB, `None` if the threshold is
    /// never reached.
    pub interval: Option<(f64, f64)>,
    /// Every crossing found, ascending.
    pub crossings: Vec<f64>,
    /// The ratio already clears the threshold at the lower or upper scan
    /// edge, so that end of the interval is the scan edge.
    pub open_low: bool,
    pub open_high: bool,
}

/// Scan `[SCAN_LO_DB, SCAN_HI_DB]` at `step_db`, then bisect each sign change
/// of `ratio - threshold` to `CROSSING_TOL_DB`.
pub fn snr_range_with(setup: &PlateauSetup, eps: f64, threshold: f64, step_db: f64) -> Result<SnrRange> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let n = ((SCAN_HI_DB - SCAN_LO_DB) / step_db).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| SCAN_LO_DB + i as f64 * step_db).collect();
    let excess = |db: f64| -> Result<f64> { Ok(setup.ratio(db, eps)?.2 - threshold) };
    let values = grid.iter().map(|&db| excess(db)).collect::<Result<Vec<f64>>>()?;
    let above = |v: f64| v >= 0.0;

    let mut crossings = Vec::new();
    for i in 0..n {
        if above(values[i]) != above(values[i + 1]) {
            let mut failure = None;
            let x = bisect(
                |db| match excess(db) {
                    Ok(v) if above(v) => 1.0,
                    Ok(_) => -1.0,
                    Err(e) => {
                        failure.get_or_insert(e);
                        -1.0
                    }
                },
                grid[i],
                grid[i + 1],
                CROSSING_TOL_DB,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            crossings.push(x);
        }
    }
    let open_low = above(values[0]);
    let open_high = above(values[n]);
    let any_above = values.iter().any(|&v| above(v));
    let interval = if !any_above {
        None
    } else {
        let lo = if open_low { grid[0] } else { crossings[0] };
        let hi = if open_high { grid[n] } else { *crossings.last().unwrap() };
        Some((lo, hi))
    };
    Ok(SnrRange {
        interval,
        crossings,
        open_low,
        open_high,
    })
}

pub fn snr_range(spread: f64, eps: f64, tf: f64, threshold: f64) -> Result<SnrRange> {
    snr_range_with(&PlateauSetup::new(tf, spread)?, eps, threshold, SCAN_STEP_DB)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub tf: f64,
    pub delta_h: f64,
    pub epsilon: f64,
    pub snr_db: f64,
    pub lb_nat: f64,
    pub ub_nat: f64,
    pub ratio: f64,
    pub gamma_opt: f64,
    pub error: Option<String>,
}

/// Ratio rows over `tf x spread x epsilon x snr`, in that nesting order.
pub fn sweep_ratio(spec: &SweepSpec) -> Result<Vec<RatioRow>> {
    spec.validate()?;
    let setups: Vec<(f64, f64)> = spec
        .tf
        .iter()
        .flat_map(|&tf| spec.spread.iter().map(move |&d| (tf, d)))
        .collect();
    let rows = setups
        .par_iter()
        .map(|&(tf, d)| {
            let setup = PlateauSetup::new(tf, d);
            let mut rows = Vec::new();
            for &eps in &spec.epsilon {
                for &db in &spec.snr_db {
                    let mut row = RatioRow {
                        tf,
                        delta_h: d,
                        epsilon: eps,
                        snr_db: db,
                        lb_nat: f64::NAN,
                        ub_nat: f64::NAN,
                        ratio: f64::NAN,
                        gamma_opt: f64::NAN,
                        error: None,
                    };
                    match setup.as_ref().map_err(Clone::clone).and_then(|s| s.ratio(db, eps)) {
                        Ok((lb, ub, r)) => {
                            row.lb_nat = lb.value;
                            row.ub_nat = ub;
                            row.ratio = r;
                            row.gamma_opt = lb.gamma_opt;
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    rows.push(row);
                }
            }
            rows
        })
        .collect::<Vec<_>>();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SirRow {
    pub tf: f64,
    pub delta_h: f64,
    pub m_g: f64,
    pub max_tail: f64,
    pub sir: f64,
    pub error: Option<String>,
}

/// `m_g`, `M_g` and their ratio for each `tf` at spread `spread`.
pub fn sir_tradeoff(tfs: &[f64], spread: f64) -> Vec<SirRow> {
    tfs.par_iter()
        .map(|&tf| match PlateauSetup::new(tf, spread) {
            Ok(s) => SirRow {
                tf,
                delta_h: spread,
                m_g: s.ext.m_g,
                max_tail: s.ext.max_tail,
                sir: s.ext.sir(),
                error: None,
            },
            Err(e) => SirRow {
                tf,
                delta_h: spread,
                m_g: f64::NAN,
                max_tail: f64::NAN,
                sir: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub delta_h: f64,
    pub epsilon: f64,
    pub range: Option<SnrRange>,
    pub error: Option<String>,
}

impl RangeRow {
    pub fn snr_min_db(&self) -> Option<f64> {
        self.range.as_ref()?.interval.map(|i| i.0)
    }

    pub fn snr_max_db(&self) -> Option<f64> {
        self.range.as_ref()?.interval.map(|i| i.1)
    }
}

/// SNR intervals over `spreads x epsilons` (spread outer) at fixed `tf`.
pub fn range_map(spreads: &[f64], epsilons: &[f64], tf: f64, threshold: f64) -> Vec<RangeRow> {
    let setups: Vec<Result<PlateauSetup>> = spreads.par_iter().map(|&d| PlateauSetup::new(tf, d)).collect();
    let points: Vec<(usize, f64)> = (0..spreads.len())
        .flat_map(|i| epsilons.iter().map(move |&e| (i, e)))
        .collect();
    points
        .par_iter()
        .map(|&(i, eps)| {
            let result = setups[i]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|s| snr_range_with(s, eps, threshold, SCAN_STEP_DB));
            match result {
                Ok(r) => RangeRow {
                    delta_h: spreads[i],
                    epsilon: eps,
                    range: Some(r),
                    error: None,
                },
                Err(e) => RangeRow {
                    delta_h: spreads[i],
                    epsilon: eps,
                    range: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-7, 1e-3, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-7).abs() < 1e-21 && (g[6] - 1e-3).abs() < 1e-17);
        assert!((g[3] - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn unit_threshold_is_never_reached() {
        let r = snr_range(1e-4, 1e-6, 1.02, 1.0).unwrap();
        assert!(r.interval.is_none());
    }

    #[test]
    fn sweep_spec_rejects_empty_and_unsorted() {
        let mut s = SweepSpec {
            snr_db: vec![],
            tf: vec![1.02],
            spread: vec![1e-4],
            epsilon: vec![1e-6],
            threshold: 0.75,
        };
        assert!(s.validate().is_err());
        s.snr_db = vec![10.0, 0.0];
        assert!(s.validate().is_err());
        s.snr_db = vec![0.0, 10.0];
        assert!(s.validate().is_ok());
    }
}

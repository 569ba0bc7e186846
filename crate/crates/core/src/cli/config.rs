//! Run configuration: `key = value` text or JSON, both decoded through the same
//! serde schema.
//!
//! Text format: one `key = value` per line, `#` starts a comment, list keys take
//! comma-separated numbers or `start:stop:step` ranges.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{db_to_linear, linear_to_db, log_grid};
use crate::bounds::THETA_TOL;
use crate::pulse::WhGrid;
use crate::scattering::{grid_match, ScatteringModel};

/// Keys whose value is a list of numbers.
const LIST_KEYS: [&str; 5] = ["snr_db", "snr_linear", "tf_list", "delta_h_list", "epsilon_list"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    #[default]
    Cor2,
    Thm1,
    Awgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[default]
    Ratio,
    Sir,
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    BrickRect,
    TwoLevelBrick,
    SeparableJakesExp,
}

/// How the Thm1 interference power sums the lattice tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// Closed-form periodization in delay.
    #[default]
    Periodized,
    /// Ring-by-ring summation stopped at `ring_tol`, capped at `max_ring`.
    Rings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Figure {
    #[value(name = "2a")]
    Fig2a,
    #[value(name = "2b")]
    Fig2b,
    #[value(name = "3")]
    Fig3,
    #[value(name = "4")]
    Fig4,
    #[value(name = "5")]
    Fig5,
}

fn default_tf() -> f64 {
    1.02
}
fn default_subcarriers() -> usize {
    8
}
fn default_threshold() -> f64 {
    0.75
}
fn default_bandwidth() -> f64 {
    1.0
}
fn default_theta_tol() -> f64 {
    THETA_TOL
}
fn default_ring_tol() -> f64 {
    1e-12
}
fn default_max_ring() -> u32 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: BoundMode,
    #[serde(default)]
    pub sweep: SweepKind,
    #[serde(default = "default_tf")]
    pub tf: f64,
    #[serde(default)]
    pub shape: Shape,
    /// Physical support half-widths, seconds and hertz.
    pub tau0: Option<f64>,
    pub nu0: Option<f64>,
    /// Spread of a square support in normalized units.
    pub delta_h: Option<f64>,
    #[serde(default)]
    pub epsilon: f64,
    pub tau_out: Option<f64>,
    pub nu_out: Option<f64>,
    pub nu_d: Option<f64>,
    pub tau_rms: Option<f64>,
    pub tau_cut: Option<f64>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Linear SNR values for `bound`, an alternative to `snr_db` that can
    /// express zero power.
    pub snr_linear: Option<Vec<f64>>,
    #[serde(default = "default_subcarriers")]
    pub n_subcarriers: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    pub tf_list: Option<Vec<f64>>,
    pub delta_h_list: Option<Vec<f64>>,
    pub epsilon_list: Option<Vec<f64>>,
    #[serde(default = "default_theta_tol")]
    pub theta_tol: f64,
    #[serde(default)]
    pub tail: TailKind,
    #[serde(default = "default_ring_tol")]
    pub ring_tol: f64,
    #[serde(default = "default_max_ring")]
    pub max_ring: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Map::new())).expect("all fields have defaults")
    }
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

fn parse_scalar(raw: &str) -> Value {
    if let Ok(v) = raw.parse::<f64>() {
        if let Ok(i) = raw.parse::<u64>() {
            return Value::Number(i.into());
        }
        if let Some(n) = Number::from_f64(v) {
            return Value::Number(n);
        }
    }
    match raw {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(raw.to_string()),
    }
}

fn parse_list(key: &str, raw: &str) -> Result<Value, ConfigError> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| ConfigError(format!("{key}: `{s}` is not a number")))
        };
        match parts.as_slice() {
            [single] => out.push(num(single)?),
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || b < a {
                    return Err(ConfigError(format!("{key}: bad range `{item}`")));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| a + i as f64 * step));
            }
            _ => return Err(ConfigError(format!("{key}: bad list item `{item}`"))),
        }
    }
    out.into_iter()
        .map(|v| {
            Number::from_f64(v)
                .map(Value::Number)
                .ok_or_else(|| ConfigError(format!("{key}: non-finite value")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Value::Array)
}

/// Parse text or JSON into the raw key-value object.
pub fn parse_document(text: &str) -> Result<Value, ConfigError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")));
    }
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", i + 1)))?;
        let (key, raw) = (key.trim(), raw.trim());
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        let value = if LIST_KEYS.contains(&key) {
            parse_list(key, raw)?
        } else {
            parse_scalar(raw)
        };
        if map.insert(key.to_string(), value).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(Value::Object(map))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc = parse_document(text)?;
    serde_json::from_value(doc).map_err(|e| ConfigError(e.to_string()))
}

/// Channel description resolved from the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub grid: WhGrid,
    pub tau0: f64,
    pub nu0: f64,
    pub model: ScatteringModel,
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError(format!("{name} must be positive, got {v}")))
    }
}

fn required(name: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    positive(name, v.ok_or_else(|| ConfigError(format!("{name} is required")))?)
}

impl RunConfig {
    /// Checks shared by every command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tf >= 1.0 && self.tf < 2.0) {
            return Err(ConfigError(format!("tf must lie in [1, 2), got {}", self.tf)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(ConfigError(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(ConfigError(format!("eta must lie in [0, 1), got {}", self.eta)));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(ConfigError(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        if self.n_subcarriers == 0 {
            return Err(ConfigError("n_subcarriers must be at least 1".into()));
        }
        positive("bandwidth", self.bandwidth)?;
        positive("theta_tol", self.theta_tol)?;
        positive("ring_tol", self.ring_tol)?;
        if self.max_ring == 0 {
            return Err(ConfigError("max_ring must be at least 1".into()));
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError("snr_db entries must be finite".into()));
        }
        if let Some(lin) = &self.snr_linear {
            if !self.snr_db.is_empty() {
                return Err(ConfigError("give snr_db or snr_linear, not both".into()));
            }
            if lin.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(ConfigError("snr_linear entries must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Grid, box and channel model described by the config.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let (grid, tau0, nu0) = match (self.tau0, self.nu0, self.delta_h) {
            (Some(t), Some(n), None) => {
                let (t, n) = (positive("tau0", t)?, positive("nu0", n)?);
                let grid = if self.tf == 1.0 {
                    let s = (t / n).sqrt();
                    WhGrid::new(s, 1.0 / s).map_err(|e| ConfigError(e.to_string()))?
                } else {
                    grid_match(t, n, self.tf).map_err(|e| ConfigError(e.to_string()))?
                };
                (grid, t, n)
            }
            (None, None, Some(d)) => {
                let half = 0.5 * positive("delta_h", d)?.sqrt();
                (WhGrid::square(self.tf), half, half)
            }
            _ => {
                return Err(ConfigError(
                    "give exactly one of (tau0, nu0) or delta_h".into(),
                ))
            }
        };
        let model = match self.shape {
            Shape::BrickRect => ScatteringModel::BrickRect { tau0, nu0 },
            Shape::TwoLevelBrick => ScatteringModel::TwoLevelBrick {
                tau0,
                nu0,
                epsilon: self.epsilon,
                tau_out: required("tau_out", self.tau_out)?,
                nu_out: required("nu_out", self.nu_out)?,
            },
            Shape::SeparableJakesExp => ScatteringModel::SeparableJakesExp {
                nu_d: required("nu_d", self.nu_d)?,
                tau_rms: required("tau_rms", self.tau_rms)?,
                tau_cut: required("tau_cut", self.tau_cut)?,
            },
        };
        model.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(Resolved { grid, tau0, nu0, model })
    }

    /// Apply a figure preset on top of the config.
    pub fn with_figure(mut self, figure: Figure) -> Self {
        let snr: Vec<f64> = (0..=50).map(|i| -10.0 + i as f64).collect();
        match figure {
            Figure::Fig2a | Figure::Fig2b => {
                self.sweep = SweepKind::Ratio;
                self.tf_list = Some(vec![1.0, 1.02, 1.2, 1.5]);
                self.delta_h_list = Some(vec![if figure == Figure::Fig2a { 1e-4 } else { 1e-6 }]);
                self.epsilon_list = Some(vec![1e-6]);
                self.snr_db = snr;
                self.eta = 0.0;
            }
            Figure::Fig3 => {
                self.sweep = SweepKind::Sir;
                self.tf_list = Some(vec![1.0, 1.005, 1.01, 1.02, 1.05, 1.1, 1.2, 1.3, 1.4, 1.5]);
                self.delta_h_list = Some(vec![1e-4]);
            }
            Figure::Fig4 | Figure::Fig5 => {
                self.sweep = SweepKind::Range;
                self.tf = 1.02;
                self.threshold = 0.75;
                self.delta_h_list = Some(log_grid(1e-7, 1e-3, 7));
                self.epsilon_list = Some(log_grid(1e-8, 1e-2, 7));
            }
        }
        self
    }

    /// `(dB, linear)` SNR pairs for `bound`, from `snr_linear` or `snr_db`.
    pub fn snr_points(&self) -> Vec<(f64, f64)> {
        match &self.snr_linear {
            Some(lin) => lin.iter().map(|&x| (linear_to_db(x), x)).collect(),
            None => self.snr_db.iter().map(|&db| (db, db_to_linear(db))).collect(),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let text = "# plateau point\nmode = cor2\ntf = 1.02\ndelta_h = 1e-4\nepsilon = 1e-6\nsnr_db = 0, 10:20:5\n";
        let json = r#"{"mode":"cor2","tf":1.02,"delta_h":1e-4,"epsilon":1e-6,"snr_db":[0,10,15,20]}"#;
        let a = parse_config(text).unwrap();
        let b = parse_config(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.snr_db, vec![0.0, 10.0, 15.0, 20.0]);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(parse_config("tff = 1.02").is_err());
        assert!(parse_config("tf = 1.02\ntf = 1.1").is_err());
        assert!(parse_config("tf 1.02").is_err());
    }

    #[test]
    fn box_must_be_given_once() {
        let c = parse_config("delta_h = 1e-4\ntau0 = 1e-6\nnu0 = 10").unwrap();
        assert!(c.resolve().is_err());
        let c = parse_config("tau0 = 5e-6\nnu0 = 50").unwrap();
        let r = c.resolve().unwrap();
        assert!((r.nu0 * r.grid.t - r.tau0 * r.grid.f).abs() < 1e-15);
    }

    #[test]
    fn negative_tolerance_rejected() {
        let c = parse_config("theta_tol = -1e-9").unwrap();
        assert!(c.validate().is_err());
    }
}

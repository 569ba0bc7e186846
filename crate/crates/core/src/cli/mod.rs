//! Command-line front end: `fadecap bound|sweep|selftest`.
//!
//! Exit codes: 0 success, 1 self-test failure, 2 configuration error,
//! 3 numerical non-convergence, 4 sweep finished with failed points.

pub mod config;
mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{self, SweepSpec, CROSSING_TOL_DB, SCAN_STEP_DB};
use crate::bounds::{self, awgn_upper, awgn_upper_approx, BoundResult, Thm1Options, GAMMA_TOL};
use crate::pulse::PulseSpec;
use crate::ambiguity::AdaptivePolicy;
use crate::stats::{extremal_sir, TailMethod, PANEL_ORDER, SEED_GRID, VERIFY_GRID};
use crate::{Error, TOOL_VERSION};

pub use config::{BoundMode, ConfigError, Figure, Format, RunConfig, SweepKind, TailKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FADECAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fadecap", version, about = "Capacity bounds for underspread fading channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one bound at each configured SNR.
    Bound(RunArgs),
    /// Run a ratio, SIR or SNR-range sweep.
    Sweep(RunArgs),
    /// Run the fast invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    figure: Option<Figure>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Append a check that always fails.
    #[arg(long)]
    force_fail: bool,
}

/// Why a command stopped early.
enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parse `args` (program name first) and run the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let outcome = pool.install(|| match cli.command {
        Command::Bound(a) => cmd_bound(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Selftest(a) => cmd_selftest(&a),
    });
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERIC
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            EXIT_CONFIG
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}

fn load_config(path: Option<&Path>, figure: Option<Figure>) -> Result<RunConfig, Failure> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?;
            config::parse_config(&text)?
        }
        None if figure.is_some() => RunConfig::default(),
        None => return Err(Failure::Config("--config is required".into())),
    };
    let cfg = match figure {
        Some(f) => cfg.with_figure(f),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// 12 significant digits in scientific notation; `NaN` for missing values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn metadata(cfg: &RunConfig, command: &str, figure: Option<Figure>) -> Value {
    json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "figure": figure,
        "config_hash": cfg.hash(),
        "config": cfg,
        "tolerances": {
            "theta_tol": cfg.theta_tol,
            "tail": cfg.tail,
            "ring_tol": cfg.ring_tol,
            "max_ring": cfg.max_ring,
            "gamma_tol": GAMMA_TOL,
            "panel_order": PANEL_ORDER,
            "seed_grid": SEED_GRID,
            "verify_grid": VERIFY_GRID,
            "scan_step_db": SCAN_STEP_DB,
            "crossing_tol_db": CROSSING_TOL_DB,
        },
    })
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    errors: Vec<Option<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>, error: Option<String>) {
        self.rows.push(row);
        self.errors.push(error);
    }

    fn failed(&self) -> bool {
        self.errors.iter().any(Option::is_some)
    }

    fn to_csv(&self) -> Result<Vec<u8>, Failure> {
        let with_errors = self.failed();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.header.clone();
        if with_errors {
            header.push("error");
        }
        w.write_record(&header).map_err(|e| Failure::Io(e.to_string()))?;
        for (row, err) in self.rows.iter().zip(&self.errors) {
            let mut rec = row.clone();
            if with_errors {
                rec.push(err.clone().unwrap_or_default());
            }
            w.write_record(&rec).map_err(|e| Failure::Io(e.to_string()))?;
        }
        w.into_inner().map_err(|e| Failure::Io(e.to_string()))
    }
}

/// Write `body` to `out` (or stdout) and, for CSV files, a `.meta.json` sidecar.
fn emit(out: Option<&Path>, body: &[u8], meta: Option<&Value>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            if let Some(meta) = meta {
                let mut side = path.as_os_str().to_owned();
                side.push(".meta.json");
                std::fs::write(PathBuf::from(side), pretty(meta))?;
            }
        }
        None => std::io::stdout().write_all(body)?,
    }
    Ok(())
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("JSON serializes");
    s.push(b'\n');
    s
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn cmd_bound(args: &RunArgs) -> Result<i32, Failure> {
    let cfg = load_config(args.config.as_deref(), args.figure)?;
    let snrs = cfg.snr_points();
    if snrs.is_empty() {
        return Err(Failure::Config("snr_db grid is empty".into()));
    }
    let r = cfg.resolve()?;
    let pulse = PulseSpec::from_tf(cfg.tf)?;
    let ext = match cfg.mode {
        BoundMode::Cor2 => Some(extremal_sir(&pulse, &r.grid, r.tau0, r.nu0)?),
        _ => None,
    };
    let tail = match cfg.tail {
        TailKind::Periodized => TailMethod::Periodized,
        TailKind::Rings => TailMethod::Rings(AdaptivePolicy {
            ring_tol: cfg.ring_tol,
            max_ring: cfg.max_ring,
        }),
    };
    let opts = Thm1Options {
        theta_tol: cfg.theta_tol,
        tail,
    };
    let b = cfg.bandwidth;

    let mut points = Vec::new();
    let mut table = Table::new(vec![
        "snr_db",
        "lb_nat",
        "lb_bit",
        "clamped_nat",
        "coherent_term",
        "logdet_penalty",
        "interference_penalty",
        "gamma_opt",
        "ub_nat",
        "ratio",
    ]);
    for &(db, rho) in &snrs {
        let upper = awgn_upper(b, rho * b, r.nu0, cfg.eta, cfg.epsilon) / b;
        let approx = awgn_upper_approx(1.0, rho, cfg.epsilon);
        let res: Option<BoundResult> = match cfg.mode {
            BoundMode::Cor2 => Some(bounds::lower_bound_cor2(
                &pulse,
                &r.grid,
                rho,
                r.tau0,
                r.nu0,
                cfg.epsilon,
                ext.as_ref().unwrap(),
            )?),
            BoundMode::Thm1 => Some(bounds::lower_bound_thm1(
                &pulse,
                &r.grid,
                &r.model,
                rho,
                cfg.n_subcarriers,
                &opts,
            )?),
            BoundMode::Awgn => None,
        };
        let (value, clamped) = match &res {
            Some(x) => (x.value, x.clamped_value),
            None => (upper, upper),
        };
        let ratio = if approx > 0.0 { value / approx } else { f64::NAN };
        let terms = res.map(|x| (x.coherent_term, x.logdet_penalty, x.interference_penalty));
        let gamma = res.map(|x| x.gamma_opt);
        points.push(json!({
            "snr_db": json_num(db),
            "value_nat_per_s_per_hz": json_num(value),
            "value_bit_per_s_per_hz": json_num(value / std::f64::consts::LN_2),
            "clamped_nat_per_s_per_hz": json_num(clamped),
            "terms": terms.map(|t| json!({
                "coherent": json_num(t.0),
                "logdet_penalty": json_num(t.1),
                "interference_penalty": json_num(t.2),
            })),
            "gamma_opt": gamma.map(json_num),
            "upper_nat_per_s_per_hz": json_num(upper),
            "upper_approx_nat_per_s_per_hz": json_num(approx),
            "ratio": json_num(ratio),
        }));
        table.push(
            vec![
                fmt_num(db),
                fmt_num(value),
                fmt_num(value / std::f64::consts::LN_2),
                fmt_num(clamped),
                fmt_opt(terms.map(|t| t.0)),
                fmt_opt(terms.map(|t| t.1)),
                fmt_opt(terms.map(|t| t.2)),
                fmt_opt(gamma),
                fmt_num(upper),
                fmt_num(ratio),
            ],
            None,
        );
    }
    let mut meta = metadata(&cfg, "bound", args.figure);
    match args.format.unwrap_or(Format::Json) {
        Format::Json => {
            meta["mode"] = json!(cfg.mode);
            meta["inputs"] = json!({
                "tf": cfg.tf,
                "grid": {"t": r.grid.t, "f": r.grid.f},
                "tau0": r.tau0,
                "nu0": r.nu0,
                "epsilon": cfg.epsilon,
                "eta": cfg.eta,
                "bandwidth": b,
                "n_subcarriers": cfg.n_subcarriers,
            });
            meta["points"] = Value::Array(points);
            emit(args.out.as_deref(), &pretty(&meta), None)?;
        }
        Format::Csv => emit(args.out.as_deref(), &table.to_csv()?, Some(&meta))?,
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &RunArgs) -> Result<i32, Failure> {
    let cfg = load_config(args.config.as_deref(), args.figure)?;
    let tfs = cfg.tf_list.clone().unwrap_or_else(|| vec![cfg.tf]);
    let spreads = match (&cfg.delta_h_list, cfg.delta_h) {
        (Some(l), _) => l.clone(),
        (None, Some(d)) => vec![d],
        (None, None) => return Err(Failure::Config("delta_h_list or delta_h is required".into())),
    };
    let epsilons = cfg.epsilon_list.clone().unwrap_or_else(|| vec![cfg.epsilon]);
    let spec = SweepSpec {
        snr_db: if cfg.sweep == SweepKind::Ratio {
            cfg.snr_db.clone()
        } else {
            vec![0.0]
        },
        tf: tfs,
        spread: spreads,
        epsilon: epsilons,
        threshold: cfg.threshold,
    };
    spec.validate()?;

    let mut json_rows = Vec::new();
    let table = match cfg.sweep {
        SweepKind::Ratio => {
            let rows = analysis::sweep_ratio(&spec)?;
            let mut t = Table::new(vec!["tf", "delta_h", "epsilon", "snr_db", "lb_nat", "ub_nat", "ratio", "gamma_opt"]);
            for r in rows {
                t.push(
                    [r.tf, r.delta_h, r.epsilon, r.snr_db, r.lb_nat, r.ub_nat, r.ratio, r.gamma_opt]
                        .map(fmt_num)
                        .to_vec(),
                    r.error.clone(),
                );
                json_rows.push(json!(r));
            }
            t
        }
        SweepKind::Sir => {
            let mut t = Table::new(vec!["tf", "delta_h", "m_g", "M_g", "sir"]);
            for &d in &spec.spread {
                for r in analysis::sir_tradeoff(&spec.tf, d) {
                    t.push([r.tf, r.delta_h, r.m_g, r.max_tail, r.sir].map(fmt_num).to_vec(), r.error.clone());
                    json_rows.push(json!(r));
                }
            }
            t
        }
        SweepKind::Range => {
            let mut t = Table::new(vec!["delta_h", "epsilon", "snr_min_db", "snr_max_db"]);
            for r in analysis::range_map(&spec.spread, &spec.epsilon, cfg.tf, cfg.threshold) {
                if let Some(range) = &r.range {
                    if range.crossings.len() > 2 {
                        eprintln!(
                            "note: delta_h = {:e}, epsilon = {:e} crosses the threshold {} times: {:?}",
                            r.delta_h,
                            r.epsilon,
                            range.crossings.len(),
                            range.crossings
                        );
                    }
                }
                t.push(
                    vec![fmt_num(r.delta_h), fmt_num(r.epsilon), fmt_opt(r.snr_min_db()), fmt_opt(r.snr_max_db())],
                    r.error.clone(),
                );
                json_rows.push(json!(r));
            }
            t
        }
    };
    let mut meta = metadata(&cfg, "sweep", args.figure);
    meta["sweep"] = json!(cfg.sweep);
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(args.out.as_deref(), &table.to_csv()?, Some(&meta))?,
        Format::Json => {
            meta["rows"] = Value::Array(json_rows);
            emit(args.out.as_deref(), &pretty(&meta), None)?;
        }
    }
    Ok(if table.failed() { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_selftest(args: &SelftestArgs) -> Result<i32, Failure> {
    if let Some(path) = &args.config {
        load_config(Some(path), None)?;
    }
    let checks = selftest::run(args.force_fail);
    let mut all = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_SELFTEST })
}

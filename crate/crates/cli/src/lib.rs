//! Command-line front end: configuration, scenario dispatch and the
//! exit-code contract.

pub mod config;
pub mod scenarios;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sqg_core::par::Exec;

pub use config::{parse_config, ConfigError, RunConfig, Scenario};
use scenarios::{is_numerical_halt, Outcome, ScenarioResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_HALTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sqg", about = "Numerical lab for half-plane SQG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct IllposednessArgs {
    #[arg(long = "A", allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long = "B", allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    tstar: Option<f64>,
    #[arg(long = "x2-min")]
    x2_min: Option<f64>,
    #[arg(long = "x2-max")]
    x2_max: Option<f64>,
    #[arg(long)]
    probes: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full nonlinear run with norm histories and snapshots.
    Simulate(Common),
    /// Kernel identities, slip and divergence checks.
    VerifyKernels(Common),
    /// Log-slope growth experiment for the model datum.
    Illposedness {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: IllposednessArgs,
    },
    /// Extension lemmas and velocity estimate stability.
    LemmaSuite(Common),
}

/// Pulls `--section.key value` pairs out of `args`; the rest goes to clap.
pub fn split_overrides(args: &[String]) -> Result<(Vec<String>, Vec<(String, String)>), ConfigError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--") {
            Some(key) if key.contains('.') => {
                let (key, value) = match key.split_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => {
                        let v = it.next().ok_or_else(|| ConfigError::Invalid {
                            key: key.to_string(),
                            reason: "missing value".into(),
                        })?;
                        (key.to_string(), v.clone())
                    }
                };
                overrides.push((key, value));
            }
            _ => rest.push(a.clone()),
        }
    }
    Ok((rest, overrides))
}

/// Builds the effective configuration from command-line arguments
/// (without the program name).
pub fn config_from_args(args: &[String]) -> Result<RunConfig, String> {
    let (rest, mut overrides) = split_overrides(args).map_err(|e| e.to_string())?;
    let cli = Cli::try_parse_from(std::iter::once("sqg".to_string()).chain(rest))
        .map_err(|e| e.to_string())?;
    let (scenario, common, extra) = match cli.command {
        Command::Simulate(c) => ("simulate", c, None),
        Command::VerifyKernels(c) => ("verify-kernels", c, None),
        Command::Illposedness { common, args } => ("illposedness", common, Some(args)),
        Command::LemmaSuite(c) => ("lemma-suite", c, None),
    };
    let text = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => String::new(),
    };
    let mut flags = vec![("scenario".to_string(), format!("\"{scenario}\""))];
    if let Some(out) = &common.out {
        flags.push(("out_dir".into(), json!(out).to_string()));
    }
    if let Some(seed) = common.seed {
        flags.push(("seed".into(), seed.to_string()));
    }
    if let Some(x) = extra {
        let named = [
            ("illposedness.A", x.a),
            ("illposedness.B", x.b),
            ("initial.r0", x.r0),
            ("illposedness.t_star", x.tstar),
            ("illposedness.x2_min", x.x2_min),
            ("illposedness.x2_max", x.x2_max),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                flags.push((k.into(), json!(v).to_string()));
            }
        }
        if let Some(n) = x.probes {
            flags.push(("illposedness.probes".into(), n.to_string()));
        }
    }
    // Named flags win over dotted ones.
    overrides.extend(flags);
    parse_config(&text, &overrides).map_err(|e| e.to_string())
}

/// Writes `contents` via a temporary file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

/// Runs the configured scenario and returns the process exit code. Always
/// leaves `effective_config.json` and `report.json` in the output directory.
pub fn dispatch(cfg: &RunConfig) -> i32 {
    dispatch_with(cfg, Exec::default())
}

pub fn dispatch_with(cfg: &RunConfig, exec: Exec) -> i32 {
    let out = cfg.out_dir.as_path();
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("cannot create {}: {e}", out.display());
        return EXIT_ERROR;
    }
    if let Err(e) = write_atomic(&out.join("effective_config.json"), &cfg.to_json()) {
        eprintln!("cannot write effective_config.json: {e}");
        return EXIT_ERROR;
    }
    let result = match cfg.scenario {
        Scenario::Simulate => scenarios::simulate(cfg, out, exec),
        Scenario::VerifyKernels => scenarios::verify_kernels(cfg, exec),
        Scenario::Illposedness => scenarios::illposedness(cfg, out, exec),
        Scenario::LemmaSuite => scenarios::lemma_suite(cfg, exec),
    };
    let (report, code) = match result {
        Ok(ScenarioResult { mut report, outcome }) => {
            let code = match outcome {
                Outcome::Passed => EXIT_OK,
                Outcome::Failed => EXIT_FAILED,
                Outcome::Halted => EXIT_HALTED,
            };
            report["passed"] = json!(outcome == Outcome::Passed);
            (report, code)
        }
        Err(e) => {
            let code = if is_numerical_halt(&e) {
                EXIT_HALTED
            } else {
                EXIT_ERROR
            };
            eprintln!("{e}");
            (json!({"scenario": cfg.scenario, "error": e.to_string(), "passed": false}), code)
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serialises");
    if let Err(e) = write_atomic(&out.join("report.json"), &text) {
        eprintln!("cannot write report.json: {e}");
        return EXIT_ERROR;
    }
    code
}

/// Entry point for the binary.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<String> = args
        .into_iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match config_from_args(&args) {
        Ok(cfg) => dispatch(&cfg),
        Err(e) => {
            eprintln!("{e}");
            EXIT_ERROR
        }
    }
}

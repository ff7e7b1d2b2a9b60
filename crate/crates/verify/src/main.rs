//! `verify run` evaluates the identity suites and writes a residual report;
//! `verify curve` writes a seeded random curve for use in a config.
//!
//! Exit codes: 0 every gating record passes, 1 some gating record fails,
//! 2 configuration error, 3 pipeline construction failure, 4 IO error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kleinian::report::{self, Verdict};
use kleinian::suite::{self, RunError};
use kleinian::SuiteConfig;
use log::{error, info, warn};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PIPELINE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "verify", version, about = "Residual checks for genus-1 and genus-2 sigma/psi identities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the selected suites and write the report.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated curve seeds, e.g. 1,2,3
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated suite names
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
        #[arg(long)]
        max_m: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache_periods: Option<PathBuf>,
    },
    /// Write the seeded random curve as JSON.
    Curve {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        genus: usize,
    },
}

fn init_logging() -> Result<(), String> {
    let level = match std::env::var("VERIFY_LOG").as_deref() {
        Err(_) | Ok("info") => log::LevelFilter::Info,
        Ok("quiet") => log::LevelFilter::Off,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => return Err(format!("VERIFY_LOG must be quiet, info or debug, got '{other}'")),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn load_config(path: Option<&PathBuf>) -> Result<SuiteConfig, u8> {
    let Some(path) = path else {
        return Ok(SuiteConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        error!("cannot read config {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    SuiteConfig::from_json(&text).map_err(|e| {
        error!("{}: {e}", path.display());
        EXIT_CONFIG
    })
}

fn exit_for(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Pipeline(_) => EXIT_PIPELINE,
        RunError::Io(_) => EXIT_IO,
    }
}

fn run(mut cfg: SuiteConfig) -> u8 {
    let records = match suite::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            error!("{e}");
            return exit_for(&e);
        }
    };
    let json = report::to_json(&records);
    match cfg.output.take() {
        Some(path) => {
            if let Err(e) = report::write_atomic(&path, &json) {
                error!("cannot write {}: {e}", path.display());
                return EXIT_IO;
            }
            info!("report written to {}", path.display());
        }
        None => println!("{json}"),
    }
    if let Some(path) = &cfg.csv {
        if let Err(e) = report::write_atomic(path, &report::to_csv(&records)) {
            error!("cannot write {}: {e}", path.display());
            return EXIT_IO;
        }
    }
    let gating = records.iter().filter(|r| r.verdict != Verdict::Diagnostic).count();
    let failed: Vec<_> = records.iter().filter(|r| r.verdict == Verdict::Fail).collect();
    for r in &failed {
        warn!("FAIL {} {} [{}] residual {:.3e} > {:.1e}", r.suite, r.identity, r.inputs, r.residual, r.tolerance);
    }
    for r in records.iter().filter(|r| r.identity == "recommendation") {
        warn!("{}", r.equation);
    }
    info!("{} records, {} gating, {} failed", records.len(), gating, failed.len());
    if failed.is_empty() {
        0
    } else {
        EXIT_FAIL
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    if let Err(msg) = init_logging() {
        eprintln!("{msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let code = match cli.cmd {
        Cmd::Run { config, seeds, suites, max_m, out, cache_periods } => match load_config(config.as_ref()) {
            Err(code) => code,
            Ok(mut cfg) => {
                if let Some(s) = seeds {
                    cfg.seeds = s;
                }
                if let Some(s) = suites {
                    cfg.suites = s;
                }
                if let Some(m) = max_m {
                    cfg.max_m = m;
                }
                if out.is_some() {
                    cfg.output = out;
                }
                if cache_periods.is_some() {
                    cfg.cache_periods = cache_periods;
                }
                run(cfg)
            }
        },
        Cmd::Curve { seed, out, genus } => {
            if genus != 1 && genus != 2 {
                error!("genus must be 1 or 2");
                EXIT_CONFIG
            } else {
                let c = kleinian::curve::random_curve(seed, genus);
                let text = serde_json::to_string_pretty(&c).expect("curve serializes");
                match report::write_atomic(&out, &text) {
                    Ok(()) => 0,
                    Err(e) => {
                        error!("cannot write {}: {e}", out.display());
                        EXIT_IO
                    }
                }
            }
        }
    };
    ExitCode::from(code)
}

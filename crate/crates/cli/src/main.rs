//! `klift` — verify, falsify and sweep natural-lift Kähler structures on
//! cotangent bundles.
//!
//! Exit codes: 0 when the run succeeded (all selected checks passed, or the
//! falsification landed as expected), 1 when a check failed or a perturbation
//! was too small, 2 on configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use klift::config::RunConfig;
use klift::verifier::{falsify_with_threads, run_suite_with_threads, Perturbation, VerificationReport};
use klift::Error;

mod sweep;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "klift",
    version,
    about = "Numerical verification of natural-lift Kähler structures on cotangent bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the full check chain and write a JSON report.
    Verify {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb one coefficient and demand that exactly the matching check
    /// fails.
    Falsify {
        #[arg(long)]
        config: PathBuf,
        /// Perturbation as name=delta, e.g. b1=+0.05, c1-scale=1.1, mu=+0.1.
        #[arg(long)]
        perturb: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a parameter over a range and emit CSV rows of residuals and the
    /// integrability denominator.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: t, c, or a curve parameter like a1.1, a1.k, lambda.0.
        #[arg(long)]
        param: String,
        /// Inclusive range start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Commands::Verify { config, out } => cmd_verify(&config, out.as_deref()),
        Commands::Falsify {
            config,
            perturb,
            out,
        } => cmd_falsify(&config, &perturb, out.as_deref()),
        Commands::Sweep {
            config,
            param,
            range,
            out,
        } => sweep::cmd_sweep(&config, &param, &range, out.as_deref()),
    };
    ExitCode::from(code)
}

fn load_config(path: &Path) -> Result<RunConfig<f64>, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: RunConfig<f64> = serde_json::from_str(&text).map_err(|e| {
        format!(
            "config parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        )
    })?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// Worker cap from KLIFT_THREADS; malformed values are ignored with a warning.
fn thread_cap() -> Option<usize> {
    let raw = std::env::var("KLIFT_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Some(n),
        _ => {
            eprintln!("warning: ignoring invalid KLIFT_THREADS value {raw:?}");
            None
        }
    }
}

fn write_report(report: &VerificationReport<f64>, out: Option<&Path>) -> Result<(), String> {
    let json = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    match out {
        Some(path) => {
            fs::write(path, json.as_bytes())
                .map_err(|e| format!("cannot write report {}: {e}", path.display()))?;
            print_summary(report);
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn print_summary(report: &VerificationReport<f64>) {
    let mut out = std::io::stdout().lock();
    for check in &report.checks {
        let status = if check.inconclusive {
            "INCONCLUSIVE"
        } else if check.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            out,
            "{:<14} max {:>10.3e}  tol {:>8.1e}  skipped {:>2}  {status}",
            check.name, check.max_residual, check.tolerance, check.skipped_points
        );
    }
    let fmt = |v: Option<bool>| match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "n/a",
    };
    let v = &report.verdicts;
    let _ = writeln!(
        out,
        "verdicts: almost_complex={} integrable={} hermitian={} almost_kahler={} kahler={}",
        fmt(v.almost_complex),
        fmt(v.integrable),
        fmt(v.hermitian),
        fmt(v.almost_kahler),
        fmt(v.kahler)
    );
}

fn cmd_verify(config_path: &Path, out: Option<&Path>) -> u8 {
    let config = match load_config(config_path) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match run_suite_with_threads(&config, thread_cap()) {
        Ok(report) => {
            if let Err(msg) = write_report(&report, out) {
                eprintln!("error: {msg}");
                return EXIT_CONFIG;
            }
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn parse_perturbation(raw: &str) -> Result<Perturbation<f64>, String> {
    let (name, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("perturbation {raw:?} must have the form name=delta"))?;
    let delta: f64 = value
        .trim()
        .trim_start_matches('+')
        .parse()
        .map_err(|e| format!("cannot parse perturbation delta {value:?}: {e}"))?;
    match name.trim() {
        "b1" => Ok(Perturbation::B1(delta)),
        "b3" => Ok(Perturbation::B3(delta)),
        "c1-scale" => Ok(Perturbation::C1Scale(delta)),
        "mu" => Ok(Perturbation::MuOffset(delta)),
        other => Err(format!(
            "unknown perturbation target {other:?} (expected b1, b3, c1-scale or mu)"
        )),
    }
}

fn cmd_falsify(config_path: &Path, perturb: &str, out: Option<&Path>) -> u8 {
    let config = match load_config(config_path) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let perturbation = match parse_perturbation(perturb) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match falsify_with_threads(&config, &perturbation, thread_cap()) {
        Ok(report) => {
            if let Err(msg) = write_report(&report, out) {
                eprintln!("error: {msg}");
                return EXIT_CONFIG;
            }
            println!(
                "falsification succeeded: {} failed as expected",
                perturbation.target_check()
            );
            EXIT_OK
        }
        Err(e @ Error::PerturbationTooSmall { .. }) => {
            eprintln!("error: {e}");
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

//! `gaussrep` command-line interface.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{Outcome, RunError};
use config::{ConfigError, Format, RunConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gaussrep",
    version,
    about = "Monte Carlo and closed-form checks of the interpolated-Gaussian covariance representation and Gaussian concentration bounds",
    after_help = "Exit codes: 0 pass, 1 check failed, 2 config error, 3 numerical error.\n\
                  Every report carries the SHA-256 of the effective configuration, the seed and the tool version."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed (overrides the config file).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo sample count (overrides the config file).
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Gauss–Legendre nodes on [0, 1] (overrides the config file).
    #[arg(long = "quad-nodes", global = true, value_name = "K")]
    quad_nodes: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Compare Cov(f, g) with the interpolation integral (and optionally its OU form).
    #[command(after_help = "CSV: one row per quadrature node: alpha,weight,mean,std_error,n.\n\
                            Passes when the gap is within the sum of the CI half-widths.")]
    VerifyRepresentation,
    /// Check phi_1 - phi_0 against the quadrature of d phi_alpha / d alpha.
    #[command(after_help = "CSV: one row per frequency pair:\n  \
                            t,s,sigma_t_s,phi1_re,phi1_im,phi0_re,phi0_im,residual_re,residual_im,residual_abs\n\
                            (vectors are ';'-separated). Passes when every residual is below 1e-10.")]
    CharfnCheck,
    /// Empirical tail probabilities against the bound family. Requires --seed.
    #[command(after_help = "CSV: one row per deviation level:\n  \
                            x,count,empirical,cp_lower,cp_upper,bound_basic,verdict_basic,\n  \
                            bound_improved_mean,verdict_improved_mean,bound_improved_const,verdict_improved_const,\n  \
                            bound_generic_lambda,verdict_generic_lambda,bound_strong_moment,verdict_strong_moment,possibly_optimistic\n\
                            Cells of bounds that were not requested are empty. Fails only on a 'violated' verdict.")]
    TailCertify,
    /// Estimate sup <grad f, Sigma grad f> and compare with lambda* sup |grad f|^2.
    #[command(after_help = "CSV: one row:\n  \
                            value,is_exact,method,witness,lambda_star,gradient_sup_sq,lambda_bound,dominance_holds,sigma_star_sq")]
    Seminorm,
    /// Check h'(t) <= t s h(t) and the MGF bound on a t grid.
    #[command(after_help = "CSV: one row per t:\n  \
                            t,h,h_se,h_prime,h_prime_se,rhs,difference,difference_se,holds,saturated,\n  \
                            mgf_empirical,mgf_se,mgf_bound,mgf_verdict,mgf_saturated")]
    Herbst,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyRepresentation => "verify-representation",
            Command::CharfnCheck => "charfn-check",
            Command::TailCertify => "tail-certify",
            Command::Seminorm => "seminorm",
            Command::Herbst => "herbst",
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: Option<u64>,
    passed: bool,
    config: serde_json::Value,
    result: &'a serde_json::Value,
}

/// Folds flags over the file values.
fn effective_config(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.samples.is_some() {
        cfg.samples = common.samples;
    }
    if common.quad_nodes.is_some() {
        cfg.quad_nodes = common.quad_nodes;
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.display().to_string());
    }
    Ok(cfg)
}

/// The configuration as JSON with unset keys dropped.
fn config_value(cfg: &RunConfig) -> serde_json::Value {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.retain(|_, x| !x.is_null());
                map.values_mut().for_each(strip);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    strip(&mut v);
    v
}

/// SHA-256 of the computation-relevant configuration (output settings excluded).
fn config_hash(cfg: &RunConfig) -> String {
    let stripped = RunConfig { format: None, out: None, ..cfg.clone() };
    let text = config_value(&stripped).to_string();
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome, RunError> {
    match command {
        Command::VerifyRepresentation => commands::verify_representation_cmd(cfg),
        Command::CharfnCheck => commands::charfn_check_cmd(cfg),
        Command::TailCertify => commands::tail_certify_cmd(cfg),
        Command::Seminorm => commands::seminorm_cmd(cfg),
        Command::Herbst => commands::herbst_cmd(cfg),
    }
}

fn render_json(command: Command, cfg: &RunConfig, outcome: &Outcome) -> String {
    let envelope = Envelope {
        tool: "gaussrep",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        passed: outcome.passed,
        config: config_value(cfg),
        result: &outcome.result,
    };
    let mut text = serde_json::to_string_pretty(&envelope).expect("report serializes");
    text.push('\n');
    text
}

fn render_csv(command: Command, cfg: &RunConfig, outcome: &Outcome) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let hash = config_hash(cfg);
    let seed = cfg.seed.map(|s| s.to_string()).unwrap_or_default();
    let mut header = vec!["command", "tool_version", "config_hash", "seed", "passed"];
    header.extend(outcome.header.iter().copied());
    w.write_record(&header)?;
    for row in &outcome.rows {
        let mut record = vec![
            command.name().to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
            hash.clone(),
            seed.clone(),
            outcome.passed.to_string(),
        ];
        record.extend(row.iter().cloned());
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn exit_code_for(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Model(gaussrep::Error::NonFiniteResult(_)) => EXIT_NUMERICAL,
        // everything else traces back to a value supplied in the configuration
        RunError::Model(_) => EXIT_CONFIG,
    }
}

fn run(cli: &Cli) -> Result<u8, (u8, String)> {
    let cfg = effective_config(&cli.common).map_err(|e| (EXIT_CONFIG, format!("config error: {e}")))?;
    if cli.command == Command::TailCertify && cli.common.seed.is_none() {
        return Err((EXIT_CONFIG, "config error: tail-certify requires --seed".into()));
    }
    let outcome = match cli.common.threads {
        Some(0) => return Err((EXIT_CONFIG, "config error: --threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| (EXIT_CONFIG, format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command, &cfg))
        }
        None => dispatch(cli.command, &cfg),
    }
    .map_err(|e| (exit_code_for(&e), format!("{}: {e}", cli.command.name())))?;

    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => render_json(cli.command, &cfg, &outcome),
        Format::Csv => render_csv(cli.command, &cfg, &outcome).map_err(|e| (EXIT_CONFIG, format!("csv: {e}")))?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| (EXIT_CONFIG, format!("{path}: {e}")))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| (EXIT_CONFIG, format!("stdout: {e}")))?,
    }
    eprintln!("{}: {}", cli.command.name(), if outcome.passed { "pass" } else { "FAIL" });
    Ok(if outcome.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

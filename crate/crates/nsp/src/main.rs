use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsp::commands;
use nsp::config::Format;
use nsp::{CliError, CliResult, RunConfig};
use serde_json::json;

/// Spherically symmetric Navier-Stokes-Poisson free-boundary simulator.
#[derive(Debug, Parser)]
#[command(name = "nsp", version)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output formats, overriding output.formats. Repeatable.
    #[arg(long, global = true, value_enum)]
    format: Vec<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Ndjson,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Ndjson => Format::Ndjson,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the initial data and write it with a JSON sidecar.
    Init,
    /// Run one simulation and write the ledger and snapshots.
    Run,
    /// Run the ε ladder and the b-threshold search.
    Sweep,
    /// Tabulate an entropy pair over a (ρ, u) grid.
    Entropy,
    /// Tabulate B, M_c and C_γ.
    Mc,
    /// Run the invariant checks on a short reference problem.
    Verify,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if !cli.format.is_empty() {
        cfg.output.formats = cli.format.iter().map(|&f| f.into()).collect();
    }
    if cli.threads == Some(0) {
        return Err(CliError::invalid("threads", "need at least one thread"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<ExitCode> {
    let cfg = load(cli)?;
    let dir = cfg.output.dir.clone();
    match cli.command {
        Command::Init => {
            let (sidecar, warning) = commands::cmd_init(&cfg, &dir)?;
            if let Some(w) = warning {
                eprintln!("{w}");
            }
            println!("{}", serde_json::to_string(&sidecar)?);
        }
        Command::Run => {
            let out = commands::cmd_run(&cfg, &dir)?;
            if let Some(halt) = out.halt {
                return Err(halt.into());
            }
            let last = out.reports.last().map(nsp::io::LedgerLine::from);
            println!("{}", serde_json::to_string(&json!({ "final": last, "dir": dir }))?);
        }
        Command::Sweep => {
            let (record, threshold) = commands::cmd_sweep(&cfg, &dir, cli.threads)?;
            println!(
                "{}",
                serde_json::to_string(&json!({
                    "cauchy_rho": record.cauchy(false),
                    "cauchy_m": record.cauchy(true),
                    "b_threshold": threshold.and_then(|t| t.threshold),
                    "dir": dir,
                }))?
            );
        }
        Command::Entropy => {
            let rows = commands::cmd_entropy(&cfg, &dir)?;
            println!("{}", json!({ "rows": rows, "file": dir.join("entropy.csv") }));
        }
        Command::Mc => {
            for row in commands::cmd_mc(&cfg, &dir)? {
                println!("{}", serde_json::to_string(&row)?);
            }
        }
        Command::Verify => {
            let checks = commands::cmd_verify(&cfg, std::io::stdout().lock())?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                eprintln!("{}", json!({ "error": "verify_failed", "message": format!("{} check(s) failed", failed.len()), "checks": failed }));
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqlearn::config::KEYS;
use cqlearn::{registry, ExperimentConfig, ExperimentError};

#[derive(Parser)]
#[command(name = "cqlearn", version, about = "Run validation experiments for classical-quantum learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json, results.csv and trace.jsonl.
    Run(Box<RunArgs>),
    /// List registered experiments with the result each one checks.
    List,
    /// List configuration keys with their defaults.
    Keys,
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// dense | commuting
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Extra `key=value` settings, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, cqlearn::ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("experiment", &args.experiment),
        ("seed", &args.seed),
        ("trials", &args.trials),
        ("out", &args.out),
        ("backend", &args.backend),
        ("eps", &args.eps),
        ("delta", &args.delta),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or(cqlearn::ConfigError::Syntax { line: 0 })?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> ExitCode {
    let cfg = match load(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    match cqlearn::run(&cfg) {
        Ok(summary) => {
            for c in &summary.outcome.checks {
                println!("{c}");
            }
            if let Some(w) = &summary.written {
                println!("wrote {}", w.dir.display());
            }
            if summary.outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e @ ExperimentError::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(1)
        }
        Err(e) if e.is_configuration() => {
            eprintln!("invalid experiment settings: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(&args),
        Command::List => {
            for e in registry() {
                println!("{:<28} {:>6}  {}", e.name, e.default_trials, e.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Keys => {
            for (k, default, meaning) in KEYS {
                println!("{k:<22} {default:<16} {meaning}");
            }
            ExitCode::SUCCESS
        }
    }
}

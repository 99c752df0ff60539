use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use displace::config::Config;
use displace::experiments::Kind;
use displace::{status_of, Report, RunOptions, Status};

#[derive(Parser)]
#[command(name = "displace", version, about = "Numerical lab for the random displacement model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bottom Floquet bands over the Brillouin zone
    Band(RunArgs),
    /// Minimize the periodic ground energy over the support
    Minimize(RunArgs),
    /// Check that the constant field minimizes the torus ground energy
    #[command(name = "theorem1")]
    ConstantField(RunArgs),
    /// Integrated density of states
    Ids(RunArgs),
    /// Double-log fit of the IDS near the bottom of the spectrum
    Lifshitz(RunArgs),
    /// Wegner-type eigenvalue probabilities
    Wegner(RunArgs),
    /// Reduced operators and the operator sandwich
    Reduce(RunArgs),
    /// IDS comparison through the reduced operators
    Sandwich(RunArgs),
    /// Run every experiment into its own subdirectory
    VerifyAll(RunArgs),
    /// Continue an interrupted run
    Resume {
        manifest: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Continue the run recorded by this manifest
    #[arg(long, value_name = "MANIFEST")]
    resume: Option<PathBuf>,
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

fn execute(cli: Cli) -> Result<Report> {
    let (kind, args) = match cli.command {
        Command::Resume { manifest, threads, stop_after } => return displace::resume(&manifest, threads, stop_after),
        Command::Band(a) => (Kind::Band, a),
        Command::Minimize(a) => (Kind::Minimize, a),
        Command::ConstantField(a) => (Kind::ConstantField, a),
        Command::Ids(a) => (Kind::Ids, a),
        Command::Lifshitz(a) => (Kind::Lifshitz, a),
        Command::Wegner(a) => (Kind::Wegner, a),
        Command::Reduce(a) => (Kind::Reduce, a),
        Command::Sandwich(a) => (Kind::Sandwich, a),
        Command::VerifyAll(a) => (Kind::VerifyAll, a),
    };
    let mut cfg = Config::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.resume {
        let dir = m.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
        if std::fs::canonicalize(dir)? != std::fs::canonicalize(&args.out).unwrap_or_else(|_| args.out.clone()) {
            bail!("--resume manifest must live in --out");
        }
    }
    let opts =
        RunOptions { out: args.out, resume: args.resume.is_some(), threads: args.threads, stop_after: args.stop_after };
    displace::run(kind, &cfg, &opts)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(report) => {
            for (kind, out) in &report.outcomes {
                print!("{}", out.summary(kind.as_str()));
            }
            ExitCode::from(report.status() as u8)
        }
        Err(e) => {
            let status = status_of(&e);
            if status == Status::Stopped {
                eprintln!("stopped; continue with `displace resume <out>/manifest.txt`");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(status as u8)
        }
    }
}

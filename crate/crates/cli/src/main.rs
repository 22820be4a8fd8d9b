use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use meanfield_core::xlab::{self, Bundle, LoadedConfig};

#[derive(Parser)]
#[command(name = "meanfield", version, about = "Mean-field convergence experiments on a lattice ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Many-body vs Hartree distance over particle number and time.
    RateSweep(Common),
    /// Exact vs cutoff dynamics over the configured alpha grid.
    Section2(Common),
    /// Fock algebra, product/coherent constant and fluctuation checks.
    Lemmas(Common),
    /// Hartree trajectory with conservation and reversibility checks.
    HartreeSolve(Common),
    /// Log-log fit of an existing (N, distance) table.
    Fit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cmd: &Command) -> anyhow::Result<bool> {
    let (common, which) = match cmd {
        Command::RateSweep(c) => (c, "rate-sweep"),
        Command::Section2(c) => (c, "section2"),
        Command::Lemmas(c) => (c, "lemmas"),
        Command::HartreeSolve(c) => (c, "hartree-solve"),
        Command::Fit(c) => (c, "fit"),
    };
    let cfg = xlab::load_config(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    let out = common.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.config.output.dir));
    let started = Instant::now();
    let bundle = build(which, &cfg)?;
    bundle.write(&out).with_context(|| format!("writing reports to {}", out.display()))?;
    for (c, enforced) in bundle.checks.iter().zip(&bundle.enforced) {
        let verdict = match (c.pass, enforced) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        println!("{verdict} {}", c.name);
    }
    eprintln!("{which}: config {} in {:.1} s -> {}", &cfg.hash[..12], started.elapsed().as_secs_f64(), out.display());
    Ok(bundle.pass())
}

fn build(which: &str, cfg: &LoadedConfig) -> anyhow::Result<Bundle> {
    Ok(match which {
        "rate-sweep" => {
            let r = xlab::run_rate_sweep(cfg)?;
            xlab::rate_bundle(cfg, &r)
        }
        "section2" => {
            let r = xlab::run_section2_suite(cfg)?;
            xlab::section2_bundle(cfg, &r)
        }
        "lemmas" => xlab::run_lemma_battery(cfg)?,
        "hartree-solve" => xlab::run_hartree(cfg)?,
        "fit" => xlab::run_fit(cfg)?,
        _ => unreachable!("subcommand table is exhaustive"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

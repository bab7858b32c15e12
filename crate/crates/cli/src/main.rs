use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use densewlan_cli::{parse_schemes, run_experiment, validate_report, Command, ScenarioConfig};

#[derive(Parser)]
#[command(name = "densewlan", version, about = "Dense-WLAN user/AP association experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Monte Carlo at the configured density; writes results.csv and cdf.csv.
    Run(Overrides),
    /// Check a configuration and print it with defaults filled in.
    Validate(Overrides),
    /// Monte Carlo over `sweep.densities`; writes sweep.csv.
    Sweep(Overrides),
    /// Growing network with mobility; writes dynamic.csv.
    Dynamic(Overrides),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    slots: Option<u64>,
    /// Comma-separated, e.g. `gaa,ssf`.
    #[arg(long)]
    schemes: Option<String>,
}

impl Overrides {
    fn resolve(&self, dynamic: bool) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.realizations {
            if dynamic {
                cfg.dynamic.n_realizations = n;
            } else {
                cfg.simulation.n_realizations = n;
            }
        }
        if let Some(n) = self.slots {
            if dynamic {
                cfg.dynamic.epoch_slots = n;
            } else {
                cfg.simulation.n_slots = n;
            }
        }
        if let Some(list) = &self.schemes {
            let schemes = parse_schemes(list)?;
            if dynamic {
                cfg.dynamic.schemes = schemes;
            } else {
                cfg.schemes = schemes;
            }
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (o, command) = match &cli.verb {
        Verb::Validate(o) => {
            print!("{}", validate_report(&o.resolve(false)?)?);
            return Ok(());
        }
        Verb::Run(o) => (o, Command::Run),
        Verb::Sweep(o) => (o, Command::Sweep),
        Verb::Dynamic(o) => (o, Command::Dynamic),
    };
    let cfg = o.resolve(command == Command::Dynamic)?;
    let manifest = run_experiment(&cfg, command)?;
    for f in &manifest.outputs {
        println!("wrote {}", f.display());
    }
    if let Some(n) = manifest.gda_mismatched_epochs {
        println!("GDA/GAA objective mismatches: {n}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semcom::config::{default_config, load_config};
use semcom::model::SystemConfig;
use semcom::output::{write_bench, write_outputs, write_sweep};
use semcom::policy::PolicyTag;
use semcom::sim::{bench, run_simulation, sweep, SweepParameter};
use semcom::{Error, Result};

#[derive(Parser)]
#[command(
    name = "semcom",
    version,
    about = "Semantic-communication CR and rate allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; the built-in four-user setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// proposed, psnr_max, latency_min or psnr_feasible.
        #[arg(long, default_value = "proposed")]
        policy: String,
    },
    /// Run every policy on the same draws and write a comparison table.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Run one policy over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        policy: String,
        /// alpha, q_min_vector or n_users.
        #[arg(long)]
        parameter: String,
        /// Repeat per value; q_min_vector entries are comma-separated.
        #[arg(long = "value", required = true)]
        values: Vec<String>,
    },
}

fn load(common: &Common) -> Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => default_config(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.slots {
        cfg.slots = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_value(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: `{x}`")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, policy } => {
            let tag: PolicyTag = policy.parse()?;
            let cfg = load(&common)?;
            let out = run_simulation(&cfg, tag)?;
            write_outputs(&out, &cfg, &common.out)?;
            let s = &out.summary;
            println!(
                "{tag}: satisfaction {:.2}%  psnr {:.2} dB  latency {:.2} ms  objective {:.2}",
                s.avg_satisfaction_pct, s.avg_psnr_db, s.avg_latency_ms, s.total_objective
            );
        }
        Command::Bench { common } => {
            let cfg = load(&common)?;
            let runs = bench(&cfg)?;
            write_bench(&runs, &cfg, &common.out)?;
            println!(
                "{:<14} {:>9} {:>9} {:>11} {:>9}",
                "policy", "sat %", "psnr dB", "latency ms", "objective"
            );
            for r in &runs {
                let s = &r.summary;
                println!(
                    "{:<14} {:>9.2} {:>9.2} {:>11.2} {:>9.2}",
                    r.policy.as_str(),
                    s.avg_satisfaction_pct,
                    s.avg_psnr_db,
                    s.avg_latency_ms,
                    s.total_objective
                );
            }
            println!("{:<14} {:>9}", "drl_sac", "absent");
        }
        Command::Sweep {
            common,
            policy,
            parameter,
            values,
        } => {
            let tag: PolicyTag = policy.parse()?;
            let param: SweepParameter = parameter.parse()?;
            let values = values
                .iter()
                .map(|v| parse_value(v))
                .collect::<Result<Vec<_>>>()?;
            let cfg = load(&common)?;
            let rows = sweep(&cfg, param, &values, tag)?;
            write_sweep(&rows, &common.out)?;
            for r in &rows {
                let s = &r.summary;
                println!(
                    "{param}={:?}: satisfaction {:.2}%  psnr {:.2} dB  latency {:.2} ms  objective {:.2}",
                    r.value, s.avg_satisfaction_pct, s.avg_psnr_db, s.avg_latency_ms, s.total_objective
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

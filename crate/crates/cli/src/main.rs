use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pyramid_core::config::ScenarioConfig;
use pyramid_core::output::{report, summary_csv_string, write_summary, write_sweep};
use pyramid_core::{harness, Metric, Strategy, SummaryRow};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pyramid",
    version,
    about = "Replica placement simulator for Skip Graph storage"
)]
struct Cli {
    /// Run this single topology seed instead of the configured ones.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (defaults to the config's `output_dir`, then `results`).
    #[arg(long, global = true, env = "PYRAMID_OUT_DIR")]
    out: Option<PathBuf>,

    /// Comma separated strategies, e.g. `pyramid,glaras`.
    #[arg(long, global = true, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,

    /// Comma separated replication degrees, e.g. `6,10,14`.
    #[arg(long, global = true, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one topology seed (the first configured one unless --seed is given).
    Run { config: PathBuf },
    /// Run every configured seed and merge the summaries.
    Sweep { config: PathBuf },
    /// Re-aggregate the per-slot CSV files of a results directory.
    Report { results: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

/// Failure split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load_config(cli: &Cli, path: &Path) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path)
        .with_context(|| format!("cannot load config {}", path.display()))
        .map_err(Failure::Usage)?;
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(s) = &cli.strategies {
        cfg.strategies = s.clone();
    }
    if let Some(d) = &cli.degrees {
        cfg.replication_degrees = d.clone();
    }
    cfg.validate()
        .context("invalid overrides")
        .map_err(Failure::Usage)?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ScenarioConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg = load_config(&cli, config)?;
            println!(
                "ok: n={} regions={} vs_size={} slots={} seeds={:?} degrees={:?} strategies={}",
                cfg.n,
                cfg.num_landmarks,
                cfg.effective_vs_size(),
                cfg.horizon_slots(),
                cfg.seeds,
                cfg.replication_degrees,
                cfg.strategies
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            Ok(())
        }
        Command::Run { config } | Command::Sweep { config } => {
            let mut cfg = load_config(&cli, config)?;
            if matches!(cli.command, Command::Run { .. }) {
                cfg.seeds.truncate(1);
            }
            let dir = out_dir(&cli, Some(&cfg));
            let runs = harness::sweep(&cfg)
                .context("simulation failed")
                .map_err(Failure::Runtime)?;
            let summary = write_sweep(&dir, &runs)
                .with_context(|| format!("cannot write results to {}", dir.display()))
                .map_err(Failure::Runtime)?;
            print_table(&summary);
            println!("results written to {}", dir.display());
            Ok(())
        }
        Command::Report { results } => {
            let rows = report(results)
                .with_context(|| format!("cannot re-aggregate {}", results.display()))
                .map_err(Failure::Runtime)?;
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))
                    .map_err(Failure::Runtime)?;
                write_summary(dir, &rows).map_err(|e| Failure::Runtime(e.into()))?;
            }
            let text = summary_csv_string(&rows).map_err(|e| Failure::Runtime(e.into()))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn print_table(rows: &[SummaryRow]) {
    println!(
        "{:<12} {:>3} {:>14} {:>12}",
        "strategy", "r", "bw_kbps", "delay_ms"
    );
    let mut i = 0;
    while i < rows.len() {
        let group: Vec<&SummaryRow> = rows[i..]
            .iter()
            .take_while(|row| row.strategy == rows[i].strategy && row.r == rows[i].r)
            .collect();
        let get = |m: Metric| group.iter().find(|row| row.metric == m).map(|row| row.mean);
        println!(
            "{:<12} {:>3} {:>14.2} {:>12.2}",
            rows[i].strategy.as_str(),
            rows[i].r,
            get(Metric::BandwidthKbps).unwrap_or(f64::NAN),
            get(Metric::DelayMs).unwrap_or(f64::NAN)
        );
        i += group.len();
    }
}

//! `fdsic` — run full-duplex self-interference-cancellation experiments from
//! TOML configs: single runs, parameter sweeps and the bundled scenarios.
//!
//! Exit code is 0 on success and nonzero on any failure; failures carry the
//! pipeline stage that raised them (`config`, `signal`, `channel`, `capture`,
//! `estimator`, `reference`, `cancel`, `metrics`) in the diagnostic.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use fdsic::harness::{
    run_single, run_sweep, scenario, scenario_library, sweep_summary_csv, write_sweep,
    ExperimentConfig, SweepSpec, SWEEPABLE_PARAMS,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fdsic", version, about = "Full-duplex SIC software testbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its summary.
    Run(RunArgs),
    /// Run a parameter sweep and print its summary CSV.
    Sweep(SweepArgs),
    /// Inspect the bundled scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML; units are Hz, ns, dB).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write report files (config echo, summary, CSVs) to this directory,
    /// overriding the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment configuration (TOML); a `[sweep]` section is optional when
    /// `--param`/`--values` are given.
    #[arg(long)]
    config: PathBuf,
    /// Parameter to sweep (see `fdsic sweep --help` for the accepted names).
    #[arg(long, help = sweep_param_help())]
    param: Option<String>,
    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the sweep summary CSV to this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Names and channel profiles of every bundled scenario.
    List,
    /// Full configuration of one scenario as TOML.
    Show { name: String },
}

fn sweep_param_help() -> String {
    format!("Parameter to sweep; one of: {}", SWEEPABLE_PARAMS.join(", "))
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Scenarios { action } => cmd_scenarios(action),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)
        .with_context(|| format!("stage config: cannot load {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.config, args.seed)?;
    let out = args.out.or_else(|| cfg.output_dir.clone().map(Into::into));
    let report = run_single(&cfg).map_err(|e| anyhow!("{e}"))?;
    print!("{}", report.summary_text());
    if let Some(dir) = out {
        report
            .write(&dir)
            .with_context(|| format!("cannot write report to {}", dir.display()))?;
        eprintln!("report written to {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.config, args.seed)?;
    match (args.param, args.values) {
        (Some(param), Some(values)) => {
            let workers = cfg.sweep.as_ref().and_then(|s| s.workers);
            cfg.sweep = Some(SweepSpec {
                param,
                values,
                workers,
            });
        }
        (None, None) if cfg.sweep.is_some() => {}
        _ => bail!(
            "stage config: a sweep needs --param and --values together \
             (or a [sweep] section in the config)"
        ),
    }
    let param = cfg.sweep.as_ref().expect("sweep spec present").param.clone();
    let points = run_sweep(&cfg).map_err(|e| anyhow!("{e}"))?;
    print!("{}", sweep_summary_csv(&param, &points));
    let failures: Vec<String> = points
        .iter()
        .filter_map(|p| {
            p.report
                .as_ref()
                .err()
                .map(|e| format!("{} = {}: {e}", param, p.value))
        })
        .collect();
    if let Some(dir) = &args.out {
        write_sweep(&param, &points, dir)
            .with_context(|| format!("cannot write sweep to {}", dir.display()))?;
        eprintln!("sweep written to {}", dir.display());
    }
    if !failures.is_empty() {
        bail!("{} sweep point(s) failed:\n{}", failures.len(), failures.join("\n"));
    }
    Ok(())
}

fn cmd_scenarios(action: ScenarioAction) -> anyhow::Result<()> {
    match action {
        ScenarioAction::List => {
            for cfg in scenario_library() {
                let sc = &cfg.scenario;
                let max_delay = sc
                    .antennas
                    .iter()
                    .flat_map(|a| a.delays_ns.iter().copied())
                    .fold(0.0f64, f64::max);
                println!(
                    "{:<4}  {} antennas, {} paths each, max delay {max_delay} ns",
                    sc.name,
                    sc.antennas.len(),
                    sc.antennas.first().map_or(0, |a| a.delays_ns.len()),
                );
            }
        }
        ScenarioAction::Show { name } => {
            let cfg = scenario(&name)
                .ok_or_else(|| anyhow!("unknown scenario {name:?}; try `fdsic scenarios list`"))?;
            print!("{}", cfg.to_toml_string());
        }
    }
    Ok(())
}

//! Command-line front-end: resolves a preset or scenario file, runs a batch
//! of seeded replications, and writes the CSV output tree.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use swarmsense::config::{self, ConfigFile};
use swarmsense::runner::{run_batch_to_dir, BatchConfig};
use swarmsense::scenario::{preset_for, Behavior, Experiment};

#[derive(Parser, Debug)]
#[command(
    name = "swarmsense",
    about = "Simulate networks of autonomous mobile sensing agents",
    after_help = "Examples:\n  \
        swarmsense --preset exp1 --behavior gradient --scale 0.1 --replications 20 --seed 7 --out-dir out/exp1-g\n  \
        swarmsense --dump-config exp2 > exp2.toml\n  \
        swarmsense --config exp2.toml --replications 5 --out-dir out/custom"
)]
struct Cli {
    /// Built-in experiment preset (exp1, exp2, or exp3).
    #[arg(long, conflicts_with = "config", value_name = "NAME")]
    preset: Option<String>,

    /// Scenario/parameter file produced by --dump-config (or hand-written).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Behavior column for presets: random, mixed, or gradient.
    #[arg(long, default_value = "mixed", value_name = "NAME")]
    behavior: String,

    /// Duration/event-count scale in (0, 1]; per-tick rate is preserved.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,

    /// Number of independent replications (seeds base_seed + k).
    #[arg(long, default_value_t = 1)]
    replications: usize,

    /// Base seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output directory for the CSV tree.
    #[arg(long, default_value = "out", value_name = "DIR")]
    out_dir: PathBuf,

    /// Record agent snapshots every this many ticks (0 = off).
    #[arg(long, default_value_t = 0)]
    snapshot_interval: u64,

    /// Worker threads for replications.
    #[arg(long, default_value_t = default_parallelism())]
    parallel: usize,

    /// Print the scenario file for a preset (honoring --behavior and
    /// --scale) to standard output and exit.
    #[arg(long, value_name = "NAME", conflicts_with_all = ["preset", "config"])]
    dump_config: Option<String>,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn resolve(cli: &Cli) -> Result<(String, swarmsense::ScenarioSpec, swarmsense::SimParams)> {
    if let Some(name) = &cli.preset {
        let exp: Experiment = name.parse()?;
        let behavior: Behavior = cli.behavior.parse()?;
        let (spec, params) = preset_for(exp, behavior, cli.scale)?;
        Ok((behavior.as_str().to_string(), spec, params))
    } else if let Some(path) = &cli.config {
        let (spec, params) = config::load(path)
            .with_context(|| format!("loading scenario file {}", path.display()))?;
        Ok(("custom".to_string(), spec, params))
    } else {
        bail!("one of --preset or --config is required (or use --dump-config)");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(name) = &cli.dump_config {
        let exp: Experiment = name.parse()?;
        let behavior: Behavior = cli.behavior.parse()?;
        let (spec, params) = preset_for(exp, behavior, cli.scale)?;
        print!("{}", ConfigFile::from_parts(&spec, &params).to_toml()?);
        return Ok(());
    }

    if cli.replications == 0 {
        bail!("--replications must be at least 1");
    }
    let (behavior_label, spec, params) = resolve(cli)?;
    let batch = BatchConfig {
        behavior_label: behavior_label.clone(),
        params,
        spec,
        replications: cli.replications,
        base_seed: cli.seed,
        snapshot_interval: cli.snapshot_interval,
        check_invariants: false,
        parallelism: cli.parallel.max(1),
    };
    let outcome = run_batch_to_dir(&batch, &cli.out_dir)
        .with_context(|| format!("writing outputs under {}", cli.out_dir.display()))?;

    match &outcome.aggregate {
        Some(agg) => println!(
            "{} | {} replications | global {:.2} ± {:.2} % | local {:.2} ± {:.2} %",
            behavior_label,
            agg.replications,
            agg.global.mean,
            agg.global.ci_half_width,
            agg.local.mean,
            agg.local.ci_half_width,
        ),
        None => {
            let r = &outcome.results[0];
            println!(
                "{} | 1 replication | global {:.2} % | local {:.2} %",
                behavior_label, r.global_fraction, r.avg_local_fraction,
            );
        }
    }
    println!("outputs written to {}", cli.out_dir.display());
    Ok(())
}

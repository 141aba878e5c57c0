//! Replication batches: independent seeded runs, optional parallel workers,
//! and the CSV output tree.
//!
//! Replication `k` uses seed `base_seed + k`, so the output tree is
//! byte-identical no matter how many workers execute the batch or in which
//! order replications finish.
//!
//! Output layout (per batch directory):
//!   aggregate.csv          mean and 95% CI per metric (replications >= 2)
//!   aggregate_window.csv   per-tick window-metric means with CIs
//!   run_0000/summary.csv   behavior, seed, cumulative metrics
//!   run_0000/window.csv    per-tick window metrics ("NA" where no events)
//!   run_0000/snapshots.csv agent states, when snapshots are enabled

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use thiserror::Error;

use crate::engine::{
    aggregate, run_with_options, AggregateResult, EngineError, RunOptions, RunResult, SimParams,
};
use crate::scenario::ScenarioSpec;
use crate::seeds;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    /// Label written to each summary row (behavior column or "custom").
    pub behavior_label: String,
    pub params: SimParams,
    pub spec: ScenarioSpec,
    pub replications: usize,
    pub base_seed: u64,
    pub snapshot_interval: u64,
    pub check_invariants: bool,
    /// Worker threads; 1 runs replications sequentially.
    pub parallelism: usize,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub results: Vec<RunResult>,
    /// Present when the batch had at least two replications.
    pub aggregate: Option<AggregateResult>,
}

/// Runs all replications of a batch in memory.
pub fn run_batch(config: &BatchConfig) -> Result<BatchOutcome, RunnerError> {
    assert!(config.replications >= 1, "need at least one replication");
    let options = RunOptions {
        snapshot_interval: config.snapshot_interval,
        check_invariants: config.check_invariants,
        collect_outcomes: false,
    };
    let n = config.replications;
    let workers = config.parallelism.clamp(1, n);

    let mut indexed: Vec<(usize, Result<RunResult, EngineError>)> = if workers == 1 {
        (0..n)
            .map(|k| {
                let seed = seeds::replication_seed(config.base_seed, k as u64);
                (k, run_with_options(&config.params, &config.spec, seed, options))
            })
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    let next = &next;
                    scope.spawn(move || {
                        let mut local = Vec::new();
                        loop {
                            let k = next.fetch_add(1, Ordering::Relaxed);
                            if k >= n {
                                break;
                            }
                            let seed = seeds::replication_seed(config.base_seed, k as u64);
                            local.push((
                                k,
                                run_with_options(&config.params, &config.spec, seed, options),
                            ));
                        }
                        local
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("replication worker panicked"))
                .collect()
        })
    };

    indexed.sort_by_key(|&(k, _)| k);
    let results: Result<Vec<RunResult>, EngineError> =
        indexed.into_iter().map(|(_, r)| r).collect();
    let results = results?;
    let agg = if results.len() >= 2 {
        Some(aggregate(&results)?)
    } else {
        None
    };
    Ok(BatchOutcome {
        results,
        aggregate: agg,
    })
}

/// Runs a batch and writes the full CSV output tree under `out_dir`.
pub fn run_batch_to_dir(config: &BatchConfig, out_dir: &Path) -> Result<BatchOutcome, RunnerError> {
    let outcome = run_batch(config)?;
    write_outputs(config, &outcome, out_dir)?;
    Ok(outcome)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_outputs(
    config: &BatchConfig,
    outcome: &BatchOutcome,
    out_dir: &Path,
) -> Result<(), RunnerError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (k, result) in outcome.results.iter().enumerate() {
        let run_dir = out_dir.join(format!("run_{k:04}"));
        fs::create_dir_all(&run_dir).map_err(io_err(&run_dir))?;
        write_summary(&run_dir.join("summary.csv"), &config.behavior_label, result)?;
        write_window(&run_dir.join("window.csv"), result)?;
        if config.snapshot_interval > 0 {
            write_snapshots(&run_dir.join("snapshots.csv"), result)?;
        }
    }
    write_aggregate(
        &out_dir.join("aggregate.csv"),
        outcome,
        outcome.results.len(),
    )?;
    if let Some(agg) = &outcome.aggregate {
        write_aggregate_window(&out_dir.join("aggregate_window.csv"), agg)?;
    }
    Ok(())
}

fn write_summary(path: &Path, behavior: &str, result: &RunResult) -> Result<(), RunnerError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    (|| {
        writeln!(w, "behavior,seed,global_fraction,avg_local_fraction")?;
        writeln!(
            w,
            "{},{},{:.6},{:.6}",
            behavior, result.seed, result.global_fraction, result.avg_local_fraction
        )
    })()
    .map_err(io_err(path))
}

fn write_window(path: &Path, result: &RunResult) -> Result<(), RunnerError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    (|| {
        writeln!(w, "tick,window_global,window_local")?;
        for (t, value) in result.window_series.iter().enumerate() {
            match value {
                Some((g, l)) => writeln!(w, "{t},{g:.6},{l:.6}")?,
                None => writeln!(w, "{t},NA,NA")?,
            }
        }
        Ok(())
    })()
    .map_err(io_err(path))
}

fn write_snapshots(path: &Path, result: &RunResult) -> Result<(), RunnerError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    (|| {
        writeln!(w, "tick,agent_id,x,y,mode")?;
        for s in &result.snapshots {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{}",
                s.tick,
                s.agent,
                s.pos.x,
                s.pos.y,
                s.mode.as_str()
            )?;
        }
        Ok(())
    })()
    .map_err(io_err(path))
}

fn write_aggregate(
    path: &Path,
    outcome: &BatchOutcome,
    replications: usize,
) -> Result<(), RunnerError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    (|| {
        writeln!(w, "metric,mean,ci95_half_width,replications")?;
        match &outcome.aggregate {
            Some(agg) => {
                writeln!(
                    w,
                    "global_fraction,{:.6},{:.6},{}",
                    agg.global.mean, agg.global.ci_half_width, agg.replications
                )?;
                writeln!(
                    w,
                    "avg_local_fraction,{:.6},{:.6},{}",
                    agg.local.mean, agg.local.ci_half_width, agg.replications
                )?;
            }
            None => {
                let r = &outcome.results[0];
                writeln!(w, "global_fraction,{:.6},NA,{}", r.global_fraction, replications)?;
                writeln!(
                    w,
                    "avg_local_fraction,{:.6},NA,{}",
                    r.avg_local_fraction, replications
                )?;
            }
        }
        Ok(())
    })()
    .map_err(io_err(path))
}

fn write_aggregate_window(path: &Path, agg: &AggregateResult) -> Result<(), RunnerError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    (|| {
        writeln!(w, "tick,global_mean,global_ci95,local_mean,local_ci95,n")?;
        for (t, value) in agg.window.iter().enumerate() {
            match value {
                Some(wa) => writeln!(
                    w,
                    "{t},{:.6},{:.6},{:.6},{:.6},{}",
                    wa.global.mean, wa.global.ci_half_width, wa.local.mean, wa.local.ci_half_width, wa.n
                )?,
                None => writeln!(w, "{t},NA,NA,NA,NA,0")?,
            }
        }
        Ok(())
    })()
    .map_err(io_err(path))
}

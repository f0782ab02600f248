//! Independent replications of the learner and their artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitialMeans, OutputFormat};
use super::trajectory::{write_header, write_records, write_summary, RunSummary};
use crate::error::{Error, Result};
use crate::game::{registry, GameDefinition, JointAction};
use crate::learner::{run, IterationRecord, LearnerConfig};

/// Environment variable capping the replication worker count.
pub const THREADS_ENV: &str = "MONOTONE_NASH_THREADS";

/// Seed of replication `rep`: `base ⊕ rep`.
pub fn replication_seed(base_seed: u64, replication: u64) -> u64 {
    base_seed ^ replication
}

/// Draws `μ(0)` uniformly from the game's (bounded) action boxes. Uses
/// stream 1 of the replication key so it never overlaps the learner's
/// sampling stream.
pub fn uniform_initial_means(game: &GameDefinition, seed: u64) -> Result<JointAction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut values = Vec::with_capacity(game.joint_dim());
    for set in game.action_sets() {
        for (&lo, &hi) in set.lower().iter().zip(set.upper()) {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::usage("uniform mu0 needs bounded action sets"));
            }
            values.push(if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            });
        }
    }
    JointAction::new(game.dim(), values)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplicationOutput {
    pub replication: u64,
    pub seed: u64,
    pub mu0: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

pub fn learner_config(
    config: &ExperimentConfig,
    game: &GameDefinition,
    replication: u64,
) -> Result<LearnerConfig> {
    let seed = replication_seed(config.base_seed, replication);
    let mu0 = match &config.mu0 {
        InitialMeans::Uniform => uniform_initial_means(game, seed)?,
        InitialMeans::Fixed(v) => JointAction::new(game.dim(), v.clone())?,
    };
    Ok(LearnerConfig {
        game: game.clone(),
        exponents: config.exponents,
        mu0,
        max_iters: config.max_iters,
        seed,
        regularized: config.regularized,
        thinning: config.thinning,
        allow_invalid_schedule: config.allow_invalid_schedule,
    })
}

pub fn run_replication(
    config: &ExperimentConfig,
    game: &GameDefinition,
    replication: u64,
) -> Result<ReplicationOutput> {
    let lc = learner_config(config, game, replication)?;
    let start = Instant::now();
    let mut records = Vec::new();
    run(&lc, &mut records)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let summary = RunSummary::from_records(replication, &records, wall_ms);
    Ok(ReplicationOutput {
        replication,
        seed: lc.seed,
        mu0: lc.mu0.into_vec(),
        records,
        summary,
    })
}

fn worker_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
}

/// Runs every replication on a worker pool. Output is ordered by
/// replication index regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicationOutput>> {
    config.validate()?;
    let game = registry(&config.game)?;
    // Surface schedule problems as one usage error before spawning workers.
    learner_config(config, &game, 0)?.validate()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut outputs: Vec<ReplicationOutput> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| run_replication(config, &game, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    outputs.sort_by_key(|o| o.replication);
    Ok(outputs)
}

/// Writes `runs.csv` (or `runs.json`) and `summary.csv` into `dir`.
pub fn write_outputs(
    config: &ExperimentConfig,
    outputs: &[ReplicationOutput],
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let dim = registry(&config.game)?.dim();
    match config.format {
        OutputFormat::Csv => {
            let mut w = BufWriter::new(File::create(dir.join("runs.csv"))?);
            write_header(&mut w)?;
            for out in outputs {
                write_records(&mut w, out.replication, dim, &out.records)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut w = BufWriter::new(File::create(dir.join("runs.json"))?);
            #[derive(Serialize)]
            struct Doc<'a> {
                config: &'a ExperimentConfig,
                replications: &'a [ReplicationOutput],
            }
            serde_json::to_writer(
                &mut w,
                &Doc {
                    config,
                    replications: outputs,
                },
            )?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    let summaries: Vec<RunSummary> = outputs.iter().map(|o| o.summary.clone()).collect();
    let mut w = BufWriter::new(File::create(dir.join("summary.csv"))?);
    write_summary(&mut w, &summaries)?;
    w.flush()?;
    Ok(())
}

//! Runs, ensembles and their summaries.

pub mod result;
pub mod world;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::config::ScenarioConfig;

pub use result::{aggregate, Peak, RunResult, Series, SeriesStats, Stat, Summary, NUM_SERIES};
pub use world::{Policies, StepReport, World, WorldOptions};

/// Executes `num_steps` steps of run `run_index`.
pub fn run(config: &ScenarioConfig, run_index: u32) -> Result<RunResult> {
    run_with(config, run_index, WorldOptions::default()).map(|w| w.into_result())
}

/// Like [`run`] but returns the finished world (event log, final state).
pub fn run_with(config: &ScenarioConfig, run_index: u32, options: WorldOptions) -> Result<World> {
    let mut world = World::new(config, run_index, options)?;
    for _ in 0..config.num_steps {
        world.step();
    }
    Ok(world)
}

/// Runs `0..runs` on up to `jobs` threads. Results are in run order and do
/// not depend on `jobs`.
pub fn run_ensemble(config: &ScenarioConfig, runs: u32, jobs: usize) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Aggregate(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..runs).into_par_iter().map(|r| run(config, r)).collect())
}

//! Declarative scenarios: parse a flat config, run its cells on a bounded
//! worker pool and write CSV tables, SVG panels and a manifest.

pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{RegName, Scenario, ScenarioConfig, ScenarioParams};
pub use output::{Gate, RunManifest};

use crate::error::{GeoflowError, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "GEOFLOW_WORKERS";

/// Worker count: `GEOFLOW_WORKERS`, then the config's `workers`, then the
/// number of CPUs.
pub fn worker_count(cfg: &ScenarioConfig) -> Result<usize> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| GeoflowError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    Ok(from_env
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

/// Runs a scenario on its own worker pool and writes its manifest.
pub fn run(cfg: &ScenarioConfig) -> Result<RunManifest> {
    let workers = worker_count(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GeoflowError::Config(format!("worker pool: {e}")))?;
    log::info!("running {} with {workers} workers", cfg.scenario.name());
    pool.install(|| match &cfg.params {
        ScenarioParams::Figure2(p) => scenarios::run_figure2(cfg, p),
        ScenarioParams::AssumptionSweep(p) => scenarios::run_assumption_sweep(cfg, p),
        ScenarioParams::Sandwich(p) => scenarios::run_sandwich(cfg, p),
        ScenarioParams::VanishingLimit(p) => scenarios::run_vanishing_limit(cfg, p),
        ScenarioParams::Gibbs(p) => scenarios::run_gibbs(cfg, p),
        ScenarioParams::TransferToy(p) => scenarios::run_transfer_toy(cfg, p),
    })
}

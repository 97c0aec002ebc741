use std::collections::HashMap;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::load::{load_data, LoadedData};
use super::run::{run_experiment, RunRecord};
use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub data_dir: PathBuf,
    /// Upper bound on concurrent runs; 0 lets the thread pool decide.
    pub parallelism: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { data_dir: crate::data::data_dir(), parallelism: 0 }
    }
}

/// Run every (config, seed) pair and return the records ordered by
/// (config id, seed). A diverging run is recorded as failed and the sweep
/// carries on.
pub fn sweep(
    configs: &[ExperimentConfig],
    opts: &SweepOptions,
    progress: &(dyn Fn(&RunRecord) + Sync),
) -> Result<Vec<RunRecord>> {
    let mut ids: Vec<&str> = Vec::with_capacity(configs.len());
    for c in configs {
        c.validate()?;
        if ids.contains(&c.id.as_str()) {
            return Err(config_err(format!("duplicate config id {}", c.id)));
        }
        ids.push(&c.id);
    }

    // Each distinct dataset is loaded once and shared read-only.
    let mut cache: HashMap<String, LoadedData> = HashMap::new();
    let mut keys = Vec::with_capacity(configs.len());
    for c in configs {
        let key = serde_json::to_string(&c.dataset)?;
        if !cache.contains_key(&key) {
            cache.insert(key.clone(), load_data(&c.dataset, &opts.data_dir)?);
        }
        keys.push(key);
    }

    let jobs: Vec<(usize, u64)> =
        configs.iter().enumerate().flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| {
                let record = run_experiment::<f64>(&configs[i], seed, &cache[&keys[i]])?;
                progress(&record);
                Ok(record)
            })
            .collect()
    });
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.config_id.cmp(&b.config_id).then(a.seed.cmp(&b.seed)));
    Ok(records)
}

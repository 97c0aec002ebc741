//! Config-driven training runs, sweeps and their summaries.

mod aggregate;
mod config;
mod io;
mod load;
mod presets;
mod run;
mod sweep;

pub use aggregate::{aggregate, ci_half_width, summarize_group, GroupSummary, MetricSummary, SweepResult, EPOCH_METRICS, RLCT_METRIC};
pub use config::{DatasetConfig, DatasetKind, ExperimentConfig, SyntheticConfig, SCHEMA_VERSION};
pub use io::{read_jsonl, write_jsonl, write_summary_csv, ConfigFile, SUMMARY_HEADER};
pub use load::{load_data, synthetic_clusters, LoadedData};
pub use presets::{appendix_presets, preset, APPENDIX_AW, APPENDIX_PRESETS, DEEP_NET, MAIN_PRESETS, TEXT_EMBED_DIM, TEXT_HIDDEN};
pub use run::{evaluate, run_experiment, train_run, EpochMetrics, TrainedRun, RlctMeasurement, RunRecord, RunStatus};
pub use sweep::{sweep, SweepOptions};

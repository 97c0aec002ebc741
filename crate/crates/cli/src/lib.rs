//! `selfreg` command line: fetch data, train, measure, sweep, report and
//! verify.

pub mod chart;
pub mod error;
pub mod fetch;
pub mod overrides;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use selfreg::complexity::measure_network;
use selfreg::experiment::{
    load_data, preset, sweep, train_run, write_jsonl, ConfigFile, ExperimentConfig, RunRecord, RunStatus, SweepOptions,
    SCHEMA_VERSION,
};
use selfreg::nn::Network;
use selfreg::selfmodel::augment_head;

pub use error::{CliError, CliResult};
use overrides::Override;

#[derive(Debug, Parser)]
#[command(name = "selfreg", version, about = "Self-modeling regularization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download MNIST and the review corpus into the data directory.
    FetchData(FetchArgs),
    /// Train one configuration (every seed, or one with --seed).
    Train(TrainArgs),
    /// Measure the learning coefficient of a saved model.
    Rlct(RlctArgs),
    /// Run a grid of configurations and write records, summary and figures.
    Sweep(SweepArgs),
    /// Rebuild summary.csv and figures from a results directory.
    Report(ReportArgs),
    /// Run the gradient and learning-coefficient oracle checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Use archives already downloaded to this directory when present.
    #[arg(long)]
    pub archive_dir: Option<PathBuf>,
    /// Rewrite files that are already in place.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// JSON sweep file (see README for the schema).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in grid, e.g. mnist_check or multi_target_reversed.
    #[arg(long)]
    pub preset: Option<String>,
    /// Keep only these config ids.
    #[arg(long = "only")]
    pub only: Vec<String>,
    /// Dotted override applied to every config, e.g. rlct.num_chains=2.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<Override>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Results root; output goes to <out>/<name>/.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output folder name; defaults to the config file name or preset.
    #[arg(long)]
    pub name: Option<String>,
    /// Maximum concurrent runs (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub parallelism: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the trained parameters to <out>/<name>/models/.
    #[arg(long)]
    pub save_model: bool,
}

#[derive(Debug, Args)]
pub struct RlctArgs {
    /// Model file written by `train --save-model`.
    #[arg(long)]
    pub model: PathBuf,
    /// Overrides for the model's configuration, e.g. rlct.draws_per_chain=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<Override>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Where to write the estimate; defaults next to the model.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Skip figure generation.
    #[arg(long)]
    pub no_report: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding records.jsonl.
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    pub grad_cases: u64,
    #[arg(long, default_value_t = 5)]
    pub repeats: u64,
}

/// Trained parameters with the configuration that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl ModelFile {
    pub fn network(&self) -> CliResult<(Network<f64>, selfreg::selfmodel::AugmentedHead)> {
        let mut spec = self.config.architecture.clone();
        spec.seed = self.seed;
        let (spec, head) = augment_head(&spec, &self.config.selfmodel)?;
        let mut net = Network::zeros(&spec)?;
        net.set_params_flat(&self.params)?;
        net.check()?;
        Ok((net, head))
    }
}

fn data_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone().unwrap_or_else(selfreg::data::data_dir)
}

/// Configs named by `--config`/`--preset`, filtered and overridden, plus the
/// output folder name.
pub fn resolve_configs(src: &SourceArgs) -> CliResult<(String, Vec<ExperimentConfig>)> {
    let (name, configs) = match (&src.config, &src.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(CliError::file(path))?;
            let file = ConfigFile::from_json(&text)?;
            (file.name, file.experiments)
        }
        (None, Some(p)) => (p.clone(), preset(p)?),
        (None, None) => return Err(CliError::Usage("one of --config or --preset is required".into())),
    };
    for id in &src.only {
        if !configs.iter().any(|c| &c.id == id) {
            return Err(CliError::Usage(format!("no config with id {id:?}")));
        }
    }
    let configs = configs
        .into_iter()
        .filter(|c| src.only.is_empty() || src.only.contains(&c.id))
        .map(|c| overrides::apply(&c, &src.overrides))
        .collect::<CliResult<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    let name = src.name.clone().unwrap_or(name);
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(CliError::Usage(format!("invalid output name {name:?}")));
    }
    Ok((name, configs))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CliError::file(parent))?;
    }
    fs::write(path, bytes).map_err(CliError::file(path))
}

fn log_record(r: &RunRecord) {
    let status = match &r.status {
        RunStatus::Completed => "ok".to_string(),
        RunStatus::Failed { epoch, reason } => format!("failed at epoch {epoch}: {reason}"),
    };
    let acc = r.final_epoch().map_or(String::from("-"), |e| format!("{:.4}", e.test_acc));
    let spread = r.final_epoch().map_or(String::from("-"), |e| format!("{:.5}", e.weight_spread));
    let rlct = match r.final_rlct() {
        Some(m) => match (&m.estimate, &m.error) {
            (Some(e), _) => format!("{:.2}{}", e.lambda_hat, if e.anomalous { " (anomalous)" } else { "" }),
            (None, Some(err)) => format!("error: {err}"),
            _ => "-".into(),
        },
        None => "-".into(),
    };
    eprintln!("{} seed {}: {status}; test_acc {acc}, spread {spread}, rlct {rlct}", r.config_id, r.seed);
}

fn write_records(dir: &Path, records: &[RunRecord], configs: &[ExperimentConfig]) -> CliResult<()> {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf)?;
    write_file(&dir.join(report::RECORDS_FILE), &buf)?;
    let resolved = ConfigFile::new(dir.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()), configs.to_vec());
    let json = serde_json::to_vec_pretty(&resolved).map_err(selfreg::Error::from)?;
    write_file(&dir.join("config.json"), &json)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<PathBuf> {
    let (name, configs) = resolve_configs(&args.source)?;
    let opts = SweepOptions { data_dir: data_dir(&args.source.data_dir), parallelism: args.source.parallelism };
    let records = sweep(&configs, &opts, &log_record)?;
    let dir = args.source.out.join(&name);
    write_records(&dir, &records, &configs)?;
    if !args.no_report {
        report::report(&dir)?;
    }
    Ok(dir)
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<PathBuf> {
    let (name, mut configs) = resolve_configs(&args.source)?;
    if configs.len() != 1 {
        let ids: Vec<&str> = configs.iter().map(|c| c.id.as_str()).collect();
        return Err(CliError::Usage(format!("train needs exactly one config; pick one with --only from {}", ids.join(", "))));
    }
    let mut cfg = configs.remove(0);
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    let data = load_data(&cfg.dataset, &data_dir(&args.source.data_dir))?;
    let dir = args.source.out.join(&name);
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let run = train_run::<f64>(&cfg, seed, &data)?;
        log_record(&run.record);
        if args.save_model {
            let model = ModelFile { schema_version: SCHEMA_VERSION, config: cfg.clone(), seed, params: run.net.params_flat() };
            let json = serde_json::to_vec(&model).map_err(selfreg::Error::from)?;
            write_file(&dir.join("models").join(format!("{}-seed{seed}.json", cfg.id)), &json)?;
        }
        records.push(run.record);
    }
    write_records(&dir, &records, std::slice::from_ref(&cfg))?;
    report::report(&dir)?;
    Ok(dir)
}

pub fn cmd_rlct(args: &RlctArgs) -> CliResult<PathBuf> {
    let text = fs::read_to_string(&args.model).map_err(CliError::file(&args.model))?;
    let mut model: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", args.model.display())))?;
    if model.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!("model schema_version {} is not supported", model.schema_version)));
    }
    model.config = overrides::apply(&model.config, &args.overrides)?;
    model.config.validate()?;
    let (net, head) = model.network()?;
    let data = load_data(&model.config.dataset, &data_dir(&args.data_dir))?;
    let m = measure_network(&net, &head, &data.train, &model.config.rlct)?;
    eprintln!(
        "lambda_hat {:.4} (mc std error {:.4}{}), weight spread {:.5}",
        m.rlct.lambda_hat,
        m.rlct.mc_std_error,
        if m.rlct.anomalous { ", anomalous" } else { "" },
        m.spread.std_dev
    );
    let out = args.out.clone().unwrap_or_else(|| args.model.with_extension("rlct.json"));
    write_file(&out, &serde_json::to_vec_pretty(&m).map_err(selfreg::Error::from)?)?;
    Ok(out)
}

pub fn cmd_fetch(args: &FetchArgs) -> CliResult<()> {
    let dir = data_dir(&args.data_dir);
    let archives = args.archive_dir.as_deref();
    let mnist = fetch::fetch_mnist(&dir, archives, args.force)?;
    eprintln!("mnist: {}", if mnist { "written" } else { "already present" });
    let reviews = fetch::fetch_reviews(&dir, archives, args.force)?;
    eprintln!("reviews: {}", if reviews { "written" } else { "already present" });
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::FetchData(a) => cmd_fetch(a),
        Command::Train(a) => cmd_train(a).map(|d| eprintln!("wrote {}", d.display())),
        Command::Rlct(a) => cmd_rlct(a).map(|p| eprintln!("wrote {}", p.display())),
        Command::Sweep(a) => cmd_sweep(a).map(|d| eprintln!("wrote {}", d.display())),
        Command::Report(a) => report::report(&a.dir).map(|files| eprintln!("wrote {} files", files.len())),
        Command::Verify(a) => verify::run(a.grad_cases, a.repeats),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

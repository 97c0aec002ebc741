use selfreg::complexity::RlctConfig;
use selfreg::experiment::{
    aggregate, read_jsonl, sweep, write_jsonl, write_summary_csv, DatasetConfig, DatasetKind, ExperimentConfig,
    SweepOptions,
};
use selfreg::nn::{NetworkSpec, OptimizerKind, OptimizerSettings};
use selfreg::selfmodel::SelfModelConfig;

fn config(id: &str, selfmodel: SelfModelConfig) -> ExperimentConfig {
    ExperimentConfig {
        id: id.into(),
        dataset: DatasetConfig { kind: DatasetKind::Synthetic, ..Default::default() },
        architecture: NetworkSpec::mlp(8, vec![12], 3, 0),
        selfmodel,
        epochs: 4,
        seeds: vec![1, 2, 3],
        batch_size: 32,
        optimizer: OptimizerSettings { learning_rate: 1e-2, ..Default::default() },
        rlct: RlctConfig { num_chains: 2, draws_per_chain: 30, burn_in: 10, eval_size: 128, ..Default::default() },
        metrics_epochs: vec![],
        labels: [("aw".to_string(), "x".to_string())].into(),
    }
}

fn grid() -> Vec<ExperimentConfig> {
    vec![config("base", SelfModelConfig::baseline()), config("aw5", SelfModelConfig::new(vec![0], 5.0))]
}

fn jsonl(configs: &[ExperimentConfig], parallelism: usize) -> Vec<u8> {
    let opts = SweepOptions { data_dir: "unused".into(), parallelism };
    let records = sweep(configs, &opts, &|_| {}).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&records, &mut buf).unwrap();
    buf
}

#[test]
fn sweep_output_is_ordered_and_reproducible() {
    let a = jsonl(&grid(), 1);
    let b = jsonl(&grid(), 3);
    assert_eq!(a, b);
    let records = read_jsonl(&a[..]).unwrap();
    let keys: Vec<(&str, u64)> = records.iter().map(|r| (r.config_id.as_str(), r.seed)).collect();
    assert_eq!(keys, [("aw5", 1), ("aw5", 2), ("aw5", 3), ("base", 1), ("base", 2), ("base", 3)]);
    for r in &records {
        assert_eq!(r.epochs.len(), 4);
        assert!(r.epochs.iter().enumerate().all(|(i, e)| e.epoch == i + 1));
        for e in &r.epochs {
            assert!((0.0..=1.0).contains(&e.test_acc) && (0.0..=1.0).contains(&e.train_acc));
            assert_eq!(e.generalization_gap, e.test_loss - e.train_loss);
        }
        assert_eq!(r.rlct.len(), 1);
        assert_eq!(r.rlct[0].epoch, 4);
    }
}

#[test]
fn failed_runs_are_kept_and_counted() {
    let mut bad = config("bad", SelfModelConfig::baseline());
    bad.optimizer = OptimizerSettings { kind: OptimizerKind::Sgd, learning_rate: 1e200, ..Default::default() };
    let mut configs = grid();
    configs.push(bad);
    let records = read_jsonl(&jsonl(&configs, 0)[..]).unwrap();
    assert_eq!(records.len(), 9);
    assert_eq!(records.iter().filter(|r| r.failed()).count(), 3);

    let summary = aggregate(&records).unwrap();
    let g = summary.group("bad").unwrap();
    assert_eq!((g.runs, g.failed), (3, 3));
    let row = summary.metric("base", "test_acc", None).unwrap();
    assert_eq!(row.n, 3);
    let mut csv = Vec::new();
    write_summary_csv(&summary, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("config_id,metric,epoch,mean,ci_lo,ci_hi,n,anomalous_count\n"));
    assert!(text.lines().filter(|l| l.starts_with("bad,")).all(|l| l.ends_with(",0,3")), "{text}");
    assert!(summary.metric("bad", "test_acc", None).is_none_or(|m| m.n == 0 && m.mean.is_none()));
}

#[test]
fn duplicate_ids_are_rejected() {
    let configs = vec![config("a", SelfModelConfig::baseline()), config("a", SelfModelConfig::baseline())];
    let opts = SweepOptions { data_dir: "unused".into(), parallelism: 1 };
    assert!(matches!(sweep(&configs, &opts, &|_| {}), Err(selfreg::Error::Config(_))));
}

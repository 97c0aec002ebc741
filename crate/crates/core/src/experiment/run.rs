use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::load::LoadedData;
use crate::complexity::{measure_network, RlctEstimate};
use crate::data::{BatchPlan, Dataset};
use crate::error::{config_err, Error, Result};
use crate::nn::{backward, cross_entropy, forward, init_network, predict_classes, Network, OptimizerState};
use crate::scalar::Scalar;
use crate::selfmodel::{augment_head, collect_targets, joint_loss, prune_head, AugmentedHead};

/// Metrics of the pruned network after one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub weight_spread: f64,
    pub generalization_gap: f64,
    /// Mean joint objective over the epoch's training batches.
    pub joint_loss: f64,
}

/// Learning-coefficient measurement taken after `epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlctMeasurement {
    pub epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<RlctEstimate>,
    /// Set when every chain diverged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RlctMeasurement {
    /// Usable for aggregation: present and not flagged.
    pub fn usable(&self) -> Option<f64> {
        self.estimate.as_ref().filter(|e| !e.anomalous).map(|e| e.lambda_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed { epoch: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config_id: String,
    pub seed: u64,
    #[serde(default)]
    pub labels: std::collections::BTreeMap<String, String>,
    pub status: RunStatus,
    pub epochs: Vec<EpochMetrics>,
    pub rlct: Vec<RlctMeasurement>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        matches!(self.status, RunStatus::Failed { .. })
    }

    pub fn final_epoch(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }

    /// Measurement taken at the latest metrics epoch.
    pub fn final_rlct(&self) -> Option<&RlctMeasurement> {
        self.rlct.last()
    }
}

/// Mean cross-entropy and accuracy of a classification-only network.
pub fn evaluate<F: Scalar>(net: &Network<F>, data: &Dataset) -> Result<(f64, f64)> {
    let n = data.len();
    let mut loss = 0.0;
    let mut correct = 0usize;
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(4096) {
        let (inputs, labels) = data.gather::<F>(chunk);
        let trace = forward(net, inputs.batch())?;
        let (l, _) = cross_entropy(trace.output.view(), &labels)?;
        loss += l.to_f64_lossy() * chunk.len() as f64;
        let predicted = predict_classes(&trace.output, net.spec.num_classes);
        correct += predicted.iter().zip(&labels).filter(|(p, l)| p == l).count();
    }
    Ok((loss / n as f64, correct as f64 / n as f64))
}

/// Stream of the RLCT sampler for one (run seed, epoch) pair.
fn rlct_seed(base: u64, run_seed: u64, epoch: usize) -> u64 {
    base ^ run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (epoch as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn check_front_end(cfg: &ExperimentConfig, data: &LoadedData) -> Result<()> {
    let spec = &cfg.architecture;
    match (&data.train, &spec.front_end) {
        (Dataset::Text(d), Some(fe)) if fe.vocab_size == d.vocab_size => Ok(()),
        (Dataset::Text(d), Some(fe)) => Err(config_err(format!(
            "{}: embedding vocab_size {} differs from dataset vocabulary {}",
            cfg.id, fe.vocab_size, d.vocab_size
        ))),
        (Dataset::Text(_), None) => Err(config_err(format!("{}: text data needs an embedding front end", cfg.id))),
        (_, Some(_)) => Err(config_err(format!("{}: embedding front end needs text data", cfg.id))),
        (other, None) if other.input_dim() != spec.input_dim => Err(config_err(format!(
            "{}: input_dim {} differs from dataset width {}",
            cfg.id,
            spec.input_dim,
            other.input_dim()
        ))),
        _ => Ok(()),
    }?;
    if data.train.num_classes() != spec.num_classes {
        return Err(config_err(format!(
            "{}: num_classes {} differs from dataset classes {}",
            cfg.id,
            spec.num_classes,
            data.train.num_classes()
        )));
    }
    Ok(())
}

/// One optimizer pass over the training set. Returns the mean joint loss,
/// or the divergence that stopped it.
fn train_epoch<F: Scalar>(
    net: &mut Network<F>,
    opt: &mut OptimizerState<F>,
    head: &AugmentedHead,
    cfg: &ExperimentConfig,
    plan: &BatchPlan,
    train: &Dataset,
    epoch: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut seen = 0usize;
    for batch in plan.batches(train.len(), epoch)? {
        let (inputs, labels) = train.gather::<F>(&batch);
        let trace = forward(net, inputs.batch())?;
        let targets = collect_targets(&trace, head)?;
        let (breakdown, grads) = joint_loss(trace.output.view(), &labels, targets.view(), head, &cfg.selfmodel)?;
        if !breakdown.total.is_finite() {
            return Err(Error::Divergence { location: crate::ParamLocation::Dense(net.layers.len() - 1) });
        }
        let split = head.split_target_grads(&grads.targets);
        let g = backward(net, &trace, grads.output.view(), &split)?;
        opt.step(net, &g)?;
        total += breakdown.total * batch.len() as f64;
        seen += batch.len();
    }
    Ok(total / seen as f64)
}

/// Train one repeat of `cfg` and record per-epoch metrics of the pruned
/// network, plus learning-coefficient measurements at the metrics epochs.
///
/// Divergence ends the run with a failed status; configuration and data
/// problems are returned as errors.
pub fn run_experiment<F: Scalar>(cfg: &ExperimentConfig, seed: u64, data: &LoadedData) -> Result<RunRecord> {
    train_run::<F>(cfg, seed, data).map(|t| t.record)
}

/// A finished run together with the trained (unpruned) network.
#[derive(Debug, Clone)]
pub struct TrainedRun<F> {
    pub record: RunRecord,
    pub net: Network<F>,
    pub head: AugmentedHead,
}

/// [`run_experiment`], keeping the network.
pub fn train_run<F: Scalar>(cfg: &ExperimentConfig, seed: u64, data: &LoadedData) -> Result<TrainedRun<F>> {
    cfg.validate()?;
    check_front_end(cfg, data)?;
    let mut spec = cfg.architecture.clone();
    spec.seed = seed;
    let (spec, head) = augment_head(&spec, &cfg.selfmodel)?;
    let mut net: Network<F> = init_network(&spec)?;
    let mut opt = OptimizerState::<F>::new(cfg.optimizer)?;
    let plan = BatchPlan::new(seed, cfg.batch_size.min(data.train.len()));
    let rlct_epochs = cfg.rlct_epochs();

    let mut record = RunRecord {
        schema_version: SCHEMA_VERSION,
        config_id: cfg.id.clone(),
        seed,
        labels: cfg.labels.clone(),
        status: RunStatus::Completed,
        epochs: Vec::with_capacity(cfg.epochs),
        rlct: Vec::new(),
    };

    for epoch in 1..=cfg.epochs {
        let joint = match train_epoch(&mut net, &mut opt, &head, cfg, &plan, &data.train, epoch - 1) {
            Ok(l) => l,
            Err(Error::Divergence { location }) => {
                record.status = RunStatus::Failed { epoch, reason: format!("non-finite values at {location}") };
                return Ok(TrainedRun { record, net, head });
            }
            Err(e) => return Err(e),
        };
        let pruned = prune_head(&net, &head)?;
        let (train_loss, train_acc) = evaluate(&pruned, &data.train)?;
        let (test_loss, test_acc) = evaluate(&pruned, &data.test)?;
        if !(train_loss.is_finite() && test_loss.is_finite()) {
            record.status = RunStatus::Failed { epoch, reason: "non-finite evaluation loss".into() };
            return Ok(TrainedRun { record, net, head });
        }
        let spread = crate::complexity::weight_spread(&pruned)?;
        record.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            test_loss,
            train_acc,
            test_acc,
            weight_spread: spread.std_dev,
            generalization_gap: test_loss - train_loss,
            joint_loss: joint,
        });

        if rlct_epochs.contains(&epoch) {
            let mut rcfg = cfg.rlct.clone();
            rcfg.seed = rlct_seed(cfg.rlct.seed, seed, epoch);
            let m = match measure_network(&net, &head, &data.train, &rcfg) {
                Ok(m) => RlctMeasurement { epoch, estimate: Some(m.rlct), error: None },
                Err(Error::Estimation(msg)) => RlctMeasurement { epoch, estimate: None, error: Some(msg) },
                Err(e) => return Err(e),
            };
            record.rlct.push(m);
        }
    }
    Ok(TrainedRun { record, net, head })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, Record, TextDataset};
    use crate::experiment::config::{DatasetConfig, DatasetKind, SyntheticConfig};
    use crate::experiment::load::synthetic_clusters;
    use crate::nn::{NetworkSpec, OptimizerKind, OptimizerSettings};
    use crate::selfmodel::SelfModelConfig;

    fn small_cfg(selfmodel: SelfModelConfig) -> ExperimentConfig {
        let rlct = crate::complexity::RlctConfig {
            num_chains: 2,
            draws_per_chain: 20,
            burn_in: 10,
            minibatch_size: 64,
            eval_size: 128,
            ..Default::default()
        };
        ExperimentConfig {
            id: "toy".into(),
            dataset: DatasetConfig { kind: DatasetKind::Synthetic, ..Default::default() },
            architecture: NetworkSpec::mlp(8, vec![16, 8], 3, 0),
            selfmodel,
            epochs: 3,
            seeds: vec![1],
            batch_size: 32,
            optimizer: OptimizerSettings { learning_rate: 1e-2, ..Default::default() },
            rlct,
            metrics_epochs: vec![2, 3],
            labels: Default::default(),
        }
    }

    fn data() -> LoadedData {
        synthetic_clusters(&SyntheticConfig::default())
    }

    #[test]
    fn records_every_epoch_and_requested_measurements() {
        let d = data();
        let mut cfg = small_cfg(SelfModelConfig::new(vec![1], 5.0));
        cfg.epochs = 20;
        cfg.metrics_epochs = vec![2, 20];
        let r = run_experiment::<f64>(&cfg, 4, &d).unwrap();
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), (1..=20).collect::<Vec<_>>());
        assert_eq!(r.rlct.iter().map(|m| m.epoch).collect::<Vec<_>>(), [2, 20]);
        for e in &r.epochs {
            assert!((0.0..=1.0).contains(&e.test_acc) && (0.0..=1.0).contains(&e.train_acc));
            assert_eq!(e.generalization_gap, e.test_loss - e.train_loss);
        }
        assert!(r.final_epoch().unwrap().test_acc > 0.9);
    }

    #[test]
    fn same_seed_reproduces_the_record() {
        let d = data();
        let cfg = small_cfg(SelfModelConfig::new(vec![0], 10.0));
        let a = run_experiment::<f64>(&cfg, 2, &d).unwrap();
        let b = run_experiment::<f64>(&cfg, 2, &d).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run_experiment::<f64>(&cfg, 3, &d).unwrap();
        assert_ne!(a.epochs, c.epochs);
    }

    #[test]
    fn disabled_self_model_matches_baseline() {
        let d = data();
        let base = run_experiment::<f64>(&small_cfg(SelfModelConfig::baseline()), 1, &d).unwrap();
        let off = run_experiment::<f64>(&small_cfg(SelfModelConfig::new(vec![], 0.0)), 1, &d).unwrap();
        assert_eq!(base.epochs, off.epochs);
        assert_eq!(base.rlct, off.rlct);
    }

    #[test]
    fn divergence_marks_the_run_failed() {
        let d = data();
        let mut cfg = small_cfg(SelfModelConfig::baseline());
        cfg.optimizer = OptimizerSettings { kind: OptimizerKind::Sgd, learning_rate: 1e200, ..Default::default() };
        let r = run_experiment::<f64>(&cfg, 1, &d).unwrap();
        assert!(matches!(r.status, RunStatus::Failed { epoch: 1, .. }), "{:?}", r.status);
        assert!(r.epochs.is_empty());
    }

    #[test]
    fn mismatched_architecture_is_a_config_error() {
        let mut cfg = small_cfg(SelfModelConfig::baseline());
        cfg.architecture.input_dim = 5;
        assert!(matches!(run_experiment::<f64>(&cfg, 1, &data()), Err(Error::Config(_))));
    }

    #[test]
    fn trains_an_embedding_network_on_text() {
        let docs = ["good great fine", "bad awful poor", "great good", "poor bad"];
        let records: Vec<Record> = (0..64)
            .map(|i| Record { label: (i % 2) as u8, text: docs[i % 4].to_string() })
            .collect();
        let vocab = build_vocab(records.iter().map(|r| r.text.as_str()), 10).unwrap();
        let ds = Dataset::Text(TextDataset::encode(&records, &vocab, 6).unwrap());
        let d = LoadedData { train: ds.clone(), test: ds };
        let mut cfg = small_cfg(SelfModelConfig::new(vec![0], 1.0));
        cfg.architecture = NetworkSpec::with_embedding(10, 4, vec![6], 2, 0);
        cfg.optimizer.learning_rate = 0.05;
        cfg.epochs = 20;
        cfg.metrics_epochs = vec![];
        let r = run_experiment::<f64>(&cfg, 1, &d).unwrap();
        assert_eq!(r.final_epoch().unwrap().test_acc, 1.0);
        assert_eq!(r.rlct.len(), 1);
    }
}

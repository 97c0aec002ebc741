use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::run::RunRecord;
use crate::error::{Error, Result};

/// Per-epoch metrics carried into summaries, in output order.
pub const EPOCH_METRICS: [&str; 6] =
    ["train_loss", "test_loss", "train_acc", "test_acc", "weight_spread", "generalization_gap"];
pub const RLCT_METRIC: &str = "rlct";

/// Mean and two-sided 95% Student-t interval of one metric in one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub config_id: String,
    pub metric: String,
    pub epoch: usize,
    /// `None` when every record was excluded.
    pub mean: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n: usize,
    /// Records of the group left out of this row (failed runs, and for the
    /// learning coefficient also flagged or missing estimates).
    pub anomalous_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub config_id: String,
    pub labels: BTreeMap<String, String>,
    pub runs: usize,
    pub failed: usize,
    pub metrics: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub groups: Vec<GroupSummary>,
}

impl SweepResult {
    pub fn rows(&self) -> impl Iterator<Item = &MetricSummary> {
        self.groups.iter().flat_map(|g| g.metrics.iter())
    }

    pub fn group(&self, config_id: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.config_id == config_id)
    }

    /// Row for `metric` at `epoch`, or at the latest epoch it was recorded.
    pub fn metric(&self, config_id: &str, metric: &str, epoch: Option<usize>) -> Option<&MetricSummary> {
        let g = self.group(config_id)?;
        let mut rows = g.metrics.iter().filter(|m| m.metric == metric);
        match epoch {
            Some(e) => rows.find(|m| m.epoch == e),
            None => rows.max_by_key(|m| m.epoch),
        }
    }
}

/// Half-width of the 95% interval: `t(0.975, n-1) * s / sqrt(n)`, zero for a
/// single value.
pub fn ci_half_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    t * var.sqrt() / (n as f64).sqrt()
}

fn summarize(config_id: &str, metric: &str, epoch: usize, values: &[f64], group_size: usize) -> MetricSummary {
    let n = values.len();
    let (mean, lo, hi) = if n == 0 {
        (None, None, None)
    } else {
        let mean = values.iter().sum::<f64>() / n as f64;
        let h = ci_half_width(values);
        (Some(mean), Some(mean - h), Some(mean + h))
    };
    MetricSummary {
        config_id: config_id.to_string(),
        metric: metric.to_string(),
        epoch,
        mean,
        ci_lo: lo,
        ci_hi: hi,
        n,
        anomalous_count: group_size - n,
    }
}

fn epoch_value(record: &RunRecord, metric: &str, epoch: usize) -> Option<f64> {
    let e = record.epochs.get(epoch - 1)?;
    Some(match metric {
        "train_loss" => e.train_loss,
        "test_loss" => e.test_loss,
        "train_acc" => e.train_acc,
        "test_acc" => e.test_acc,
        "weight_spread" => e.weight_spread,
        "generalization_gap" => e.generalization_gap,
        _ => return None,
    })
}

/// Summaries of one configuration's repeats.
pub fn summarize_group(records: &[&RunRecord]) -> Result<GroupSummary> {
    let first = records.first().ok_or_else(|| Error::Aggregation("empty group".into()))?;
    let id = &first.config_id;
    if let Some(r) = records.iter().find(|r| &r.config_id != id) {
        return Err(Error::Aggregation(format!("group {id} contains a record of {}", r.config_id)));
    }
    let ok: Vec<&RunRecord> = records.iter().copied().filter(|r| !r.failed()).collect();
    let max_epoch = records.iter().map(|r| r.epochs.len()).max().unwrap_or(0);
    let mut metrics = Vec::new();
    for metric in EPOCH_METRICS {
        for epoch in 1..=max_epoch {
            let values: Vec<f64> = ok.iter().filter_map(|r| epoch_value(r, metric, epoch)).collect();
            metrics.push(summarize(id, metric, epoch, &values, records.len()));
        }
    }
    let mut rlct_epochs: Vec<usize> = records.iter().flat_map(|r| r.rlct.iter().map(|m| m.epoch)).collect();
    rlct_epochs.sort_unstable();
    rlct_epochs.dedup();
    for epoch in rlct_epochs {
        let values: Vec<f64> =
            ok.iter().filter_map(|r| r.rlct.iter().find(|m| m.epoch == epoch).and_then(|m| m.usable())).collect();
        metrics.push(summarize(id, RLCT_METRIC, epoch, &values, records.len()));
    }
    Ok(GroupSummary {
        config_id: id.clone(),
        labels: first.labels.clone(),
        runs: records.len(),
        failed: records.len() - ok.len(),
        metrics,
    })
}

/// Group records by configuration id (sorted) and summarize each group.
pub fn aggregate(records: &[RunRecord]) -> Result<SweepResult> {
    if records.is_empty() {
        return Err(Error::Aggregation("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.config_id.as_str()).or_default().push(r);
    }
    let groups = groups.values().map(|g| summarize_group(g)).collect::<Result<_>>()?;
    Ok(SweepResult { groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::RlctEstimate;
    use crate::experiment::run::{EpochMetrics, RlctMeasurement, RunStatus};

    fn record(id: &str, seed: u64, spread: f64, lambda: Option<(f64, bool)>) -> RunRecord {
        RunRecord {
            schema_version: 1,
            config_id: id.into(),
            seed,
            labels: BTreeMap::new(),
            status: RunStatus::Completed,
            epochs: vec![EpochMetrics {
                epoch: 1,
                train_loss: 0.5,
                test_loss: 0.75,
                train_acc: 0.9,
                test_acc: 0.8,
                weight_spread: spread,
                generalization_gap: 0.25,
                joint_loss: 0.5,
            }],
            rlct: lambda
                .map(|(l, anomalous)| RlctMeasurement {
                    epoch: 1,
                    estimate: Some(RlctEstimate {
                        lambda_hat: l,
                        per_chain: vec![l],
                        mc_std_error: 0.0,
                        anomalous,
                        diverged_chains: 0,
                        reference_loss: 0.1,
                        dataset_size: 10,
                        beta: 0.5,
                    }),
                    error: None,
                })
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn one_two_three_interval() {
        let recs: Vec<RunRecord> = (1..=3).map(|i| record("a", i, i as f64, None)).collect();
        let s = aggregate(&recs).unwrap();
        let m = s.metric("a", "weight_spread", Some(1)).unwrap();
        assert_eq!(m.mean, Some(2.0));
        let half = m.ci_hi.unwrap() - 2.0;
        assert!((half - 4.302_652_7 / 3f64.sqrt()).abs() < 1e-6, "{half}");
        assert!((half - 2.484).abs() < 1e-3);
    }

    #[test]
    fn identical_values_have_zero_width() {
        let recs: Vec<RunRecord> = (1..=4).map(|i| record("a", i, 0.3, None)).collect();
        let m = aggregate(&recs).unwrap().metric("a", "weight_spread", None).cloned().unwrap();
        assert_eq!((m.ci_lo, m.ci_hi), (Some(0.3), Some(0.3)));
    }

    #[test]
    fn single_run_has_zero_width() {
        let m = aggregate(&[record("a", 1, 0.7, Some((3.0, false)))]).unwrap();
        let r = m.metric("a", RLCT_METRIC, None).unwrap();
        assert_eq!((r.mean, r.ci_lo, r.ci_hi, r.n), (Some(3.0), Some(3.0), Some(3.0), 1));
    }

    #[test]
    fn anomalous_estimate_is_excluded_and_counted() {
        let mut recs: Vec<RunRecord> = (1..=9).map(|i| record("a", i, 1.0, Some((i as f64, false)))).collect();
        recs.push(record("a", 10, 1.0, Some((-4.0, true))));
        let s = aggregate(&recs).unwrap();
        let r = s.metric("a", RLCT_METRIC, None).unwrap();
        assert_eq!((r.n, r.anomalous_count), (9, 1));
        assert_eq!(r.mean, Some(5.0));
        assert_eq!(s.metric("a", "weight_spread", None).unwrap().n, 10);
    }

    #[test]
    fn failed_runs_are_counted_not_averaged() {
        let mut bad = record("a", 2, 100.0, Some((9.0, false)));
        bad.status = RunStatus::Failed { epoch: 1, reason: "nan".into() };
        let s = aggregate(&[record("a", 1, 1.0, Some((1.0, false))), bad]).unwrap();
        assert_eq!(s.group("a").unwrap().failed, 1);
        let m = s.metric("a", "weight_spread", None).unwrap();
        assert_eq!((m.mean, m.n, m.anomalous_count), (Some(1.0), 1, 1));
    }

    #[test]
    fn groups_are_sorted_by_id() {
        let s = aggregate(&[record("b", 1, 1.0, None), record("a", 1, 1.0, None)]).unwrap();
        let ids: Vec<&str> = s.groups.iter().map(|g| g.config_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(aggregate(&[]), Err(Error::Aggregation(_))));
        assert!(matches!(summarize_group(&[]), Err(Error::Aggregation(_))));
    }
}

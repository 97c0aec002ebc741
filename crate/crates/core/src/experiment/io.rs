use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aggregate::SweepResult;
use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::run::RunRecord;
use crate::error::{config_err, Error, Result};

/// On-disk sweep definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub name: String,
    pub experiments: Vec<ExperimentConfig>,
}

impl ConfigFile {
    pub fn new(name: impl Into<String>, experiments: Vec<ExperimentConfig>) -> Self {
        Self { schema_version: SCHEMA_VERSION, name: name.into(), experiments }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| config_err(format!("config: {e}")))?;
        file.check_version()?;
        Ok(file)
    }

    pub fn check_version(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// One JSON object per line, in the given order.
pub fn write_jsonl(records: &[RunRecord], out: &mut impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl std::io::Read) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: RunRecord =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("record on line {}: {e}", i + 1)))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Data(format!("record on line {} has schema_version {}", i + 1, r.schema_version)));
        }
        records.push(r);
    }
    Ok(records)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 8] = ["config_id", "metric", "epoch", "mean", "ci_lo", "ci_hi", "n", "anomalous_count"];

/// Tidy summary: one row per configuration, metric and epoch. Missing
/// statistics are left empty.
pub fn write_summary_csv(summary: &SweepResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for m in summary.rows() {
        w.write_record([
            m.config_id.clone(),
            m.metric.clone(),
            m.epoch.to_string(),
            opt(m.mean),
            opt(m.ci_lo),
            opt(m.ci_hi),
            m.n.to_string(),
            m.anomalous_count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::aggregate::aggregate;
    use crate::experiment::run::{EpochMetrics, RunStatus};

    fn record(seed: u64) -> RunRecord {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            config_id: "c".into(),
            seed,
            labels: [("aw".to_string(), "10".to_string())].into(),
            status: RunStatus::Completed,
            epochs: vec![EpochMetrics {
                epoch: 1,
                train_loss: 0.1 + seed as f64,
                test_loss: 0.3,
                train_acc: 1.0 / 3.0,
                test_acc: 0.5,
                weight_spread: 0.07,
                generalization_gap: 0.2 - seed as f64,
                joint_loss: 0.2,
            }],
            rlct: vec![],
        }
    }

    #[test]
    fn jsonl_round_trips_exactly() {
        let recs = vec![record(1), record(2)];
        let mut buf = Vec::new();
        write_jsonl(&recs, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let mut r = record(1);
        r.schema_version = 99;
        let mut buf = Vec::new();
        write_jsonl(&[r], &mut buf).unwrap();
        assert!(matches!(read_jsonl(buf.as_slice()), Err(Error::Data(_))));
        let cfg = r#"{"schema_version": 7, "name": "x", "experiments": []}"#;
        assert!(matches!(ConfigFile::from_json(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn summary_csv_has_header_and_rows() {
        let s = aggregate(&[record(1), record(2)]).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_HEADER.join(","));
        assert!(text.contains("c,weight_spread,1,0.07,0.07,0.07,2,0\n"));
    }

    #[test]
    fn config_file_rejects_unknown_fields() {
        let cfg = r#"{"schema_version": 1, "name": "x", "experiments": [], "extra": 1}"#;
        assert!(matches!(ConfigFile::from_json(cfg), Err(Error::Config(_))));
    }
}

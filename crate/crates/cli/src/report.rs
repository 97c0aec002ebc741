//! Figures and tidy summaries from a results directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use selfreg::experiment::{aggregate, read_jsonl, write_summary_csv, GroupSummary, SweepResult, RLCT_METRIC};

use crate::chart::{render_csv, render_svg, Figure, Point, Series};
use crate::error::{CliError, CliResult};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FIGS_DIR: &str = "figs";

/// Labels that can serve as a numeric x axis, with axis title and file tag.
const AXES: [(&str, &str, &str); 4] = [
    ("hidden", "hidden layer size", "hidden"),
    ("x", "varied layer width X", "x"),
    ("num_targets", "number of targeted layers", "targets"),
    ("target_layer", "targeted layer index", "target_layer"),
];

const FINAL_METRICS: [(&str, &str); 3] =
    [("weight_spread", "final-layer weight SD"), (RLCT_METRIC, "learning coefficient"), ("test_acc", "test accuracy")];

fn point(summary: &selfreg::experiment::MetricSummary, x: f64) -> Option<Point> {
    Some(Point { x, mean: summary.mean?, lo: summary.ci_lo?, hi: summary.ci_hi?, n: summary.n })
}

/// Baseline first, then numeric auxiliary weights ascending, then the rest.
fn series_order(name: &str) -> (u8, f64, String) {
    match name {
        "baseline" => (0, 0.0, String::new()),
        other => match other.parse::<f64>() {
            Ok(v) => (1, v, String::new()),
            Err(_) => (2, 0.0, other.to_string()),
        },
    }
}

fn sorted_series(map: BTreeMap<String, Vec<Point>>, prefix: &str) -> Vec<Series> {
    let mut series: Vec<Series> = map
        .into_iter()
        .map(|(name, mut points)| {
            points.sort_by(|a, b| a.x.total_cmp(&b.x));
            let name = match name.as_str() {
                "baseline" | "" => name,
                _ if !prefix.is_empty() => format!("{prefix}{name}"),
                _ => name,
            };
            Series { name, points }
        })
        .collect();
    series.sort_by(|a, b| {
        let strip = |s: &str| s.trim_start_matches(prefix).to_string();
        let (ka, kb) = (series_order(&strip(&a.name)), series_order(&strip(&b.name)));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    });
    series
}

fn aw_of(g: &GroupSummary) -> String {
    g.labels.get("aw").cloned().unwrap_or_else(|| g.config_id.clone())
}

/// Weight spread over training, one chart per hidden-size label.
fn spread_curves(summary: &SweepResult) -> Vec<Figure> {
    let mut by_hidden: BTreeMap<String, Vec<&GroupSummary>> = BTreeMap::new();
    for g in &summary.groups {
        by_hidden.entry(g.labels.get("hidden").cloned().unwrap_or_default()).or_default().push(g);
    }
    let many = by_hidden.len() > 1;
    by_hidden
        .into_iter()
        .map(|(hidden, groups)| {
            let mut map: BTreeMap<String, Vec<Point>> = BTreeMap::new();
            let aw_unique = {
                let mut aws: Vec<String> = groups.iter().map(|g| aw_of(g)).collect();
                aws.sort_unstable();
                aws.windows(2).all(|w| w[0] != w[1])
            };
            for g in groups {
                // Several configs per AW (width or target sweeps) are told apart by id.
                let key = if aw_unique { aw_of(g) } else { g.config_id.clone() };
                let pts = g
                    .metrics
                    .iter()
                    .filter(|m| m.metric == "weight_spread")
                    .filter_map(|m| point(m, m.epoch as f64));
                map.entry(key).or_default().extend(pts);
            }
            let (name, title) = if many {
                (format!("spread_vs_epoch_hidden{hidden}"), format!("Final-layer weight spread, hidden {hidden}"))
            } else {
                ("spread_vs_epoch".to_string(), "Final-layer weight spread".to_string())
            };
            Figure {
                name,
                title,
                x_label: "epoch".into(),
                y_label: "weight SD".into(),
                series: sorted_series(map, "AW "),
            }
        })
        .collect()
}

fn numeric_label(g: &GroupSummary, key: &str) -> Option<f64> {
    g.labels.get(key)?.parse().ok()
}

/// Final metrics against each numeric label that varies across configs.
fn final_metric_charts(summary: &SweepResult) -> Vec<Figure> {
    let mut figs = Vec::new();
    for (key, axis_title, tag) in AXES {
        let groups: Vec<(&GroupSummary, f64)> =
            summary.groups.iter().filter_map(|g| numeric_label(g, key).map(|x| (g, x))).collect();
        let mut xs: Vec<f64> = groups.iter().map(|(_, x)| *x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() < 2 {
            continue;
        }
        for (metric, y_label) in FINAL_METRICS {
            let mut map: BTreeMap<String, Vec<Point>> = BTreeMap::new();
            for (g, x) in &groups {
                let Some(row) = g.metrics.iter().filter(|m| m.metric == metric).max_by_key(|m| m.epoch) else {
                    continue;
                };
                let Some(p) = point(row, *x) else { continue };
                // Target-count sweeps read as one curve starting at the baseline.
                let series = if key == "num_targets" { metric.to_string() } else { aw_of(g) };
                map.entry(series).or_default().push(p);
            }
            if map.is_empty() {
                continue;
            }
            let short = if metric == "weight_spread" { "spread" } else { metric };
            figs.push(Figure {
                name: format!("{short}_vs_{tag}"),
                title: format!("{y_label} vs {axis_title}"),
                x_label: axis_title.into(),
                y_label: y_label.into(),
                series: sorted_series(map, if key == "num_targets" { "" } else { "AW " }),
            });
        }
    }
    figs
}

pub fn figures(summary: &SweepResult) -> Vec<Figure> {
    let mut figs = spread_curves(summary);
    figs.extend(final_metric_charts(summary));
    figs
}

/// Read `dir/records.jsonl`, then write the summary table and every figure
/// (SVG plus the CSV of its points). Returns the files written.
pub fn report(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let path = dir.join(RECORDS_FILE);
    let file = fs::File::open(&path).map_err(CliError::file(&path))?;
    let records = read_jsonl(file)?;
    if records.is_empty() {
        return Err(CliError::Runtime(format!("{} holds no records", path.display())));
    }
    let summary = aggregate(&records)?;
    let mut written = Vec::new();

    let summary_path = dir.join(SUMMARY_FILE);
    let mut buf = Vec::new();
    write_summary_csv(&summary, &mut buf)?;
    fs::write(&summary_path, buf).map_err(CliError::file(&summary_path))?;
    written.push(summary_path);

    let figs_dir = dir.join(FIGS_DIR);
    fs::create_dir_all(&figs_dir).map_err(CliError::file(&figs_dir))?;
    for fig in figures(&summary) {
        for (ext, body) in [("svg", render_svg(&fig)), ("csv", render_csv(&fig))] {
            let p = figs_dir.join(format!("{}.{ext}", fig.name));
            fs::write(&p, body).map_err(CliError::file(&p))?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfreg::complexity::RlctEstimate;
    use selfreg::experiment::{write_jsonl, EpochMetrics, RlctMeasurement, RunRecord, RunStatus};

    fn record(id: &str, seed: u64, labels: &[(&str, &str)], spread: f64, lambda: f64) -> RunRecord {
        RunRecord {
            schema_version: 1,
            config_id: id.into(),
            seed,
            labels: labels.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            status: RunStatus::Completed,
            epochs: (1..=2)
                .map(|e| EpochMetrics {
                    epoch: e,
                    train_loss: 0.1,
                    test_loss: 0.2,
                    train_acc: 0.9,
                    test_acc: 0.8 + seed as f64 * 0.01,
                    weight_spread: spread / e as f64,
                    generalization_gap: 0.1,
                    joint_loss: 0.1,
                })
                .collect(),
            rlct: vec![RlctMeasurement {
                epoch: 2,
                estimate: Some(RlctEstimate {
                    lambda_hat: lambda,
                    per_chain: vec![lambda],
                    mc_std_error: 0.0,
                    anomalous: false,
                    diverged_chains: 0,
                    reference_loss: 0.1,
                    dataset_size: 100,
                    beta: 0.2,
                }),
                error: None,
            }],
        }
    }

    fn targets_records() -> Vec<RunRecord> {
        (0..=3)
            .map(|k| {
                let aw = if k == 0 { "baseline" } else { "10" };
                record(&format!("targets{k}"), 1, &[("num_targets", &k.to_string()), ("aw", aw)], 0.1, 10.0 - k as f64)
            })
            .collect()
    }

    #[test]
    fn target_sweep_gets_an_rlct_chart() {
        let s = aggregate(&targets_records()).unwrap();
        let figs = figures(&s);
        let f = figs.iter().find(|f| f.name == "rlct_vs_targets").unwrap();
        assert_eq!(f.series.len(), 1);
        let xs: Vec<f64> = f.series[0].points.iter().map(|p| p.x).collect();
        assert_eq!(xs, [0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.series[0].points[3].mean, 7.0);
    }

    #[test]
    fn hidden_grid_gets_per_aw_series() {
        let mut recs = Vec::new();
        for h in ["64", "512"] {
            for aw in ["baseline", "10"] {
                for seed in 1..=2 {
                    recs.push(record(&format!("h{h}_{aw}"), seed, &[("hidden", h), ("aw", aw)], 0.1, 5.0));
                }
            }
        }
        let figs = figures(&aggregate(&recs).unwrap());
        let names: Vec<&str> = figs.iter().map(|f| f.name.as_str()).collect();
        for n in ["spread_vs_epoch_hidden512", "spread_vs_epoch_hidden64", "spread_vs_hidden", "rlct_vs_hidden", "test_acc_vs_hidden"] {
            assert!(names.contains(&n), "{names:?}");
        }
        let f = figs.iter().find(|f| f.name == "spread_vs_hidden").unwrap();
        assert_eq!(f.series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["baseline", "AW 10"]);
    }

    #[test]
    fn report_is_byte_stable_and_needs_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut buf = Vec::new();
        write_jsonl(&targets_records(), &mut buf).unwrap();
        fs::write(dir.path().join(RECORDS_FILE), &buf).unwrap();
        let first: Vec<Vec<u8>> = report(dir.path()).unwrap().iter().map(|p| fs::read(p).unwrap()).collect();
        let second: Vec<Vec<u8>> = report(dir.path()).unwrap().iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert!(dir.path().join("figs/rlct_vs_targets.csv").exists());

        let empty = tempfile::tempdir().unwrap();
        fs::write(empty.path().join(RECORDS_FILE), b"").unwrap();
        assert_eq!(report(empty.path()).unwrap_err().exit_code(), 2);
        assert_eq!(report(&empty.path().join("missing")).unwrap_err().exit_code(), 2);
    }
}

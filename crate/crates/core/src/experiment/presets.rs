use std::collections::BTreeMap;

use super::config::{DatasetConfig, DatasetKind, ExperimentConfig};
use crate::complexity::RlctConfig;
use crate::error::{config_err, Result};
use crate::nn::{NetworkSpec, OptimizerSettings};
use crate::selfmodel::SelfModelConfig;

pub const DEEP_NET: [usize; 5] = [2000, 1000, 1000, 500, 20];
/// Auxiliary weight used by every appendix preset.
pub const APPENDIX_AW: f64 = 10.0;

pub const APPENDIX_PRESETS: [&str; 6] = [
    "vary_target_layer",
    "vary_target_width",
    "fixed_width",
    "vary_surrounding",
    "multi_target_forward",
    "multi_target_reversed",
];

pub const MAIN_PRESETS: [&str; 5] = ["mnist_grid", "mnist_grid_full", "mnist_check", "text", "text_full"];

fn labels(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn aw_label(selfmodel: &SelfModelConfig) -> String {
    if selfmodel.is_baseline() {
        "baseline".into()
    } else {
        format!("{}", selfmodel.w_s)
    }
}

fn mnist(id: String, hidden: Vec<usize>, selfmodel: SelfModelConfig, epochs: usize, seeds: Vec<u64>) -> ExperimentConfig {
    let mut tags = vec![
        ("hidden", hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("-")),
        ("aw", aw_label(&selfmodel)),
    ];
    if !selfmodel.is_baseline() {
        tags.push(("targets", selfmodel.target_layers.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("-")));
        tags.push(("num_targets", selfmodel.target_layers.len().to_string()));
    }
    ExperimentConfig {
        id,
        dataset: DatasetConfig { kind: DatasetKind::Mnist, ..DatasetConfig::default() },
        architecture: NetworkSpec::mlp(784, hidden, 10, 0),
        selfmodel,
        epochs,
        seeds,
        batch_size: 128,
        optimizer: OptimizerSettings::default(),
        rlct: RlctConfig::default(),
        metrics_epochs: Vec::new(),
        labels: labels(&tags),
    }
}

fn aw_id(aw: Option<f64>) -> String {
    match aw {
        None => "base".into(),
        Some(w) => format!("aw{:03}", w as u64),
    }
}

/// Hidden sizes x {baseline, AW 1..50}, one hidden layer targeted.
fn mnist_grid(epochs: usize, seeds: Vec<u64>) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for hidden in [64usize, 128, 256, 512] {
        for aw in [None, Some(1.0), Some(5.0), Some(10.0), Some(20.0), Some(50.0)] {
            let sm = aw.map_or_else(SelfModelConfig::baseline, |w| SelfModelConfig::new(vec![0], w));
            out.push(mnist(format!("h{hidden:04}_{}", aw_id(aw)), vec![hidden], sm, epochs, seeds.clone()));
        }
    }
    out
}

/// Configurations behind the MNIST checks: hidden 512 at baseline, AW 10 and
/// AW 50, and hidden 64 at baseline and AW 50.
fn mnist_check() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for (hidden, aws) in [(512usize, vec![None, Some(10.0), Some(50.0)]), (64, vec![None, Some(50.0)])] {
        for aw in aws {
            let sm = aw.map_or_else(SelfModelConfig::baseline, |w| SelfModelConfig::new(vec![0], w));
            out.push(mnist(format!("h{hidden:04}_{}", aw_id(aw)), vec![hidden], sm, 10, vec![1, 2, 3]));
        }
    }
    out
}

pub const TEXT_EMBED_DIM: usize = 64;
pub const TEXT_HIDDEN: usize = 64;

fn text(full: bool) -> Vec<ExperimentConfig> {
    let dataset = DatasetConfig {
        kind: DatasetKind::Text,
        train_limit: (!full).then_some(5000),
        test_limit: (!full).then_some(5000),
        ..DatasetConfig::default()
    };
    let (epochs, seeds, metrics_epochs) = if full { (500, (1..=10).collect(), vec![250, 500]) } else { (50, vec![1, 2, 3], vec![]) };
    [None, Some(100.0), Some(500.0)]
        .into_iter()
        .map(|aw| {
            let sm = aw.map_or_else(SelfModelConfig::baseline, |w| SelfModelConfig::new(vec![0], w));
            ExperimentConfig {
                id: format!("text_{}", aw_id(aw)),
                dataset: dataset.clone(),
                architecture: NetworkSpec::with_embedding(
                    dataset.vocab_size,
                    TEXT_EMBED_DIM,
                    vec![TEXT_HIDDEN],
                    2,
                    0,
                ),
                labels: labels(&[("aw", aw_label(&sm)), ("hidden", TEXT_HIDDEN.to_string())]),
                selfmodel: sm,
                epochs,
                seeds: seeds.clone(),
                batch_size: 128,
                optimizer: OptimizerSettings::default(),
                rlct: RlctConfig::default(),
                metrics_epochs: metrics_epochs.clone(),
            }
        })
        .collect()
}

fn deep(id: String, hidden: Vec<usize>, targets: Option<Vec<usize>>, extra: &[(&str, String)]) -> ExperimentConfig {
    let sm = targets.map_or_else(SelfModelConfig::baseline, |t| SelfModelConfig::new(t, APPENDIX_AW));
    let mut cfg = mnist(id, hidden, sm, 10, vec![1, 2, 3]);
    for (k, v) in extra {
        cfg.labels.insert(k.to_string(), v.clone());
    }
    cfg
}

/// Grids of the deep-network variants, each with its matched baselines.
pub fn appendix_presets(name: &str) -> Result<Vec<ExperimentConfig>> {
    let deep_net = DEEP_NET.to_vec();
    let out = match name {
        "vary_target_layer" => {
            let mut v: Vec<_> = (0..DEEP_NET.len())
                .map(|i| deep(format!("layer{i}"), deep_net.clone(), Some(vec![i]), &[("target_layer", i.to_string())]))
                .collect();
            v.push(deep("layer_base".into(), deep_net, None, &[]));
            v
        }
        "vary_target_width" => {
            let mut v = Vec::new();
            for x in [5000usize, 4000, 3000, 2000, 1000, 500] {
                let hidden = vec![2000, x, 500, 250, 100, 20];
                let tag = [("x", x.to_string())];
                v.push(deep(format!("x{x:04}_base"), hidden.clone(), None, &tag));
                v.push(deep(format!("x{x:04}_target"), hidden, Some(vec![1]), &tag));
            }
            v
        }
        "fixed_width" => {
            let hidden = vec![1000; 5];
            let mut v: Vec<_> = (0..hidden.len())
                .map(|i| deep(format!("pos{i}"), hidden.clone(), Some(vec![i]), &[("target_layer", i.to_string())]))
                .collect();
            v.push(deep("pos_base".into(), hidden, None, &[]));
            v
        }
        "vary_surrounding" => {
            let mut v = Vec::new();
            for x in [2000usize, 1500, 1000, 500, 100] {
                let hidden = vec![x, 1000, x, 500, 20];
                let tag = [("x", x.to_string())];
                v.push(deep(format!("x{x:04}_base"), hidden.clone(), None, &tag));
                v.push(deep(format!("x{x:04}_target"), hidden, Some(vec![1]), &tag));
            }
            v
        }
        "multi_target_forward" | "multi_target_reversed" => {
            let depth = DEEP_NET.len();
            let mut v: Vec<_> = (1..=depth)
                .map(|k| {
                    let targets: Vec<usize> =
                        if name == "multi_target_forward" { (0..k).collect() } else { (depth - k..depth).collect() };
                    deep(format!("targets{k}"), deep_net.clone(), Some(targets), &[])
                })
                .collect();
            let mut base = deep("targets0".into(), deep_net, None, &[]);
            base.labels.insert("num_targets".into(), "0".into());
            v.push(base);
            v
        }
        other => {
            return Err(config_err(format!(
                "unknown appendix preset {other:?}; expected one of {}",
                APPENDIX_PRESETS.join(", ")
            )))
        }
    };
    Ok(out)
}

/// Any named grid: the main MNIST and text grids or an appendix preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    match name {
        "mnist_grid" => Ok(mnist_grid(10, vec![1, 2, 3])),
        "mnist_grid_full" => Ok(mnist_grid(50, (1..=10).collect())),
        "mnist_check" => Ok(mnist_check()),
        "text" => Ok(text(false)),
        "text_full" => Ok(text(true)),
        other if APPENDIX_PRESETS.contains(&other) => appendix_presets(other),
        other => Err(config_err(format!(
            "unknown preset {other:?}; expected one of {}, {}",
            MAIN_PRESETS.join(", "),
            APPENDIX_PRESETS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfmodel::augment_head;

    fn targets(cfgs: &[ExperimentConfig]) -> Vec<Vec<usize>> {
        cfgs.iter().filter(|c| !c.is_baseline()).map(|c| c.selfmodel.target_layers.clone()).collect()
    }

    #[test]
    fn reversed_sets_grow_from_the_last_layer() {
        let cfgs = appendix_presets("multi_target_reversed").unwrap();
        assert_eq!(targets(&cfgs), vec![vec![4], vec![3, 4], vec![2, 3, 4], vec![1, 2, 3, 4], vec![0, 1, 2, 3, 4]]);
        let widths: Vec<usize> = cfgs
            .iter()
            .filter(|c| !c.is_baseline())
            .map(|c| augment_head(&c.architecture, &c.selfmodel).unwrap().1.aux_width)
            .collect();
        assert_eq!(widths, [20, 520, 1520, 2520, 4520]);
    }

    #[test]
    fn forward_sets_grow_from_the_first_layer() {
        let cfgs = appendix_presets("multi_target_forward").unwrap();
        assert_eq!(targets(&cfgs)[2], vec![0, 1, 2]);
    }

    #[test]
    fn target_layer_sweep_has_one_baseline() {
        let cfgs = appendix_presets("vary_target_layer").unwrap();
        assert_eq!(cfgs.iter().filter(|c| c.is_baseline()).count(), 1);
        assert_eq!(targets(&cfgs), (0..5).map(|i| vec![i]).collect::<Vec<_>>());
        assert!(cfgs.iter().all(|c| c.architecture.hidden_dims == DEEP_NET));
    }

    #[test]
    fn fixed_width_has_one_baseline() {
        let cfgs = appendix_presets("fixed_width").unwrap();
        assert_eq!(cfgs.iter().filter(|c| c.is_baseline()).count(), 1);
        assert!(cfgs.iter().all(|c| c.architecture.hidden_dims.iter().all(|&h| h == 1000)));
    }

    #[test]
    fn surrounding_sweep_matches_baselines() {
        let cfgs = appendix_presets("vary_surrounding").unwrap();
        assert_eq!(cfgs.len(), 10);
        for x in [2000, 1500, 1000, 500, 100] {
            let arch = vec![x, 1000, x, 500, 20];
            let same: Vec<_> = cfgs.iter().filter(|c| c.architecture.hidden_dims == arch).collect();
            assert_eq!(same.len(), 2);
            assert_eq!(same.iter().filter(|c| c.is_baseline()).count(), 1);
        }
    }

    #[test]
    fn width_sweep_targets_layer_one() {
        let cfgs = appendix_presets("vary_target_width").unwrap();
        for c in cfgs.iter().filter(|c| !c.is_baseline()) {
            assert_eq!(c.selfmodel.target_layers, [1]);
            assert_eq!(c.architecture.hidden_dims[2..], [500, 250, 100, 20]);
        }
        assert_eq!(cfgs.iter().filter(|c| c.is_baseline()).count(), 6);
    }

    #[test]
    fn every_preset_is_valid() {
        for name in MAIN_PRESETS.iter().chain(APPENDIX_PRESETS.iter()) {
            let cfgs = preset(name).unwrap();
            let mut ids: Vec<&str> = cfgs.iter().map(|c| c.id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), cfgs.len(), "{name}");
            for c in &cfgs {
                c.validate().unwrap();
            }
        }
    }

    #[test]
    fn grid_has_240_runs_at_paper_scale() {
        let runs: usize = preset("mnist_grid_full").unwrap().iter().map(|c| c.repeats()).sum();
        assert_eq!(runs, 240);
    }

    #[test]
    fn unknown_name_is_a_config_error() {
        assert!(matches!(appendix_presets("nope"), Err(crate::Error::Config(_))));
        assert!(preset("mnist_grid").is_ok());
    }
}

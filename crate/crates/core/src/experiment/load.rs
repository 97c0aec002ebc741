use std::path::Path;

use ndarray::Array2;

use super::config::{DatasetConfig, DatasetKind, SyntheticConfig};
use crate::data::{build_vocab, text, Dataset, DenseDataset, ImageDataset, Split, TextDataset};
use crate::error::Result;
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;

/// Train and test splits ready for training.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn load_data(cfg: &DatasetConfig, data_dir: &Path) -> Result<LoadedData> {
    let limit = |ds: Dataset, limit: Option<usize>, salt: u64| match limit {
        Some(l) => ds.subset(l, cfg.subset_seed.wrapping_add(salt)),
        None => ds,
    };
    match cfg.kind {
        DatasetKind::Mnist => {
            let dir = data_dir.join("mnist");
            let train = Dataset::Image(ImageDataset::load(&dir, Split::Train)?);
            let test = Dataset::Image(ImageDataset::load(&dir, Split::Test)?);
            Ok(LoadedData { train: limit(train, cfg.train_limit, 0), test: limit(test, cfg.test_limit, 1) })
        }
        DatasetKind::Text => {
            let dir = data_dir.join("imdb");
            let train = subset_records(text::read_tsv(&dir.join("train.tsv"))?, cfg.train_limit, cfg.subset_seed);
            let test =
                subset_records(text::read_tsv(&dir.join("test.tsv"))?, cfg.test_limit, cfg.subset_seed.wrapping_add(1));
            let vocab = build_vocab(train.iter().map(|r| r.text.as_str()), cfg.vocab_size)?;
            Ok(LoadedData {
                train: Dataset::Text(TextDataset::encode(&train, &vocab, cfg.max_len)?),
                test: Dataset::Text(TextDataset::encode(&test, &vocab, cfg.max_len)?),
            })
        }
        DatasetKind::Synthetic => Ok(synthetic_clusters(&cfg.synthetic)),
    }
}

fn subset_records(records: Vec<text::Record>, limit: Option<usize>, seed: u64) -> Vec<text::Record> {
    match limit {
        Some(l) if l < records.len() => {
            let mut rng = stream_rng(seed, streams::SUBSET, 0);
            let mut keep = rand::seq::index::sample(&mut rng, records.len(), l).into_vec();
            keep.sort_unstable();
            keep.into_iter().map(|i| records[i].clone()).collect()
        }
        _ => records,
    }
}

/// Isotropic Gaussian clusters around seeded class centers.
pub fn synthetic_clusters(cfg: &SyntheticConfig) -> LoadedData {
    let mut rng = stream_rng(cfg.seed, streams::SYNTHETIC, 10);
    let centers = Array2::from_shape_simple_fn((cfg.num_classes, cfg.input_dim), || {
        f64::standard_normal(&mut rng) * cfg.separation
    });
    let draw = |n: usize, stream: u64| {
        let mut rng = stream_rng(cfg.seed, streams::SYNTHETIC, stream);
        let labels: Vec<usize> = (0..n).map(|i| i % cfg.num_classes).collect();
        let features = Array2::from_shape_fn((n, cfg.input_dim), |(i, j)| {
            centers[[labels[i], j]] + f64::standard_normal(&mut rng)
        });
        Dataset::Dense(DenseDataset { features, labels, num_classes: cfg.num_classes })
    };
    LoadedData { train: draw(cfg.train_size, 11), test: draw(cfg.test_size, 12) }
}

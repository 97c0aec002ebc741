//! Dataset loading and batching.
//!
//! Cache layout under the data directory:
//!
//! ```text
//! mnist/{train,test}-{images,labels}   IDX files
//! imdb/{train,test}.tsv                label<TAB>text
//! ```

mod batch;
pub mod idx;
pub mod text;

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use batch::BatchPlan;
pub use idx::{encode_images, encode_labels, parse_idx, IdxArray};
pub use text::{build_vocab, tokenize, Record, Vocab, OOV_INDEX};

use crate::error::{Error, Result};
use crate::nn::Batch;
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;

/// Environment variable overriding the data cache directory.
pub const DATA_DIR_ENV: &str = "SELFREG_DATA_DIR";

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Grayscale images stored as raw bytes; values are exposed as `byte / 255`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    /// `N x (rows * cols)`.
    pub pixels: Array2<u8>,
    pub labels: Vec<usize>,
    pub split: Split,
}

impl ImageDataset {
    pub fn from_idx(images: IdxArray, labels: IdxArray, split: Split) -> Result<Self> {
        let (count, rows, cols, pixels) = match images {
            IdxArray::Images { count, rows, cols, pixels } => (count, rows, cols, pixels),
            IdxArray::Labels(_) => return Err(Error::Data("expected an image file, found labels".into())),
        };
        let labels = match labels {
            IdxArray::Labels(l) => l,
            IdxArray::Images { .. } => return Err(Error::Data("expected a label file, found images".into())),
        };
        if labels.len() != count {
            return Err(Error::Data(format!("{count} images but {} labels", labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= 10) {
            return Err(Error::Data(format!("digit label {bad} outside [0, 10)")));
        }
        let pixels = Array2::from_shape_vec((count, rows * cols), pixels)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(Self { pixels, labels: labels.into_iter().map(usize::from).collect(), split })
    }

    pub fn load(dir: &Path, split: Split) -> Result<Self> {
        let read = |kind: &str| -> Result<IdxArray> {
            let path = dir.join(format!("{}-{kind}", split.name()));
            let bytes = std::fs::read(&path)
                .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
            parse_idx(&bytes)
        };
        let ds = Self::from_idx(read("images")?, read("labels")?, split)?;
        if ds.pixels.ncols() != 784 {
            return Err(Error::Data(format!("expected 28x28 digits, found {} pixels", ds.pixels.ncols())));
        }
        Ok(ds)
    }

    pub fn pixel(&self, i: usize, j: usize) -> f64 {
        f64::from(self.pixels[[i, j]]) / 255.0
    }
}

/// Padded token sequences with binary sentiment labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TextDataset {
    /// `N x max_len`, right-padded with 0.
    pub tokens: Array2<u32>,
    pub labels: Vec<usize>,
    pub vocab_size: usize,
}

impl TextDataset {
    pub fn encode(records: &[Record], vocab: &Vocab, max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::Config("max_len must be positive".into()));
        }
        let mut flat = Vec::with_capacity(records.len() * max_len);
        for r in records {
            flat.extend(vocab.encode(&r.text, max_len));
        }
        let tokens = Array2::from_shape_vec((records.len(), max_len), flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(Self { tokens, labels: records.iter().map(|r| usize::from(r.label)).collect(), vocab_size: vocab.size })
    }
}

/// Model inputs for a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Inputs<F> {
    Dense(Array2<F>),
    Tokens(Array2<u32>),
}

impl<F: Scalar> Inputs<F> {
    pub fn batch(&self) -> Batch<'_, F> {
        match self {
            Inputs::Dense(x) => Batch::Dense(x.view()),
            Inputs::Tokens(t) => Batch::Tokens(t.view()),
        }
    }
}

/// Dense feature matrix with labels; used for synthetic tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Image(ImageDataset),
    Text(TextDataset),
    Dense(DenseDataset),
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[usize] {
        match self {
            Dataset::Image(d) => &d.labels,
            Dataset::Text(d) => &d.labels,
            Dataset::Dense(d) => &d.labels,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Dataset::Image(_) => 10,
            Dataset::Text(_) => 2,
            Dataset::Dense(d) => d.num_classes,
        }
    }

    /// Width of one dense input row, or the vocabulary size for text.
    pub fn input_dim(&self) -> usize {
        match self {
            Dataset::Image(d) => d.pixels.ncols(),
            Dataset::Text(d) => d.vocab_size,
            Dataset::Dense(d) => d.features.ncols(),
        }
    }

    /// Inputs and labels of the samples at `indices`, in that order.
    pub fn gather<F: Scalar>(&self, indices: &[usize]) -> (Inputs<F>, Vec<usize>) {
        let labels = indices.iter().map(|&i| self.labels()[i]).collect();
        let inputs = match self {
            Dataset::Image(d) => {
                let scale = F::from_f64_lossy(255.0).recip();
                let width = d.pixels.ncols();
                Inputs::Dense(Array2::from_shape_fn((indices.len(), width), |(r, c)| {
                    F::from_f64_lossy(f64::from(d.pixels[[indices[r], c]])) * scale
                }))
            }
            Dataset::Text(d) => {
                Inputs::Tokens(Array2::from_shape_fn((indices.len(), d.tokens.ncols()), |(r, c)| {
                    d.tokens[[indices[r], c]]
                }))
            }
            Dataset::Dense(d) => Inputs::Dense(Array2::from_shape_fn((indices.len(), d.features.ncols()), |(r, c)| {
                F::from_f64_lossy(d.features[[indices[r], c]])
            })),
        };
        (inputs, labels)
    }

    /// Keep `limit` samples chosen by a seeded draw, preserving their order.
    pub fn subset(&self, limit: usize, seed: u64) -> Self {
        if limit >= self.len() {
            return self.clone();
        }
        let mut rng = stream_rng(seed, streams::SUBSET, 0);
        let mut keep = rand::seq::index::sample(&mut rng, self.len(), limit).into_vec();
        keep.sort_unstable();
        self.select(&keep)
    }

    fn select(&self, keep: &[usize]) -> Self {
        let labels: Vec<usize> = keep.iter().map(|&i| self.labels()[i]).collect();
        match self {
            Dataset::Image(d) => Dataset::Image(ImageDataset {
                pixels: d.pixels.select(ndarray::Axis(0), keep),
                labels,
                split: d.split,
            }),
            Dataset::Text(d) => Dataset::Text(TextDataset {
                tokens: d.tokens.select(ndarray::Axis(0), keep),
                labels,
                vocab_size: d.vocab_size,
            }),
            Dataset::Dense(d) => Dataset::Dense(DenseDataset {
                features: d.features.select(ndarray::Axis(0), keep),
                labels,
                num_classes: d.num_classes,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_images() -> Dataset {
        let pixels = (0..4 * 784).map(|i| (i % 256) as u8).collect();
        let images = IdxArray::Images { count: 4, rows: 28, cols: 28, pixels };
        Dataset::Image(ImageDataset::from_idx(images, IdxArray::Labels(vec![3, 1, 4, 1]), Split::Train).unwrap())
    }

    #[test]
    fn gather_scales_pixels() {
        let ds = tiny_images();
        let (inputs, labels) = ds.gather::<f64>(&[2, 0]);
        assert_eq!(labels, vec![4, 3]);
        match inputs {
            Inputs::Dense(x) => {
                assert_eq!(x.dim(), (2, 784));
                assert_eq!(x[[1, 255]], 1.0);
                assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            Inputs::Tokens(_) => panic!("image data gathered as tokens"),
        }
    }

    #[test]
    fn mismatched_counts_rejected() {
        let images = IdxArray::Images { count: 2, rows: 1, cols: 1, pixels: vec![0, 1] };
        assert!(ImageDataset::from_idx(images.clone(), IdxArray::Labels(vec![1]), Split::Test).is_err());
        assert!(ImageDataset::from_idx(images, IdxArray::Labels(vec![1, 10]), Split::Test).is_err());
    }

    #[test]
    fn subset_is_seeded() {
        let ds = tiny_images();
        assert_eq!(ds.subset(2, 5), ds.subset(2, 5));
        assert_eq!(ds.subset(2, 5).len(), 2);
        assert_eq!(ds.subset(10, 5), ds);
    }
}

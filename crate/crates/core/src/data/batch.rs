use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Deterministic epoch-wise shuffling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub seed: u64,
    pub batch_size: usize,
}

impl BatchPlan {
    pub fn new(seed: u64, batch_size: usize) -> Self {
        Self { seed, batch_size }
    }

    /// Permutation of `0..n` for `epoch`, a function of `(seed, epoch)` only.
    pub fn permutation(&self, n: usize, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream_rng(self.seed, streams::BATCH_ORDER, epoch as u64));
        order
    }

    /// The permutation cut into consecutive batches; the last may be short.
    pub fn batches(&self, n: usize, epoch: usize) -> Result<Vec<Vec<usize>>> {
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::Config(format!("batch size {} invalid for {n} samples", self.batch_size)));
        }
        Ok(self.permutation(n, epoch).chunks(self.batch_size).map(<[usize]>::to_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn partition_sizes() {
        let sizes: Vec<usize> = BatchPlan::new(1, 2).batches(5, 0).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        assert!(BatchPlan::new(1, 6).batches(5, 0).is_err());
    }

    #[test]
    fn same_epoch_same_order_other_epoch_differs() {
        let plan = BatchPlan::new(42, 10);
        assert_eq!(plan.batches(100, 3).unwrap(), plan.batches(100, 3).unwrap());
        let perms: Vec<Vec<usize>> = (0..20).map(|e| plan.permutation(100, e)).collect();
        for i in 0..perms.len() {
            for j in i + 1..perms.len() {
                assert_ne!(perms[i], perms[j], "epochs {i} and {j} collide");
            }
        }
    }

    proptest! {
        #[test]
        fn every_sample_once_per_epoch(seed in any::<u64>(), n in 1usize..300, bs in 1usize..64, epoch in 0usize..50) {
            let bs = bs.min(n);
            let mut seen: Vec<usize> = BatchPlan::new(seed, bs).batches(n, epoch).unwrap().concat();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}

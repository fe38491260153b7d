use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MultiViewDataset;
use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// One mini-batch: the same rows sliced from every view.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewBatch {
    pub indices: Vec<usize>,
    pub views: Vec<Tensor2>,
}

/// Splits `ds` into full batches of `batch_size` rows.
///
/// A trailing batch shorter than `batch_size` is dropped: the transport
/// targets assume a uniform marginal over exactly `batch_size` samples.
pub fn batches(
    ds: &MultiViewDataset,
    batch_size: usize,
    shuffle: bool,
    seed: u64,
) -> Result<Vec<MultiViewBatch>> {
    if batch_size < 2 {
        return Err(Error::Config(format!(
            "batch size must be at least 2, got {batch_size}"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(order
        .chunks_exact(batch_size)
        .map(|idx| MultiViewBatch {
            indices: idx.to_vec(),
            views: ds.views().iter().map(|v| v.select_rows(idx)).collect(),
        })
        .collect())
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `ceil(fraction * n)`, at least one record when any exist.
pub fn cumulative_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    // The slack keeps products like 0.3 * 10 from rounding up to 4.
    let k = (fraction * n as f64 - 1e-9).ceil().max(1.0) as usize;
    Ok(k.min(n))
}

/// Leading `ceil(fraction * N)` records in corpus order.
pub fn cumulative_subset<T>(records: &[T], fraction: f64) -> Result<&[T]> {
    Ok(&records[..cumulative_count(records.len(), fraction)?])
}

/// Same as [`cumulative_subset`] over a seeded permutation of the records,
/// so subsets for one seed are still nested.
pub fn cumulative_subset_shuffled<T: Clone>(records: &[T], fraction: f64, seed: u64) -> Result<Vec<T>> {
    let k = cumulative_count(records.len(), fraction)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order[..k].iter().map(|&i| records[i].clone()).collect())
}

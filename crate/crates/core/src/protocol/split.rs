//! Identity-disjoint train/dev splitting.

use std::collections::HashSet;

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use super::manifest::{DatasetManifest, Sample};

/// Fraction of identities assigned to the training split.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Splits `m` at the identity level.
///
/// The sorted identity list is shuffled with a Fisher-Yates pass driven by
/// SplitMix64 (state initialized to `seed`): for `i` from `n-1` down to 1,
/// swap `i` with `next_u64() % (i + 1)`. The first `ceil(fraction * n)`
/// identities go to train. Bona fide samples follow their identity; a morph
/// is kept only in the split holding both of its identities and is dropped
/// otherwise.
///
/// # Panics
///
/// Panics unless `0 < train_fraction < 1`.
pub fn split_identities(
    m: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> (DatasetManifest, DatasetManifest) {
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train fraction must be in (0, 1)"
    );
    let mut ids = m.identities();
    let mut rng = SplitMix64::seed_from_u64(seed);
    for i in (1..ids.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        ids.swap(i, j);
    }
    let n_train = ((train_fraction * ids.len() as f64).ceil() as usize).min(ids.len());
    let train_ids: HashSet<&str> = ids[..n_train].iter().map(String::as_str).collect();
    let dev_ids: HashSet<&str> = ids[n_train..].iter().map(String::as_str).collect();

    let inside =
        |set: &HashSet<&str>, s: &Sample| s.identities.iter().all(|id| set.contains(id.as_str()));
    (
        m.filtered(|s| inside(&train_ids, s)),
        m.filtered(|s| inside(&dev_ids, s)),
    )
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::InteractionDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: InteractionDataset,
    pub test: InteractionDataset,
    pub split_seed: u64,
}

/// Number of a profile's items that go to the training side.
///
/// Rounds up, but any profile with at least two items keeps one for testing.
pub(crate) fn train_share(len: usize, train_ratio: f64) -> usize {
    if len <= 1 {
        return len;
    }
    // the epsilon keeps 0.7 * 10 = 7.000000000000001 from rounding up to 8
    let wanted = (train_ratio * len as f64 - 1e-9).ceil() as usize;
    wanted.clamp(1, len - 1)
}

/// Randomly partitions each user's profile at `train_ratio`.
pub fn split_train_test(ds: &InteractionDataset, train_ratio: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!(
            "train ratio must lie in (0, 1), got {train_ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(ds.len());
    let mut test = Vec::new();
    let mut profile = Vec::new();
    for u in 0..ds.n_users() {
        profile.clear();
        profile.extend_from_slice(ds.user_items(u));
        profile.shuffle(&mut rng);
        let cut = train_share(profile.len(), train_ratio);
        train.extend(profile[..cut].iter().map(|&i| (u, i as usize)));
        test.extend(profile[cut..].iter().map(|&i| (u, i as usize)));
    }
    Ok(SplitDataset {
        train: ds.with_pairs(train)?,
        test: ds.with_pairs(test)?,
        split_seed: seed,
    })
}

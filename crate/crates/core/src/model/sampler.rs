use rand::Rng;

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;

/// A training tuple: `user` prefers `pos` over `neg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub user: usize,
    pub pos: usize,
    pub neg: usize,
}

/// Draws `(u, i)` uniformly from the training pairs and `j` uniformly from
/// the items `u` has not interacted with.
#[derive(Debug, Clone)]
pub struct TripletSampler<'a> {
    train: &'a InteractionDataset,
}

impl<'a> TripletSampler<'a> {
    pub fn new(train: &'a InteractionDataset) -> Result<Self> {
        let m = train.n_items();
        let usable = (0..train.n_users()).any(|u| {
            let len = train.user_items(u).len();
            len > 0 && len < m
        });
        if !usable {
            return Err(Error::NoNegatives);
        }
        Ok(Self { train })
    }

    pub fn dataset(&self) -> &InteractionDataset {
        self.train
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Triplet {
        let m = self.train.n_items();
        loop {
            let (user, pos) = self.train.pair_at(rng.random_range(0..self.train.len()));
            if self.train.user_items(user).len() == m {
                // no negative exists for this user
                continue;
            }
            loop {
                let neg = rng.random_range(0..m);
                if !self.train.contains(user, neg) {
                    return Triplet { user, pos, neg };
                }
            }
        }
    }
}

/// One triplet from `train`. Prefer a [`TripletSampler`] in loops.
pub fn sample_triplet<R: Rng + ?Sized>(train: &InteractionDataset, rng: &mut R) -> Result<Triplet> {
    Ok(TripletSampler::new(train)?.sample(rng))
}

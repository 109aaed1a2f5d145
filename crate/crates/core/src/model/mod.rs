//! BPR matrix factorization: scoring, sampling, training and top-K lists.

mod checkpoint;
pub(crate) mod recommend;
mod sampler;
mod train;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub use checkpoint::CHECKPOINT_MAGIC;
pub use recommend::{recommend_all, recommend_topk, ScoredItem, TopK};
pub use sampler::{sample_triplet, Triplet, TripletSampler};
pub use train::{
    fit, pair_loss, pair_loss_derivative, score_batch, train_epoch, BatchGradient, PairWeighting, ScoredPair, Uniform,
};

/// Standard deviation of the normal used to initialize factors.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_reg: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// The MovieLens-scale setting: learning rate 1e-4, 128 factors, 200 epochs.
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            dim: 128,
            epochs: 200,
            batch_size: 2048,
            l2_reg: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for the small synthetic datasets used in tests and examples.
    ///
    /// Plain SGD on batch-averaged gradients needs a far larger step than the
    /// MovieLens default to make progress in 100 epochs on a few thousand
    /// interactions.
    pub fn desk_scale() -> Self {
        Self {
            learning_rate: 1.0,
            dim: 32,
            epochs: 100,
            batch_size: 64,
            l2_reg: 1e-4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.l2_reg >= 0.0 && self.l2_reg.is_finite()) {
            return bad("l2_reg must be >= 0");
        }
        Ok(())
    }
}

/// User and item embeddings; the score of a pair is their dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub user_factors: Array2<f64>,
    pub item_factors: Array2<f64>,
    /// Seed the model was initialized from.
    pub seed: u64,
    /// Completed training epochs.
    pub epoch: u64,
}

impl FactorModel {
    pub fn n_users(&self) -> usize {
        self.user_factors.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.item_factors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.user_factors.ncols()
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        self.user_factors.row(user).dot(&self.item_factors.row(item))
    }

    pub fn is_finite(&self) -> bool {
        self.user_factors
            .iter()
            .chain(self.item_factors.iter())
            .all(|x| x.is_finite())
    }
}

/// Draws every factor i.i.d. from N(0, 0.1), users first, from `cfg.seed`.
pub fn init_model(cfg: &TrainConfig, n_users: usize, n_items: usize) -> Result<FactorModel> {
    if n_users == 0 || n_items == 0 {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, INIT_SCALE).expect("valid normal");
    let user_factors = Array2::from_shape_simple_fn((n_users, cfg.dim), || normal.sample(&mut rng));
    let item_factors = Array2::from_shape_simple_fn((n_items, cfg.dim), || normal.sample(&mut rng));
    Ok(FactorModel {
        user_factors,
        item_factors,
        seed: cfg.seed,
        epoch: 0,
    })
}

//! Popularity-bias-aware training for pairwise-ranking recommenders.
//!
//! The crate trains a BPR matrix-factorization model whose objective can be
//! augmented with an *item loss equalization* term: the average pairwise loss
//! is computed separately for Head, Mid and Tail items, and a dispersion
//! measure over those group losses (standard deviation, entropy form or mean
//! absolute deviation) is added to the objective with weight `lambda`.
//!
//! Around that core sit the pieces needed to run the comparison end to end:
//!
//! * [`ingest`]: loading implicit feedback, per-user train/test splits and
//!   popularity tiers.
//! * [`model`]: factor model, triplet sampling, SGD epochs and top-K lists.
//! * [`ile`]: group loss aggregation, distance functions and the per-pair
//!   gradient weights that implement the equalization term.
//! * [`baselines`]: inverse propensity weighting, calibrated popularity
//!   re-ranking and uncertainty-based re-ranking.
//! * [`metrics`]: nDCG, user popularity deviation, aggregate diversity and
//!   equality of exposure.
//! * [`experiment`]: configuration, synthetic data, end-to-end runs, sweeps
//!   and CSV artifacts.
//!
//! Runnable walkthroughs for each of these live in the crate's `examples/`
//! directory.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod ile;
pub mod ingest;
pub mod metrics;
pub mod model;
mod stats;

pub use error::{Error, Result};
pub use ile::{Distance, GroupLossTrace, IleConfig};
pub use ingest::{Group, GroupDistribution, InteractionDataset, PopularityGrouping, SplitDataset};
pub use model::{FactorModel, TrainConfig};

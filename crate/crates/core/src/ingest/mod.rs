//! Implicit-feedback datasets, per-user splits and popularity tiers.

mod dataset;
mod grouping;
mod load;
mod split;

pub use dataset::{IdMap, InteractionDataset};
pub use grouping::{
    assign_popularity_groups, profile_distribution, write_grouping_csv, Group, GroupDistribution, PopularityGrouping,
};
pub use load::{load_interactions, parse_interactions, DatasetFormat, Delimiter};
pub use split::{split_train_test, SplitDataset};

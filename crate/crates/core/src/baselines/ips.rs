use std::path::Path;

use crate::error::{Error, Result};
use crate::ile::{GroupLossTrace, IleConfig};
use crate::ingest::{IdMap, InteractionDataset, PopularityGrouping};
use crate::model::{fit, FactorModel, PairWeighting, ScoredPair, TrainConfig};

/// Popularity propensities and the inverse weights derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityTable {
    propensities: Vec<f64>,
    raw_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl PropensityTable {
    pub fn propensity(&self, item: usize) -> f64 {
        self.propensities[item]
    }

    /// `1 / p_i` before clipping and normalization.
    pub fn raw_weight(&self, item: usize) -> f64 {
        self.raw_weights[item]
    }

    pub fn weight(&self, item: usize) -> f64 {
        self.weights[item]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, items: &IdMap) -> Result<()> {
        super::write_item_values(path.as_ref(), None, items, &self.weights)
    }
}

/// Builds `p_i = (count_i / max_count)^gamma` and normalized clipped weights.
///
/// Items with no training interactions get the propensity of a single
/// interaction, `(1 / max_count)^gamma`. Weights are `min(1/p_i, clip_cap)`
/// rescaled so that their mean over training interactions is 1.
pub fn build_propensities(counts: &[u64], gamma: f64, clip_cap: f64) -> Result<PropensityTable> {
    if !(gamma.is_finite() && gamma >= 0.0 && clip_cap >= 1.0) {
        return Err(Error::Config(format!(
            "need gamma >= 0 and clip_cap >= 1, got {gamma} and {clip_cap}"
        )));
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::ZeroCounts);
    }
    let max = max as f64;
    let floor = (1.0 / max).powf(gamma);
    let propensities: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / max).powf(gamma).max(floor))
        .collect();
    let raw_weights: Vec<f64> = propensities.iter().map(|p| 1.0 / p).collect();
    let clipped: Vec<f64> = raw_weights.iter().map(|w| w.min(clip_cap)).collect();
    let interactions: f64 = counts.iter().map(|&c| c as f64).sum();
    let mean = counts.iter().zip(&clipped).map(|(&c, w)| c as f64 * w).sum::<f64>() / interactions;
    let weights = clipped.iter().map(|w| w / mean).collect();
    Ok(PropensityTable {
        propensities,
        raw_weights,
        weights,
    })
}

impl PairWeighting for PropensityTable {
    fn weights(&self, batch: &[ScoredPair]) -> Vec<f64> {
        let base = 1.0 / batch.len() as f64;
        batch.iter().map(|p| base * self.weights[p.triplet.pos]).collect()
    }
}

/// BPR training with each pair's gradient scaled by its positive item's weight.
pub fn ips_fit(
    model: &mut FactorModel,
    train: &InteractionDataset,
    grouping: &PopularityGrouping,
    cfg: &TrainConfig,
    table: &PropensityTable,
    trace_cfg: &IleConfig,
) -> Result<GroupLossTrace> {
    let trace_cfg = IleConfig {
        lambda: 0.0,
        ..*trace_cfg
    };
    fit(model, train, grouping, cfg, table, &trace_cfg)
}

use std::cmp::Ordering;

use rayon::prelude::*;

use super::FactorModel;
use crate::ingest::InteractionDataset;
use crate::metrics::RecommendationSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub item: usize,
    pub score: f64,
}

/// Ranking order: score descending, then item index ascending.
pub(crate) fn rank_order(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    b.score.total_cmp(&a.score).then(a.item.cmp(&b.item))
}

/// A ranked list; `short` is set when fewer than `K` items were eligible.
#[derive(Debug, Clone, PartialEq)]
pub struct TopK {
    pub items: Vec<ScoredItem>,
    pub short: bool,
}

/// Sorts `candidates` by [`rank_order`] and keeps the first `k`.
pub(crate) fn top_k_of(mut candidates: Vec<ScoredItem>, k: usize) -> TopK {
    let short = candidates.len() < k;
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k, rank_order);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(rank_order);
    TopK {
        items: candidates,
        short,
    }
}

/// The `k` highest-scoring items for `user` outside `exclude` (sorted).
pub fn recommend_topk(model: &FactorModel, user: usize, k: usize, exclude: &[u32]) -> TopK {
    let scores = model.item_factors.dot(&model.user_factors.row(user));
    let candidates = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| exclude.binary_search(&(*i as u32)).is_err())
        .map(|(item, &score)| ScoredItem { item, score })
        .collect();
    top_k_of(candidates, k)
}

/// Top-`k` lists for every user, excluding each user's training items.
pub fn recommend_all(model: &FactorModel, train: &InteractionDataset, k: usize) -> RecommendationSet {
    let lists = (0..model.n_users())
        .into_par_iter()
        .map(|u| recommend_topk(model, u, k, train.user_items(u)).items)
        .collect();
    RecommendationSet { lists }
}

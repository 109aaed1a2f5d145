//! Ranking quality and popularity fairness metrics over top-K lists.
//!
//! All logarithms here are base 2: the nDCG discount, the exposure
//! `1 / (1 + log2 k)` of rank `k`, and the Jensen-Shannon divergence, which
//! keeps UPD inside `[0, 1]`.

use crate::ingest::{GroupDistribution, InteractionDataset, PopularityGrouping};
use crate::model::ScoredItem;

/// One ranked list per user, indexed by dense user id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecommendationSet {
    pub lists: Vec<Vec<ScoredItem>>,
}

impl RecommendationSet {
    /// Builds a set from bare item lists with zero scores.
    pub fn from_items(lists: Vec<Vec<usize>>) -> Self {
        Self {
            lists: lists
                .into_iter()
                .map(|l| l.into_iter().map(|item| ScoredItem { item, score: 0.0 }).collect())
                .collect(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }

    pub fn items(&self, user: usize) -> impl Iterator<Item = usize> + '_ {
        self.lists[user].iter().map(|s| s.item)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub ndcg: f64,
    pub upd: f64,
    pub ad: f64,
    pub ee: f64,
    /// Users with a non-empty test profile, i.e. those averaged into nDCG.
    pub users_evaluated: usize,
}

/// Computes all four metrics at cutoff `k`.
pub fn evaluate(
    recs: &RecommendationSet,
    train: &InteractionDataset,
    test: &InteractionDataset,
    grouping: &PopularityGrouping,
    k: usize,
) -> MetricsReport {
    let (ndcg, users_evaluated) = ndcg_at_k(recs, test, k);
    MetricsReport {
        ndcg,
        upd: upd(recs, train, grouping),
        ad: aggregate_diversity(recs, train.n_items()),
        ee: equality_of_exposure(recs, train.n_items()),
        users_evaluated,
    }
}

fn kl_term(p: f64, m: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / m).log2()
    }
}

/// Base-2 Jensen-Shannon divergence.
pub fn jsd(p: &GroupDistribution, q: &GroupDistribution) -> f64 {
    let (p, q) = (p.as_array(), q.as_array());
    let mut total = 0.0;
    for g in 0..3 {
        let m = 0.5 * (p[g] + q[g]);
        total += 0.5 * kl_term(p[g], m) + 0.5 * kl_term(q[g], m);
    }
    // rounding can leave a -1e-17 on identical inputs
    total.clamp(0.0, 1.0)
}

/// Head/Mid/Tail shares of each user's list; `None` for empty lists.
pub fn per_group_hit_shares(recs: &RecommendationSet, grouping: &PopularityGrouping) -> Vec<Option<GroupDistribution>> {
    (0..recs.n_users())
        .map(|u| grouping.distribution_of(recs.items(u)))
        .collect()
}

/// User popularity deviation: mean JSD between each user's training profile
/// and recommendation list distributions. Users lacking either are skipped.
pub fn upd(recs: &RecommendationSet, train: &InteractionDataset, grouping: &PopularityGrouping) -> f64 {
    let shares = per_group_hit_shares(recs, grouping);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (u, rec_dist) in shares.iter().enumerate() {
        let profile = grouping.distribution_of(train.user_items(u).iter().map(|&i| i as usize));
        if let (Some(p), Some(q)) = (profile, rec_dist) {
            sum += jsd(&p, q);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Fraction of the `n_items` catalog recommended to at least one user.
pub fn aggregate_diversity(recs: &RecommendationSet, n_items: usize) -> f64 {
    let mut seen = vec![false; n_items];
    for list in &recs.lists {
        for s in list {
            seen[s.item] = true;
        }
    }
    seen.iter().filter(|&&s| s).count() as f64 / n_items as f64
}

/// Exposure of a 1-based rank.
pub fn rank_exposure(rank: usize) -> f64 {
    1.0 / (1.0 + (rank as f64).log2())
}

/// Total exposure per catalog item; never-recommended items get 0.
pub fn exposure_vector(recs: &RecommendationSet, n_items: usize) -> Vec<f64> {
    let mut exposure = vec![0.0; n_items];
    for list in &recs.lists {
        for (pos, s) in list.iter().enumerate() {
            exposure[s.item] += rank_exposure(pos + 1);
        }
    }
    exposure
}

/// Gini index via the sorted-index formula
/// `sum_i (2i - n - 1) x_(i) / (n sum x)` with ascending 1-based `i`.
/// An all-zero vector has Gini 0.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total == 0.0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
        .sum();
    weighted / (n as f64 * total)
}

/// `1 - Gini` of the item exposure distribution; 1 is perfectly even.
pub fn equality_of_exposure(recs: &RecommendationSet, n_items: usize) -> f64 {
    1.0 - gini(&exposure_vector(recs, n_items))
}

/// Mean binary-relevance nDCG@k over users with a non-empty test profile,
/// and the number of such users.
pub fn ndcg_at_k(recs: &RecommendationSet, test: &InteractionDataset, k: usize) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for u in 0..recs.n_users().min(test.n_users()) {
        let relevant = test.user_items(u);
        if relevant.is_empty() {
            continue;
        }
        let dcg: f64 = recs.lists[u]
            .iter()
            .take(k)
            .enumerate()
            .filter(|(_, s)| relevant.binary_search(&(s.item as u32)).is_ok())
            .map(|(pos, _)| 1.0 / ((pos + 2) as f64).log2())
            .sum();
        let ideal: f64 = (0..k.min(relevant.len()))
            .map(|pos| 1.0 / ((pos + 2) as f64).log2())
            .sum();
        sum += dcg / ideal;
        n += 1;
    }
    if n == 0 {
        (0.0, 0)
    } else {
        (sum / n as f64, n)
    }
}

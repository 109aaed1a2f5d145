use crate::error::{Error, Result};
use crate::ingest::{GroupDistribution, PopularityGrouping};
use crate::metrics::jsd;
use crate::model::ScoredItem;

/// Calibrated popularity re-ranking of a long list down to `k` items.
///
/// Greedily appends the candidate maximizing
/// `(1 - lambda) * rel(c) - lambda * JSD(profile, dist(list + c))`, where
/// `rel` is the candidate's score min-max normalized over the long list.
/// Ties go to the candidate ranked earlier in `long_list`, which must be in
/// rank order. Returned items keep their original scores.
pub fn cp_rerank(
    long_list: &[ScoredItem],
    profile: &GroupDistribution,
    grouping: &PopularityGrouping,
    lambda: f64,
    k: usize,
) -> Result<Vec<ScoredItem>> {
    if long_list.len() < k {
        return Err(Error::ListTooShort {
            available: long_list.len(),
            k,
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("CP lambda must lie in [0, 1], got {lambda}")));
    }
    let (lo, hi) = long_list
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.score), hi.max(s.score))
        });
    let relevance = |s: f64| if hi > lo { (s - lo) / (hi - lo) } else { 1.0 };

    let mut taken = vec![false; long_list.len()];
    let mut tally = [0usize; 3];
    let mut out = Vec::with_capacity(k);
    for step in 0..k {
        let size = (step + 1) as f64;
        let mut best: Option<(usize, f64)> = None;
        for (pos, cand) in long_list.iter().enumerate() {
            if taken[pos] {
                continue;
            }
            let g = grouping.group_of(cand.item).index();
            let mut t = tally;
            t[g] += 1;
            let dist = GroupDistribution::new(t[0] as f64 / size, t[1] as f64 / size, t[2] as f64 / size);
            let value = (1.0 - lambda) * relevance(cand.score) - lambda * jsd(profile, &dist);
            if best.is_none_or(|(_, v)| value > v) {
                best = Some((pos, value));
            }
        }
        let (pos, _) = best.expect("long list has at least k entries");
        taken[pos] = true;
        tally[grouping.group_of(long_list[pos].item).index()] += 1;
        out.push(long_list[pos]);
    }
    Ok(out)
}

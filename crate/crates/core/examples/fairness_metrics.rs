//! The four evaluation metrics on a hand-sized example.

use std::sync::Arc;

use ilerec::ingest::{assign_popularity_groups, IdMap};
use ilerec::metrics::{aggregate_diversity, equality_of_exposure, exposure_vector, ndcg_at_k, upd, RecommendationSet};
use ilerec::InteractionDataset;

fn main() -> ilerec::Result<()> {
    let users = Arc::new(IdMap::sequential(3));
    let items = Arc::new(IdMap::sequential(10));
    // item 0 is popular, items 8 and 9 are rarely seen
    let train = InteractionDataset::from_pairs(
        users.clone(),
        items.clone(),
        vec![
            (0, 0),
            (0, 1),
            (0, 8),
            (1, 0),
            (1, 2),
            (1, 3),
            (2, 0),
            (2, 1),
            (2, 4),
            (2, 9),
        ],
    )?;
    let test = InteractionDataset::from_pairs(users, items, vec![(0, 2), (1, 1), (1, 9), (2, 3)])?;
    let grouping = assign_popularity_groups(&train);

    let popular = RecommendationSet::from_items(vec![vec![2, 3, 4], vec![1, 4, 5], vec![2, 3, 5]]);
    let spread = RecommendationSet::from_items(vec![vec![2, 9, 6], vec![9, 1, 7], vec![3, 8, 6]]);
    for (name, recs) in [("popular", &popular), ("spread", &spread)] {
        let (ndcg, n) = ndcg_at_k(recs, &test, 3);
        println!("{name}:");
        println!("  nDCG@3 {ndcg:.4} over {n} users");
        println!("  UPD    {:.4}", upd(recs, &train, &grouping));
        println!("  AD     {:.2}", aggregate_diversity(recs, 10));
        println!("  EE     {:.4}", equality_of_exposure(recs, 10));
        let exposure: Vec<String> = exposure_vector(recs, 10).iter().map(|e| format!("{e:.2}")).collect();
        println!("  exposure [{}]", exposure.join(" "));
    }
    Ok(())
}

//! The three reference debiasing methods next to plain BPR: IPS reweighting
//! during training, calibrated re-ranking (CP) and uncertainty-driven
//! re-ranking (PUFR) of a 100-item candidate list.

use ilerec::baselines::{build_propensities, cp_rerank, estimate_uncertainty, ips_fit, pufr_rerank};
use ilerec::experiment::{synth_dataset, SynthConfig};
use ilerec::ingest::{assign_popularity_groups, split_train_test};
use ilerec::metrics::{evaluate, RecommendationSet};
use ilerec::model::{fit, init_model, recommend_all, Uniform};
use ilerec::{IleConfig, TrainConfig};

fn main() -> ilerec::Result<()> {
    let ds = synth_dataset(&SynthConfig::default())?;
    let split = split_train_test(&ds, 0.8, 0)?;
    let (train, test) = (&split.train, &split.test);
    let grouping = assign_popularity_groups(train);
    let cfg = TrainConfig::desk_scale();
    let k = 10;
    let report = |name: &str, recs: &RecommendationSet| {
        let r = evaluate(recs, train, test, &grouping, k);
        println!(
            "{name:<10} nDCG {:.4}  UPD {:.4}  AD {:.2}  EE {:.4}",
            r.ndcg, r.upd, r.ad, r.ee
        );
    };

    let mut bpr = init_model(&cfg, train.n_users(), train.n_items())?;
    fit(&mut bpr, train, &grouping, &cfg, &Uniform, &IleConfig::default())?;
    report("BPR", &recommend_all(&bpr, train, k));

    let propensities = build_propensities(grouping.counts(), 1.0, 30.0)?;
    let mut ips = init_model(&cfg, train.n_users(), train.n_items())?;
    ips_fit(&mut ips, train, &grouping, &cfg, &propensities, &IleConfig::default())?;
    report("IPS", &recommend_all(&ips, train, k));

    let long = recommend_all(&bpr, train, 100);
    let cp = long
        .lists
        .iter()
        .enumerate()
        .map(
            |(u, list)| match grouping.distribution_of(train.user_items(u).iter().map(|&i| i as usize)) {
                Some(profile) => cp_rerank(list, &profile, &grouping, 0.5, k.min(list.len())),
                None => Ok(list[..k.min(list.len())].to_vec()),
            },
        )
        .collect::<ilerec::Result<Vec<_>>>()?;
    report("CP 0.5", &RecommendationSet { lists: cp });

    let uncertainty = estimate_uncertainty(train, &grouping, &cfg, &[1, 2, 3, 4, 5])?;
    let pufr = long
        .lists
        .iter()
        .map(|list| pufr_rerank(list, &uncertainty, &grouping, 1.0, k))
        .collect();
    report("PUFR 1.0", &RecommendationSet { lists: pufr });
    Ok(())
}

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ile::IleConfig;
use crate::ingest::{Group, IdMap, InteractionDataset, PopularityGrouping};
use crate::model::recommend::top_k_of;
use crate::model::{fit, init_model, FactorModel, ScoredItem, TrainConfig, Uniform};
use crate::stats::population_std;

/// Number of independently seeded models behind an uncertainty estimate.
pub const UNCERTAINTY_SEEDS: usize = 5;

/// Per-item spread of mean predicted scores across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyTable {
    values: Vec<f64>,
    seeds: Vec<u64>,
}

impl UncertaintyTable {
    pub fn get(&self, item: usize) -> f64 {
        self.values[item]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, items: &IdMap) -> Result<()> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let preamble = format!("seeds {}", seeds.join(","));
        super::write_item_values(path.as_ref(), Some(&preamble), items, &self.values)
    }

    pub fn read_csv(path: impl AsRef<Path>, items: &IdMap) -> Result<Self> {
        let path = path.as_ref();
        let (preamble, values) = super::read_item_values(path, items)?;
        let seeds = preamble
            .as_deref()
            .and_then(|p| p.strip_prefix("seeds "))
            .map(|list| {
                list.split(',')
                    .map(str::parse)
                    .collect::<std::result::Result<Vec<u64>, _>>()
            })
            .and_then(|r| r.ok())
            .ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: "missing seed list".into(),
            })?;
        Ok(Self { values, seeds })
    }
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if seeds.len() != UNCERTAINTY_SEEDS || sorted.len() != UNCERTAINTY_SEEDS {
        return Err(Error::Config(format!(
            "uncertainty needs {UNCERTAINTY_SEEDS} distinct seeds, got {seeds:?}"
        )));
    }
    Ok(())
}

/// Population standard deviation, over the models, of each item's mean
/// score across all users.
pub fn uncertainty_from_models(models: &[FactorModel], seeds: &[u64]) -> UncertaintyTable {
    let per_model: Vec<Vec<f64>> = models
        .iter()
        .map(|m| {
            // mean_u <p_u, q_i> = <mean_u p_u, q_i>
            let mean_user = m.user_factors.mean_axis(ndarray::Axis(0)).expect("model has users");
            m.item_factors.dot(&mean_user).to_vec()
        })
        .collect();
    let n_items = models.first().map_or(0, FactorModel::n_items);
    let values = (0..n_items)
        .map(|i| population_std(&per_model.iter().map(|v| v[i]).collect::<Vec<_>>()))
        .collect();
    UncertaintyTable {
        values,
        seeds: seeds.to_vec(),
    }
}

/// Trains one plain BPR model per seed and measures score spread per item.
pub fn estimate_uncertainty(
    train: &InteractionDataset,
    grouping: &PopularityGrouping,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<UncertaintyTable> {
    check_seeds(seeds)?;
    let models = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..*cfg };
            let mut model = init_model(&cfg, train.n_users(), train.n_items())?;
            fit(&mut model, train, grouping, &cfg, &Uniform, &IleConfig::default())?;
            Ok(model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(uncertainty_from_models(&models, seeds))
}

/// Shifts Tail scores up and Head scores down by `lambda * u_i`, then takes
/// the top `k`. Returned scores are the adjusted ones.
pub fn pufr_rerank(
    candidates: &[ScoredItem],
    uncertainty: &UncertaintyTable,
    grouping: &PopularityGrouping,
    lambda: f64,
    k: usize,
) -> Vec<ScoredItem> {
    let adjusted = candidates
        .iter()
        .map(|c| {
            let shift = lambda * uncertainty.get(c.item);
            let score = match grouping.group_of(c.item) {
                Group::Tail => c.score + shift,
                Group::Head => c.score - shift,
                Group::Mid => c.score,
            };
            ScoredItem { item: c.item, score }
        })
        .collect();
    top_k_of(adjusted, k).items
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn model(users: Array2<f64>, items: Array2<f64>) -> FactorModel {
        FactorModel {
            user_factors: users,
            item_factors: items,
            seed: 0,
            epoch: 0,
        }
    }

    /// Direct per-user averaging; independent of the mean-vector shortcut.
    fn brute_force(models: &[FactorModel]) -> Vec<f64> {
        let n_items = models[0].n_items();
        (0..n_items)
            .map(|i| {
                let means: Vec<f64> = models
                    .iter()
                    .map(|m| (0..m.n_users()).map(|u| m.score(u, i)).sum::<f64>() / m.n_users() as f64)
                    .collect();
                let mu = means.iter().sum::<f64>() / means.len() as f64;
                (means.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / means.len() as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn identical_models_have_zero_uncertainty() {
        let m = model(
            array![[0.3, -1.0], [2.0, 0.5]],
            array![[1.0, 1.0], [0.0, 2.0], [-1.0, 0.2]],
        );
        let t = uncertainty_from_models(&vec![m; 5], &[1, 2, 3, 4, 5]);
        assert!(t.values().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn population_std_of_hand_built_means() {
        // one user with factor 1, item score = item factor
        let models: Vec<FactorModel> = [1.0, 1.0, 1.0, 1.0, 6.0]
            .iter()
            .map(|&s| model(array![[1.0]], array![[s]]))
            .collect();
        let t = uncertainty_from_models(&models, &[0, 1, 2, 3, 4]);
        assert_abs_diff_eq!(t.get(0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_brute_force_and_ignores_user_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rand_matrix = |r, c| Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0));
        let models: Vec<FactorModel> = (0..5).map(|_| model(rand_matrix(7, 3), rand_matrix(9, 3))).collect();
        let t = uncertainty_from_models(&models, &[0, 1, 2, 3, 4]);
        for (a, b) in t.values().iter().zip(brute_force(&models)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let reversed: Vec<FactorModel> = models
            .iter()
            .map(|m| {
                let mut m = m.clone();
                m.user_factors.invert_axis(ndarray::Axis(0));
                m
            })
            .collect();
        let r = uncertainty_from_models(&reversed, &[0, 1, 2, 3, 4]);
        for (a, b) in t.values().iter().zip(r.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn seeds_must_be_five_and_distinct() {
        assert!(check_seeds(&[1, 2, 3, 4, 5]).is_ok());
        assert!(check_seeds(&[1, 1, 2, 3, 4]).is_err());
        assert!(check_seeds(&[1, 2, 3, 4]).is_err());
    }

    #[test]
    fn estimate_trains_five_models() {
        let ds = InteractionDataset::from_pairs(
            Arc::new(IdMap::sequential(6)),
            Arc::new(IdMap::sequential(8)),
            (0..6).flat_map(|u| (0..3).map(move |k| (u, (u + k * 2) % 8))),
        )
        .unwrap();
        let grouping = crate::ingest::assign_popularity_groups(&ds);
        let cfg = TrainConfig {
            dim: 4,
            epochs: 3,
            batch_size: 4,
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let seeds = [10, 11, 12, 13, 14];
        let t = estimate_uncertainty(&ds, &grouping, &cfg, &seeds).unwrap();
        assert_eq!(t.seeds(), &seeds);
        assert_eq!(t.values().len(), 8);
        assert!(t.values().iter().all(|&u| u >= 0.0) && t.values().iter().any(|&u| u > 0.0));
        let again = estimate_uncertainty(&ds, &grouping, &cfg, &seeds).unwrap();
        assert_eq!(t, again);
        assert!(estimate_uncertainty(&ds, &grouping, &cfg, &[1, 1, 1, 1, 1]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let items = IdMap::sequential(3);
        let t = UncertaintyTable {
            values: vec![0.0, 0.25, 1.5],
            seeds: vec![1, 2, 3, 4, 5],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        t.write_csv(&path, &items).unwrap();
        assert_eq!(UncertaintyTable::read_csv(&path, &items).unwrap(), t);
    }

    // 10 items: Head 0,1; Mid 2..8; Tail 8,9
    fn grouping() -> PopularityGrouping {
        PopularityGrouping::from_counts((0..10).rev().collect())
    }

    fn table(values: Vec<f64>) -> UncertaintyTable {
        UncertaintyTable {
            values,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }

    #[test]
    fn adjusts_by_group() {
        let cands = vec![
            ScoredItem { item: 9, score: 1.0 },
            ScoredItem { item: 0, score: 1.0 },
            ScoredItem { item: 4, score: 1.0 },
        ];
        let out = pufr_rerank(&cands, &table(vec![0.1; 10]), &grouping(), 4.0, 3);
        assert_eq!(out[0].item, 9);
        assert_abs_diff_eq!(out[0].score, 1.4, epsilon = 1e-12);
        assert_eq!(out[1], ScoredItem { item: 4, score: 1.0 });
        assert_abs_diff_eq!(out[2].score, 0.6, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn zero_lambda_is_base_ranking(scores in proptest::collection::vec(-4i32..4, 10), k in 1usize..10) {
            let cands: Vec<ScoredItem> = scores.iter().enumerate()
                .map(|(item, &s)| ScoredItem { item, score: s as f64 }).collect();
            let u = table((0..10).map(|i| i as f64 * 0.1).collect());
            prop_assert_eq!(pufr_rerank(&cands, &u, &grouping(), 0.0, k), top_k_of(cands.clone(), k).items);
        }

        #[test]
        fn tail_rank_never_worsens(
            scores in proptest::collection::vec(-4.0f64..4.0, 10),
            unc in proptest::collection::vec(0.0f64..1.0, 10),
            l1 in 0.0f64..3.0,
            dl in 0.0f64..3.0,
        ) {
            let cands: Vec<ScoredItem> = scores.iter().enumerate()
                .map(|(item, &score)| ScoredItem { item, score }).collect();
            let u = table(unc);
            let g = grouping();
            // non-Tail items ahead of `item`; another Tail item may still
            // overtake it when its own uncertainty is larger
            let ahead = |cands: &[ScoredItem], lambda: f64, item: usize| {
                let list = pufr_rerank(cands, &u, &g, lambda, cands.len());
                let pos = list.iter().position(|s| s.item == item).unwrap();
                list[..pos].iter().filter(|s| g.group_of(s.item) != Group::Tail).count()
            };
            for tail in [8, 9] {
                prop_assert!(ahead(&cands, l1 + dl, tail) <= ahead(&cands, l1, tail));
            }
            // with a single Tail candidate that is the whole rank
            let lone: Vec<ScoredItem> = cands[..9].to_vec();
            let rank = |lambda: f64| {
                pufr_rerank(&lone, &u, &g, lambda, 9).iter().position(|s| s.item == 8).unwrap()
            };
            prop_assert!(rank(l1 + dl) <= rank(l1));
        }
    }
}

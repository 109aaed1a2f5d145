use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampler::{Triplet, TripletSampler};
use super::{FactorModel, TrainConfig};
use crate::error::{Error, Result};
use crate::ile::{GroupLossTrace, IleConfig, TraceRow};
use crate::ingest::{Group, InteractionDataset, PopularityGrouping};

/// `-ln sigmoid(diff)`, evaluated as a softplus of `-diff`.
pub fn pair_loss(s_pos: f64, s_neg: f64) -> f64 {
    softplus(s_neg - s_pos)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Derivative of [`pair_loss`] with respect to `s_pos - s_neg`: `-sigmoid(-diff)`.
pub fn pair_loss_derivative(diff: f64) -> f64 {
    if diff >= 0.0 {
        let e = (-diff).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + diff.exp())
    }
}

/// A triplet evaluated under the current model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub triplet: Triplet,
    /// `s_ui - s_uj`.
    pub diff: f64,
    pub loss: f64,
    /// Group of the positive item.
    pub group: Group,
}

/// Per-pair multipliers applied to the pair-loss gradients of a batch.
///
/// The gradient step uses `sum_k w_k * grad(loss_k)`, so plain averaging is
/// `w_k = 1/B`.
pub trait PairWeighting {
    fn weights(&self, batch: &[ScoredPair]) -> Vec<f64>;
}

/// Plain BPR: every pair weighs `1/B`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl PairWeighting for Uniform {
    fn weights(&self, batch: &[ScoredPair]) -> Vec<f64> {
        vec![1.0 / batch.len() as f64; batch.len()]
    }
}

pub fn score_batch(model: &FactorModel, triplets: &[Triplet], grouping: &PopularityGrouping) -> Vec<ScoredPair> {
    triplets
        .iter()
        .map(|&t| {
            let user = model.user_factors.row(t.user);
            let s_pos = user.dot(&model.item_factors.row(t.pos));
            let s_neg = user.dot(&model.item_factors.row(t.neg));
            ScoredPair {
                triplet: t,
                diff: s_pos - s_neg,
                loss: pair_loss(s_pos, s_neg),
                group: grouping.group_of(t.pos),
            }
        })
        .collect()
}

/// Gradient buffers that only track the rows a batch touches.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    users: Array2<f64>,
    items: Array2<f64>,
    user_touched: Vec<bool>,
    item_touched: Vec<bool>,
    touched_users: Vec<usize>,
    touched_items: Vec<usize>,
}

impl BatchGradient {
    pub fn new(n_users: usize, n_items: usize, dim: usize) -> Self {
        Self {
            users: Array2::zeros((n_users, dim)),
            items: Array2::zeros((n_items, dim)),
            user_touched: vec![false; n_users],
            item_touched: vec![false; n_items],
            touched_users: Vec::new(),
            touched_items: Vec::new(),
        }
    }

    fn touch_user(&mut self, u: usize) {
        if !self.user_touched[u] {
            self.user_touched[u] = true;
            self.touched_users.push(u);
        }
    }

    fn touch_item(&mut self, i: usize) {
        if !self.item_touched[i] {
            self.item_touched[i] = true;
            self.touched_items.push(i);
        }
    }

    /// Adds `sum_k weights[k] * grad(loss_k)` at the model's current parameters.
    pub fn accumulate(&mut self, model: &FactorModel, batch: &[ScoredPair], weights: &[f64]) {
        for (pair, &w) in batch.iter().zip(weights) {
            let Triplet { user, pos, neg } = pair.triplet;
            let g = w * pair_loss_derivative(pair.diff);
            self.touch_user(user);
            self.touch_item(pos);
            self.touch_item(neg);
            let p_u = model.user_factors.row(user);
            let q_i = model.item_factors.row(pos);
            let q_j = model.item_factors.row(neg);
            Zip::from(self.users.row_mut(user))
                .and(&q_i)
                .and(&q_j)
                .for_each(|acc, &a, &b| *acc += g * (a - b));
            Zip::from(self.items.row_mut(pos))
                .and(&p_u)
                .for_each(|acc, &p| *acc += g * p);
            Zip::from(self.items.row_mut(neg))
                .and(&p_u)
                .for_each(|acc, &p| *acc -= g * p);
        }
    }

    /// Dense copies of the user and item gradients.
    pub fn to_dense(&self) -> (Array2<f64>, Array2<f64>) {
        (self.users.clone(), self.items.clone())
    }

    /// SGD step with L2 decay on touched rows, then clears the buffers.
    /// Returns false if any updated entry is non-finite.
    pub fn apply(&mut self, model: &mut FactorModel, lr: f64, l2: f64) -> bool {
        let mut finite = true;
        for &u in &self.touched_users {
            Zip::from(model.user_factors.row_mut(u))
                .and(self.users.row_mut(u))
                .for_each(|p, g| {
                    *p -= lr * (*g + l2 * *p);
                    finite &= p.is_finite();
                    *g = 0.0;
                });
            self.user_touched[u] = false;
        }
        for &i in &self.touched_items {
            Zip::from(model.item_factors.row_mut(i))
                .and(self.items.row_mut(i))
                .for_each(|p, g| {
                    *p -= lr * (*g + l2 * *p);
                    finite &= p.is_finite();
                    *g = 0.0;
                });
            self.item_touched[i] = false;
        }
        self.touched_users.clear();
        self.touched_items.clear();
        finite
    }
}

/// One epoch of `|train|` sampled triplets in minibatches of `cfg.batch_size`.
///
/// Losses recorded in the returned row are those computed before each
/// batch's update. `ile` only shapes the trace's `D` and `L*` columns; the
/// gradient is whatever `weighting` prescribes.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch<W: PairWeighting + ?Sized, R: rand::Rng>(
    model: &mut FactorModel,
    sampler: &TripletSampler<'_>,
    grouping: &PopularityGrouping,
    cfg: &TrainConfig,
    weighting: &W,
    ile: &IleConfig,
    grad: &mut BatchGradient,
    rng: &mut R,
) -> Result<TraceRow> {
    let total = sampler.dataset().len();
    let n_batches = total.div_ceil(cfg.batch_size);
    let epoch = model.epoch as usize;
    let mut loss_sum = 0.0;
    let mut group_sums = [0.0; 3];
    let mut group_counts = [0usize; 3];
    let mut triplets = Vec::with_capacity(cfg.batch_size);

    for batch_idx in 0..n_batches {
        let size = cfg.batch_size.min(total - batch_idx * cfg.batch_size);
        triplets.clear();
        triplets.extend((0..size).map(|_| sampler.sample(rng)));
        let batch = score_batch(model, &triplets, grouping);
        let weights = weighting.weights(&batch);
        grad.accumulate(model, &batch, &weights);
        if !grad.apply(model, cfg.learning_rate, cfg.l2_reg) {
            return Err(Error::NonFinite {
                epoch,
                batch: batch_idx,
            });
        }
        for p in &batch {
            loss_sum += p.loss;
            group_sums[p.group.index()] += p.loss;
            group_counts[p.group.index()] += 1;
        }
    }
    model.epoch += 1;
    Ok(TraceRow::from_sums(
        epoch,
        loss_sum,
        total,
        group_sums,
        group_counts,
        ile,
    ))
}

/// Runs `cfg.epochs` epochs on `model` and returns the per-epoch trace.
///
/// Sampling draws from stream 1 of a ChaCha8 generator seeded with
/// `cfg.seed`, so a run is reproducible from the config alone.
pub fn fit<W: PairWeighting + ?Sized>(
    model: &mut FactorModel,
    train: &InteractionDataset,
    grouping: &PopularityGrouping,
    cfg: &TrainConfig,
    weighting: &W,
    ile: &IleConfig,
) -> Result<GroupLossTrace> {
    cfg.validate()?;
    ile.validate()?;
    if model.n_users() != train.n_users() || model.n_items() != train.n_items() {
        return Err(Error::Config(format!(
            "model is {}x{} but the dataset is {}x{}",
            model.n_users(),
            model.n_items(),
            train.n_users(),
            train.n_items()
        )));
    }
    let sampler = TripletSampler::new(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut grad = BatchGradient::new(model.n_users(), model.n_items(), model.dim());
    let mut trace = GroupLossTrace::default();
    for _ in 0..cfg.epochs {
        let row = train_epoch(model, &sampler, grouping, cfg, weighting, ile, &mut grad, &mut rng)?;
        trace.push(row);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::ile::{group_average_losses, ile_objective, Distance};
    use crate::ingest::{assign_popularity_groups, IdMap};
    use crate::model::init_model;

    #[test]
    fn loss_values() {
        assert_abs_diff_eq!(pair_loss(0.3, 0.3), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(pair_loss(2.0, 0.0), 0.126928011, epsilon = 1e-9);
        let tiny = pair_loss(50.0, 0.0);
        assert!(tiny > 0.0 && tiny < 1e-20);
        assert_abs_diff_eq!(pair_loss(0.0, 50.0), 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair_loss(-400.0, 400.0), 800.0, epsilon = 1e-9);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for diff in [-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 30.0] {
            let h = 1e-6;
            let fd = (pair_loss(diff + h, 0.0) - pair_loss(diff - h, 0.0)) / (2.0 * h);
            assert_abs_diff_eq!(pair_loss_derivative(diff), fd, epsilon = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn loss_positive_and_decreasing(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            prop_assert!(pair_loss(a, 0.0) > 0.0);
            if a < b {
                prop_assert!(pair_loss(a, 0.0) > pair_loss(b, 0.0));
            }
        }
    }

    fn random_setup(seed: u64) -> (InteractionDataset, PopularityGrouping, FactorModel) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(usize, usize)> = (0..60)
            .map(|_| (rng.random_range(0..10), (rng.random::<f64>().powi(2) * 20.0) as usize))
            .collect();
        let ds =
            InteractionDataset::from_pairs(Arc::new(IdMap::sequential(10)), Arc::new(IdMap::sequential(20)), pairs)
                .unwrap();
        let grouping = assign_popularity_groups(&ds);
        let cfg = TrainConfig {
            dim: 4,
            seed,
            ..TrainConfig::default()
        };
        let mut model = init_model(&cfg, 10, 20).unwrap();
        model.user_factors.mapv_inplace(|x| x * 10.0);
        model.item_factors.mapv_inplace(|x| x * 10.0);
        (ds, grouping, model)
    }

    fn batch_objective(
        model: &FactorModel,
        triplets: &[Triplet],
        grouping: &PopularityGrouping,
        ile: &IleConfig,
    ) -> f64 {
        let scored = score_batch(model, triplets, grouping);
        let mean = scored.iter().map(|p| p.loss).sum::<f64>() / scored.len() as f64;
        let pairs: Vec<_> = scored.iter().map(|p| (p.loss, p.group)).collect();
        ile_objective(mean, &group_average_losses(&pairs), ile)
    }

    #[test]
    fn plain_bpr_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let (ds, grouping, model) = random_setup(seed);
            let sampler = TripletSampler::new(&ds).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let triplets: Vec<_> = (0..64).map(|_| sampler.sample(&mut rng)).collect();
            let ile = IleConfig::new(0.0, Distance::None);
            let scored = score_batch(&model, &triplets, &grouping);
            let mut grad = BatchGradient::new(10, 20, 4);
            grad.accumulate(&model, &scored, &Uniform.weights(&scored));
            let (gu, gi) = grad.to_dense();

            let h = 1e-5;
            let mut probe = model.clone();
            let mut num = Vec::new();
            let mut ana = Vec::new();
            for (r, c) in (0..10).flat_map(|r| (0..4).map(move |c| (r, c))) {
                let orig = probe.user_factors[[r, c]];
                probe.user_factors[[r, c]] = orig + h;
                let up = batch_objective(&probe, &triplets, &grouping, &ile);
                probe.user_factors[[r, c]] = orig - h;
                let down = batch_objective(&probe, &triplets, &grouping, &ile);
                probe.user_factors[[r, c]] = orig;
                num.push((up - down) / (2.0 * h));
                ana.push(gu[[r, c]]);
            }
            for (r, c) in (0..20).flat_map(|r| (0..4).map(move |c| (r, c))) {
                let orig = probe.item_factors[[r, c]];
                probe.item_factors[[r, c]] = orig + h;
                let up = batch_objective(&probe, &triplets, &grouping, &ile);
                probe.item_factors[[r, c]] = orig - h;
                let down = batch_objective(&probe, &triplets, &grouping, &ile);
                probe.item_factors[[r, c]] = orig;
                num.push((up - down) / (2.0 * h));
                ana.push(gi[[r, c]]);
            }
            let diff: f64 = ana.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = ana.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(diff / scale < 1e-4, "seed {seed}: relative error {}", diff / scale);
        }
    }

    #[test]
    fn apply_decays_and_clears() {
        let (ds, grouping, mut model) = random_setup(1);
        let sampler = TripletSampler::new(&ds).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let triplets: Vec<_> = (0..8).map(|_| sampler.sample(&mut rng)).collect();
        let scored = score_batch(&model, &triplets, &grouping);
        let mut grad = BatchGradient::new(10, 20, 4);
        grad.accumulate(&model, &scored, &[0.0; 8]);
        let before = model.clone();
        assert!(grad.apply(&mut model, 0.5, 0.1));
        let u = triplets[0].user;
        for c in 0..4 {
            assert_abs_diff_eq!(
                model.user_factors[[u, c]],
                before.user_factors[[u, c]] * 0.95,
                epsilon = 1e-12
            );
        }
        let (gu, gi) = grad.to_dense();
        assert!(gu.iter().chain(gi.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn nan_aborts_with_position() {
        let (ds, grouping, mut model) = random_setup(2);
        let cfg = TrainConfig {
            dim: 4,
            learning_rate: f64::MAX,
            epochs: 1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let err = fit(&mut model, &ds, &grouping, &cfg, &Uniform, &IleConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { epoch: 0, .. }), "{err:?}");
    }

    #[test]
    fn epoch_processes_every_interaction_once_in_count() {
        let (ds, grouping, mut model) = random_setup(3);
        let cfg = TrainConfig {
            dim: 4,
            learning_rate: 0.05,
            epochs: 2,
            batch_size: 7,
            ..TrainConfig::default()
        };
        let trace = fit(&mut model, &ds, &grouping, &cfg, &Uniform, &IleConfig::default()).unwrap();
        assert_eq!(trace.rows.len(), 2);
        let row = &trace.rows[1];
        assert_eq!(row.epoch, 1);
        assert_eq!(row.groups.counts.iter().sum::<usize>(), ds.len());
        assert_eq!(model.epoch, 2);
    }

    #[test]
    fn training_is_deterministic() {
        let (ds, grouping, model) = random_setup(4);
        let cfg = TrainConfig {
            dim: 4,
            learning_rate: 0.1,
            epochs: 3,
            batch_size: 5,
            ..TrainConfig::default()
        };
        let ile = IleConfig::new(0.3, Distance::Mad);
        let mut a = model.clone();
        let mut b = model;
        let ta = fit(&mut a, &ds, &grouping, &cfg, &ile, &ile).unwrap();
        let tb = fit(&mut b, &ds, &grouping, &cfg, &ile, &ile).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (ds, grouping, _) = random_setup(5);
        let mut wrong = init_model(
            &TrainConfig {
                dim: 2,
                ..TrainConfig::default()
            },
            3,
            20,
        )
        .unwrap();
        assert!(fit(
            &mut wrong,
            &ds,
            &grouping,
            &TrainConfig::default(),
            &Uniform,
            &IleConfig::default()
        )
        .is_err());
    }
}

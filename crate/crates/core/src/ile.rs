//! Item loss equalization.
//!
//! The training objective becomes
//!
//! ```text
//! L* = L + lambda * D({L_g : g in groups present})
//! ```
//!
//! where `L` is the mean pairwise loss of a batch, `L_g` the mean loss of the
//! pairs whose positive item belongs to group `g`, and `D` one of three
//! dispersion measures. Because every `L_g` is itself a mean over pair
//! losses, the gradient of `L*` is a weighted sum of the per-pair loss
//! gradients, with weight
//!
//! ```text
//! w_k = 1/B + lambda * dD/dL_g(k) / B_g(k)
//! ```
//!
//! [`pair_gradient_weights`] computes exactly those weights; the trainer in
//! [`crate::model`] scales each pair's gradient by them. Weights can be
//! negative for ENT and MAD, which is the true gradient and is applied as is.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::Group;
use crate::model::{PairWeighting, ScoredPair};
use crate::stats::{mean, population_std};

/// Dispersion measure over group losses. Lower is fairer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    /// Population standard deviation.
    Std,
    /// `-sum(L_g ln L_g)` applied to the raw losses.
    Ent,
    /// Mean absolute deviation from the mean.
    Mad,
    /// No penalty; the objective reduces to `L`.
    None,
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "std" => Ok(Self::Std),
            "ent" => Ok(Self::Ent),
            "mad" => Ok(Self::Mad),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown distance `{other}`"))),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Std => "STD",
            Self::Ent => "ENT",
            Self::Mad => "MAD",
            Self::None => "NONE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IleConfig {
    pub lambda: f64,
    pub distance: Distance,
    /// Lower clamp applied to group losses before taking `ln` under ENT.
    pub ent_floor: f64,
}

impl Default for IleConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            distance: Distance::Std,
            ent_floor: 1e-8,
        }
    }
}

impl IleConfig {
    pub fn new(lambda: f64, distance: Distance) -> Self {
        Self {
            lambda,
            distance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.ent_floor > 0.0 && self.ent_floor <= 1e-3) {
            return Err(Error::Config(format!(
                "ent_floor must lie in (0, 1e-3], got {}",
                self.ent_floor
            )));
        }
        Ok(())
    }

    /// True when the penalty term contributes nothing.
    pub fn is_inactive(&self) -> bool {
        self.lambda == 0.0 || self.distance == Distance::None
    }
}

/// Mean pair loss per group; groups with no pairs are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupLosses {
    pub means: [Option<f64>; 3],
    pub counts: [usize; 3],
}

impl GroupLosses {
    pub fn get(&self, group: Group) -> Option<f64> {
        self.means[group.index()]
    }

    /// Means of the groups present, in Head, Mid, Tail order.
    pub fn present(&self) -> Vec<f64> {
        self.means.iter().flatten().copied().collect()
    }

    fn from_sums(sums: [f64; 3], counts: [usize; 3]) -> Self {
        let mut means = [None; 3];
        for g in 0..3 {
            if counts[g] > 0 {
                means[g] = Some(sums[g] / counts[g] as f64);
            }
        }
        Self { means, counts }
    }
}

/// Averages pair losses by the group of each pair's positive item.
pub fn group_average_losses(pairs: &[(f64, Group)]) -> GroupLosses {
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for &(loss, g) in pairs {
        sums[g.index()] += loss;
        counts[g.index()] += 1;
    }
    GroupLosses::from_sums(sums, counts)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Dispersion of `values` under `which`. ENT clamps each value at `ent_floor`.
pub fn distance(values: &[f64], which: Distance, ent_floor: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Config("distance over an empty set of groups".into()));
    }
    let k = values.len() as f64;
    Ok(match which {
        Distance::None => 0.0,
        Distance::Std => population_std(values),
        Distance::Mad => {
            let mu = mean(values);
            values.iter().map(|v| (v - mu).abs()).sum::<f64>() / k
        }
        Distance::Ent => -values
            .iter()
            .map(|&v| {
                let v = v.max(ent_floor);
                v * v.ln()
            })
            .sum::<f64>(),
    })
}

/// Partial derivatives of [`distance`] with respect to each value.
///
/// STD at zero dispersion and MAD at `v == mean` take the zero subgradient.
pub fn distance_gradient(values: &[f64], which: Distance, ent_floor: f64) -> Result<Vec<f64>> {
    let d = distance(values, which, ent_floor)?;
    let k = values.len() as f64;
    let mu = mean(values);
    Ok(match which {
        Distance::None => vec![0.0; values.len()],
        Distance::Std => values
            .iter()
            .map(|v| if d > 0.0 { (v - mu) / (k * d) } else { 0.0 })
            .collect(),
        Distance::Ent => values.iter().map(|&v| -(v.max(ent_floor).ln() + 1.0)).collect(),
        Distance::Mad => {
            let sign_sum: f64 = values.iter().map(|v| sign(v - mu)).sum();
            values.iter().map(|v| (sign(v - mu) - sign_sum / k) / k).collect()
        }
    })
}

/// `L + lambda * D(group_losses)`.
pub fn ile_objective(loss: f64, group_losses: &GroupLosses, cfg: &IleConfig) -> f64 {
    if cfg.is_inactive() {
        return loss;
    }
    let present = group_losses.present();
    if present.is_empty() {
        return loss;
    }
    // present is non-empty, so distance cannot fail
    loss + cfg.lambda * distance(&present, cfg.distance, cfg.ent_floor).unwrap_or(0.0)
}

/// Per-pair weights whose weighted sum of pair-loss gradients is the
/// gradient of [`ile_objective`] over the batch.
pub fn pair_gradient_weights(pairs: &[(f64, Group)], cfg: &IleConfig) -> Vec<f64> {
    let b = pairs.len() as f64;
    let base = 1.0 / b;
    if pairs.is_empty() {
        return Vec::new();
    }
    let groups = group_average_losses(pairs);
    let present: Vec<usize> = (0..3).filter(|&g| groups.counts[g] > 0).collect();
    let values: Vec<f64> = present.iter().map(|&g| groups.means[g].unwrap()).collect();
    let grad = distance_gradient(&values, cfg.distance, cfg.ent_floor).unwrap_or_default();
    let mut per_group = [0.0; 3];
    for (slot, &g) in present.iter().enumerate() {
        per_group[g] = cfg.lambda * grad[slot] / groups.counts[g] as f64;
    }
    pairs.iter().map(|&(_, g)| base + per_group[g.index()]).collect()
}

impl PairWeighting for IleConfig {
    fn weights(&self, batch: &[ScoredPair]) -> Vec<f64> {
        let pairs: Vec<(f64, Group)> = batch.iter().map(|p| (p.loss, p.group)).collect();
        pair_gradient_weights(&pairs, self)
    }
}

/// One epoch of group loss diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    /// Mean pair loss over every triplet of the epoch.
    pub loss: f64,
    pub groups: GroupLosses,
    pub distance: f64,
    pub objective: f64,
}

impl TraceRow {
    /// Builds a row from epoch-level sums, evaluating `D` and `L*` under `cfg`.
    pub fn from_sums(
        epoch: usize,
        total: f64,
        count: usize,
        group_sums: [f64; 3],
        group_counts: [usize; 3],
        cfg: &IleConfig,
    ) -> Self {
        let loss = total / count.max(1) as f64;
        let groups = GroupLosses::from_sums(group_sums, group_counts);
        let present = groups.present();
        let distance = if present.is_empty() {
            0.0
        } else {
            distance(&present, cfg.distance, cfg.ent_floor).unwrap_or(0.0)
        };
        Self {
            epoch,
            loss,
            groups,
            distance,
            objective: loss + cfg.lambda * distance,
        }
    }
}

/// Per-epoch group losses of a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupLossTrace {
    pub rows: Vec<TraceRow>,
}

impl GroupLossTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Writes `epoch,L,L_H,L_M,L_T,D,L_star`; absent groups are left blank.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["epoch", "L", "L_H", "L_M", "L_T", "D", "L_star"])
            .map_err(|e| Error::csv(path, e))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                r.loss.to_string(),
                opt(r.groups.means[0]),
                opt(r.groups.means[1]),
                opt(r.groups.means[2]),
                r.distance.to_string(),
                r.objective.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a trace written by [`GroupLossTrace::write_csv`]. Group counts
    /// are not stored and come back as 0 or 1.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut rows = Vec::new();
        for (lineno, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let bad = |what: &str| Error::Parse {
                path: path.to_owned(),
                line: lineno + 2,
                message: format!("bad {what}"),
            };
            let num =
                |idx: usize| -> Result<f64> { rec.get(idx).and_then(|s| s.parse().ok()).ok_or_else(|| bad("number")) };
            let opt = |idx: usize| -> Result<Option<f64>> {
                match rec.get(idx) {
                    Some("") => Ok(None),
                    Some(s) => s.parse().map(Some).map_err(|_| bad("group loss")),
                    None => Err(bad("column count")),
                }
            };
            let means = [opt(2)?, opt(3)?, opt(4)?];
            let counts = means.map(|m| usize::from(m.is_some()));
            rows.push(TraceRow {
                epoch: rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("epoch"))?,
                loss: num(1)?,
                groups: GroupLosses { means, counts },
                distance: num(5)?,
                objective: num(6)?,
            });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const FLOOR: f64 = 1e-8;

    #[test]
    fn group_means_flag_absent_groups() {
        let g = group_average_losses(&[(0.2, Group::Head), (0.4, Group::Head), (0.6, Group::Tail)]);
        assert_abs_diff_eq!(g.get(Group::Head).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(g.get(Group::Tail), Some(0.6));
        assert_eq!(g.get(Group::Mid), None);
        assert_eq!(g.counts, [2, 0, 1]);
    }

    #[test]
    fn single_group_mean_is_global_mean() {
        let pairs = [(0.1, Group::Mid), (0.5, Group::Mid), (0.9, Group::Mid)];
        let g = group_average_losses(&pairs);
        assert_eq!(g.present(), vec![(0.1 + 0.5 + 0.9) / 3.0]);
    }

    #[test]
    fn round_robin_means_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<(f64, Group)> = (0..1000)
            .map(|k| (rng.random::<f64>() * 3.0, Group::ALL[k % 3]))
            .collect();
        let g = group_average_losses(&pairs);
        for (gi, group) in Group::ALL.iter().enumerate() {
            let mut sum = 0.0;
            let mut n = 0;
            for (loss, pg) in &pairs {
                if pg == group {
                    sum += loss;
                    n += 1;
                }
            }
            assert_eq!(g.means[gi], Some(sum / n as f64));
        }
    }

    #[test]
    fn table_values() {
        let flat = [0.4, 0.4, 0.4];
        assert_eq!(distance(&flat, Distance::Std, FLOOR).unwrap(), 0.0);
        assert_eq!(distance(&flat, Distance::Mad, FLOOR).unwrap(), 0.0);
        let spread = [0.2, 0.4, 0.6];
        // sqrt(0.08 / 3) and 0.4 / 3
        assert_abs_diff_eq!(
            distance(&spread, Distance::Std, FLOOR).unwrap(),
            0.163299316,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            distance(&spread, Distance::Mad, FLOOR).unwrap(),
            0.133333333,
            epsilon = 1e-8
        );
        assert_eq!(distance(&[1.0, 1.0, 1.0], Distance::Ent, FLOOR).unwrap(), 0.0);
        assert_abs_diff_eq!(
            distance(&[0.5; 3], Distance::Ent, FLOOR).unwrap(),
            1.039720771,
            epsilon = 1e-8
        );
        assert!(distance(&[], Distance::Std, FLOOR).is_err());
    }

    #[test]
    fn ent_clamps_zero() {
        let d = distance(&[0.0, 1.0], Distance::Ent, FLOOR).unwrap();
        assert!(d.is_finite());
        let g = distance_gradient(&[0.0, 1.0], Distance::Ent, FLOOR).unwrap();
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn objective_values() {
        let groups = group_average_losses(&[(0.2, Group::Head), (0.4, Group::Mid), (0.6, Group::Tail)]);
        assert_eq!(ile_objective(0.5, &groups, &IleConfig::new(0.0, Distance::Std)), 0.5);
        assert_eq!(ile_objective(0.5, &groups, &IleConfig::new(0.3, Distance::None)), 0.5);
        let v = ile_objective(0.5, &groups, &IleConfig::new(0.25, Distance::Std));
        assert_abs_diff_eq!(v, 0.540824829, epsilon = 1e-8);
    }

    #[test]
    fn zero_lambda_weights_are_uniform() {
        let pairs = [
            (0.9, Group::Head),
            (0.1, Group::Tail),
            (2.0, Group::Mid),
            (0.3, Group::Tail),
        ];
        for d in [Distance::Std, Distance::Ent, Distance::Mad] {
            let w = pair_gradient_weights(&pairs, &IleConfig::new(0.0, d));
            assert!(w.iter().all(|&x| x == 0.25), "{d}: {w:?}");
        }
    }

    #[test]
    fn equal_group_losses_give_uniform_std_weights() {
        let pairs = [
            (0.5, Group::Head),
            (0.5, Group::Mid),
            (0.5, Group::Tail),
            (0.5, Group::Tail),
        ];
        let w = pair_gradient_weights(&pairs, &IleConfig::new(0.7, Distance::Std));
        assert!(w.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn above_average_group_is_upweighted_under_std() {
        let pairs = [(0.2, Group::Head), (0.2, Group::Head), (1.0, Group::Tail)];
        let w = pair_gradient_weights(&pairs, &IleConfig::new(0.5, Distance::Std));
        assert!(w[2] > 1.0 / 3.0);
        assert!(w[0] < 1.0 / 3.0);
    }

    /// Finite-difference oracle for the partials of `distance`.
    fn fd_gradient(values: &[f64], which: Distance) -> Vec<f64> {
        let h = 1e-6;
        (0..values.len())
            .map(|i| {
                let mut up = values.to_vec();
                let mut down = values.to_vec();
                up[i] += h;
                down[i] -= h;
                (distance(&up, which, FLOOR).unwrap() - distance(&down, which, FLOOR).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn distance_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let k = rng.random_range(1..=3);
            let values: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..3.0)).collect();
            for which in [Distance::Std, Distance::Ent, Distance::Mad] {
                if which == Distance::Std && k == 1 {
                    continue;
                }
                let a = distance_gradient(&values, which, FLOOR).unwrap();
                let f = fd_gradient(&values, which);
                for (x, y) in a.iter().zip(&f) {
                    assert!((x - y).abs() < 1e-6, "{which} {values:?}: {a:?} vs {f:?}");
                }
            }
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let cfg = IleConfig::new(0.25, Distance::Std);
        let mut trace = GroupLossTrace::default();
        trace.push(TraceRow::from_sums(0, 3.0, 4, [1.0, 1.5, 0.0], [2, 2, 0], &cfg));
        trace.push(TraceRow::from_sums(1, 2.0, 4, [0.4, 0.8, 0.8], [2, 1, 1], &cfg));
        let row = &trace.rows[1];
        assert_abs_diff_eq!(row.objective, row.loss + 0.25 * row.distance, epsilon = 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        trace.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,L,L_H,L_M,L_T,D,L_star\n0,0.75,0.5,0.75,,"));
        let back = GroupLossTrace::read_csv(&path).unwrap();
        assert_eq!(back.rows.len(), 2);
        for (a, b) in back.rows.iter().zip(&trace.rows) {
            assert_eq!(a.loss, b.loss);
            assert_eq!(a.groups.means, b.groups.means);
            assert_eq!(a.objective, b.objective);
        }
    }

    #[test]
    fn config_validation() {
        assert!(IleConfig::new(-0.1, Distance::Std).validate().is_err());
        let c = IleConfig {
            ent_floor: 0.1,
            ..IleConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(IleConfig::default().validate().is_ok());
        assert_eq!("mad".parse::<Distance>().unwrap(), Distance::Mad);
        assert!("l2".parse::<Distance>().is_err());
    }

    fn group_values() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.001f64..5.0, 1..=3)
    }

    proptest! {
        #[test]
        fn permutation_invariance(mut v in group_values()) {
            for which in [Distance::Std, Distance::Ent, Distance::Mad] {
                let a = distance(&v, which, FLOOR).unwrap();
                v.reverse();
                let b = distance(&v, which, FLOOR).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn std_and_mad_translation_invariant(v in group_values(), c in -2.0f64..2.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            for which in [Distance::Std, Distance::Mad] {
                let a = distance(&v, which, FLOOR).unwrap();
                let b = distance(&shifted, which, FLOOR).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn ent_nonnegative_on_unit_interval(v in proptest::collection::vec(0.0f64..=1.0, 1..=3)) {
            prop_assert!(distance(&v, Distance::Ent, FLOOR).unwrap() >= 0.0);
        }
    }
}

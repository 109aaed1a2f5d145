use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{DataSource, ExperimentConfig, Method};
use super::io::{write_metrics_csv, write_recommendations_csv, MetricsRow, PhaseTimings};
use super::synth::synth_dataset;
use crate::baselines::{build_propensities, cp_rerank, estimate_uncertainty, ips_fit, pufr_rerank, UncertaintyTable};
use crate::error::{Error, Result};
use crate::ile::GroupLossTrace;
use crate::ingest::{
    assign_popularity_groups, load_interactions, split_train_test, InteractionDataset, PopularityGrouping, SplitDataset,
};
use crate::metrics::{evaluate, MetricsReport, RecommendationSet};
use crate::model::{fit, init_model, recommend_all, FactorModel, Uniform};

/// Split data and popularity tiers shared by the later phases.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: SplitDataset,
    pub grouping: PopularityGrouping,
}

pub fn load_data(source: &DataSource) -> Result<InteractionDataset> {
    match source {
        DataSource::File {
            path,
            format,
            delimiter,
        } => load_interactions(path, *format, *delimiter),
        DataSource::Synthetic(s) => synth_dataset(s),
    }
}

/// Load, split and group.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let ds = load_data(&cfg.data)?;
    if cfg.k > ds.n_items() {
        return Err(Error::Config(format!(
            "k = {} exceeds the {} catalog items",
            cfg.k,
            ds.n_items()
        )));
    }
    let split = split_train_test(&ds, cfg.split_ratio, cfg.split_seed)?;
    let grouping = assign_popularity_groups(&split.train);
    Ok(Prepared { split, grouping })
}

/// Trains with the loss the method prescribes: ILE weighting, IPS weighting,
/// or plain BPR for BPR, CP and PUFR.
pub fn train_method(cfg: &ExperimentConfig, data: &Prepared) -> Result<(FactorModel, GroupLossTrace)> {
    let train = &data.split.train;
    let ile = cfg.ile_config();
    let mut model = init_model(&cfg.train, train.n_users(), train.n_items())?;
    let trace = match cfg.method {
        Method::Ile => fit(&mut model, train, &data.grouping, &cfg.train, &ile, &ile)?,
        Method::Ips => {
            let table = build_propensities(data.grouping.counts(), cfg.gamma, cfg.clip_cap)?;
            ips_fit(&mut model, train, &data.grouping, &cfg.train, &table, &ile)?
        }
        Method::Bpr | Method::Cp | Method::Pufr => fit(&mut model, train, &data.grouping, &cfg.train, &Uniform, &ile)?,
    };
    Ok((model, trace))
}

fn uncertainty_cache_key(cfg: &ExperimentConfig, train: &InteractionDataset) -> String {
    let mut h = Sha256::new();
    h.update((train.n_users() as u64).to_le_bytes());
    h.update((train.n_items() as u64).to_le_bytes());
    for (u, i) in train.pairs() {
        h.update(train.user_ids().id(u).as_bytes());
        h.update([0]);
        h.update(train.item_ids().id(i).as_bytes());
        h.update([1]);
    }
    let t = &cfg.train;
    h.update(
        format!(
            "lr={};dim={};epochs={};batch={};l2={};seeds={:?}",
            t.learning_rate, t.dim, t.epochs, t.batch_size, t.l2_reg, cfg.uncertainty_seeds
        )
        .as_bytes(),
    );
    h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// PUFR uncertainty, read from or written to `out_dir/cache`.
pub fn uncertainty_for(cfg: &ExperimentConfig, data: &Prepared) -> Result<UncertaintyTable> {
    let train = &data.split.train;
    let cache_dir = cfg.out_dir.join("cache");
    let path = cache_dir.join(format!("uncertainty_{}.csv", uncertainty_cache_key(cfg, train)));
    if path.exists() {
        if let Ok(table) = UncertaintyTable::read_csv(&path, train.item_ids()) {
            if table.seeds() == cfg.uncertainty_seeds.as_slice() {
                return Ok(table);
            }
        }
    }
    let table = estimate_uncertainty(train, &data.grouping, &cfg.train, &cfg.uncertainty_seeds)?;
    fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;
    // write then rename so concurrent runs never read half a file
    let tmp = cache_dir.join(format!(
        ".{}.{}",
        std::process::id(),
        path.file_name().unwrap().to_string_lossy()
    ));
    table.write_csv(&tmp, train.item_ids())?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

/// Top-K lists, or top-N candidate lists for post-processing methods.
pub fn base_recommendations(cfg: &ExperimentConfig, model: &FactorModel, data: &Prepared) -> RecommendationSet {
    let depth = if cfg.method.is_post_processing() {
        cfg.long_list
    } else {
        cfg.k
    };
    recommend_all(model, &data.split.train, depth)
}

/// Applies the method's post-processing. Lists of in-processing methods and
/// BPR pass through unchanged.
pub fn rerank(
    cfg: &ExperimentConfig,
    base: RecommendationSet,
    data: &Prepared,
    uncertainty: Option<&UncertaintyTable>,
) -> Result<RecommendationSet> {
    let train = &data.split.train;
    let lists = match cfg.method {
        Method::Bpr | Method::Ile | Method::Ips => return Ok(base),
        Method::Cp => base
            .lists
            .par_iter()
            .enumerate()
            .map(|(u, long)| {
                let k = cfg.k.min(long.len());
                match data
                    .grouping
                    .distribution_of(train.user_items(u).iter().map(|&i| i as usize))
                {
                    Some(profile) => cp_rerank(long, &profile, &data.grouping, cfg.lambda, k),
                    None => Ok(long[..k].to_vec()),
                }
            })
            .collect::<Result<Vec<_>>>()?,
        Method::Pufr => {
            let table = uncertainty.ok_or_else(|| Error::Config("PUFR needs an uncertainty table".into()))?;
            base.lists
                .par_iter()
                .map(|long| pufr_rerank(long, table, &data.grouping, cfg.lambda, cfg.k))
                .collect()
        }
    };
    Ok(RecommendationSet { lists })
}

/// Files a run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPaths {
    pub metrics: PathBuf,
    pub trace: PathBuf,
    pub checkpoint: PathBuf,
    pub recommendations: PathBuf,
    pub timings: PathBuf,
}

impl ArtifactPaths {
    fn for_config(cfg: &ExperimentConfig) -> Self {
        let stem = cfg.run_stem();
        let file = |suffix: &str| cfg.out_dir.join(format!("{stem}.{suffix}"));
        Self {
            metrics: file("metrics.csv"),
            trace: file("trace.csv"),
            checkpoint: file("ckpt"),
            recommendations: file("recs.csv"),
            timings: file("timing.csv"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [
            &self.metrics,
            &self.trace,
            &self.checkpoint,
            &self.recommendations,
            &self.timings,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub row: MetricsRow,
    pub report: MetricsReport,
    pub trace: GroupLossTrace,
    pub model: FactorModel,
    pub recommendations: RecommendationSet,
    pub timings: PhaseTimings,
    pub paths: ArtifactPaths,
}

struct Stopwatch {
    start: Instant,
    timings: PhaseTimings,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            timings: PhaseTimings::default(),
        }
    }

    fn time<T>(&mut self, phase: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f().map_err(|e| e.in_phase(phase))?;
        self.timings.phases.push((phase.to_owned(), t0.elapsed()));
        Ok(out)
    }

    fn skip(&mut self, phase: &'static str) {
        self.timings.phases.push((phase.to_owned(), Duration::ZERO));
    }

    fn finish(mut self) -> PhaseTimings {
        self.timings.total = self.start.elapsed();
        self.timings
    }
}

fn write_artifacts(art: &RunArtifacts, data: &Prepared) -> Result<()> {
    let p = &art.paths;
    write_metrics_csv(&p.metrics, std::slice::from_ref(&art.row))?;
    art.trace.write_csv(&p.trace)?;
    art.model.save(&p.checkpoint)?;
    write_recommendations_csv(&p.recommendations, &art.recommendations, &data.split.train)?;
    art.timings.write_csv(&p.timings)
}

/// load -> split -> group -> train -> recommend -> rerank -> evaluate, then
/// writes metrics, trace, checkpoint, recommendations and timings into
/// `cfg.out_dir`. On failure no artifacts are left behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let mut clock = Stopwatch::new();
    let data = clock.time("load", || prepare(cfg))?;
    let (model, trace, uncertainty) = clock.time("train", || {
        let (model, trace) = train_method(cfg, &data)?;
        let uncertainty = match cfg.method {
            Method::Pufr => Some(uncertainty_for(cfg, &data)?),
            _ => None,
        };
        Ok((model, trace, uncertainty))
    })?;
    let base = clock.time("recommend", || Ok(base_recommendations(cfg, &model, &data)))?;
    let recommendations = if cfg.method.is_post_processing() {
        clock.time("rerank", || rerank(cfg, base, &data, uncertainty.as_ref()))?
    } else {
        clock.skip("rerank");
        base
    };
    let report = clock.time("evaluate", || {
        Ok(evaluate(
            &recommendations,
            &data.split.train,
            &data.split.test,
            &data.grouping,
            cfg.k,
        ))
    })?;
    let art = RunArtifacts {
        row: MetricsRow::new(cfg.method.as_str(), &cfg.params_label(), &report),
        report,
        trace,
        model,
        recommendations,
        timings: clock.finish(),
        paths: ArtifactPaths::for_config(cfg),
    };

    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e).in_phase("write"))?;
    if let Err(e) = write_artifacts(&art, &data) {
        for path in art.paths.all() {
            let _ = fs::remove_file(path);
        }
        return Err(e.in_phase("write"));
    }
    Ok(art)
}

/// One point of a lambda sweep; failures are kept as their message.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub lambda: f64,
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub path: PathBuf,
}

/// Runs `template` once per lambda (same split and seeds) and writes
/// `lambda,ndcg,upd,ad,ee,status` to `out_dir`. A failing point is recorded
/// and the remaining points still run.
pub fn sweep(template: &ExperimentConfig, lambdas: &[f64]) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::Config("sweep needs at least one lambda".into()));
    }
    let rows: Vec<SweepRow> = lambdas
        .iter()
        .map(|&lambda| {
            let cfg = ExperimentConfig {
                lambda,
                ..template.clone()
            };
            SweepRow {
                lambda,
                outcome: run_experiment(&cfg).map(|a| a.report).map_err(|e| e.to_string()),
            }
        })
        .collect();

    let path = template.out_dir.join(format!(
        "sweep_{}_{}_seed{}.csv",
        template.method.as_str().to_ascii_lowercase(),
        template.distance,
        template.train.seed
    ));
    fs::create_dir_all(&template.out_dir).map_err(|e| Error::io(&template.out_dir, e))?;
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(["lambda", "ndcg", "upd", "ad", "ee", "status"])
        .map_err(|e| Error::csv(&path, e))?;
    for row in &rows {
        let record = match &row.outcome {
            Ok(r) => [
                row.lambda.to_string(),
                r.ndcg.to_string(),
                r.upd.to_string(),
                r.ad.to_string(),
                r.ee.to_string(),
                "ok".to_owned(),
            ],
            Err(msg) => [
                row.lambda.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {msg}"),
            ],
        };
        w.write_record(&record).map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(SweepTable { rows, path })
}

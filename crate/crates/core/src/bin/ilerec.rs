use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilerec::experiment::{
    base_recommendations, prepare, read_recommendations_csv, rerank, run_experiment, sweep, synth_dataset,
    train_method, uncertainty_for, write_metrics_csv, write_pairs, write_recommendations_csv, ExperimentConfig, Method,
    MetricsRow, SynthConfig, METRICS_HEADER,
};
use ilerec::ingest::{assign_popularity_groups, write_grouping_csv, DatasetFormat, Delimiter, Group};
use ilerec::metrics::evaluate;
use ilerec::{Error, FactorModel, Result};

#[derive(Parser)]
#[command(name = "ilerec", version, about = "Popularity-fair BPR training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset file and print its size and popularity tiers
    Ingest {
        path: PathBuf,
        #[arg(long, default_value = "triples")]
        format: DatasetFormat,
        #[arg(long, default_value = "auto")]
        delimiter: Delimiter,
        /// Also write item_id,count,group rows here
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Generate a Zipf-skewed synthetic dataset as user<TAB>item pairs
    Synth {
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 100)]
        items: usize,
        #[arg(long, default_value_t = 8000)]
        interactions: usize,
        #[arg(long, default_value_t = 1.2)]
        zipf: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train a model and write its checkpoint and group-loss trace
    Train(ConfigArgs),
    /// Write top-K lists (post-processed for CP/PUFR) from a checkpoint
    Recommend {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score a recommendation dump against the held-out split
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        recommendations: PathBuf,
        /// Also write the metrics row here
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: train, recommend, rerank, evaluate, write artifacts
    Run(ConfigArgs),
    /// One run per lambda; results land in a single CSV
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
    },
}

/// Config file first, then the named flags, then `--set` pairs.
#[derive(Args)]
struct ConfigArgs {
    /// key = value config file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// `full` (default hyperparameters) or `desk` (small, fast)
    #[arg(long)]
    preset: Option<String>,
    /// Dataset file, or `synth`
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    distance: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2_reg: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Any config key, e.g. --set gamma=0.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let named = [
            ("preset", self.preset.clone()),
            ("dataset", self.dataset.clone()),
            ("format", self.format.clone()),
            ("delimiter", self.delimiter.clone()),
            ("method", self.method.clone()),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("distance", self.distance.clone()),
            ("learning_rate", self.learning_rate.map(|v| v.to_string())),
            ("dim", self.dim.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("l2_reg", self.l2_reg.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("split_seed", self.split_seed.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in named {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        for pair in &self.sets {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{pair}`")))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_row(row: &MetricsRow) {
    println!("{}", METRICS_HEADER.join(","));
    println!(
        "{},{},{},{},{},{}",
        row.method, row.params, row.ndcg, row.upd, row.ad, row.ee
    );
}

fn create_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            path,
            format,
            delimiter,
            groups,
        } => {
            let ds = ilerec::ingest::load_interactions(&path, format, delimiter)?;
            let grouping = assign_popularity_groups(&ds);
            let (head_min, tail_max) = grouping.boundaries();
            println!("users         {}", ds.n_users());
            println!("items         {}", ds.n_items());
            println!("interactions  {}", ds.len());
            println!(
                "density       {:.6}",
                ds.len() as f64 / (ds.n_users() as f64 * ds.n_items() as f64)
            );
            for g in Group::ALL {
                println!("{:<13} {} items", format!("group {}", g.as_str()), grouping.size(g));
            }
            println!("head count >= {head_min}, tail count <= {tail_max}");
            if let Some(out) = groups {
                write_grouping_csv(&out, &grouping, &ds)?;
            }
        }
        Command::Synth {
            users,
            items,
            interactions,
            zipf,
            seed,
            out,
        } => {
            let ds = synth_dataset(&SynthConfig {
                users,
                items,
                interactions,
                zipf_s: zipf,
                seed,
            })?;
            write_pairs(&out, &ds)?;
            println!("wrote {} interactions to {}", ds.len(), out.display());
        }
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let data = prepare(&cfg)?;
            let (model, trace) = train_method(&cfg, &data)?;
            create_out_dir(&cfg)?;
            let stem = cfg.out_dir.join(cfg.run_stem());
            let ckpt = stem.with_extension("ckpt");
            let trace_path = cfg.out_dir.join(format!("{}.trace.csv", cfg.run_stem()));
            model.save(&ckpt)?;
            trace.write_csv(&trace_path)?;
            if let Some(last) = trace.last() {
                println!(
                    "epoch {} L = {:.6} D = {:.6} L* = {:.6}",
                    last.epoch, last.loss, last.distance, last.objective
                );
            }
            println!("{}\n{}", ckpt.display(), trace_path.display());
        }
        Command::Recommend { cfg, checkpoint, out } => {
            let cfg = cfg.resolve()?;
            let data = prepare(&cfg)?;
            let model = FactorModel::load(&checkpoint)?;
            let train = &data.split.train;
            if model.n_users() != train.n_users() || model.n_items() != train.n_items() {
                return Err(Error::Config(format!(
                    "checkpoint is {}x{} but the dataset has {} users and {} items",
                    model.n_users(),
                    model.n_items(),
                    train.n_users(),
                    train.n_items()
                )));
            }
            let uncertainty = match cfg.method {
                Method::Pufr => Some(uncertainty_for(&cfg, &data)?),
                _ => None,
            };
            let recs = rerank(
                &cfg,
                base_recommendations(&cfg, &model, &data),
                &data,
                uncertainty.as_ref(),
            )?;
            write_recommendations_csv(&out, &recs, train)?;
            println!("wrote lists for {} users to {}", recs.n_users(), out.display());
        }
        Command::Evaluate {
            cfg,
            recommendations,
            out,
        } => {
            let cfg = cfg.resolve()?;
            let data = prepare(&cfg)?;
            let recs = read_recommendations_csv(&recommendations, &data.split.train)?;
            let report = evaluate(&recs, &data.split.train, &data.split.test, &data.grouping, cfg.k);
            let row = MetricsRow::new(cfg.method.as_str(), &cfg.params_label(), &report);
            if let Some(out) = out {
                write_metrics_csv(&out, std::slice::from_ref(&row))?;
            }
            print_row(&row);
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let art = run_experiment(&cfg)?;
            print_row(&art.row);
            for (phase, d) in &art.timings.phases {
                eprintln!("{phase:<10} {:>10.1} ms", d.as_secs_f64() * 1e3);
            }
            eprintln!("{:<10} {:>10.1} ms", "total", art.timings.total.as_secs_f64() * 1e3);
            for p in art.paths.all() {
                eprintln!("{}", p.display());
            }
        }
        Command::Sweep { cfg, lambdas } => {
            let cfg = cfg.resolve()?;
            let table = sweep(&cfg, &lambdas)?;
            let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{}", table.path.display());
            if failed > 0 {
                return Err(Error::Config(format!(
                    "{failed} of {} sweep points failed",
                    table.rows.len()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

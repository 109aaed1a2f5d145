use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ile::{Distance, IleConfig};
use crate::ingest::{DatasetFormat, Delimiter};
use crate::model::TrainConfig;

use super::synth::SynthConfig;

/// Where interactions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File {
        path: PathBuf,
        format: DatasetFormat,
        delimiter: Delimiter,
    },
    Synthetic(SynthConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Bpr,
    Ile,
    Ips,
    Cp,
    Pufr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bpr => "BPR",
            Method::Ile => "ILE",
            Method::Ips => "IPS",
            Method::Cp => "CP",
            Method::Pufr => "PUFR",
        }
    }

    /// Whether the method changes the training loss.
    pub fn is_in_processing(self) -> bool {
        matches!(self, Method::Ile | Method::Ips)
    }

    /// Whether the method re-ranks a trained model's lists.
    pub fn is_post_processing(self) -> bool {
        matches!(self, Method::Cp | Method::Pufr)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpr" => Ok(Method::Bpr),
            "ile" => Ok(Method::Ile),
            "ips" => Ok(Method::Ips),
            "cp" => Ok(Method::Cp),
            "pufr" => Ok(Method::Pufr),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a single end-to-end run needs.
///
/// `lambda` is interpreted by the selected method: the equalization weight
/// for ILE, the fairness weight for CP (in `[0, 1]`) and the uncertainty
/// multiplier for PUFR. BPR and IPS ignore it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub train: TrainConfig,
    pub method: Method,
    pub lambda: f64,
    pub distance: Distance,
    pub ent_floor: f64,
    /// CP/PUFR candidate list length.
    pub long_list: usize,
    /// IPS propensity exponent.
    pub gamma: f64,
    /// IPS weight cap.
    pub clip_cap: f64,
    pub uncertainty_seeds: Vec<u64>,
    pub k: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic(SynthConfig::default()),
            split_ratio: 0.8,
            split_seed: 0,
            train: TrainConfig::default(),
            method: Method::Bpr,
            lambda: 0.0,
            distance: Distance::Std,
            ent_floor: 1e-8,
            long_list: 100,
            gamma: 1.0,
            clip_cap: 30.0,
            uncertainty_seeds: vec![1, 2, 3, 4, 5],
            k: 10,
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// The synthetic benchmark with [`TrainConfig::desk_scale`] training.
    pub fn desk_scale() -> Self {
        Self {
            train: TrainConfig::desk_scale(),
            ..Self::default()
        }
    }

    /// The IleConfig the training loop uses. Non-ILE methods train with a
    /// zero weight but keep the distance for trace diagnostics.
    pub fn ile_config(&self) -> IleConfig {
        IleConfig {
            lambda: if self.method == Method::Ile { self.lambda } else { 0.0 },
            distance: self.distance,
            ent_floor: self.ent_floor,
        }
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let synth = || -> Result<SynthConfig> {
            match &self.data {
                DataSource::Synthetic(s) => Ok(s.clone()),
                DataSource::File { .. } => Ok(SynthConfig::default()),
            }
        };
        match key {
            "preset" => {
                self.train = match value {
                    "full" => TrainConfig {
                        seed: self.train.seed,
                        ..TrainConfig::default()
                    },
                    "desk" => TrainConfig {
                        seed: self.train.seed,
                        ..TrainConfig::desk_scale()
                    },
                    other => return Err(Error::Config(format!("unknown preset `{other}`"))),
                }
            }
            "dataset" => {
                self.data = if value == "synth" {
                    DataSource::Synthetic(synth()?)
                } else {
                    let (format, delimiter) = match &self.data {
                        DataSource::File { format, delimiter, .. } => (*format, *delimiter),
                        DataSource::Synthetic(_) => (DatasetFormat::Triples, Delimiter::Auto),
                    };
                    DataSource::File {
                        path: PathBuf::from(value),
                        format,
                        delimiter,
                    }
                }
            }
            "format" | "delimiter" => match &mut self.data {
                DataSource::File { format, delimiter, .. } => {
                    if key == "format" {
                        *format = parse(key, value)?;
                    } else {
                        *delimiter = parse(key, value)?;
                    }
                }
                DataSource::Synthetic(_) => {
                    return Err(Error::Config(format!("`{key}` needs a dataset file set first")))
                }
            },
            "synth_users" | "synth_items" | "synth_interactions" | "synth_zipf" | "synth_seed" => {
                let mut s = synth()?;
                match key {
                    "synth_users" => s.users = parse(key, value)?,
                    "synth_items" => s.items = parse(key, value)?,
                    "synth_interactions" => s.interactions = parse(key, value)?,
                    "synth_zipf" => s.zipf_s = parse(key, value)?,
                    _ => s.seed = parse(key, value)?,
                }
                self.data = DataSource::Synthetic(s);
            }
            "split_ratio" => self.split_ratio = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "learning_rate" | "lr" => self.train.learning_rate = parse(key, value)?,
            "dim" => self.train.dim = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "l2_reg" => self.train.l2_reg = parse(key, value)?,
            "seed" => self.train.seed = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "lambda" => self.lambda = parse(key, value)?,
            "distance" => self.distance = value.parse()?,
            "ent_floor" => self.ent_floor = parse(key, value)?,
            "long_list" | "n" => self.long_list = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "clip_cap" => self.clip_cap = parse(key, value)?,
            "uncertainty_seeds" => {
                self.uncertainty_seeds = value.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?
            }
            "k" => self.k = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: PathBuf::new(),
                line: lineno + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: PathBuf::new(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_owned(),
                line,
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    /// Checks method parameters that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.ile_config().validate()?;
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        match self.method {
            Method::Cp => {
                if self.lambda > 1.0 {
                    return Err(Error::Config(format!("CP lambda must be <= 1, got {}", self.lambda)));
                }
                if self.long_list < self.k {
                    return Err(Error::Config(format!(
                        "long_list ({}) must be >= k ({})",
                        self.long_list, self.k
                    )));
                }
            }
            Method::Pufr => {
                let mut s = self.uncertainty_seeds.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != 5 || self.uncertainty_seeds.len() != 5 {
                    return Err(Error::Config("PUFR needs 5 distinct uncertainty_seeds".into()));
                }
                if self.long_list < self.k {
                    return Err(Error::Config(format!(
                        "long_list ({}) must be >= k ({})",
                        self.long_list, self.k
                    )));
                }
            }
            Method::Ips => {
                if !(self.gamma.is_finite() && self.gamma >= 0.0 && self.clip_cap >= 1.0) {
                    return Err(Error::Config("IPS needs gamma >= 0 and clip_cap >= 1".into()));
                }
            }
            Method::Bpr | Method::Ile => {}
        }
        Ok(())
    }

    /// Method parameters as written to the metrics `params` column.
    pub fn params_label(&self) -> String {
        match self.method {
            Method::Bpr => "-".into(),
            Method::Ile => format!("lambda={};D={}", self.lambda, self.distance),
            Method::Ips => format!("gamma={};cap={}", self.gamma, self.clip_cap),
            Method::Cp => format!("lambda={};N={}", self.lambda, self.long_list),
            Method::Pufr => format!("lambda={};N={}", self.lambda, self.long_list),
        }
    }

    /// File name stem embedding method, parameters and seeds.
    pub fn run_stem(&self) -> String {
        let params: String = self
            .params_label()
            .chars()
            .map(|c| match c {
                '=' => '-',
                ';' => '_',
                c if c.is_ascii_alphanumeric() || c == '.' || c == '-' => c,
                _ => '_',
            })
            .collect();
        format!(
            "{}_{}_seed{}_split{}",
            self.method.as_str().to_ascii_lowercase(),
            params,
            self.train.seed,
            self.split_seed
        )
    }
}

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::ingest::{IdMap, InteractionDataset};

/// Shape of a synthetic popularity-skewed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    /// Zipf exponent of item popularity; 0 is uniform.
    pub zipf_s: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users: 200,
            items: 100,
            interactions: 8000,
            zipf_s: 1.2,
            seed: 0,
        }
    }
}

/// Draws `interactions` distinct pairs: user uniform, item Zipf(`zipf_s`)
/// by rank, with item 0 the most popular. Duplicates are redrawn.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<InteractionDataset> {
    if cfg.users == 0 || cfg.items == 0 || cfg.interactions == 0 {
        return Err(Error::EmptyDataset);
    }
    if cfg.interactions > cfg.users.saturating_mul(cfg.items) {
        return Err(Error::Config(format!(
            "{} interactions do not fit in {} users x {} items",
            cfg.interactions, cfg.users, cfg.items
        )));
    }
    let zipf = Zipf::new(cfg.items as f64, cfg.zipf_s)
        .map_err(|e| Error::Config(format!("zipf exponent {}: {e}", cfg.zipf_s)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen = HashSet::with_capacity(cfg.interactions);
    let mut pairs = Vec::with_capacity(cfg.interactions);
    let budget = cfg.interactions.saturating_mul(10_000).max(1_000_000);
    let mut draws = 0usize;
    while pairs.len() < cfg.interactions {
        draws += 1;
        if draws > budget {
            return Err(Error::Config(format!(
                "gave up after {budget} draws; only {} distinct pairs found",
                pairs.len()
            )));
        }
        let user = rng.random_range(0..cfg.users);
        let item = (zipf.sample(&mut rng) as usize - 1).min(cfg.items - 1);
        if seen.insert((user, item)) {
            pairs.push((user, item));
        }
    }
    InteractionDataset::from_pairs(
        Arc::new(IdMap::sequential(cfg.users)),
        Arc::new(IdMap::sequential(cfg.items)),
        pairs,
    )
}

/// Writes `user<TAB>item` lines using external ids.
pub fn write_pairs(path: impl AsRef<Path>, ds: &InteractionDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (u, i) in ds.pairs() {
        writeln!(w, "{}\t{}", ds.user_ids().id(u), ds.item_ids().id(i)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

//! Comparison methods: inverse propensity weighting during training, and
//! two post-processing re-rankers (calibrated popularity and
//! uncertainty-based fair ranking).

mod cp;
mod ips;
mod pufr;

pub use cp::cp_rerank;
pub use ips::{build_propensities, ips_fit, PropensityTable};
pub use pufr::{estimate_uncertainty, pufr_rerank, uncertainty_from_models, UncertaintyTable, UNCERTAINTY_SEEDS};

use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::IdMap;

/// Writes `item_id,value` rows.
pub(crate) fn write_item_values(path: &Path, preamble: Option<&str>, items: &IdMap, values: &[f64]) -> Result<()> {
    use std::io::Write;

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    if let Some(line) = preamble {
        writeln!(file, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["item_id", "value"]).map_err(|e| Error::csv(path, e))?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([items.id(i), &v.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `item_id,value` rows into a dense vector; returns the `#` preamble.
pub(crate) fn read_item_values(path: &Path, items: &IdMap) -> Result<(Option<String>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let preamble = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .map(str::to_owned);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = vec![f64::NAN; items.len()];
    for (lineno, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: lineno + 2,
            message,
        };
        let id = rec.get(0).unwrap_or_default();
        let idx = items.get(id).ok_or_else(|| bad(format!("unknown item `{id}`")))?;
        values[idx] = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad value".into()))?;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: "missing items".into(),
        });
    }
    Ok((preamble, values))
}

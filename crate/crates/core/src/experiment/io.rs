//! CSV artifacts written by runs and sweeps, and their readers.

use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;
use crate::metrics::{MetricsReport, RecommendationSet};
use crate::model::ScoredItem;

/// One `method,params,ndcg,upd,ad,ee` row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub params: String,
    pub ndcg: f64,
    pub upd: f64,
    pub ad: f64,
    pub ee: f64,
}

impl MetricsRow {
    pub fn new(method: &str, params: &str, report: &MetricsReport) -> Self {
        Self {
            method: method.to_owned(),
            params: params.to_owned(),
            ndcg: report.ndcg,
            upd: report.upd,
            ad: report.ad,
            ee: report.ee,
        }
    }
}

pub const METRICS_HEADER: [&str; 6] = ["method", "params", "ndcg", "upd", "ad", "ee"];

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(METRICS_HEADER).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.params.clone(),
            r.ndcg.to_string(),
            r.upd.to_string(),
            r.ad.to_string(),
            r.ee.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, path: &Path, line: usize) -> Result<T> {
    rec.get(idx).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("bad field {idx}"),
    })
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = k + 2;
        rows.push(MetricsRow {
            method: field(&rec, 0, path, line)?,
            params: field(&rec, 1, path, line)?,
            ndcg: field(&rec, 2, path, line)?,
            upd: field(&rec, 3, path, line)?,
            ad: field(&rec, 4, path, line)?,
            ee: field(&rec, 5, path, line)?,
        });
    }
    Ok(rows)
}

/// Writes `user_id,rank,item_id,score` with 1-based ranks and external ids.
pub fn write_recommendations_csv(
    path: impl AsRef<Path>,
    recs: &RecommendationSet,
    ds: &InteractionDataset,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["user_id", "rank", "item_id", "score"])
        .map_err(|e| Error::csv(path, e))?;
    for (u, list) in recs.lists.iter().enumerate() {
        for (pos, s) in list.iter().enumerate() {
            w.write_record([
                ds.user_ids().id(u),
                &(pos + 1).to_string(),
                ds.item_ids().id(s.item),
                &s.score.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a recommendation dump back onto the dense ids of `ds`.
pub fn read_recommendations_csv(path: impl AsRef<Path>, ds: &InteractionDataset) -> Result<RecommendationSet> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut ranked: Vec<Vec<(usize, ScoredItem)>> = vec![Vec::new(); ds.n_users()];
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = k + 2;
        let unknown = |what: &str, id: &str| Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("unknown {what} `{id}`"),
        };
        let user_id: String = field(&rec, 0, path, line)?;
        let item_id: String = field(&rec, 2, path, line)?;
        let user = ds.user_ids().get(&user_id).ok_or_else(|| unknown("user", &user_id))?;
        let item = ds.item_ids().get(&item_id).ok_or_else(|| unknown("item", &item_id))?;
        let rank: usize = field(&rec, 1, path, line)?;
        let score: f64 = field(&rec, 3, path, line)?;
        ranked[user].push((rank, ScoredItem { item, score }));
    }
    let lists = ranked
        .into_iter()
        .map(|mut l| {
            l.sort_by_key(|(rank, _)| *rank);
            l.into_iter().map(|(_, s)| s).collect()
        })
        .collect();
    Ok(RecommendationSet { lists })
}

/// Wall-clock time per pipeline phase, in recording order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub phases: Vec<(String, Duration)>,
    pub total: Duration,
}

impl PhaseTimings {
    pub fn get(&self, phase: &str) -> Option<Duration> {
        self.phases.iter().find(|(p, _)| p == phase).map(|(_, d)| *d)
    }

    pub fn sum(&self) -> Duration {
        self.phases.iter().map(|(_, d)| *d).sum()
    }

    /// Writes `phase,ms` rows, ending with `total`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["phase", "ms"]).map_err(|e| Error::csv(path, e))?;
        let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
        for (phase, d) in self
            .phases
            .iter()
            .chain(std::iter::once(&("total".to_owned(), self.total)))
        {
            w.write_record([phase.as_str(), &ms(*d)])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut out = Self::default();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let phase: String = field(&rec, 0, path, k + 2)?;
            let ms: f64 = field(&rec, 1, path, k + 2)?;
            let d = Duration::from_secs_f64(ms / 1e3);
            if phase == "total" {
                out.total = d;
            } else {
                out.phases.push((phase, d));
            }
        }
        Ok(out)
    }
}

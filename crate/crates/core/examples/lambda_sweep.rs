//! Accuracy/fairness trade-off of ILE as the equalization weight grows.
//! Runs are written under `runs/`.

use ilerec::experiment::{sweep, ExperimentConfig, Method};

fn main() -> ilerec::Result<()> {
    let mut cfg = ExperimentConfig::desk_scale();
    cfg.method = Method::Ile;
    let table = sweep(&cfg, &[0.0, 0.05, 0.1, 0.25, 0.5, 1.0])?;
    println!("lambda   nDCG    UPD     AD     EE");
    for row in &table.rows {
        match &row.outcome {
            Ok(r) => println!("{:<6} {:.4} {:.4} {:.3} {:.4}", row.lambda, r.ndcg, r.upd, r.ad, r.ee),
            Err(e) => println!("{:<6} failed: {e}", row.lambda),
        }
    }
    println!("table: {}", table.path.display());
    Ok(())
}

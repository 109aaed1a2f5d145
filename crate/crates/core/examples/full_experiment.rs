//! One end-to-end run from a key-value config, with per-phase timings and
//! the five files it leaves in the output directory.

use ilerec::experiment::ExperimentConfig;

const CONFIG: &str = "
# synthetic skewed data at desk scale
dataset = synth
synth_users = 300
preset = desk
method = ILE
lambda = 0.03
distance = ENT
k = 10
out_dir = runs
";

fn main() -> ilerec::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_str(CONFIG)?;
    let run = ilerec::experiment::run_experiment(&cfg)?;

    let r = &run.report;
    println!(
        "{} {}: nDCG {:.4} UPD {:.4} AD {:.3} EE {:.4}",
        run.row.method, run.row.params, r.ndcg, r.upd, r.ad, r.ee
    );
    for (phase, took) in &run.timings.phases {
        println!("  {phase:<10} {:>8.1} ms", took.as_secs_f64() * 1e3);
    }
    println!("  {:<10} {:>8.1} ms", "total", run.timings.total.as_secs_f64() * 1e3);
    for path in run.paths.all() {
        println!("{}", path.display());
    }
    Ok(())
}

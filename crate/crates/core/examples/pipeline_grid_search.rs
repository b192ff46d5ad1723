//! The resampled train/validation/test pipeline with a (β, k) grid search,
//! driven by the bundled sample config.

use multirank::experiment::{run_real_pipeline, ExperimentConfig};

fn main() -> multirank::error::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/v1/sample-pipeline.toml");
    let loaded = ExperimentConfig::load(path)?;
    let report = run_real_pipeline(&loaded)?;
    println!("{}: {} users, {} items, {} ratings", report.dataset, report.n_users, report.n_items, report.n_ratings);
    for r in &report.resamples {
        let best: Vec<String> = r
            .grid
            .best_by_weighting
            .iter()
            .map(|g| format!("{} beta={} k={} val={:.4}", g.algorithm(), g.beta, g.k, g.score))
            .collect();
        println!("resample {}: {}", r.resample, best.join(", "));
    }
    for a in &report.aggregate {
        println!("{:<4} {:<15} {:.4} ({:.4})", a.algorithm, a.metric.name(), a.mean, a.std);
    }
    Ok(())
}

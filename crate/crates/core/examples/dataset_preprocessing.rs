//! Ratings file round trip and the preprocessing protocol: popularity filter,
//! 40/15/45 resampling with activity thresholds, and quantization.

use multirank::data::{
    parse_ratings, popularity_filter, quantize, resample_split, write_csv, RatingFormat, SplitSpec,
};
use multirank::experiment::synthetic_dataset;
use multirank::synthgen::{sample_model, GFamily, LatentModelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = LatentModelConfig::unit_ball(2, 120, 400, 0.3, 2).with_g(GFamily::StepThresholds { levels: 5, bound: 1.0 });
    let data = synthetic_dataset(&sample_model(&cfg)?);
    let dir = std::env::temp_dir().join("multirank-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("ratings.csv");
    write_csv(&data, &path)?;
    let data = parse_ratings(&path, RatingFormat::CsvTriples)?;
    println!("wrote and re-read {} ratings at {}", data.entries.len(), path.display());

    let filtered = popularity_filter(&data, 80, 200, 15, 9)?;
    println!("popularity filter: {} items, {} users", filtered.n_items(), filtered.n_users());

    let spec = SplitSpec { min_train_ratings: 8, min_val_ratings: 2, min_test_ratings: 4, n_resamples: 2, seed: 4, ..SplitSpec::default() };
    for s in resample_split(&filtered, &spec)? {
        let mats = s.matrices(&filtered)?;
        let q = quantize(&mats.test);
        let liked = q.entries().filter(|e| e.rating == 5.0).count();
        println!(
            "resample {}: train {} val {} test {} (dropped {} users), quantized test liked {liked}/{}",
            s.resample,
            s.train.len(),
            s.val.len(),
            s.test.len(),
            s.dropped_users.len(),
            q.nnz()
        );
    }
    Ok(())
}

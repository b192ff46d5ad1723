//! Ratings on a five-point scale from random per-user thresholds, ranked with
//! the discrete preset.

use multirank::eval::dis_eps;
use multirank::ranker::{multi_rank, RankerConfig};
use multirank::synthgen::{sample_model, GFamily, LatentModelConfig};

fn main() -> multirank::error::Result<()> {
    let cfg = LatentModelConfig::unit_ball(2, 50, 300, 0.3, 5).with_g(GFamily::StepThresholds { levels: 5, bound: 1.0 });
    let model = sample_model(&cfg)?;
    println!("user 0 thresholds: {:?}", model.thresholds(0).unwrap());
    println!("user 0 ratings of items 0..10: {:?}", &model.ratings.column(0)[..10]);

    let m = model.observed_matrix();
    let rc = RankerConfig::discrete_preset(&m);
    println!("observed density {:.3}, preset beta={} k={}", m.density(), rc.beta, rc.k);
    let sigma = multi_rank(&m, &rc)?;
    for eps in [0.0, 0.1, 0.2] {
        println!("dis at eps={eps}: {}", dis_eps(&sigma, &model.utilities, &model.ratings, eps)?);
    }
    Ok(())
}

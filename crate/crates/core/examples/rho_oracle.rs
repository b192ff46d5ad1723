//! The empirical agreement of two users over many common items against the
//! Monte-Carlo estimate of its population value.

use multirank::agreement::{count_agreements, AgreementMode};
use multirank::synthgen::{rho_oracle, sample_model, LatentModelConfig, RhoVariant};

fn main() -> multirank::error::Result<()> {
    let model = sample_model(&LatentModelConfig::unit_ball(2, 5_000, 6, 1.0, 8))?;
    for (u, v) in [(0, 1), (2, 3), (4, 5)] {
        let (agree, pairs) = count_agreements(model.ratings.column(u), model.ratings.column(v), AgreementMode::AllPairs);
        let rho = rho_oracle(&model, u, v, 200_000, RhoVariant::Fixed);
        println!("users ({u},{v}): R = {:.4}, rho = {rho:.4}", agree as f64 / pairs as f64);
    }
    Ok(())
}

//! Per-user affine rescaling `r ↦ a·r − b` leaves every Multi-Rank output
//! unchanged, because only rating comparisons are ever used.

use multirank::data::{random_monotone_transform, MonotoneTransformSpec};
use multirank::ranker::{multi_rank, RankerConfig, VoteWeighting};
use multirank::synthgen::{sample_model, GFamily, LatentModelConfig};

fn main() -> multirank::error::Result<()> {
    let cfg = LatentModelConfig::unit_ball(2, 40, 200, 0.4, 3).with_g(GFamily::StepThresholds { levels: 5, bound: 1.0 });
    let m = sample_model(&cfg)?.observed_matrix();
    let spec = MonotoneTransformSpec { seed: 11, ..Default::default() };
    let t = random_monotone_transform(&m, &spec);
    for u in 0..3 {
        let (a, b) = spec.params(u);
        println!("user {u}: a={a} b={b}, ratings {:?} -> {:?}", &m.user_row(u).1[..4], &t.user_row(u).1[..4]);
    }
    for w in [VoteWeighting::Uniform, VoteWeighting::AgreementWeighted] {
        let rc = RankerConfig::new(4, 9).with_weighting(w);
        println!("{}: identical rankings = {}", w.label(), multi_rank(&m, &rc)? == multi_rank(&t, &rc)?);
    }
    Ok(())
}

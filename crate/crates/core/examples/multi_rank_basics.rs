//! Completing per-user rankings from a handful of observed ratings.

use multirank::matrix::SparseRatingMatrix;
use multirank::ranker::{multi_rank_with_stats, pairwise_rank, RankerConfig, VoteWeighting};

fn main() -> multirank::error::Result<()> {
    // Four items, three users. User 0 never rated item 3.
    let m = SparseRatingMatrix::from_triples(
        4,
        3,
        [
            (0, 0, 5.0),
            (1, 0, 3.0),
            (2, 0, 1.0),
            (0, 1, 4.0),
            (1, 1, 3.0),
            (3, 1, 5.0),
            (0, 2, 5.0),
            (2, 2, 2.0),
            (3, 2, 4.0),
        ],
    )?;
    let cfg = RankerConfig::new(2, 2).with_seed(1);

    let vote = pairwise_rank(&m, 0, 3, 1, &cfg)?;
    println!(
        "user 0, item 3 vs item 1: prefers 3 = {} (vote sum {}, coin = {})",
        vote.decision, vote.vote_sum, vote.was_coin_flip
    );

    for w in [VoteWeighting::Uniform, VoteWeighting::AgreementWeighted] {
        let (sigma, stats) = multi_rank_with_stats(&m, &cfg.with_weighting(w))?;
        println!("{}: {stats:?}", w.label());
        for u in 0..m.n_users() {
            println!("  user {u}: ranks {:?}", sigma.user(u));
        }
    }
    Ok(())
}

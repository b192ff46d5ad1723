//! Kendall tau, Spearman rho, NDCG@k and Precision@k for one user, then the
//! macro-averaged report over a held-out matrix.

use multirank::eval::{evaluate, kendall_tau, ndcg_at_k, precision_at_k, spearman_rho, MetricOptions};
use multirank::matrix::{RankingCollection, SparseRatingMatrix};

fn main() -> multirank::error::Result<()> {
    // Predicted ranks (larger = preferred) and held-out ratings on six items.
    let ranks = [6, 5, 4, 3, 2, 1];
    let truth: Vec<(usize, f64)> = vec![(0, 5.0), (1, 3.0), (2, 5.0), (3, 1.0), (4, 2.0), (5, 4.0)];
    println!("tau       {:.4}", kendall_tau(&ranks, &truth)?);
    println!("rho       {:.4}", spearman_rho(&ranks, &truth)?);
    println!("ndcg@5    {:.4}", ndcg_at_k(&ranks, &truth, 5)?);
    println!("prec@5    {:.4}", precision_at_k(&ranks, &truth, 5, 5.0)?);

    let held_out = SparseRatingMatrix::from_triples(6, 2, truth.iter().flat_map(|&(i, r)| [(i, 0, r), (i, 1, 6.0 - r)]))?;
    let sigma = RankingCollection::from_users(6, vec![ranks.to_vec(), ranks.to_vec()])?;
    let report = evaluate(&sigma, &held_out, &MetricOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&report.summary())?);
    Ok(())
}

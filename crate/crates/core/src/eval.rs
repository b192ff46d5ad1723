//! Ranking metrics, disagreement objectives and the ε-consistency checker.
//!
//! Metrics are computed per user over that user's held-out items and then
//! macro-averaged. Kendall tau skips pairs with tied true ratings; NDCG uses
//! the raw rating as a linear gain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::strict_discordant_pairs;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, RankingCollection, SparseRatingMatrix};

/// Kendall tau between a user's ranking and true ratings on a set of items:
/// `(concordant − discordant) / (concordant + discordant)` over item pairs
/// with distinct true ratings.
pub fn kendall_tau(ranks: &[u32], truth: &[(usize, f64)]) -> Result<f64> {
    let pred: Vec<f64> = truth.iter().map(|&(i, _)| ranks[i] as f64).collect();
    let ratings: Vec<f64> = truth.iter().map(|&(_, r)| r).collect();
    let n = ratings.len() as u64;
    let mut sorted = ratings.clone();
    sorted.sort_by(f64::total_cmp);
    let tied: u64 = sorted
        .chunk_by(|a, b| a == b)
        .map(|g| {
            let t = g.len() as u64;
            t * (t - 1) / 2
        })
        .sum();
    let total = n * n.saturating_sub(1) / 2 - tied;
    if total == 0 {
        return Err(Error::InsufficientPairs);
    }
    let discordant = strict_discordant_pairs(&pred, &ratings);
    let concordant = total - discordant;
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

/// Average ranks (1-based) with ties sharing their mean position.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    out
}

/// Spearman rho: Pearson correlation between the predicted ranks of the
/// truth items and the tie-averaged ranks of their true ratings.
pub fn spearman_rho(ranks: &[u32], truth: &[(usize, f64)]) -> Result<f64> {
    if truth.len() < 2 {
        return Err(Error::InsufficientPairs);
    }
    let pred = average_ranks(&truth.iter().map(|&(i, _)| ranks[i] as f64).collect::<Vec<_>>());
    let tr = average_ranks(&truth.iter().map(|&(_, r)| r).collect::<Vec<_>>());
    let n = pred.len() as f64;
    let (mp, mt) = (pred.iter().sum::<f64>() / n, tr.iter().sum::<f64>() / n);
    let (mut cov, mut vp, mut vt) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(&tr) {
        cov += (p - mp) * (t - mt);
        vp += (p - mp) * (p - mp);
        vt += (t - mt) * (t - mt);
    }
    if vt == 0.0 {
        return Err(Error::ConstantTruth);
    }
    Ok(cov / (vp * vt).sqrt())
}

/// Truth items sorted by predicted rank, best first.
fn predicted_order(ranks: &[u32], truth: &[(usize, f64)]) -> Vec<f64> {
    let mut items: Vec<(u32, f64)> = truth.iter().map(|&(i, r)| (ranks[i], r)).collect();
    items.sort_by_key(|&(r, _)| std::cmp::Reverse(r));
    items.into_iter().map(|(_, r)| r).collect()
}

fn dcg(gains: impl Iterator<Item = f64>) -> f64 {
    gains
        .enumerate()
        .map(|(pos, g)| g / ((pos + 2) as f64).log2())
        .sum()
}

/// NDCG over the top `k` predicted truth items, gain = rating.
pub fn ndcg_at_k(ranks: &[u32], truth: &[(usize, f64)], k: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InsufficientItems { needed: 1, available: 0 });
    }
    let actual = dcg(predicted_order(ranks, truth).into_iter().take(k));
    let mut ideal: Vec<f64> = truth.iter().map(|&(_, r)| r).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(ideal.into_iter().take(k));
    if best == 0.0 {
        return Ok(1.0);
    }
    Ok(actual / best)
}

/// Fraction of the top `k` predicted truth items with rating ≥ `threshold`.
pub fn precision_at_k(ranks: &[u32], truth: &[(usize, f64)], k: usize, threshold: f64) -> Result<f64> {
    if truth.len() < k || k == 0 {
        return Err(Error::InsufficientItems {
            needed: k.max(1),
            available: truth.len(),
        });
    }
    let hits = predicted_order(ranks, truth)
        .into_iter()
        .take(k)
        .filter(|&r| r >= threshold)
        .count();
    Ok(hits as f64 / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub k: usize,
    pub relevance_threshold: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            k: 5,
            relevance_threshold: 5.0,
        }
    }
}

/// Per-user values of one metric with their mean and (population) standard
/// deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub per_user: Vec<(usize, f64)>,
    pub mean: f64,
    pub std: f64,
}

impl MetricValues {
    fn from_values(per_user: Vec<(usize, f64)>) -> Self {
        let (mean, std) = mean_std(per_user.iter().map(|&(_, v)| v));
        Self { per_user, mean, std }
    }
}

/// Mean and population standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub k: usize,
    pub relevance_threshold: f64,
    /// Always `"linear"`: the gain is the rating itself.
    pub ndcg_gain: String,
    /// Users with at least one truth item.
    pub users_evaluated: usize,
    pub kendall_tau: MetricValues,
    pub spearman_rho: MetricValues,
    pub ndcg_at_k: MetricValues,
    pub precision_at_k: MetricValues,
}

/// Mean/std only, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub users_evaluated: usize,
    pub kendall_tau: [f64; 2],
    pub spearman_rho: [f64; 2],
    pub ndcg_at_k: [f64; 2],
    pub precision_at_k: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    KendallTau,
    SpearmanRho,
    NdcgAtK,
    PrecisionAtK,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::KendallTau,
        Metric::SpearmanRho,
        Metric::NdcgAtK,
        Metric::PrecisionAtK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::KendallTau => "kendall_tau",
            Metric::SpearmanRho => "spearman_rho",
            Metric::NdcgAtK => "ndcg_at_k",
            Metric::PrecisionAtK => "precision_at_k",
        }
    }
}

impl MetricReport {
    pub fn values(&self, metric: Metric) -> &MetricValues {
        match metric {
            Metric::KendallTau => &self.kendall_tau,
            Metric::SpearmanRho => &self.spearman_rho,
            Metric::NdcgAtK => &self.ndcg_at_k,
            Metric::PrecisionAtK => &self.precision_at_k,
        }
    }

    pub fn summary(&self) -> MetricSummary {
        let ms = |v: &MetricValues| [v.mean, v.std];
        MetricSummary {
            users_evaluated: self.users_evaluated,
            kendall_tau: ms(&self.kendall_tau),
            spearman_rho: ms(&self.spearman_rho),
            ndcg_at_k: ms(&self.ndcg_at_k),
            precision_at_k: ms(&self.precision_at_k),
        }
    }
}

impl MetricSummary {
    pub fn get(&self, metric: Metric) -> [f64; 2] {
        match metric {
            Metric::KendallTau => self.kendall_tau,
            Metric::SpearmanRho => self.spearman_rho,
            Metric::NdcgAtK => self.ndcg_at_k,
            Metric::PrecisionAtK => self.precision_at_k,
        }
    }
}

/// Evaluates every user that has held-out ratings in `truth`. Users are
/// dropped from a metric they cannot support (no distinct pair for tau,
/// constant truth for rho, fewer than `k` items for precision).
pub fn evaluate(rankings: &RankingCollection, truth: &SparseRatingMatrix, opts: &MetricOptions) -> Result<MetricReport> {
    if rankings.n_items() != truth.n_items() || rankings.n_users() != truth.n_users() {
        return Err(Error::ShapeMismatch(format!(
            "rankings are {}x{}, truth is {}x{}",
            rankings.n_items(),
            rankings.n_users(),
            truth.n_items(),
            truth.n_users()
        )));
    }
    let per_user: Vec<(usize, [Option<f64>; 4])> = (0..truth.n_users())
        .into_par_iter()
        .filter_map(|u| {
            let (items, ratings) = truth.user_row(u);
            if items.is_empty() {
                return None;
            }
            let t: Vec<(usize, f64)> = items.iter().copied().zip(ratings.iter().copied()).collect();
            let r = rankings.user(u);
            Some((
                u,
                [
                    kendall_tau(r, &t).ok(),
                    spearman_rho(r, &t).ok(),
                    ndcg_at_k(r, &t, opts.k).ok(),
                    precision_at_k(r, &t, opts.k, opts.relevance_threshold).ok(),
                ],
            ))
        })
        .collect();
    let column = |m: usize| {
        MetricValues::from_values(per_user.iter().filter_map(|(u, v)| v[m].map(|x| (*u, x))).collect())
    };
    Ok(MetricReport {
        k: opts.k,
        relevance_threshold: opts.relevance_threshold,
        ndcg_gain: "linear".into(),
        users_evaluated: per_user.len(),
        kendall_tau: column(0),
        spearman_rho: column(1),
        ndcg_at_k: column(2),
        precision_at_k: column(3),
    })
}

fn check_dense(sigma: &RankingCollection, m: &DenseMatrix, what: &str) -> Result<()> {
    if sigma.n_items() != m.n_items() || sigma.n_users() != m.n_users() {
        return Err(Error::ShapeMismatch(format!(
            "{what} is {}x{}, rankings are {}x{}",
            m.n_items(),
            m.n_users(),
            sigma.n_items(),
            sigma.n_users()
        )));
    }
    Ok(())
}

/// Disagreements between `σ` and the full ratings on item pairs whose
/// utilities differ by more than `eps`.
pub fn dis_eps(sigma: &RankingCollection, utilities: &DenseMatrix, ratings: &DenseMatrix, eps: f64) -> Result<u64> {
    check_dense(sigma, utilities, "F")?;
    check_dense(sigma, ratings, "H")?;
    Ok((0..sigma.n_users())
        .into_par_iter()
        .map(|u| user_dis_eps(sigma.user(u), utilities.column(u), ratings.column(u), eps))
        .sum())
}

/// `dis_eps` restricted to one user.
pub fn user_dis_eps(ranks: &[u32], f: &[f64], h: &[f64], eps: f64) -> u64 {
    let n = ranks.len();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if (f[i] - f[j]).abs() > eps && (h[i] - h[j]) * (ranks[i] as f64 - ranks[j] as f64) < 0.0 {
                count += 1;
            }
        }
    }
    count
}

/// Disagreements between `σ` and the observed rating pairs.
pub fn dis_hat(sigma: &RankingCollection, m: &SparseRatingMatrix) -> Result<u64> {
    if sigma.n_items() != m.n_items() || sigma.n_users() != m.n_users() {
        return Err(Error::ShapeMismatch("rankings and ratings differ in shape".into()));
    }
    Ok((0..m.n_users())
        .into_par_iter()
        .map(|u| {
            let (items, ratings) = m.user_row(u);
            let pred: Vec<f64> = items.iter().map(|&i| sigma.rank(i, u) as f64).collect();
            strict_discordant_pairs(ratings, &pred)
        })
        .sum())
}

/// A pair of items ordered differently for two nearby users; `i < j`, `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub u: usize,
    pub v: usize,
}

/// All `(i, j, u, v)` where users within `eps` of each other order items `i`
/// and `j` differently. Empty iff `σ` is `eps`-consistent.
pub fn eps_consistency_violations(sigma: &RankingCollection, user_features: &[Vec<f64>], eps: f64) -> Result<Vec<Violation>> {
    eps_consistency_violations_over(sigma, user_features, eps, |_, _, _| true)
}

/// As [`eps_consistency_violations`], restricted to a triple set `T`: a
/// quadruple counts only if both `(i, j, u)` and `(i, j, v)` are in `T`.
pub fn eps_consistency_violations_over<T>(
    sigma: &RankingCollection,
    user_features: &[Vec<f64>],
    eps: f64,
    in_t: T,
) -> Result<Vec<Violation>>
where
    T: Fn(usize, usize, usize) -> bool + Sync,
{
    if user_features.len() != sigma.n_users() {
        return Err(Error::ShapeMismatch(format!(
            "{} user features for {} rankings",
            user_features.len(),
            sigma.n_users()
        )));
    }
    let n_users = sigma.n_users();
    let n = sigma.n_items();
    let nested: Vec<Vec<Violation>> = (0..n_users)
        .into_par_iter()
        .map(|u| {
            let mut out = Vec::new();
            for v in u + 1..n_users {
                if crate::synthgen::euclidean(&user_features[u], &user_features[v]) > eps {
                    continue;
                }
                let (su, sv) = (sigma.user(u), sigma.user(v));
                for i in 0..n {
                    for j in i + 1..n {
                        if (su[i] < su[j]) != (sv[i] < sv[j]) && in_t(i, j, u) && in_t(i, j, v) {
                            out.push(Violation { i, j, u, v });
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(nested.into_iter().flatten().collect())
}

/// Membership in `{(i, j, u) : |F_iu − F_ju| > eps, H_iu ≠ H_ju}`.
pub fn separated_distinct<'a>(
    utilities: &'a DenseMatrix,
    ratings: &'a DenseMatrix,
    eps: f64,
) -> impl Fn(usize, usize, usize) -> bool + Sync + 'a {
    move |i, j, u| {
        (utilities.get(i, u) - utilities.get(j, u)).abs() > eps && ratings.get(i, u) != ratings.get(j, u)
    }
}

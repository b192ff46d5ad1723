//! Pairwise-Rank, Copeland aggregation and Multi-Rank.
//!
//! Multi-Rank fills a per-user tournament `A`: pairs the user rated with
//! distinct values are copied from the data, every other pair is decided by
//! a vote among the `k` most agreeing neighbours that rated both items. Each
//! tournament is then turned into a ranking by Copeland score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{agreement_row, agreement_stat, neighbor_set, AgreementMode};
use crate::error::{Error, Result};
use crate::matrix::{PreferenceMatrix, RankingCollection, SparseRatingMatrix};
use crate::rng::keyed_coin;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteWeighting {
    /// Plain majority (MR).
    #[default]
    Uniform,
    /// Votes weighted by `R_{u,v}` (MRW).
    AgreementWeighted,
}

impl VoteWeighting {
    pub fn label(self) -> &'static str {
        match self {
            VoteWeighting::Uniform => "MR",
            VoteWeighting::AgreementWeighted => "MRW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    /// Minimum number of co-rated items for a neighbour, at least 2.
    pub beta: usize,
    /// Number of voting neighbours, at least 1.
    pub k: usize,
    #[serde(default)]
    pub vote_weighting: VoteWeighting,
    #[serde(default)]
    pub agreement_mode: AgreementMode,
    #[serde(default)]
    pub seed: u64,
}

impl RankerConfig {
    pub fn new(beta: usize, k: usize) -> Self {
        Self {
            beta,
            k,
            vote_weighting: VoteWeighting::Uniform,
            agreement_mode: AgreementMode::AllPairs,
            seed: 0,
        }
    }

    pub fn with_weighting(mut self, w: VoteWeighting) -> Self {
        self.vote_weighting = w;
        self
    }

    pub fn with_mode(mut self, mode: AgreementMode) -> Self {
        self.agreement_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Continuous-ratings preset: `k = 1`, `β = ⌈p̂² n₁ / 2⌉` with the
    /// plug-in density `p̂ = |Ω| / (n₁ n₂)`.
    pub fn continuous_preset(m: &SparseRatingMatrix) -> Self {
        Self::new(density_beta(m), 1)
    }

    /// Discrete-ratings preset: `k = ⌈n₂^0.3⌉` and the same `β`.
    pub fn discrete_preset(m: &SparseRatingMatrix) -> Self {
        let k = (m.n_users() as f64).powf(0.3).ceil() as usize;
        Self::new(density_beta(m), k.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta < 2 {
            return Err(Error::InvalidConfig(format!("beta must be >= 2, got {}", self.beta)));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// `max(2, ⌈p̂² n₁ / 2⌉)`.
pub fn density_beta(m: &SparseRatingMatrix) -> usize {
    let p = m.density();
    let beta = (p * p * m.n_items() as f64 / 2.0).ceil();
    (beta as usize).max(2)
}

/// Result of one Pairwise-Rank call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteOutcome {
    /// `true` when item `i` is predicted preferred to item `j`.
    pub decision: bool,
    pub was_coin_flip: bool,
    pub vote_sum: f64,
}

impl VoteOutcome {
    fn decide(vote_sum: f64, voters: usize, seed: u64, u: usize, i: usize, j: usize) -> Self {
        if voters == 0 || vote_sum == 0.0 {
            Self {
                decision: keyed_coin(seed, u, i, j),
                was_coin_flip: true,
                vote_sum,
            }
        } else {
            Self {
                decision: vote_sum > 0.0,
                was_coin_flip: false,
                vote_sum,
            }
        }
    }
}

#[inline]
fn vote(ri: f64, rj: f64) -> f64 {
    if ri > rj {
        1.0
    } else if ri < rj {
        -1.0
    } else {
        0.0
    }
}

/// Predicts whether user `u` prefers item `i` to item `j` from the `k`
/// neighbours in `W_u^{i,j}(β)` with the highest `R_{u,v}` (ties by lower
/// user index). Empty neighbourhoods and tied votes fall to a coin keyed by
/// `(seed, u, i, j)`.
pub fn pairwise_rank(
    m: &SparseRatingMatrix,
    u: usize,
    i: usize,
    j: usize,
    cfg: &RankerConfig,
) -> Result<VoteOutcome> {
    cfg.validate()?;
    let w = neighbor_set(m, u, i, j, cfg.beta)?;
    let mut scored = Vec::with_capacity(w.len());
    for v in w {
        scored.push((agreement_stat(m, u, v, cfg.agreement_mode)?.value, v));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(cfg.k);
    let mut sum = 0.0;
    for &(r, v) in &scored {
        let p = vote(m.rating(i, v).unwrap_or_default(), m.rating(j, v).unwrap_or_default());
        sum += match cfg.vote_weighting {
            VoteWeighting::Uniform => p,
            VoteWeighting::AgreementWeighted => r * p,
        };
    }
    Ok(VoteOutcome::decide(sum, scored.len(), cfg.seed, u, i, j))
}

/// Copeland aggregation: item `j` scores the number of items it beats; rank
/// values follow descending score with ties going to the lower index.
pub fn copeland(a: &PreferenceMatrix) -> Result<Vec<u32>> {
    if let Some((i, j)) = a.antisymmetry_violation() {
        return Err(Error::MalformedPreferenceMatrix { i, j });
    }
    Ok(copeland_unchecked(a))
}

fn copeland_unchecked(a: &PreferenceMatrix) -> Vec<u32> {
    let n = a.n_items();
    let scores: Vec<u32> = (0..n)
        .map(|j| (0..n).filter(|&i| i != j && a.get(j, i)).count() as u32)
        .collect();
    crate::matrix::ranks_from_scores(&scores)
}

/// Counters collected while running Multi-Rank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRankStats {
    /// Pairs copied from distinct observed ratings.
    pub observed_pairs: u64,
    /// Pairs decided by a neighbour vote.
    pub voted_pairs: u64,
    /// Pairs decided by a coin (no neighbours or a tied vote).
    pub coin_flips: u64,
}

impl std::ops::AddAssign for MultiRankStats {
    fn add_assign(&mut self, o: Self) {
        self.observed_pairs += o.observed_pairs;
        self.voted_pairs += o.voted_pairs;
        self.coin_flips += o.coin_flips;
    }
}

/// Runs Multi-Rank over every user.
pub fn multi_rank(m: &SparseRatingMatrix, cfg: &RankerConfig) -> Result<RankingCollection> {
    multi_rank_with_stats(m, cfg).map(|(r, _)| r)
}

pub fn multi_rank_with_stats(
    m: &SparseRatingMatrix,
    cfg: &RankerConfig,
) -> Result<(RankingCollection, MultiRankStats)> {
    cfg.validate()?;
    let per_user: Vec<(Vec<u32>, MultiRankStats)> = (0..m.n_users())
        .into_par_iter()
        .map(|u| {
            let (a, stats) = user_preferences(m, u, cfg);
            (copeland_unchecked(&a), stats)
        })
        .collect();
    let mut total = MultiRankStats::default();
    let mut rankings = Vec::with_capacity(per_user.len());
    for (r, s) in per_user {
        total += s;
        rankings.push(r);
    }
    Ok((RankingCollection::from_users(m.n_items(), rankings)?, total))
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Builds `A_{u,:,:}`.
///
/// Equivalent to calling [`pairwise_rank`] on every pair the user did not
/// rate distinctly, but organised around the neighbours: candidates are
/// visited once in decreasing `R_{u,v}` order and hand their vote to every
/// still-open pair among the items they rated, until each pair has `k`
/// votes or the candidates run out.
pub fn user_preferences(
    m: &SparseRatingMatrix,
    u: usize,
    cfg: &RankerConfig,
) -> (PreferenceMatrix, MultiRankStats) {
    let n = m.n_items();
    let mut a = PreferenceMatrix::new(n);
    let mut stats = MultiRankStats::default();
    let n_pairs = n * n.saturating_sub(1) / 2;
    // Votes still wanted per pair; zero once closed.
    let mut open = vec![cfg.k as u32; n_pairs];
    let mut sums = vec![0.0f64; n_pairs];
    let mut voters = vec![0u32; n_pairs];
    let mut remaining = n_pairs;

    let (items_u, ratings_u) = m.user_row(u);
    for x in 0..items_u.len() {
        for y in x + 1..items_u.len() {
            let (ri, rj) = (ratings_u[x], ratings_u[y]);
            if ri != rj {
                let (i, j) = (items_u[x], items_u[y]);
                a.set_pair(i, j, ri > rj);
                open[pair_index(n, i, j)] = 0;
                remaining -= 1;
                stats.observed_pairs += 1;
            }
        }
    }
    let observed: Vec<bool> = open.iter().map(|&o| o == 0).collect();

    if remaining > 0 {
        let row = agreement_row(m, u, cfg.agreement_mode);
        let mut candidates: Vec<(f64, usize)> = row
            .iter()
            .enumerate()
            .filter(|&(v, e)| v != u && e.common >= cfg.beta)
            .map(|(v, e)| (e.stat.value, v))
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(r, v) in &candidates {
            if remaining == 0 {
                break;
            }
            let weight = match cfg.vote_weighting {
                VoteWeighting::Uniform => 1.0,
                VoteWeighting::AgreementWeighted => r,
            };
            let (items_v, ratings_v) = m.user_row(v);
            for x in 0..items_v.len() {
                let i = items_v[x];
                let base = i * (2 * n - i - 1) / 2;
                for y in x + 1..items_v.len() {
                    let idx = base + (items_v[y] - i - 1);
                    if open[idx] == 0 {
                        continue;
                    }
                    sums[idx] += weight * vote(ratings_v[x], ratings_v[y]);
                    voters[idx] += 1;
                    open[idx] -= 1;
                    if open[idx] == 0 {
                        remaining -= 1;
                    }
                }
            }
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            let idx = pair_index(n, i, j);
            if observed[idx] {
                continue;
            }
            let outcome = VoteOutcome::decide(sums[idx], voters[idx] as usize, cfg.seed, u, i, j);
            if outcome.was_coin_flip {
                stats.coin_flips += 1;
            } else {
                stats.voted_pairs += 1;
            }
            a.set_pair(i, j, outcome.decision);
        }
    }
    (a, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n_items: usize, n_users: usize, t: &[(usize, usize, f64)]) -> SparseRatingMatrix {
        SparseRatingMatrix::from_triples(n_items, n_users, t.iter().copied()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(RankerConfig::new(1, 1).validate().is_err());
        assert!(RankerConfig::new(2, 0).validate().is_err());
        assert!(RankerConfig::new(2, 1).validate().is_ok());
    }

    #[test]
    fn presets_use_plug_in_density() {
        // 10 items, 10 users, half observed: p̂² n₁ / 2 = 1.25 -> clamped to 2.
        let t: Vec<_> = (0..10)
            .flat_map(|u| (0..10).filter(move |i| (i + u) % 2 == 0).map(move |i| (i, u, 1.0)))
            .collect();
        let mm = m(10, 10, &t);
        assert_eq!(RankerConfig::continuous_preset(&mm).beta, 2);
        assert_eq!(RankerConfig::continuous_preset(&mm).k, 1);
        assert_eq!(RankerConfig::discrete_preset(&mm).k, 2); // ⌈10^0.3⌉ = ⌈1.995⌉
        let full: Vec<_> = (0..100).map(|i| (i, 0, i as f64)).collect();
        assert_eq!(density_beta(&m(100, 1, &full)), 50);
    }

    #[test]
    fn empty_neighbourhood_is_deterministic_coin() {
        let mm = m(3, 2, &[(0, 0, 1.0)]);
        let cfg = RankerConfig::new(2, 1).with_seed(11);
        let a = pairwise_rank(&mm, 0, 1, 2, &cfg).unwrap();
        let b = pairwise_rank(&mm, 0, 1, 2, &cfg).unwrap();
        assert!(a.was_coin_flip);
        assert_eq!(a, b);
        assert_eq!(a.decision, keyed_coin(11, 0, 1, 2));
    }

    /// User 0 rated items 2,3; neighbours rated items 0,1 plus 2,3.
    fn voters(votes: &[(f64, f64)]) -> SparseRatingMatrix {
        let mut t = vec![(2, 0, 1.0), (3, 0, 2.0)];
        for (k, &(ri, rj)) in votes.iter().enumerate() {
            let v = k + 1;
            t.extend([(0, v, ri), (1, v, rj), (2, v, 1.0), (3, v, 2.0)]);
        }
        m(4, votes.len() + 1, &t)
    }

    #[test]
    fn single_voter() {
        let mm = voters(&[(5.0, 3.0)]);
        let o = pairwise_rank(&mm, 0, 0, 1, &RankerConfig::new(2, 1)).unwrap();
        assert_eq!((o.decision, o.was_coin_flip, o.vote_sum), (true, false, 1.0));
    }

    #[test]
    fn majority_of_three() {
        let mm = voters(&[(5.0, 3.0), (1.0, 3.0), (4.0, 2.0)]);
        let o = pairwise_rank(&mm, 0, 0, 1, &RankerConfig::new(2, 3)).unwrap();
        assert_eq!((o.decision, o.was_coin_flip, o.vote_sum), (true, false, 1.0));
    }

    #[test]
    fn tied_vote_flips_coin() {
        let mm = voters(&[(5.0, 3.0), (1.0, 3.0)]);
        let cfg = RankerConfig::new(2, 2).with_seed(5);
        let o = pairwise_rank(&mm, 0, 0, 1, &cfg).unwrap();
        assert!(o.was_coin_flip);
        assert_eq!(o.vote_sum, 0.0);
        assert_eq!(o.decision, keyed_coin(5, 0, 0, 1));
    }

    #[test]
    fn fewer_neighbours_than_k_all_vote() {
        let mm = voters(&[(5.0, 3.0), (4.0, 3.0)]);
        let o = pairwise_rank(&mm, 0, 0, 1, &RankerConfig::new(2, 10)).unwrap();
        assert_eq!(o.vote_sum, 2.0);
    }

    #[test]
    fn same_item_rejected() {
        let mm = voters(&[(5.0, 3.0)]);
        assert!(matches!(
            pairwise_rank(&mm, 0, 1, 1, &RankerConfig::new(2, 1)),
            Err(Error::SameItem)
        ));
    }

    #[test]
    fn highest_agreement_neighbour_is_used() {
        // User 0 ranks 2 > 3 > 4 (by rating). Neighbour 1 agrees fully, neighbour 2
        // is reversed; both rated 0 and 1 in opposite directions.
        let t = [
            (2, 0, 3.0),
            (3, 0, 2.0),
            (4, 0, 1.0),
            (0, 1, 1.0),
            (1, 1, 2.0),
            (2, 1, 3.0),
            (3, 1, 2.0),
            (4, 1, 1.0),
            (0, 2, 2.0),
            (1, 2, 1.0),
            (2, 2, 1.0),
            (3, 2, 2.0),
            (4, 2, 3.0),
        ];
        let mm = m(5, 3, &t);
        let o = pairwise_rank(&mm, 0, 0, 1, &RankerConfig::new(2, 1)).unwrap();
        assert!(!o.decision);
    }

    #[test]
    fn copeland_transitive() {
        // a beats b and c, b beats c.
        let a = PreferenceMatrix::from_rows(&[
            vec![false, true, true],
            vec![false, false, true],
            vec![false, false, false],
        ])
        .unwrap();
        assert_eq!(copeland(&a).unwrap(), vec![3, 2, 1]);
    }

    #[test]
    fn copeland_cycle_tie_break() {
        let a = PreferenceMatrix::from_rows(&[
            vec![false, true, false],
            vec![false, false, true],
            vec![true, false, false],
        ])
        .unwrap();
        assert_eq!(copeland(&a).unwrap(), vec![3, 2, 1]);
    }

    #[test]
    fn copeland_single_item() {
        assert_eq!(copeland(&PreferenceMatrix::new(1)).unwrap(), vec![1]);
    }

    #[test]
    fn copeland_rejects_non_antisymmetric() {
        let a = PreferenceMatrix::from_rows(&[vec![false, true], vec![true, false]]).unwrap();
        assert!(matches!(copeland(&a), Err(Error::MalformedPreferenceMatrix { i: 0, j: 1 })));
    }

    #[test]
    fn fully_observed_sorts_columns() {
        let t = [
            (0, 0, 3.0),
            (1, 0, 1.0),
            (2, 0, 2.0),
            (0, 1, 1.0),
            (1, 1, 2.0),
            (2, 1, 3.0),
        ];
        let (r, stats) = multi_rank_with_stats(&m(3, 2, &t), &RankerConfig::new(2, 1)).unwrap();
        assert_eq!(r.user(0), &[3, 1, 2]);
        assert_eq!(r.user(1), &[1, 2, 3]);
        assert_eq!(stats.voted_pairs + stats.coin_flips, 0);
    }

    #[test]
    fn hand_traced_completion() {
        let mut t = vec![];
        for u in 0..2 {
            for (i, r) in [4.0, 3.0, 2.0, 1.0].into_iter().enumerate() {
                t.push((i, u, r));
            }
        }
        t.extend([(0, 2, 4.0), (1, 2, 3.0), (2, 2, 2.0)]);
        let mm = m(4, 3, &t);
        let cfg = RankerConfig::new(2, 1);
        for i in 0..3 {
            let o = pairwise_rank(&mm, 2, i, 3, &cfg).unwrap();
            assert!(o.decision && !o.was_coin_flip);
        }
        let r = multi_rank(&mm, &cfg).unwrap();
        assert_eq!(r.user(2), &[4, 3, 2, 1]);
    }

    #[test]
    fn equal_observed_ratings_use_vote() {
        // User 0 rated items 0 and 1 equally; neighbour says 1 > 0.
        let t = [(0, 0, 2.0), (1, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)];
        let mm = m(2, 2, &t);
        let (r, stats) = multi_rank_with_stats(&mm, &RankerConfig::new(2, 1)).unwrap();
        assert_eq!(r.user(0), &[1, 2]);
        assert_eq!(stats.observed_pairs, 1); // user 1's pair
        assert_eq!(stats.voted_pairs, 1);
    }
}

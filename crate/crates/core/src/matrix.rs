//! Shared data types: observed ratings, per-user preference tables and
//! collections of rankings.
//!
//! Items and users are dense zero-based indices. All types are immutable once
//! built and can be shared freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed rating: `(item, user, rating)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub item: usize,
    pub user: usize,
    pub rating: f64,
}

impl From<(usize, usize, f64)> for Entry {
    fn from((item, user, rating): (usize, usize, f64)) -> Self {
        Entry { item, user, rating }
    }
}

/// The observed part of a ratings matrix.
///
/// Stored column-wise: for each user the rated items in strictly increasing
/// order alongside their ratings, so `N(u)` is a slice lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixRepr", try_from = "MatrixRepr")]
pub struct SparseRatingMatrix {
    n_items: usize,
    n_users: usize,
    offsets: Vec<usize>,
    items: Vec<usize>,
    ratings: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n_items: usize,
    n_users: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl From<SparseRatingMatrix> for MatrixRepr {
    fn from(m: SparseRatingMatrix) -> Self {
        MatrixRepr {
            n_items: m.n_items,
            n_users: m.n_users,
            entries: m.entries().map(|e| (e.item, e.user, e.rating)).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for SparseRatingMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        SparseRatingMatrix::from_triples(r.n_items, r.n_users, r.entries)
    }
}

impl SparseRatingMatrix {
    /// Builds a matrix from `(item, user, rating)` triples. Duplicate keys
    /// and out-of-range indices are rejected.
    pub fn from_triples<I, E>(n_items: usize, n_users: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Entry>,
    {
        if n_items == 0 {
            return Err(Error::InvalidConfig("n_items must be positive".into()));
        }
        if n_users == 0 {
            return Err(Error::InvalidConfig("n_users must be positive".into()));
        }
        let mut entries: Vec<Entry> = triples.into_iter().map(Into::into).collect();
        for e in &entries {
            if e.item >= n_items {
                return Err(Error::IndexOutOfRange {
                    what: "item",
                    index: e.item,
                    size: n_items,
                });
            }
            if e.user >= n_users {
                return Err(Error::IndexOutOfRange {
                    what: "user",
                    index: e.user,
                    size: n_users,
                });
            }
        }
        entries.sort_by_key(|e| (e.user, e.item));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].user == w[1].user && w[0].item == w[1].item)
        {
            return Err(Error::DuplicateEntry {
                item: w[0].item,
                user: w[0].user,
            });
        }
        let mut offsets = vec![0usize; n_users + 1];
        for e in &entries {
            offsets[e.user + 1] += 1;
        }
        for u in 0..n_users {
            offsets[u + 1] += offsets[u];
        }
        Ok(Self {
            n_items,
            n_users,
            offsets,
            items: entries.iter().map(|e| e.item).collect(),
            ratings: entries.iter().map(|e| e.rating).collect(),
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Number of observed entries `|Ω|`.
    pub fn nnz(&self) -> usize {
        self.items.len()
    }

    /// Observed fraction `|Ω| / (n₁ n₂)`.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.n_items as f64 * self.n_users as f64)
    }

    /// `N(u)`: items rated by `u`, ascending.
    pub fn rated_items(&self, user: usize) -> Result<&[usize]> {
        self.check_user(user)?;
        Ok(self.user_row(user).0)
    }

    /// Rated items and their ratings for `user`. Panics if out of range.
    #[inline]
    pub fn user_row(&self, user: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[user], self.offsets[user + 1]);
        (&self.items[lo..hi], &self.ratings[lo..hi])
    }

    pub fn rating(&self, item: usize, user: usize) -> Option<f64> {
        if user >= self.n_users {
            return None;
        }
        let (items, ratings) = self.user_row(user);
        items.binary_search(&item).ok().map(|k| ratings[k])
    }

    /// All entries, ordered by user then item.
    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        (0..self.n_users).flat_map(move |user| {
            let (items, ratings) = self.user_row(user);
            items
                .iter()
                .zip(ratings)
                .map(move |(&item, &rating)| Entry { item, user, rating })
        })
    }

    /// Applies `f(user, rating)` to every observed value.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for user in 0..self.n_users {
            for k in self.offsets[user]..self.offsets[user + 1] {
                out.ratings[k] = f(user, self.ratings[k]);
            }
        }
        out
    }

    pub(crate) fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.n_users {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                size: self.n_users,
            });
        }
        Ok(())
    }

    pub(crate) fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.n_items {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: item,
                size: self.n_items,
            });
        }
        Ok(())
    }
}

/// Dense `n_items × n_users` table of reals, stored user-major so that a
/// user's column is contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_items: usize,
    n_users: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_fn(n_items: usize, n_users: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_items * n_users);
        for u in 0..n_users {
            for i in 0..n_items {
                values.push(f(i, u));
            }
        }
        Self {
            n_items,
            n_users,
            values,
        }
    }

    /// Builds from columns, one `Vec` of item values per user.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_users = columns.len();
        let n_items = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_items) {
            return Err(Error::ShapeMismatch("ragged columns".into()));
        }
        Ok(Self {
            n_items,
            n_users,
            values: columns.into_iter().flatten().collect(),
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    #[inline]
    pub fn get(&self, item: usize, user: usize) -> f64 {
        self.values[user * self.n_items + item]
    }

    #[inline]
    pub fn column(&self, user: usize) -> &[f64] {
        &self.values[user * self.n_items..(user + 1) * self.n_items]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-user pairwise preference table `A`. `A[i][j] = true` means item `i`
/// is preferred to item `j`. The diagonal is ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceMatrix {
    n_items: usize,
    bits: Vec<u64>,
}

impl PreferenceMatrix {
    /// An all-zero table. Not antisymmetric until populated.
    pub fn new(n_items: usize) -> Self {
        Self {
            n_items,
            bits: vec![0; (n_items * n_items).div_ceil(64)],
        }
    }

    /// Raw construction from a row-major boolean table.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("preference table must be square".into()));
        }
        let mut a = Self::new(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                a.set_raw(i, j, b);
            }
        }
        Ok(a)
    }

    /// Encodes a ranking (larger value = preferred) as a tournament.
    pub fn from_ranking(ranks: &[u32]) -> Self {
        let n = ranks.len();
        let mut a = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                a.set_pair(i, j, ranks[i] > ranks[j]);
            }
        }
        a
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let k = i * self.n_items + j;
        self.bits[k >> 6] >> (k & 63) & 1 == 1
    }

    #[inline]
    fn set_raw(&mut self, i: usize, j: usize, value: bool) {
        let k = i * self.n_items + j;
        if value {
            self.bits[k >> 6] |= 1 << (k & 63);
        } else {
            self.bits[k >> 6] &= !(1 << (k & 63));
        }
    }

    /// Sets `A[i][j] = i_preferred` and `A[j][i] = !i_preferred`.
    #[inline]
    pub fn set_pair(&mut self, i: usize, j: usize, i_preferred: bool) {
        self.set_raw(i, j, i_preferred);
        self.set_raw(j, i, !i_preferred);
    }

    /// First off-diagonal pair violating `A[i][j] + A[j][i] = 1`, if any.
    pub fn antisymmetry_violation(&self) -> Option<(usize, usize)> {
        (0..self.n_items)
            .flat_map(|i| (i + 1..self.n_items).map(move |j| (i, j)))
            .find(|&(i, j)| self.get(i, j) == self.get(j, i))
    }
}

/// One ranking per user. `rank(item, user)` lies in `1..=n_items`; a larger
/// value means the user prefers the item more.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RankingRepr", into = "RankingRepr")]
pub struct RankingCollection {
    n_items: usize,
    n_users: usize,
    ranks: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RankingRepr {
    n_items: usize,
    n_users: usize,
    rankings: Vec<Vec<u32>>,
}

impl From<RankingCollection> for RankingRepr {
    fn from(r: RankingCollection) -> Self {
        RankingRepr {
            n_items: r.n_items,
            n_users: r.n_users,
            rankings: (0..r.n_users).map(|u| r.user(u).to_vec()).collect(),
        }
    }
}

impl TryFrom<RankingRepr> for RankingCollection {
    type Error = Error;

    fn try_from(r: RankingRepr) -> Result<Self> {
        if r.rankings.len() != r.n_users {
            return Err(Error::ShapeMismatch(format!(
                "{} rankings for {} users",
                r.rankings.len(),
                r.n_users
            )));
        }
        RankingCollection::from_users(r.n_items, r.rankings)
    }
}

impl RankingCollection {
    /// Validates that each per-user array is a permutation of `1..=n_items`.
    pub fn from_users(n_items: usize, rankings: Vec<Vec<u32>>) -> Result<Self> {
        let n_users = rankings.len();
        let mut seen = vec![false; n_items + 1];
        for (user, r) in rankings.iter().enumerate() {
            if r.len() != n_items {
                return Err(Error::NotAPermutation { user, n_items });
            }
            seen.iter_mut().for_each(|s| *s = false);
            for &v in r {
                let v = v as usize;
                if v == 0 || v > n_items || seen[v] {
                    return Err(Error::NotAPermutation { user, n_items });
                }
                seen[v] = true;
            }
        }
        Ok(Self {
            n_items,
            n_users,
            ranks: rankings.into_iter().flatten().collect(),
        })
    }

    /// Ranks every user's items by the given scores, highest score first
    /// receiving rank `n_items`. Ties go to the lower item index.
    pub fn from_scores(scores: &DenseMatrix) -> Self {
        let rankings = (0..scores.n_users())
            .map(|u| ranks_from_scores(scores.column(u)))
            .collect();
        Self::from_users(scores.n_items(), rankings).expect("ranks_from_scores yields permutations")
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    #[inline]
    pub fn rank(&self, item: usize, user: usize) -> u32 {
        self.ranks[user * self.n_items + item]
    }

    #[inline]
    pub fn user(&self, user: usize) -> &[u32] {
        &self.ranks[user * self.n_items..(user + 1) * self.n_items]
    }
}

/// Rank values for one user from real scores: descending score, ties broken
/// by ascending index, the top item receiving `n`.
pub fn ranks_from_scores<T: PartialOrd + Copy>(scores: &[T]) -> Vec<u32> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0u32; n];
    for (pos, &item) in order.iter().enumerate() {
        ranks[item] = (n - pos) as u32;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_matrix() {
        let m = SparseRatingMatrix::from_triples(2, 2, Vec::<Entry>::new()).unwrap();
        assert_eq!(m.nnz(), 0);
        assert!(m.rated_items(0).unwrap().is_empty());
        assert!(m.rated_items(1).unwrap().is_empty());
    }

    #[test]
    fn direct_construction() {
        let m = SparseRatingMatrix::from_triples(2, 2, [(0, 0, 5.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(m.rated_items(0).unwrap(), &[0, 1]);
        assert!(m.rated_items(1).unwrap().is_empty());
        assert_eq!(m.rating(1, 0), Some(3.0));
        assert_eq!(m.rating(1, 1), None);
    }

    #[test]
    fn duplicate_rejected() {
        let err = SparseRatingMatrix::from_triples(2, 2, [(0, 0, 5.0), (0, 0, 4.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { item: 0, user: 0 }));
    }

    #[test]
    fn out_of_range_rejected() {
        let err = SparseRatingMatrix::from_triples(2, 2, [(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { what: "item", .. }));
        let err = SparseRatingMatrix::from_triples(2, 2, [(0, 5, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { what: "user", .. }));
        let m = SparseRatingMatrix::from_triples(2, 2, [(0, 0, 1.0)]).unwrap();
        assert!(m.rated_items(2).is_err());
    }

    #[test]
    fn rated_items_sorted() {
        let m = SparseRatingMatrix::from_triples(5, 2, [(3, 0, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(m.rated_items(0).unwrap(), &[1, 3]);
        let full = SparseRatingMatrix::from_triples(4, 1, (0..4).map(|i| (i, 0, i as f64))).unwrap();
        assert_eq!(full.rated_items(0).unwrap(), &[0, 1, 2, 3]);
    }

    #[test]
    fn ranking_validation() {
        assert!(RankingCollection::from_users(3, vec![vec![3, 1, 2]]).is_ok());
        assert!(RankingCollection::from_users(3, vec![vec![3, 3, 2]]).is_err());
        assert!(RankingCollection::from_users(3, vec![vec![0, 1, 2]]).is_err());
        assert!(RankingCollection::from_users(3, vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn ranking_json_validates() {
        let bad = r#"{"n_items":2,"n_users":1,"rankings":[[1,1]]}"#;
        assert!(serde_json::from_str::<RankingCollection>(bad).is_err());
        let good = r#"{"n_items":2,"n_users":1,"rankings":[[2,1]]}"#;
        let r: RankingCollection = serde_json::from_str(good).unwrap();
        assert_eq!(r.rank(0, 0), 2);
    }

    #[test]
    fn preference_pairs_are_antisymmetric() {
        let mut a = PreferenceMatrix::new(3);
        assert!(a.antisymmetry_violation().is_some());
        a.set_pair(0, 1, true);
        a.set_pair(0, 2, false);
        a.set_pair(1, 2, true);
        assert_eq!(a.antisymmetry_violation(), None);
        assert!(a.get(0, 1) && !a.get(1, 0));
        assert!(a.get(2, 0));
    }

    #[test]
    fn scores_to_ranks() {
        assert_eq!(ranks_from_scores(&[0.5, 2.0, 1.0]), vec![1, 3, 2]);
        assert_eq!(ranks_from_scores(&[1.0, 1.0, 1.0]), vec![3, 2, 1]);
    }

    fn triples() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
        (1usize..12, 1usize..12).prop_flat_map(|(n1, n2)| {
            let cells = proptest::collection::btree_map((0..n1, 0..n2), -10.0f64..10.0, 0..(n1 * n2));
            cells.prop_map(move |m| (n1, n2, m.into_iter().map(|((i, u), r)| (i, u, r)).collect()))
        })
    }

    proptest! {
        #[test]
        fn json_round_trip((n1, n2, t) in triples()) {
            let m = SparseRatingMatrix::from_triples(n1, n2, t).unwrap();
            let back: SparseRatingMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            prop_assert_eq!(&back, &m);
        }

        #[test]
        fn row_sizes_sum_to_nnz((n1, n2, t) in triples()) {
            let len = t.len();
            let m = SparseRatingMatrix::from_triples(n1, n2, t).unwrap();
            let total: usize = (0..n2).map(|u| m.rated_items(u).unwrap().len()).sum();
            prop_assert_eq!(total, len);
            for u in 0..n2 {
                prop_assert!(m.rated_items(u).unwrap().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}

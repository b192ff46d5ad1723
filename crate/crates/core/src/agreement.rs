//! User–user agreement statistics.
//!
//! `R_{u,v}` is the fraction of commonly rated item pairs on which two users
//! order the items the same way (ties count as agreement). It is computed
//! either over nonoverlapping consecutive pairs of the sorted common-item list
//! or over all pairs of common items.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SparseRatingMatrix;

/// Which item pairs enter `R_{u,v}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMode {
    /// Consecutive disjoint pairs `(c[0], c[1]), (c[2], c[3]), …`.
    Nonoverlapping,
    /// Every pair of common items.
    #[default]
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStat {
    /// `R_{u,v}` in `[0, 1]`; zero when no pairs were available.
    pub value: f64,
    pub agreements: u64,
    pub pair_count: u64,
    pub mode: AgreementMode,
}

impl AgreementStat {
    pub fn from_counts(agreements: u64, pair_count: u64, mode: AgreementMode) -> Self {
        debug_assert!(agreements <= pair_count);
        let value = if pair_count == 0 {
            0.0
        } else {
            agreements as f64 / pair_count as f64
        };
        Self {
            value,
            agreements,
            pair_count,
            mode,
        }
    }
}

/// `N(u,v) = N(u) ∩ N(v)`, ascending.
pub fn common_items(m: &SparseRatingMatrix, u: usize, v: usize) -> Result<Vec<usize>> {
    if u == v {
        return Err(Error::SameUser);
    }
    let a = m.rated_items(u)?;
    let b = m.rated_items(v)?;
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    merge_intersect(a, b, |_, _, item| out.push(item));
    Ok(out)
}

/// Calls `f(pos_a, pos_b, item)` for every item present in both sorted lists.
#[inline]
fn merge_intersect(a: &[usize], b: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                f(x, y, a[x]);
                x += 1;
                y += 1;
            }
        }
    }
}

/// `I(u,v)`: consecutive disjoint pairs of a sorted list. An odd trailing
/// element is dropped.
pub fn nonoverlap_pairs(common: &[usize]) -> Vec<(usize, usize)> {
    common.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

/// `R_{u,v}` between two distinct users.
pub fn agreement_stat(
    m: &SparseRatingMatrix,
    u: usize,
    v: usize,
    mode: AgreementMode,
) -> Result<AgreementStat> {
    if u == v {
        return Err(Error::SameUser);
    }
    m.check_user(u)?;
    m.check_user(v)?;
    let (items_u, ratings_u) = m.user_row(u);
    let (items_v, ratings_v) = m.user_row(v);
    let mut a = Vec::new();
    let mut b = Vec::new();
    merge_intersect(items_u, items_v, |x, y, _| {
        a.push(ratings_u[x]);
        b.push(ratings_v[y]);
    });
    let (agree, pairs) = count_agreements(&a, &b, mode);
    Ok(AgreementStat::from_counts(agree, pairs, mode))
}

/// Agreement counts for two rating vectors aligned on the same items (in
/// ascending item order). Returns `(agreements, pairs)`.
pub fn count_agreements(a: &[f64], b: &[f64], mode: AgreementMode) -> (u64, u64) {
    debug_assert_eq!(a.len(), b.len());
    match mode {
        AgreementMode::Nonoverlapping => {
            let pairs = (a.len() / 2) as u64;
            let agree = a
                .chunks_exact(2)
                .zip(b.chunks_exact(2))
                .filter(|(x, y)| (x[0] - x[1]) * (y[0] - y[1]) >= 0.0)
                .count() as u64;
            (agree, pairs)
        }
        AgreementMode::AllPairs => {
            let n = a.len() as u64;
            let pairs = n * n.saturating_sub(1) / 2;
            (pairs - strict_discordant_pairs(a, b), pairs)
        }
    }
}

const BRUTE_FORCE_CUTOFF: usize = 48;

/// Number of pairs `s < t` with `(a_s - a_t)(b_s - b_t) < 0`.
///
/// Quadratic for short inputs, otherwise `O(n log n)`: sort by `(a, b)` and
/// count strict inversions of `b`. Pairs tied in `a` are sorted by `b`
/// ascending, so they never register as inversions.
pub fn strict_discordant_pairs(a: &[f64], b: &[f64]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n <= BRUTE_FORCE_CUTOFF {
        let mut count = 0;
        for s in 0..n {
            for t in s + 1..n {
                if (a[s] - a[t]) * (b[s] - b[t]) < 0.0 {
                    count += 1;
                }
            }
        }
        return count;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x].total_cmp(&a[y]).then(b[x].total_cmp(&b[y])));
    let mut seq: Vec<f64> = order.iter().map(|&k| b[k]).collect();
    let mut buf = vec![0.0; n];
    strict_inversions(&mut seq, &mut buf)
}

/// Counts `s < t` with `v[s] > v[t]`, leaving `v` sorted.
fn strict_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        strict_inversions(left, bl) + strict_inversions(right, br)
    };
    let (mut x, mut y, mut k) = (0, mid, 0);
    while x < mid && y < n {
        if v[x] <= v[y] {
            buf[k] = v[x];
            x += 1;
        } else {
            buf[k] = v[y];
            count += (mid - x) as u64;
            y += 1;
        }
        k += 1;
    }
    buf[k..k + mid - x].copy_from_slice(&v[x..mid]);
    k += mid - x;
    buf[k..k + n - y].copy_from_slice(&v[y..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// `W_u^{i,j}(β)`: users other than `u` that rated both `i` and `j` and share
/// at least `β` rated items with `u`, ascending.
pub fn neighbor_set(
    m: &SparseRatingMatrix,
    u: usize,
    i: usize,
    j: usize,
    beta: usize,
) -> Result<Vec<usize>> {
    if i == j {
        return Err(Error::SameItem);
    }
    m.check_user(u)?;
    m.check_item(i)?;
    m.check_item(j)?;
    let items_u = m.user_row(u).0;
    let mut out = Vec::new();
    for v in (0..m.n_users()).filter(|&v| v != u) {
        let items_v = m.user_row(v).0;
        if items_v.binary_search(&i).is_err() || items_v.binary_search(&j).is_err() {
            continue;
        }
        let mut common = 0;
        merge_intersect(items_u, items_v, |_, _, _| common += 1);
        if common >= beta {
            out.push(v);
        }
    }
    Ok(out)
}

/// Agreement of one user with every other user, plus the common-item count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowEntry {
    pub common: usize,
    pub stat: AgreementStat,
}

/// Computes `(|N(u,v)|, R_{u,v})` for all `v`, using a dense lookup of `u`'s
/// ratings. The entry at `v = u` has zero common items.
pub fn agreement_row(m: &SparseRatingMatrix, u: usize, mode: AgreementMode) -> Vec<RowEntry> {
    let n_items = m.n_items();
    let (items_u, ratings_u) = m.user_row(u);
    let mut dense = vec![f64::NAN; n_items];
    let mut present = vec![false; n_items];
    for (&i, &r) in items_u.iter().zip(ratings_u) {
        dense[i] = r;
        present[i] = true;
    }
    let mut a = Vec::with_capacity(items_u.len());
    let mut b = Vec::with_capacity(items_u.len());
    (0..m.n_users())
        .map(|v| {
            if v == u {
                return RowEntry {
                    common: 0,
                    stat: AgreementStat::from_counts(0, 0, mode),
                };
            }
            a.clear();
            b.clear();
            let (items_v, ratings_v) = m.user_row(v);
            for (&i, &r) in items_v.iter().zip(ratings_v) {
                if present[i] {
                    a.push(dense[i]);
                    b.push(r);
                }
            }
            let (agree, pairs) = count_agreements(&a, &b, mode);
            RowEntry {
                common: a.len(),
                stat: AgreementStat::from_counts(agree, pairs, mode),
            }
        })
        .collect()
}

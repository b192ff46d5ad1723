//! Ratings files and the preprocessing protocol: popularity filtering,
//! train/validation/test resampling, quantization and per-user monotone
//! transforms.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Entry, SparseRatingMatrix};
use crate::rng::{seeded_rng, KeyedStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingFormat {
    /// `user::item::rating::timestamp`, timestamp ignored.
    MovielensDat,
    /// `user,item,rating`, optional header row.
    CsvTriples,
}

impl RatingFormat {
    /// `.dat` files are MovieLens, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dat") => RatingFormat::MovielensDat,
            _ => RatingFormat::CsvTriples,
        }
    }
}

/// Parsed ratings with dense indices and the original ids behind them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingData {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub entries: Vec<Entry>,
}

#[derive(Default)]
struct Builder {
    users: HashMap<String, usize>,
    items: HashMap<String, usize>,
    data: RatingData,
    seen: HashMap<(usize, usize), usize>,
}

fn intern(map: &mut HashMap<String, usize>, ids: &mut Vec<String>, id: &str) -> usize {
    if let Some(&k) = map.get(id) {
        return k;
    }
    ids.push(id.to_string());
    map.insert(id.to_string(), ids.len() - 1);
    ids.len() - 1
}

impl Builder {
    fn push(&mut self, line: usize, user: &str, item: &str, rating: &str) -> Result<()> {
        let parse_err = |message: String| Error::Parse { line, message };
        if user.is_empty() || item.is_empty() {
            return Err(parse_err("empty id".into()));
        }
        let rating: f64 = rating
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad rating {rating:?}")))?;
        if !rating.is_finite() {
            return Err(parse_err(format!("non-finite rating {rating}")));
        }
        let u = intern(&mut self.users, &mut self.data.user_ids, user);
        let i = intern(&mut self.items, &mut self.data.item_ids, item);
        if let Some(first) = self.seen.insert((u, i), line) {
            return Err(parse_err(format!("duplicate rating (first on line {first})")));
        }
        self.data.entries.push(Entry { item: i, user: u, rating });
        Ok(())
    }

    fn finish(self) -> Result<RatingData> {
        if self.data.entries.is_empty() {
            return Err(Error::EmptyFile);
        }
        Ok(self.data)
    }
}

/// Reads a ratings file fully into memory.
pub fn parse_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<RatingData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ratings_str(&text, format)
}

pub fn parse_ratings_str(text: &str, format: RatingFormat) -> Result<RatingData> {
    let mut b = Builder::default();
    match format {
        RatingFormat::MovielensDat => {
            for (k, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split("::").collect();
                if !(3..=4).contains(&fields.len()) {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("expected 4 '::'-separated fields, got {}", fields.len()),
                    });
                }
                b.push(k + 1, fields[0], fields[1], fields[2])?;
            }
        }
        RatingFormat::CsvTriples => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .comment(Some(b'#'))
                .from_reader(text.as_bytes());
            for (k, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let line = rec.position().map_or(k + 1, |p| p.line() as usize);
                if rec.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected 3 comma-separated fields, got {}", rec.len()),
                    });
                }
                if k == 0 && rec[2].parse::<f64>().is_err() {
                    continue; // header row
                }
                b.push(line, &rec[0], &rec[1], &rec[2])?;
            }
        }
    }
    b.finish()
}

/// Writes `user,item,rating` rows with the original ids.
pub fn write_csv(data: &RatingData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["user", "item", "rating"])?;
    for e in &data.entries {
        w.write_record([&data.user_ids[e.user], &data.item_ids[e.item], &e.rating.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl RatingData {
    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn to_matrix(&self) -> Result<SparseRatingMatrix> {
        self.matrix_of(0..self.entries.len())
    }

    /// Matrix over the full index space holding only the listed entries.
    pub fn matrix_of(&self, indices: impl IntoIterator<Item = usize>) -> Result<SparseRatingMatrix> {
        SparseRatingMatrix::from_triples(
            self.n_items(),
            self.n_users(),
            indices.into_iter().map(|k| self.entries[k]),
        )
    }

    /// Keeps the entries accepted by `keep` and renumbers surviving users and
    /// items densely, preserving their relative order.
    fn retain(&self, keep: impl Fn(&Entry) -> bool) -> RatingData {
        let entries: Vec<Entry> = self.entries.iter().copied().filter(|e| keep(e)).collect();
        let mut user_map = vec![usize::MAX; self.n_users()];
        let mut item_map = vec![usize::MAX; self.n_items()];
        for e in &entries {
            user_map[e.user] = 0;
            item_map[e.item] = 0;
        }
        let renumber = |map: &mut Vec<usize>, ids: &[String]| {
            let mut kept = Vec::new();
            for (k, slot) in map.iter_mut().enumerate() {
                if *slot == 0 {
                    *slot = kept.len();
                    kept.push(ids[k].clone());
                }
            }
            kept
        };
        let user_ids = renumber(&mut user_map, &self.user_ids);
        let item_ids = renumber(&mut item_map, &self.item_ids);
        RatingData {
            user_ids,
            item_ids,
            entries: entries
                .into_iter()
                .map(|e| Entry {
                    item: item_map[e.item],
                    user: user_map[e.user],
                    rating: e.rating,
                })
                .collect(),
        }
    }
}

/// Orders ids numerically when both parse as integers, else lexically.
fn cmp_ids(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Keeps the `top_items` most-rated items (ties by id), then a uniform
/// sample of `n_users` among users with at least `min_user_ratings` of them.
pub fn popularity_filter(
    data: &RatingData,
    top_items: usize,
    n_users: usize,
    min_user_ratings: usize,
    seed: u64,
) -> Result<RatingData> {
    if top_items == 0 || n_users == 0 {
        return Err(Error::InvalidConfig("popularity filter counts must be positive".into()));
    }
    let mut item_count = vec![0usize; data.n_items()];
    for e in &data.entries {
        item_count[e.item] += 1;
    }
    let mut order: Vec<usize> = (0..data.n_items()).collect();
    order.sort_by(|&a, &b| {
        item_count[b]
            .cmp(&item_count[a])
            .then_with(|| cmp_ids(&data.item_ids[a], &data.item_ids[b]))
    });
    let mut top = vec![false; data.n_items()];
    for &i in order.iter().take(top_items) {
        top[i] = true;
    }

    let mut user_count = vec![0usize; data.n_users()];
    for e in data.entries.iter().filter(|e| top[e.item]) {
        user_count[e.user] += 1;
    }
    let qualifying: Vec<usize> = (0..data.n_users())
        .filter(|&u| user_count[u] >= min_user_ratings && user_count[u] > 0)
        .collect();
    if qualifying.len() < n_users {
        return Err(Error::NotEnoughQualifyingUsers {
            needed: n_users,
            available: qualifying.len(),
        });
    }
    let mut rng = seeded_rng(seed, &[0x9091]);
    let mut chosen_flag = vec![false; data.n_users()];
    for k in rand::seq::index::sample(&mut rng, qualifying.len(), n_users) {
        chosen_flag[qualifying[k]] = true;
    }
    Ok(data.retain(|e| top[e.item] && chosen_flag[e.user]))
}

/// Fractions and per-user activity thresholds of a resampling protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub min_train_ratings: usize,
    pub min_val_ratings: usize,
    pub min_test_ratings: usize,
    pub n_resamples: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.40,
            val_frac: 0.15,
            test_frac: 0.45,
            min_train_ratings: 0,
            min_val_ratings: 0,
            min_test_ratings: 0,
            n_resamples: 5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn netflix() -> Self {
        SplitSpec {
            min_train_ratings: 50,
            min_val_ratings: 10,
            min_test_ratings: 10,
            ..SplitSpec::default()
        }
    }

    pub fn movielens() -> Self {
        SplitSpec {
            min_train_ratings: 100,
            min_val_ratings: 50,
            min_test_ratings: 50,
            ..SplitSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split fractions {fr:?} must be in [0,1] and sum to 1")));
        }
        if self.n_resamples == 0 {
            return Err(Error::InvalidConfig("n_resamples must be at least 1".into()));
        }
        Ok(())
    }

    /// `(train, val)` sizes for `n` triples; the remainder goes to test.
    pub fn counts(&self, n: usize) -> (usize, usize) {
        // Tiny slack so e.g. 0.15 * 100 floors to 15, not 14.
        let floor = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let train = floor(self.train_frac).min(n);
        let val = floor(self.val_frac).min(n - train);
        (train, val)
    }
}

/// One resample as entry indices into the source [`RatingData`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub resample: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub dropped_users: Vec<usize>,
}

pub struct SplitMatrices {
    pub train: SparseRatingMatrix,
    pub val: SparseRatingMatrix,
    pub test: SparseRatingMatrix,
}

impl SplitManifest {
    pub fn matrices(&self, data: &RatingData) -> Result<SplitMatrices> {
        Ok(SplitMatrices {
            train: data.matrix_of(self.train.iter().copied())?,
            val: data.matrix_of(self.val.iter().copied())?,
            test: data.matrix_of(self.test.iter().copied())?,
        })
    }
}

/// `n_resamples` independent shuffles of the entries, each cut into
/// train/val/test; users below any threshold are removed from all three.
pub fn resample_split(data: &RatingData, spec: &SplitSpec) -> Result<Vec<SplitManifest>> {
    spec.validate()?;
    let n = data.entries.len();
    let (n_train, n_val) = spec.counts(n);
    (0..spec.n_resamples)
        .map(|r| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seeded_rng(spec.seed, &[0x5971, r as u64]));
            let (train, rest) = order.split_at(n_train);
            let (val, test) = rest.split_at(n_val);
            let mut counts = vec![[0usize; 3]; data.n_users()];
            for (part, idx) in [train, val, test].iter().enumerate() {
                for &k in *idx {
                    counts[data.entries[k].user][part] += 1;
                }
            }
            let drop: Vec<bool> = counts
                .iter()
                .map(|c| c[0] < spec.min_train_ratings || c[1] < spec.min_val_ratings || c[2] < spec.min_test_ratings)
                .collect();
            let keep = |idx: &[usize]| {
                let mut v: Vec<usize> = idx.iter().copied().filter(|&k| !drop[data.entries[k].user]).collect();
                v.sort_unstable();
                v
            };
            Ok(SplitManifest {
                resample: r,
                train: keep(train),
                val: keep(val),
                test: keep(test),
                dropped_users: (0..data.n_users()).filter(|&u| drop[u]).collect(),
            })
        })
        .collect()
}

/// `r ↦ 1` if `r ≤ 3`, else `5`.
pub fn quantize_rating(r: f64) -> f64 {
    if r <= 3.0 {
        1.0
    } else {
        5.0
    }
}

pub fn quantize(m: &SparseRatingMatrix) -> SparseRatingMatrix {
    m.map_values(|_, r| quantize_rating(r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonotoneTransformSpec {
    pub a_choices: Vec<u32>,
    pub seed: u64,
}

impl Default for MonotoneTransformSpec {
    fn default() -> Self {
        MonotoneTransformSpec {
            a_choices: vec![1, 2, 10, 20],
            seed: 0,
        }
    }
}

impl MonotoneTransformSpec {
    pub fn validate(&self) -> Result<()> {
        if self.a_choices.is_empty() || self.a_choices.contains(&0) {
            return Err(Error::InvalidConfig("a_choices must be nonempty and positive".into()));
        }
        Ok(())
    }

    /// The `(a, b)` drawn for `user`, with `0 ≤ b < a`.
    pub fn params(&self, user: usize) -> (f64, f64) {
        let mut s = KeyedStream::new(self.seed, &[0xA0B0, user as u64]);
        let a = self.a_choices[s.below(self.a_choices.len() as u64) as usize];
        let b = s.below(a as u64);
        (a as f64, b as f64)
    }
}

/// Applies `r ↦ a·r − b` with one `(a, b)` per user.
pub fn random_monotone_transform(m: &SparseRatingMatrix, spec: &MonotoneTransformSpec) -> SparseRatingMatrix {
    let params: Vec<(f64, f64)> = (0..m.n_users()).map(|u| spec.params(u)).collect();
    m.map_values(|u, r| params[u].0 * r - params[u].1)
}

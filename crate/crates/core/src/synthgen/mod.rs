//! Generative simulator for the nonparametric latent-feature model.
//!
//! Items and users get latent features; the ideal utility is
//! `f(x, y) = ½‖x − y‖₂`, which is 1-Lipschitz under the product metric
//! `max(d(x, x′), d(y, y′))`. Each user applies its own nondecreasing map
//! `g_u` to produce ratings `H = g_u(F)`, and each entry is revealed
//! independently with probability `p`.

mod lift;
mod oracle;

pub use lift::{lift_inner_product, lift_with_bound};
pub use oracle::{
    counterexample_pair, discerning_rate, rho_monte_carlo, rho_oracle, CounterexamplePair,
    RhoVariant,
};

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Entry, SparseRatingMatrix};
use crate::rng::seeded_rng;

/// Latent spaces and the utility defined on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Items and users uniform on the unit ball in `ℝ^d`.
    UnitBallDistance,
    /// Items uniform over an explicit point set; users uniform over their own
    /// point set, or the item set when none is given.
    FinitePoints {
        items: Vec<Vec<f64>>,
        #[serde(default)]
        users: Option<Vec<Vec<f64>>>,
    },
    /// Bilinear utility `xᵗy` on the unit ball, realised as a distance model
    /// in `ℝ^{d+1}` through the norm-equalising lift.
    InnerProduct,
}

/// Family of per-user rating maps `g_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GFamily {
    Identity,
    /// Piecewise-linear through random knots with strictly positive slopes.
    RandomIncreasing,
    /// Step functions onto `1..=levels`, with `levels − 1` thresholds drawn
    /// i.i.d. uniform on `(−bound, bound)` and sorted.
    StepThresholds { levels: usize, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModelConfig {
    pub dim: usize,
    pub geometry: Geometry,
    pub g_family: GFamily,
    pub n_items: usize,
    pub n_users: usize,
    /// Observation probability in `(0, 1]`.
    pub p: f64,
    pub seed: u64,
}

impl LatentModelConfig {
    pub fn unit_ball(dim: usize, n_items: usize, n_users: usize, p: f64, seed: u64) -> Self {
        Self {
            dim,
            geometry: Geometry::UnitBallDistance,
            g_family: GFamily::Identity,
            n_items,
            n_users,
            p,
            seed,
        }
    }

    pub fn with_g(mut self, g: GFamily) -> Self {
        self.g_family = g;
        self
    }

    pub fn with_geometry(mut self, g: Geometry) -> Self {
        self.geometry = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.dim == 0 {
            return bad("latent dimension must be positive".into());
        }
        if self.n_items == 0 || self.n_users == 0 {
            return bad("n_items and n_users must be positive".into());
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.p));
        }
        if let GFamily::StepThresholds { levels, bound } = self.g_family {
            if levels < 2 {
                return bad(format!("step family needs at least 2 levels, got {levels}"));
            }
            if !(bound > 0.0 && bound.is_finite()) {
                return bad(format!("step bound must be positive, got {bound}"));
            }
        }
        if let Geometry::FinitePoints { items, users } = &self.geometry {
            let users = users.as_ref().unwrap_or(items);
            if items.is_empty() || users.is_empty() {
                return bad("finite point sets must be nonempty".into());
            }
            if items.iter().chain(users).any(|p| p.len() != self.dim) {
                return bad(format!("finite points must have dimension {}", self.dim));
            }
        }
        Ok(())
    }
}

/// Strictly increasing piecewise-linear map, extended linearly past the
/// outer knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl MonotoneMap {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let seg = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1, y0, y1) = (self.xs[seg], self.xs[seg + 1], self.ys[seg], self.ys[seg + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

pub const MONOTONE_KNOTS: usize = 8;

/// Realised `g_u` for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UserResponse {
    Identity,
    Increasing(MonotoneMap),
    /// Sorted thresholds `a_{u,1} < … < a_{u,L−1}`.
    Step { thresholds: Vec<f64> },
}

impl UserResponse {
    #[inline]
    pub fn apply(&self, f: f64) -> f64 {
        match self {
            UserResponse::Identity => f,
            UserResponse::Increasing(m) => m.eval(f),
            UserResponse::Step { thresholds } => step_rating(thresholds, f),
        }
    }
}

/// `1 + #{l : a_l ≤ x}`.
#[inline]
pub fn step_rating(thresholds: &[f64], x: f64) -> f64 {
    (1 + thresholds.partition_point(|&a| a <= x)) as f64
}

/// One feature vector per item or user.
pub type Features = Vec<Vec<f64>>;

/// A fully realised model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub config: LatentModelConfig,
    /// Item features in the space where `f` is a distance.
    pub item_features: Vec<Vec<f64>>,
    pub user_features: Vec<Vec<f64>>,
    /// Pre-lift `(X, Y)` for the inner-product geometry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear_features: Option<(Features, Features)>,
    pub responses: Vec<UserResponse>,
    /// `F[i][u] = f(x_i, y_u)`.
    pub utilities: DenseMatrix,
    /// `H[i][u] = g_u(F[i][u])`.
    pub ratings: DenseMatrix,
    /// Observation mask, user-major like the dense matrices.
    pub observed: Vec<bool>,
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The utility used by every geometry.
#[inline]
pub fn utility(x: &[f64], y: &[f64]) -> f64 {
    0.5 * euclidean(x, y)
}

pub(crate) fn sample_unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return v.into_iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// Draws one item feature from `𝒫_𝒳` (lifted for the inner-product case).
pub(crate) fn sample_item(cfg: &LatentModelConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match &cfg.geometry {
        Geometry::UnitBallDistance => sample_unit_ball(rng, cfg.dim),
        Geometry::FinitePoints { items, .. } => items[rng.random_range(0..items.len())].clone(),
        Geometry::InnerProduct => lift_with_bound(&sample_unit_ball(rng, cfg.dim), 1.0),
    }
}

fn sample_user(cfg: &LatentModelConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match &cfg.geometry {
        Geometry::FinitePoints { items, users } => {
            let pts = users.as_ref().unwrap_or(items);
            pts[rng.random_range(0..pts.len())].clone()
        }
        _ => sample_unit_ball(rng, cfg.dim),
    }
}

pub(crate) fn sample_thresholds(rng: &mut ChaCha8Rng, levels: usize, bound: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..levels - 1)
        .map(|_| loop {
            let a = rng.random_range(-bound..bound);
            if a > -bound {
                break a;
            }
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t
}

fn sample_monotone(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> MonotoneMap {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let mut xs: Vec<f64> = (0..MONOTONE_KNOTS - 2).map(|_| rng.random_range(lo..hi)).collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys = Vec::with_capacity(xs.len());
    let mut y = rng.random_range(-1.0..1.0);
    for _ in &xs {
        ys.push(y);
        // Slopes spread over two orders of magnitude.
        y += rng.random_range(0.05..1.0) * 10f64.powf(rng.random_range(-1.0..1.0));
    }
    MonotoneMap { xs, ys }
}

/// Samples a model; deterministic in `cfg`.
pub fn sample_model(cfg: &LatentModelConfig) -> Result<LatentModel> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed, &[0x5EED]);
    let (item_features, user_features, bilinear_features) = match cfg.geometry {
        Geometry::InnerProduct => {
            let x: Vec<_> = (0..cfg.n_items).map(|_| sample_unit_ball(&mut rng, cfg.dim)).collect();
            let y: Vec<_> = (0..cfg.n_users).map(|_| sample_unit_ball(&mut rng, cfg.dim)).collect();
            let xt = x.iter().map(|xi| lift_with_bound(xi, 1.0)).collect();
            let yt = y.iter().map(|yu| lift::lift_user(yu)).collect();
            (xt, yt, Some((x, y)))
        }
        _ => {
            let x = (0..cfg.n_items).map(|_| sample_item(cfg, &mut rng)).collect();
            let y = (0..cfg.n_users).map(|_| sample_user(cfg, &mut rng)).collect();
            (x, y, None)
        }
    };
    let x: &Vec<Vec<f64>> = &item_features;
    let y: &Vec<Vec<f64>> = &user_features;
    let utilities = DenseMatrix::from_fn(cfg.n_items, cfg.n_users, |i, u| utility(&x[i], &y[u]));
    let (lo, hi) = utilities
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let responses: Vec<UserResponse> = (0..cfg.n_users)
        .map(|_| match cfg.g_family {
            GFamily::Identity => UserResponse::Identity,
            GFamily::RandomIncreasing => UserResponse::Increasing(sample_monotone(&mut rng, lo, hi)),
            GFamily::StepThresholds { levels, bound } => UserResponse::Step {
                thresholds: sample_thresholds(&mut rng, levels, bound),
            },
        })
        .collect();
    if let GFamily::StepThresholds { bound, .. } = cfg.g_family {
        if lo < -bound || hi > bound {
            return Err(Error::InvalidConfig(format!(
                "utilities span [{lo}, {hi}], outside the step bound ±{bound}"
            )));
        }
    }
    let ratings = DenseMatrix::from_fn(cfg.n_items, cfg.n_users, |i, u| {
        responses[u].apply(utilities.get(i, u))
    });
    let observed = (0..cfg.n_items * cfg.n_users)
        .map(|_| cfg.p >= 1.0 || rng.random::<f64>() < cfg.p)
        .collect();
    Ok(LatentModel {
        config: cfg.clone(),
        item_features,
        user_features,
        bilinear_features,
        responses,
        utilities,
        ratings,
        observed,
    })
}

/// Outcome of a sampled-pair Lipschitz check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAudit {
    pub checked: usize,
    pub violations: usize,
    /// Largest `|ΔF| / max(d_𝒳, d_𝒴)` seen.
    pub worst_ratio: f64,
}

impl LatentModel {
    pub fn n_items(&self) -> usize {
        self.config.n_items
    }

    pub fn n_users(&self) -> usize {
        self.config.n_users
    }

    #[inline]
    pub fn is_observed(&self, item: usize, user: usize) -> bool {
        self.observed[user * self.n_items() + item]
    }

    /// `𝒫_Ω(H)` as a sparse matrix.
    pub fn observed_matrix(&self) -> SparseRatingMatrix {
        let entries = (0..self.n_users()).flat_map(|u| {
            (0..self.n_items())
                .filter(move |&i| self.is_observed(i, u))
                .map(move |i| Entry {
                    item: i,
                    user: u,
                    rating: self.ratings.get(i, u),
                })
        });
        SparseRatingMatrix::from_triples(self.n_items(), self.n_users(), entries)
            .expect("mask indices are in range and unique")
    }

    pub fn thresholds(&self, user: usize) -> Option<&[f64]> {
        match &self.responses[user] {
            UserResponse::Step { thresholds } => Some(thresholds),
            _ => None,
        }
    }

    /// Checks `|F[i][u] − F[j][v]| ≤ max(d(x_i, x_j), d(y_u, y_v))` on random
    /// index quadruples.
    pub fn lipschitz_audit(&self, n_pairs: usize, seed: u64) -> LipschitzAudit {
        let mut rng = seeded_rng(seed, &[0x11F5]);
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..n_pairs {
            let (i, j) = (rng.random_range(0..self.n_items()), rng.random_range(0..self.n_items()));
            let (u, v) = (rng.random_range(0..self.n_users()), rng.random_range(0..self.n_users()));
            let gap = (self.utilities.get(i, u) - self.utilities.get(j, v)).abs();
            let dist = euclidean(&self.item_features[i], &self.item_features[j])
                .max(euclidean(&self.user_features[u], &self.user_features[v]));
            if gap > dist + 1e-12 {
                violations += 1;
            }
            if dist > 0.0 {
                worst = worst.max(gap / dist);
            }
        }
        LipschitzAudit {
            checked: n_pairs,
            violations,
            worst_ratio: worst,
        }
    }
}

/// On-disk container: the config always, the realised tensors optionally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: LatentModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<LatentModel>,
}

impl ModelFile {
    pub const VERSION: u32 = 1;

    pub fn new(model: &LatentModel, include_tensors: bool) -> Self {
        Self {
            format_version: Self::VERSION,
            config: model.config.clone(),
            model: include_tensors.then(|| model.clone()),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        std::fs::write(path.as_ref(), json).map_err(|e| Error::io(path, e))
    }

    /// Loads a container, regenerating the tensors from the config when
    /// they were not stored.
    pub fn load(path: impl AsRef<Path>) -> Result<LatentModel> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_slice(&bytes)?;
        if file.format_version != Self::VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        match file.model {
            Some(m) => Ok(m),
            None => sample_model(&file.config),
        }
    }
}

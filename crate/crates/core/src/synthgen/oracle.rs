//! Monte-Carlo oracles for population quantities of a latent model, and the
//! pair of nearby functions that order almost every pair of points oppositely.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_item, sample_thresholds, step_rating, utility, GFamily, LatentModel};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoVariant {
    /// Each user keeps its realised `g_u`.
    #[default]
    Fixed,
    /// Fresh rating thresholds for both users on every draw (step family
    /// only; identical to `Fixed` otherwise).
    ResampleThresholds,
}

/// Fraction of `n` draws whose four utilities `(u_s, u_t, v_s, v_t)` satisfy
/// `(u_s − u_t)(v_s − v_t) ≥ 0`.
pub fn rho_monte_carlo<R: Rng>(
    n: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> [f64; 4],
) -> f64 {
    let agree = (0..n)
        .filter(|_| {
            let [us, ut, vs, vt] = draw(rng);
            (us - ut) * (vs - vt) >= 0.0
        })
        .count();
    agree as f64 / n as f64
}

/// Estimates `ρ(y_u, y_v)`, the probability that users `u` and `v` order two
/// fresh random items the same way. The RNG is derived from the model seed
/// and the user pair.
pub fn rho_oracle(model: &LatentModel, u: usize, v: usize, n_samples: usize, variant: RhoVariant) -> f64 {
    assert!(n_samples >= 1, "rho_oracle needs at least one sample");
    let cfg = &model.config;
    let mut rng: ChaCha8Rng = seeded_rng(cfg.seed, &[0x2405, u as u64, v as u64]);
    let (yu, yv) = (&model.user_features[u], &model.user_features[v]);
    let resample = match (variant, &cfg.g_family) {
        (RhoVariant::ResampleThresholds, GFamily::StepThresholds { levels, bound }) => Some((*levels, *bound)),
        _ => None,
    };
    rho_monte_carlo(n_samples, &mut rng, |rng| {
        let xs = sample_item(cfg, rng);
        let xt = sample_item(cfg, rng);
        let f = [utility(&xs, yu), utility(&xt, yu), utility(&xs, yv), utility(&xt, yv)];
        match resample {
            Some((levels, bound)) => {
                let tu = sample_thresholds(rng, levels, bound);
                let tv = sample_thresholds(rng, levels, bound);
                [
                    step_rating(&tu, f[0]),
                    step_rating(&tu, f[1]),
                    step_rating(&tv, f[2]),
                    step_rating(&tv, f[3]),
                ]
            }
            None => {
                let (gu, gv) = (&model.responses[u], &model.responses[v]);
                [gu.apply(f[0]), gu.apply(f[1]), gv.apply(f[2]), gv.apply(f[3])]
            }
        }
    })
}

/// Estimates `P(|f_y(x₁) − f_y(x₂)| ≤ 2ε)` for user `u`'s feature `y`.
pub fn discerning_rate(model: &LatentModel, u: usize, eps: f64, n_samples: usize) -> f64 {
    let cfg = &model.config;
    let mut rng = seeded_rng(cfg.seed, &[0xD15C, u as u64]);
    let y = &model.user_features[u];
    let near = (0..n_samples)
        .filter(|_| {
            let a = utility(&sample_item(cfg, &mut rng), y);
            let b = utility(&sample_item(cfg, &mut rng), y);
            (a - b).abs() <= 2.0 * eps
        })
        .count();
    near as f64 / n_samples as f64
}

/// Two tent-shaped functions on `[0, 1]` with `‖f − g‖_∞ ≤ ε` that order
/// every pair of points not symmetric about ½ in opposite directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexamplePair {
    pub eps: f64,
}

/// Panics unless `eps > 0`.
pub fn counterexample_pair(eps: f64) -> CounterexamplePair {
    assert!(eps > 0.0, "eps must be positive");
    CounterexamplePair { eps }
}

impl CounterexamplePair {
    pub fn f(&self, z: f64) -> f64 {
        if z <= 0.5 {
            self.eps * z
        } else {
            self.eps * (1.0 - z)
        }
    }

    pub fn g(&self, z: f64) -> f64 {
        if z <= 0.5 {
            -self.eps * z
        } else {
            self.eps * (z - 1.0)
        }
    }

    /// `max |f − g|` over an evenly spaced grid of `points` on `[0, 1]`.
    pub fn sup_gap(&self, points: usize) -> f64 {
        (0..points)
            .map(|k| {
                let z = k as f64 / (points - 1).max(1) as f64;
                (self.f(z) - self.g(z)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Monte-Carlo fraction of uniform pairs on which `f` and `g` agree.
    pub fn agreement_rate(&self, n: usize, seed: u64) -> f64 {
        let mut rng: ChaCha8Rng = seeded_rng(seed, &[0xC0E7]);
        rho_monte_carlo(n, &mut rng, |rng| {
            let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
            [self.f(a), self.f(b), self.g(a), self.g(b)]
        })
    }
}

//! TOML experiment configuration.
//!
//! Relative paths are resolved against the directory of the config file.
//! Environment variables are never consulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agreement::AgreementMode;
use crate::data::{MonotoneTransformSpec, RatingFormat, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{Metric, MetricOptions};
use crate::ranker::VoteWeighting;
use crate::synthgen::{GFamily, Geometry, LatentModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SynthConsistency,
    RealPipeline,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Report directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub eval: Option<EvalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Label used in reports.
    #[serde(default = "default_dataset_name")]
    pub name: String,
    /// Ratings file; exactly one of `path` and `synthetic` must be given.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Inferred from the extension when absent.
    #[serde(default)]
    pub format: Option<RatingFormat>,
    /// Observed ratings of a generated model stand in for a ratings file.
    #[serde(default)]
    pub synthetic: Option<LatentModelConfig>,
    #[serde(default)]
    pub popularity: Option<PopularityConfig>,
}

fn default_dataset_name() -> String {
    "dataset".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityConfig {
    pub top_items: usize,
    pub n_users: usize,
    pub min_user_ratings: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub quantize: bool,
    /// Per-user `r ↦ a·r − b` on the training ratings fed to the ranker.
    pub monotone_transform: bool,
    pub a_choices: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub beta: Vec<usize>,
    pub k: Vec<usize>,
    pub weighting: Vec<VoteWeighting>,
    pub agreement_mode: AgreementMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            beta: vec![5],
            k: vec![15],
            weighting: vec![VoteWeighting::Uniform, VoteWeighting::AgreementWeighted],
            agreement_mode: AgreementMode::AllPairs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub k: usize,
    pub relevance_threshold: f64,
    /// Validation metric maximised by the grid search.
    pub selection: Metric,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            k: 5,
            relevance_threshold: 5.0,
            selection: Metric::KendallTau,
        }
    }
}

impl MetricsConfig {
    pub fn options(&self) -> MetricOptions {
        MetricOptions {
            k: self.k,
            relevance_threshold: self.relevance_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationRule {
    /// `p = max(n₁^−0.3, n₂^−0.3)`.
    Theorem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservationProbability {
    Rule(ObservationRule),
    Value(f64),
}

impl ObservationProbability {
    pub fn resolve(self, n_items: usize, n_users: usize) -> f64 {
        match self {
            ObservationProbability::Rule(ObservationRule::Theorem) => {
                (n_items as f64).powf(-0.3).max((n_users as f64).powf(-0.3))
            }
            ObservationProbability::Value(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `k = 1`.
    Continuous,
    /// `k = ⌈n₂^0.3⌉`.
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(default = "default_g")]
    pub g_family: GFamily,
    pub n_items: usize,
    pub n_users: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: ObservationProbability,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Target share of (user, item pair) triples with utility gap above ε.
    /// Ignored when `eps` is set.
    #[serde(default = "default_fraction")]
    pub separated_fraction: f64,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_synth_mode")]
    pub agreement_mode: AgreementMode,
    /// Run the ε/2-consistency check on every trial (slow for large n₂).
    #[serde(default)]
    pub consistency_check: bool,
}

fn default_dim() -> usize {
    2
}
fn default_geometry() -> Geometry {
    Geometry::UnitBallDistance
}
fn default_g() -> GFamily {
    GFamily::Identity
}
fn default_p() -> ObservationProbability {
    ObservationProbability::Rule(ObservationRule::Theorem)
}
fn default_preset() -> Preset {
    Preset::Continuous
}
fn default_fraction() -> f64 {
    0.2
}
fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}
fn default_synth_mode() -> AgreementMode {
    AgreementMode::Nonoverlapping
}

/// Inputs of the `eval` verb, both JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// A serialized `RankingCollection`.
    pub rankings: PathBuf,
    /// A serialized `SparseRatingMatrix` of held-out ratings.
    pub truth: PathBuf,
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let config = Self::from_toml_str(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.grid.beta.is_empty() || self.grid.k.is_empty() || self.grid.weighting.is_empty() {
            return bad("grid lists must be nonempty");
        }
        if self.grid.beta.iter().any(|&b| b < 2) || self.grid.k.contains(&0) {
            return bad("grid needs beta >= 2 and k >= 1");
        }
        if !matches!(self.metrics.selection, Metric::KendallTau | Metric::NdcgAtK) {
            return bad("selection metric must be kendall_tau or ndcg_at_k");
        }
        if self.metrics.k == 0 {
            return bad("metrics.k must be positive");
        }
        self.split.validate()?;
        if let Some(d) = &self.dataset {
            if d.path.is_some() == d.synthetic.is_some() {
                return bad("dataset needs exactly one of `path` and `synthetic`");
            }
            if let Some(s) = &d.synthetic {
                s.validate()?;
            }
        }
        if let Some(s) = &self.synth {
            if s.n_users.is_empty() || s.seeds.is_empty() {
                return bad("synth.n_users and synth.seeds must be nonempty");
            }
            if !(s.separated_fraction > 0.0 && s.separated_fraction < 1.0) {
                return bad("synth.separated_fraction must lie in (0, 1)");
            }
            if matches!(s.eps, Some(e) if e.is_nan() || e < 0.0) {
                return bad("synth.eps must be nonnegative");
            }
        }
        match self.mode {
            Mode::SynthConsistency if self.synth.is_none() => bad("synth_consistency needs a [synth] section"),
            Mode::RealPipeline | Mode::GridSearch if self.dataset.is_none() => {
                bad("this mode needs a [dataset] section")
            }
            _ => Ok(()),
        }
    }
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn transform_spec(&self) -> MonotoneTransformSpec {
        let mut spec = MonotoneTransformSpec {
            seed: crate::rng::derive_key(self.config.seed, &[0x7A5F]),
            ..MonotoneTransformSpec::default()
        };
        if let Some(a) = &self.config.preprocess.a_choices {
            spec.a_choices = a.clone();
        }
        spec
    }
}

//! Experiment orchestration: synthetic consistency sweeps, the resampled
//! real-data pipeline and validation grid search, plus report emission.
//!
//! Every source of randomness is derived from the config's top-level `seed`,
//! and all parallel work is collected in index order, so a config and seed
//! determine the report bytes regardless of the thread count.

mod config;
mod report;

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::*;
pub use report::*;

use crate::data::{
    parse_ratings, popularity_filter, quantize, random_monotone_transform, resample_split, RatingData, RatingFormat,
    SplitManifest, SplitSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    dis_eps, eps_consistency_violations_over, evaluate, mean_std, separated_distinct, user_dis_eps, Metric,
    MetricSummary, Violation,
};
use crate::matrix::{Entry, RankingCollection, SparseRatingMatrix};
use crate::ranker::{multi_rank_with_stats, RankerConfig, VoteWeighting};
use crate::rng::derive_key;
use crate::synthgen::{euclidean, sample_model, LatentModel, LatentModelConfig};

/// One evaluated `(β, k, weighting)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub beta: usize,
    pub k: usize,
    pub weighting: VoteWeighting,
    /// Mean validation value of the selection metric; NaN when no user
    /// supports it.
    pub score: f64,
    pub score_std: f64,
    pub users: usize,
}

impl GridRow {
    pub fn algorithm(&self) -> &'static str {
        self.weighting.label()
    }

    /// Higher score first, then smaller β, smaller k, uniform weighting.
    fn better_than(&self, other: &GridRow) -> bool {
        let key = |r: &GridRow| if r.score.is_nan() { f64::NEG_INFINITY } else { r.score };
        match key(self).total_cmp(&key(other)) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (self.beta, self.k, self.weighting) < (other.beta, other.k, other.weighting),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub selection: Metric,
    /// Sorted by `(β, k, weighting)`.
    pub rows: Vec<GridRow>,
    pub best: GridRow,
    /// Best row per weighting present in the grid, in weighting order.
    pub best_by_weighting: Vec<GridRow>,
}

/// Rankings of a selected grid point, kept for test evaluation.
pub struct Selected {
    pub row: GridRow,
    pub rankings: RankingCollection,
}

/// Trains every grid point on `train` and scores it on `val`.
pub fn grid_search_on(
    train: &SparseRatingMatrix,
    val: &SparseRatingMatrix,
    grid: &GridConfig,
    metrics: &MetricsConfig,
    seed: u64,
) -> Result<(GridResult, Vec<Selected>)> {
    let mut betas = grid.beta.clone();
    let mut ks = grid.k.clone();
    let mut ws = grid.weighting.clone();
    for v in [&mut betas, &mut ks] {
        v.sort_unstable();
        v.dedup();
    }
    ws.sort_unstable();
    ws.dedup();
    let opts = metrics.options();
    let mut rows = Vec::new();
    let mut best: Vec<Option<Selected>> = ws.iter().map(|_| None).collect();
    for &beta in &betas {
        for &k in &ks {
            for (wi, &w) in ws.iter().enumerate() {
                let cfg = RankerConfig::new(beta, k)
                    .with_weighting(w)
                    .with_mode(grid.agreement_mode)
                    .with_seed(seed);
                let (sigma, _) = multi_rank_with_stats(train, &cfg)?;
                let report = evaluate(&sigma, val, &opts)?;
                let v = report.values(metrics.selection);
                let row = GridRow {
                    beta,
                    k,
                    weighting: w,
                    score: v.mean,
                    score_std: v.std,
                    users: v.per_user.len(),
                };
                rows.push(row);
                if best[wi].as_ref().is_none_or(|b| row.better_than(&b.row)) {
                    best[wi] = Some(Selected { row, rankings: sigma });
                }
            }
        }
    }
    let selected: Vec<Selected> = best.into_iter().flatten().collect();
    let best_by_weighting: Vec<GridRow> = selected.iter().map(|s| s.row).collect();
    let overall = best_by_weighting
        .iter()
        .copied()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
        .expect("grid is nonempty");
    Ok((
        GridResult {
            selection: metrics.selection,
            rows,
            best: overall,
            best_by_weighting,
        },
        selected,
    ))
}

/// Loads the configured dataset and applies the popularity filter.
pub fn load_dataset(loaded: &LoadedConfig) -> Result<RatingData> {
    let cfg = &loaded.config;
    let ds = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing [dataset] section".into()))?;
    let data = match (&ds.path, &ds.synthetic) {
        (Some(p), None) => {
            let path = loaded.resolve(p);
            let format = ds.format.unwrap_or_else(|| RatingFormat::from_path(&path));
            parse_ratings(&path, format)?
        }
        (None, Some(s)) => {
            let mut s = s.clone();
            s.seed = derive_key(cfg.seed, &[0xDA7A, s.seed]);
            synthetic_dataset(&sample_model(&s)?)
        }
        _ => return Err(Error::InvalidConfig("dataset needs exactly one of `path` and `synthetic`".into())),
    };
    match &ds.popularity {
        Some(pf) => popularity_filter(
            &data,
            pf.top_items,
            pf.n_users,
            pf.min_user_ratings,
            derive_key(cfg.seed, &[0x909]),
        ),
        None => Ok(data),
    }
}

/// Observed ratings of a model as a dataset with ids `u<index>` / `i<index>`.
pub fn synthetic_dataset(model: &LatentModel) -> RatingData {
    let m = model.observed_matrix();
    RatingData {
        user_ids: (0..m.n_users()).map(|u| format!("u{u}")).collect(),
        item_ids: (0..m.n_items()).map(|i| format!("i{i}")).collect(),
        entries: m.entries().collect::<Vec<Entry>>(),
    }
}

fn effective_split(cfg: &ExperimentConfig) -> SplitSpec {
    SplitSpec {
        seed: derive_key(cfg.seed, &[0x5911, cfg.split.seed]),
        ..cfg.split
    }
}

pub fn run_split(loaded: &LoadedConfig) -> Result<SplitReport> {
    let data = load_dataset(loaded)?;
    let manifests = resample_split(&data, &effective_split(&loaded.config))?;
    Ok(SplitReport {
        dataset: dataset_name(&loaded.config),
        n_users: data.n_users(),
        n_items: data.n_items(),
        n_ratings: data.entries.len(),
        manifests,
    })
}

fn dataset_name(cfg: &ExperimentConfig) -> String {
    cfg.dataset.as_ref().map_or_else(|| "synthetic".into(), |d| d.name.clone())
}

/// Train, validation and test matrices of one resample after preprocessing.
/// The rankers see `train_input`; validation and test truth are never
/// transformed, only quantized.
pub struct PreparedSplit {
    pub train_input: SparseRatingMatrix,
    pub val: SparseRatingMatrix,
    pub test: SparseRatingMatrix,
}

pub fn prepare_split(loaded: &LoadedConfig, data: &RatingData, manifest: &SplitManifest) -> Result<PreparedSplit> {
    let pre = &loaded.config.preprocess;
    let mats = manifest.matrices(data)?;
    let q = |m: SparseRatingMatrix| if pre.quantize { quantize(&m) } else { m };
    let mut train = q(mats.train);
    if pre.monotone_transform {
        let spec = loaded.transform_spec();
        spec.validate()?;
        train = random_monotone_transform(&train, &spec);
    }
    Ok(PreparedSplit {
        train_input: train,
        val: q(mats.val),
        test: q(mats.test),
    })
}

pub fn run_grid_search(loaded: &LoadedConfig) -> Result<GridReport> {
    let cfg = &loaded.config;
    let data = load_dataset(loaded)?;
    let spec = SplitSpec {
        n_resamples: 1,
        ..effective_split(cfg)
    };
    let manifest = &resample_split(&data, &spec)?[0];
    let split = prepare_split(loaded, &data, manifest)?;
    let (grid, _) = grid_search_on(&split.train_input, &split.val, &cfg.grid, &cfg.metrics, cfg.seed)?;
    Ok(GridReport {
        dataset: dataset_name(cfg),
        seed: cfg.seed,
        grid,
    })
}

pub fn run_real_pipeline(loaded: &LoadedConfig) -> Result<PipelineReport> {
    let cfg = &loaded.config;
    let data = load_dataset(loaded)?;
    let manifests = resample_split(&data, &effective_split(cfg))?;
    let opts = cfg.metrics.options();
    let mut resamples = Vec::new();
    for manifest in &manifests {
        let split = prepare_split(loaded, &data, manifest)?;
        let (grid, selected) = grid_search_on(&split.train_input, &split.val, &cfg.grid, &cfg.metrics, cfg.seed)?;
        let test = selected
            .iter()
            .map(|s| {
                Ok(AlgorithmResult {
                    algorithm: s.row.algorithm().into(),
                    beta: s.row.beta,
                    k: s.row.k,
                    metrics: evaluate(&s.rankings, &split.test, &opts)?.summary(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        resamples.push(ResampleResult {
            resample: manifest.resample,
            train_ratings: manifest.train.len(),
            val_ratings: manifest.val.len(),
            test_ratings: manifest.test.len(),
            dropped_users: manifest.dropped_users.len(),
            grid,
            test,
        });
    }
    let aggregate = aggregate_resamples(&resamples);
    Ok(PipelineReport {
        dataset: dataset_name(cfg),
        seed: cfg.seed,
        n_users: data.n_users(),
        n_items: data.n_items(),
        n_ratings: data.entries.len(),
        metric_k: cfg.metrics.k,
        relevance_threshold: cfg.metrics.relevance_threshold,
        ndcg_gain: "linear".into(),
        resamples,
        aggregate,
    })
}

/// Mean and population std over resamples of each algorithm's test means.
fn aggregate_resamples(resamples: &[ResampleResult]) -> Vec<AggregateRow> {
    let mut algos: Vec<String> = resamples
        .iter()
        .flat_map(|r| r.test.iter().map(|t| t.algorithm.clone()))
        .collect();
    algos.sort();
    algos.dedup();
    let mut out = Vec::new();
    for algo in &algos {
        let runs: Vec<&AlgorithmResult> = resamples
            .iter()
            .flat_map(|r| r.test.iter().filter(|t| &t.algorithm == algo))
            .collect();
        let common = |f: fn(&AlgorithmResult) -> usize| {
            let first = f(runs[0]);
            runs.iter().all(|r| f(r) == first).then_some(first)
        };
        let (beta, k) = (common(|r| r.beta), common(|r| r.k));
        for metric in Metric::ALL {
            let values: Vec<f64> = runs.iter().map(|r| r.metrics.get(metric)[0]).collect();
            let (mean, std) = mean_std(values.iter().copied());
            out.push(AggregateRow {
                algorithm: algo.clone(),
                beta,
                k,
                metric,
                mean,
                std,
                resamples: runs.len(),
            });
        }
    }
    out
}

/// ε/2-consistency of a trial's output over the separated, distinctly rated
/// triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub radius: f64,
    /// User pairs within `radius`; zero makes the check vacuous.
    pub close_user_pairs: usize,
    pub violations: usize,
    /// The first few violations.
    pub examples: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTrial {
    pub n_items: usize,
    pub n_users: usize,
    pub seed: u64,
    pub p: f64,
    pub observed_density: f64,
    pub eps: f64,
    pub beta: usize,
    pub k: usize,
    /// `dis_{2ε}` of the Multi-Rank output.
    pub dis: u64,
    /// `dis / (n₂ · C(n₁, 2))`.
    pub rate: f64,
    pub voted_pairs: u64,
    pub coin_flips: u64,
    pub consistency: Option<ConsistencyCheck>,
}

/// A trial with the model and rankings it was computed from.
pub struct TrialOutput {
    pub trial: SynthTrial,
    pub model: LatentModel,
    pub rankings: RankingCollection,
}

/// The gap such that about `fraction` of `(user, i < j)` triples have
/// `|F_iu − F_ju|` strictly above it, measured on the first 200 users.
pub fn calibrate_eps(model: &LatentModel, fraction: f64) -> f64 {
    let n = model.n_items();
    let mut gaps = Vec::new();
    for u in 0..model.n_users().min(200) {
        let f = model.utilities.column(u);
        for i in 0..n {
            for j in i + 1..n {
                gaps.push((f[i] - f[j]).abs());
            }
        }
    }
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(f64::total_cmp);
    let idx = (((1.0 - fraction) * gaps.len() as f64) as usize).min(gaps.len() - 1);
    gaps[idx]
}

/// Generates one model, runs Multi-Rank with the preset and scores it.
pub fn run_synth_trial(sc: &SynthConfig, n_users: usize, seed: u64) -> Result<TrialOutput> {
    let p = sc.p.resolve(sc.n_items, n_users);
    let model_cfg = LatentModelConfig {
        dim: sc.dim,
        geometry: sc.geometry.clone(),
        g_family: sc.g_family.clone(),
        n_items: sc.n_items,
        n_users,
        p,
        seed: derive_key(seed, &[0x5E1, n_users as u64]),
    };
    let model = sample_model(&model_cfg)?;
    let eps = sc.eps.unwrap_or_else(|| calibrate_eps(&model, sc.separated_fraction));
    let m = model.observed_matrix();
    let preset = match sc.preset {
        Preset::Continuous => RankerConfig::continuous_preset(&m),
        Preset::Discrete => RankerConfig::discrete_preset(&m),
    };
    let rcfg = preset.with_mode(sc.agreement_mode).with_seed(seed);
    let (sigma, stats) = multi_rank_with_stats(&m, &rcfg)?;
    let dis = dis_eps(&sigma, &model.utilities, &model.ratings, 2.0 * eps)?;
    let n1 = sc.n_items as u64;
    let total = n_users as u64 * (n1 * n1.saturating_sub(1) / 2);
    let consistency = if sc.consistency_check {
        Some(consistency_check(&model, &sigma, eps, None)?)
    } else {
        None
    };
    Ok(TrialOutput {
        trial: SynthTrial {
            n_items: sc.n_items,
            n_users,
            seed,
            p,
            observed_density: m.density(),
            eps,
            beta: rcfg.beta,
            k: rcfg.k,
            dis,
            rate: if total == 0 { 0.0 } else { dis as f64 / total as f64 },
            voted_pairs: stats.voted_pairs,
            coin_flips: stats.coin_flips,
            consistency,
        },
        model,
        rankings: sigma,
    })
}

/// Checks ε/2-consistency over `T = {(i, j, u) : |F_iu − F_ju| > 2ε,
/// H_iu ≠ H_ju}`. With `users = Some(mask)` only the masked users take part.
pub fn consistency_check(
    model: &LatentModel,
    sigma: &RankingCollection,
    eps: f64,
    users: Option<&[bool]>,
) -> Result<ConsistencyCheck> {
    let radius = eps / 2.0;
    let ys = &model.user_features;
    let active = |u: usize| users.is_none_or(|m| m[u]);
    let mut close = 0;
    for u in 0..ys.len() {
        for v in u + 1..ys.len() {
            if active(u) && active(v) && euclidean(&ys[u], &ys[v]) <= radius {
                close += 1;
            }
        }
    }
    let in_t = separated_distinct(&model.utilities, &model.ratings, 2.0 * eps);
    let violations = eps_consistency_violations_over(sigma, ys, radius, |i, j, u| active(u) && in_t(i, j, u))?;
    Ok(ConsistencyCheck {
        radius,
        close_user_pairs: close,
        violations: violations.len(),
        examples: violations.into_iter().take(10).collect(),
    })
}

/// Users whose own `dis_{2ε}` is zero.
pub fn zero_dis_users(model: &LatentModel, sigma: &RankingCollection, eps: f64) -> Vec<bool> {
    (0..model.n_users())
        .map(|u| user_dis_eps(sigma.user(u), model.utilities.column(u), model.ratings.column(u), 2.0 * eps) == 0)
        .collect()
}

pub fn run_synth_consistency(loaded: &LoadedConfig) -> Result<SynthReport> {
    let cfg = &loaded.config;
    let sc = cfg
        .synth
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing [synth] section".into()))?;
    let mut n_users = sc.n_users.clone();
    n_users.sort_unstable();
    n_users.dedup();
    let mut trials = Vec::new();
    for &n2 in &n_users {
        for &s in &sc.seeds {
            trials.push(run_synth_trial(sc, n2, derive_key(cfg.seed, &[s]))?.trial);
        }
    }
    let summary = n_users
        .iter()
        .map(|&n2| {
            let ts: Vec<&SynthTrial> = trials.iter().filter(|t| t.n_users == n2).collect();
            let (mean_rate, std_rate) = mean_std(ts.iter().map(|t| t.rate));
            let (mean_dis, _) = mean_std(ts.iter().map(|t| t.dis as f64));
            let common = |f: fn(&SynthTrial) -> usize| ts.iter().all(|t| f(t) == f(ts[0])).then(|| f(ts[0]));
            SynthSummary {
                n_users: n2,
                p: ts[0].p,
                beta: common(|t| t.beta),
                k: common(|t| t.k),
                mean_rate,
                std_rate,
                mean_dis,
                trials: ts.len(),
            }
        })
        .collect();
    Ok(SynthReport {
        seed: cfg.seed,
        n_items: sc.n_items,
        trials,
        summary,
    })
}

pub fn run_eval(loaded: &LoadedConfig) -> Result<EvalReport> {
    let cfg = &loaded.config;
    let ec = cfg
        .eval
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing [eval] section".into()))?;
    let read = |p: &Path| -> Result<String> {
        let path = loaded.resolve(p);
        std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    };
    let sigma: RankingCollection = serde_json::from_str(&read(&ec.rankings)?)?;
    let truth: SparseRatingMatrix = serde_json::from_str(&read(&ec.truth)?)?;
    let report = evaluate(&sigma, &truth, &cfg.metrics.options())?;
    Ok(EvalReport {
        seed: cfg.seed,
        metrics: report.summary(),
        report,
    })
}

/// Command-line verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Synth,
    Run,
    Grid,
    Eval,
    Split,
}

/// Runs `verb` on a loaded config and writes its reports into `out_dir`.
/// Returns the files written.
pub fn execute(verb: Verb, loaded: &LoadedConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let report = match verb {
        Verb::Synth => Report::SynthConsistency(run_synth_consistency(loaded)?),
        Verb::Grid => Report::GridSearch(run_grid_search(loaded)?),
        Verb::Eval => Report::Eval(run_eval(loaded)?),
        Verb::Split => Report::Split(run_split(loaded)?),
        Verb::Run => match loaded.config.mode {
            Mode::SynthConsistency => Report::SynthConsistency(run_synth_consistency(loaded)?),
            Mode::RealPipeline => Report::RealPipeline(run_real_pipeline(loaded)?),
            Mode::GridSearch => Report::GridSearch(run_grid_search(loaded)?),
        },
    };
    report.write(out_dir)
}

/// `MetricSummary` of the test evaluation of each selected algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: String,
    pub beta: usize,
    pub k: usize,
    pub metrics: MetricSummary,
}

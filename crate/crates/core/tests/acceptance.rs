//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use multirank::agreement::{count_agreements, AgreementMode};
use multirank::data::{random_monotone_transform, MonotoneTransformSpec};
use multirank::eval::{kendall_tau, ndcg_at_k};
use multirank::experiment::{
    consistency_check, run_real_pipeline, run_synth_trial, zero_dis_users, ExperimentConfig, LoadedConfig,
    SynthConfig,
};
use multirank::matrix::PreferenceMatrix;
use multirank::ranker::{copeland, multi_rank, RankerConfig, VoteWeighting};
use multirank::rng::{derive_key, seeded_rng};
use multirank::synthgen::{
    counterexample_pair, lift_inner_product, rho_oracle, sample_model, utility, GFamily, LatentModelConfig,
    RhoVariant,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/v1").join(name)
}

fn load(name: &str) -> LoadedConfig {
    ExperimentConfig::load(config_path(name)).expect("preset config loads")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, started: Instant, o: Outcome) -> bool {
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        started.elapsed().as_secs_f64()
    );
    o.pass
}

/// Mean rate per n₂, computed the same way as the `synth` verb.
fn sweep(loaded: &LoadedConfig, mut on_trial: impl FnMut(&multirank::experiment::TrialOutput, &SynthConfig)) -> Vec<(usize, f64)> {
    let sc = loaded.config.synth.as_ref().unwrap();
    let mut n_users = sc.n_users.clone();
    n_users.sort_unstable();
    n_users
        .iter()
        .map(|&n2| {
            let mut total = 0.0;
            for &s in &sc.seeds {
                let out = run_synth_trial(sc, n2, derive_key(loaded.config.seed, &[s])).unwrap();
                total += out.trial.rate;
                on_trial(&out, sc);
            }
            (n2, total / sc.seeds.len() as f64)
        })
        .collect()
}

fn fmt_rates(rates: &[(usize, f64)]) -> String {
    rates
        .iter()
        .map(|(n, r)| format!("n2={n}: {r:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Criteria 1 and 9 share the continuous sweep.
fn criteria_1_and_9() -> (Outcome, Outcome) {
    let loaded = load("thm1-continuous.toml");
    let largest = *loaded.config.synth.as_ref().unwrap().n_users.iter().max().unwrap();
    let mut lines = Vec::new();
    let mut c9_pass = true;
    let rates = sweep(&loaded, |out, _| {
        if out.trial.n_users != largest {
            return;
        }
        let eps = out.trial.eps;
        if out.trial.dis == 0 {
            let full = consistency_check(&out.model, &out.rankings, eps, None).unwrap();
            c9_pass &= full.violations == 0;
            lines.push(format!(
                "seed dis=0: {} violations over {} close pairs",
                full.violations, full.close_user_pairs
            ));
        } else {
            // The implication is vacuous for this seed; check it on the users
            // whose own disagreement count is zero instead.
            let mask = zero_dis_users(&out.model, &out.rankings, eps);
            let sub = consistency_check(&out.model, &out.rankings, eps, Some(&mask)).unwrap();
            c9_pass &= sub.violations == 0;
            lines.push(format!(
                "dis={} (vacuous); zero-dis users {}: {} violations over {} close pairs",
                out.trial.dis,
                mask.iter().filter(|&&m| m).count(),
                sub.violations,
                sub.close_user_pairs
            ));
        }
    });
    // Adjacent sweep points can tie exactly in exact arithmetic; allow for
    // rounding in the mean.
    let nonincreasing = rates.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
    let last = rates.last().unwrap().1;
    let c1 = Outcome {
        pass: nonincreasing && last < 0.05,
        detail: format!("{}; nonincreasing={nonincreasing}, final<0.05={}", fmt_rates(&rates), last < 0.05),
    };
    let c9 = Outcome {
        pass: c9_pass,
        detail: format!("n2={largest}: {}", lines.join("; ")),
    };
    (c1, c9)
}

fn criterion_2() -> Outcome {
    let loaded = load("thm3-discrete.toml");
    let rates = sweep(&loaded, |_, _| {});
    let decreasing = rates.windows(2).all(|w| w[1].1 < w[0].1);
    Outcome {
        pass: decreasing,
        detail: format!("{}; strictly decreasing={decreasing}", fmt_rates(&rates)),
    }
}

fn criterion_3() -> Outcome {
    // Direct: rankings on a 500-user model before and after the transform.
    let cfg = LatentModelConfig::unit_ball(2, 60, 500, 0.3, 33).with_g(GFamily::StepThresholds {
        levels: 5,
        bound: 1.0,
    });
    let m = sample_model(&cfg).unwrap().observed_matrix();
    let t = random_monotone_transform(&m, &MonotoneTransformSpec { seed: 44, ..Default::default() });
    let mut same_rankings = true;
    for w in [VoteWeighting::Uniform, VoteWeighting::AgreementWeighted] {
        for mode in [AgreementMode::AllPairs, AgreementMode::Nonoverlapping] {
            let rc = RankerConfig::new(4, 7).with_weighting(w).with_mode(mode).with_seed(9);
            same_rankings &= multi_rank(&m, &rc).unwrap() == multi_rank(&t, &rc).unwrap();
        }
    }
    // End to end: the sample pipeline with and without the transform.
    let plain = load("sample-pipeline.toml");
    let mut transformed = plain.clone();
    transformed.config.preprocess.monotone_transform = true;
    let a = run_real_pipeline(&plain).unwrap();
    let b = run_real_pipeline(&transformed).unwrap();
    let same_report = a == b && serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
    Outcome {
        pass: same_rankings && same_report,
        detail: format!(
            "rankings identical (MR/MRW x both modes)={same_rankings}, pipeline metrics identical={same_report} ({} users)",
            a.n_users
        ),
    }
}

/// Brute-force tau: every pair with distinct truth, ±1.
fn tau_oracle(pred: &[u32], truth: &[f64]) -> Option<f64> {
    let (mut c, mut d) = (0i64, 0i64);
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            if truth[i] == truth[j] {
                continue;
            }
            if (truth[i] < truth[j]) == (pred[i] < pred[j]) {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    (c + d > 0).then(|| (c - d) as f64 / (c + d) as f64)
}

fn criterion_4() -> Outcome {
    let mut rng = seeded_rng(4, &[]);
    let mut tau_mismatch = 0;
    let mut worst_ndcg: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=30);
        let mut perm: Vec<u32> = (1..=n as u32).collect();
        perm.shuffle(&mut rng);
        let levels = rng.random_range(1..=6);
        let truth: Vec<f64> = (0..n).map(|_| rng.random_range(1..=levels) as f64).collect();
        let t: Vec<(usize, f64)> = truth.iter().copied().enumerate().collect();
        let got = kendall_tau(&perm, &t).ok();
        if got != tau_oracle(&perm, &truth) {
            tau_mismatch += 1;
        }
    }
    for _ in 0..1000 {
        let n = rng.random_range(1..=30);
        let truth: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        // Ideal ordering: rank by truth.
        let ranks = multirank::matrix::ranks_from_scores(&truth);
        let k = rng.random_range(1..=n + 2);
        let t: Vec<(usize, f64)> = truth.iter().copied().enumerate().collect();
        worst_ndcg = worst_ndcg.max((ndcg_at_k(&ranks, &t, k).unwrap() - 1.0).abs());
    }
    Outcome {
        pass: tau_mismatch == 0 && worst_ndcg <= 1e-12,
        detail: format!("tau mismatches {tau_mismatch}/1000, max |NDCG(ideal) - 1| = {worst_ndcg:.1e}"),
    }
}

fn criterion_5() -> Outcome {
    let mut rng = seeded_rng(5, &[]);
    let mut wrong = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=50u32);
        let mut perm: Vec<u32> = (1..=n).collect();
        perm.shuffle(&mut rng);
        if copeland(&PreferenceMatrix::from_ranking(&perm)).unwrap() != perm {
            wrong += 1;
        }
    }
    Outcome {
        pass: wrong == 0,
        detail: format!("{wrong}/500 orders not recovered"),
    }
}

fn criterion_6() -> Outcome {
    let model = sample_model(&LatentModelConfig::unit_ball(2, 10_000, 40, 1.0, 6)).unwrap();
    let mut rng = seeded_rng(66, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = rng.random_range(0..40);
        let v = (u + rng.random_range(1..40)) % 40;
        let (a, b) = (model.ratings.column(u), model.ratings.column(v));
        let (agree, pairs) = count_agreements(a, b, AgreementMode::AllPairs);
        let r = agree as f64 / pairs as f64;
        let rho = rho_oracle(&model, u, v, 1_000_000, RhoVariant::Fixed);
        worst = worst.max((r - rho).abs());
    }
    Outcome {
        pass: worst < 0.05,
        detail: format!("max |R_uv - rho| over 20 pairs = {worst:.4}"),
    }
}

fn criterion_7() -> Outcome {
    let eps = 0.1;
    let c = counterexample_pair(eps);
    let gap = c.sup_gap(1_000_000);
    let agree = c.agreement_rate(1_000_000, 7);
    Outcome {
        pass: gap <= eps && agree < 1e-3,
        detail: format!("sup |f-g| = {gap} (<= {eps}), agreement = {agree:.2e}"),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = seeded_rng(8, &[]);
    let (mut triples, mut bad) = (0u64, 0u64);
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let (n1, n2) = (rng.random_range(2..=20), rng.random_range(1..=20));
        let mut draw = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        let (x, y) = (draw(n1), draw(n2));
        let (xt, yt) = lift_inner_product(&x, &y);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        for u in 0..n2 {
            for i in 0..n1 {
                for j in 0..n1 {
                    if i == j {
                        continue;
                    }
                    triples += 1;
                    let (bi, bj) = (dot(&x[i], &y[u]), dot(&x[j], &y[u]));
                    let (li, lj) = (utility(&xt[i], &yt[u]), utility(&xt[j], &yt[u]));
                    if (bi > bj) != (li > lj) || (bi < bj) != (li < lj) {
                        bad += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!("{bad} order mismatches over {triples} (u,i,j) triples"),
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = config_path("sample-pipeline.toml");
    let run = |threads: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_multirank"))
            .arg("run")
            .arg("--config")
            .arg(&config)
            .args(["--seed", "7", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let (eight, one) = (run("8"), run("1"));
    let names: Vec<&str> = eight.iter().map(|(n, _)| n.as_str()).collect();
    Outcome {
        pass: !eight.is_empty() && eight == one,
        detail: format!("{names:?} byte-identical with 8 and 1 threads: {}", eight == one),
    }
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    let (c1, c9) = criteria_1_and_9();
    all &= report(1, "continuous consistency trend", t, c1);
    let t = Instant::now();
    all &= report(2, "discrete consistency trend", t, criterion_2());
    let t = Instant::now();
    all &= report(3, "monotone invariance", t, criterion_3());
    let t = Instant::now();
    all &= report(4, "metric oracle equivalence", t, criterion_4());
    let t = Instant::now();
    all &= report(5, "Copeland on transitive tournaments", t, criterion_5());
    let t = Instant::now();
    all &= report(6, "agreement concentration", t, criterion_6());
    let t = Instant::now();
    all &= report(7, "nearby functions, opposite orders", t, criterion_7());
    let t = Instant::now();
    all &= report(8, "inner-product lift order equivalence", t, criterion_8());
    let t = Instant::now();
    all &= report(9, "consistency vs disagreement linkage", t, c9);
    let t = Instant::now();
    all &= report(10, "pipeline determinism across thread counts", t, criterion_10());
    if !all {
        std::process::exit(1);
    }
}

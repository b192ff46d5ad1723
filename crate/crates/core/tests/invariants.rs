//! Cross-module properties: ranker, generator and objectives.

use multirank::data::{quantize, random_monotone_transform, MonotoneTransformSpec};
use multirank::eval::{dis_eps, dis_hat};
use multirank::matrix::{DenseMatrix, PreferenceMatrix, RankingCollection, SparseRatingMatrix};
use multirank::ranker::{copeland, multi_rank, pairwise_rank, user_preferences, RankerConfig, VoteWeighting};
use multirank::agreement::AgreementMode;
use multirank::synthgen::{lift_inner_product, sample_model, utility, GFamily, LatentModelConfig};
use proptest::prelude::*;

/// A random sparse matrix with ratings on a small integer scale, so ties
/// and equal observed ratings occur.
fn sparse() -> impl Strategy<Value = SparseRatingMatrix> {
    (2usize..9, 2usize..10, 0.2f64..0.9, any::<u64>()).prop_map(|(n1, n2, p, seed)| {
        let cfg = LatentModelConfig::unit_ball(2, n1, n2, p, seed).with_g(GFamily::StepThresholds {
            levels: 4,
            bound: 1.0,
        });
        sample_model(&cfg).unwrap().observed_matrix()
    })
}

fn ranker() -> impl Strategy<Value = RankerConfig> {
    (2usize..4, 1usize..4, any::<bool>(), any::<bool>(), any::<u64>()).prop_map(|(beta, k, w, mode, seed)| {
        RankerConfig::new(beta, k)
            .with_weighting(if w { VoteWeighting::AgreementWeighted } else { VoteWeighting::Uniform })
            .with_mode(if mode { AgreementMode::AllPairs } else { AgreementMode::Nonoverlapping })
            .with_seed(seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn neighbour_driven_fill_matches_per_pair_votes(m in sparse(), cfg in ranker()) {
        for u in 0..m.n_users() {
            let (a, _) = user_preferences(&m, u, &cfg);
            prop_assert!(a.antisymmetry_violation().is_none());
            let (items, ratings) = m.user_row(u);
            for i in 0..m.n_items() {
                for j in i + 1..m.n_items() {
                    let observed = match (items.binary_search(&i), items.binary_search(&j)) {
                        (Ok(x), Ok(y)) if ratings[x] != ratings[y] => Some(ratings[x] > ratings[y]),
                        _ => None,
                    };
                    let expected = match observed {
                        Some(d) => d,
                        None => pairwise_rank(&m, u, i, j, &cfg).unwrap().decision,
                    };
                    prop_assert_eq!(a.get(i, j), expected, "user {} pair ({}, {})", u, i, j);
                }
            }
        }
    }

    #[test]
    fn multi_rank_is_monotone_invariant(m in sparse(), cfg in ranker(), seed in any::<u64>()) {
        let t = random_monotone_transform(&m, &MonotoneTransformSpec { seed, ..Default::default() });
        prop_assert_eq!(multi_rank(&m, &cfg).unwrap(), multi_rank(&t, &cfg).unwrap());
    }

    #[test]
    fn copeland_recovers_total_orders(perm in Just((1..=40u32).collect::<Vec<_>>()).prop_shuffle(), n in 1usize..40) {
        // Restrict to the first n items and relabel to 1..=n.
        let mut head: Vec<u32> = perm.into_iter().filter(|&r| r as usize <= n).collect();
        head.truncate(n);
        prop_assert_eq!(copeland(&PreferenceMatrix::from_ranking(&head)).unwrap(), head);
    }

    #[test]
    fn equal_weights_make_mrw_equal_mr(n1 in 2usize..8, n2 in 2usize..8, seed in any::<u64>(), k in 1usize..4) {
        // Every user rates a random subset of one shared distinct scale, so
        // all agreements are 1 and weights cancel.
        let m = sample_model(&LatentModelConfig::unit_ball(2, n1, n2, 0.6, seed)).unwrap();
        let shared = m.ratings.column(0).to_vec();
        let triples: Vec<(usize, usize, f64)> = (0..n2)
            .flat_map(|u| (0..n1).map(move |i| (i, u)))
            .filter(|&(i, u)| m.is_observed(i, u))
            .map(|(i, u)| (i, u, shared[i]))
            .collect();
        prop_assume!(!triples.is_empty());
        let mm = SparseRatingMatrix::from_triples(n1, n2, triples).unwrap();
        let mr = RankerConfig::new(2, k).with_seed(seed);
        let mrw = mr.with_weighting(VoteWeighting::AgreementWeighted);
        prop_assert_eq!(multi_rank(&mm, &mr).unwrap(), multi_rank(&mm, &mrw).unwrap());
    }

    #[test]
    fn rankings_do_not_depend_on_thread_count(m in sparse(), cfg in ranker()) {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| multi_rank(&m, &cfg).unwrap());
        let b = four.install(|| multi_rank(&m, &cfg).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sorted_full_matrix_has_no_observed_disagreement(n1 in 1usize..12, n2 in 1usize..6, seed in any::<u64>()) {
        let model = sample_model(&LatentModelConfig::unit_ball(3, n1, n2, 1.0, seed)).unwrap();
        let full = model.observed_matrix();
        let sigma = RankingCollection::from_scores(&model.ratings);
        prop_assert_eq!(dis_hat(&sigma, &full).unwrap(), 0);
    }

    #[test]
    fn dis_eps_is_nonincreasing_in_eps(m in sparse(), seed in any::<u64>(), e1 in 0.0f64..0.5, de in 0.0f64..0.5) {
        let model = sample_model(&LatentModelConfig::unit_ball(2, m.n_items(), m.n_users(), 0.5, seed)).unwrap();
        let sigma = multi_rank(&model.observed_matrix(), &RankerConfig::new(2, 1)).unwrap();
        let lo = dis_eps(&sigma, &model.utilities, &model.ratings, e1).unwrap();
        let hi = dis_eps(&sigma, &model.utilities, &model.ratings, e1 + de).unwrap();
        prop_assert!(hi <= lo);
    }

    #[test]
    fn step_ratings_stay_on_scale(levels in 2usize..7, bound in 1.0f64..3.0, seed in any::<u64>()) {
        let cfg = LatentModelConfig::unit_ball(2, 10, 6, 0.5, seed).with_g(GFamily::StepThresholds { levels, bound });
        let model = sample_model(&cfg).unwrap();
        for u in 0..6 {
            let t = model.thresholds(u).unwrap();
            prop_assert_eq!(t.len(), levels - 1);
            prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
            for &h in model.ratings.column(u) {
                prop_assert!(h.fract() == 0.0 && (1.0..=levels as f64).contains(&h));
            }
        }
    }

    #[test]
    fn model_bytes_depend_only_on_config(seed in any::<u64>()) {
        let cfg = LatentModelConfig::unit_ball(3, 8, 5, 0.4, seed).with_g(GFamily::RandomIncreasing);
        let a = serde_json::to_string(&sample_model(&cfg).unwrap().utilities).unwrap();
        let b = serde_json::to_string(&sample_model(&cfg).unwrap().utilities).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lift_preserves_every_order(
        d in 1usize..=5,
        x in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 5), 2..=20),
        y in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 5), 1..=20),
    ) {
        let x: Vec<Vec<f64>> = x.into_iter().map(|v| v[..d].to_vec()).collect();
        let y: Vec<Vec<f64>> = y.into_iter().map(|v| v[..d].to_vec()).collect();
        let (xt, yt) = lift_inner_product(&x, &y);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        for yu in 0..y.len() {
            for i in 0..x.len() {
                for j in 0..x.len() {
                    let (bi, bj) = (dot(&x[i], &y[yu]), dot(&x[j], &y[yu]));
                    let (li, lj) = (utility(&xt[i], &yt[yu]), utility(&xt[j], &yt[yu]));
                    prop_assert_eq!(bi.partial_cmp(&bj), li.partial_cmp(&lj));
                }
            }
        }
    }

    #[test]
    fn quantize_is_idempotent(m in sparse()) {
        let scaled = m.map_values(|_, r| r * 1.5);
        let q = quantize(&scaled);
        prop_assert_eq!(quantize(&q), q.clone());
        prop_assert!(q.entries().all(|e| e.rating == 1.0 || e.rating == 5.0));
    }

    #[test]
    fn non_permutations_are_rejected(n in 2usize..10, pos in 0usize..10, val in 0u32..12) {
        let mut r: Vec<u32> = (1..=n as u32).collect();
        let pos = pos % n;
        prop_assume!(r[pos] != val);
        r[pos] = val;
        prop_assert!(RankingCollection::from_users(n, vec![r]).is_err());
    }
}

#[test]
fn dense_scores_give_sorted_rankings() {
    let f = DenseMatrix::from_columns(vec![vec![0.3, 0.1, 0.9]]).unwrap();
    assert_eq!(RankingCollection::from_scores(&f).user(0), [2, 1, 3]);
}

use egp_core::dataset::{FeatureMask, FeatureSimilarity};
use egp_core::expr_tree::{e_crossover, e_mutation, ramped_half_and_half, INIT_DEPTH, MUTATION_DEPTH};
use egp_core::forest::{certainty_row, majority_vote, prune, weighted_vote, CertaintyMatrix, Forest, VoteMatrix};
use egp_core::stats::{chi_square_sf, kruskal_wallis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> FeatureMask {
    let k = rng.gen_range(1..=n);
    FeatureMask::new(rand::seq::index::sample(rng, n, k), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_chains_keep_terminals_in_mask(seed in any::<u64>(), n_feat in 1usize..12, steps in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sim_values: Vec<f64> = (0..n_feat * n_feat).map(|_| rng.gen()).collect();
        let sim = FeatureSimilarity::from_matrix(n_feat, sim_values).unwrap();
        let mut pop: Vec<_> = (0..6)
            .map(|_| {
                let mask = random_mask(&mut rng, n_feat);
                (ramped_half_and_half(&mask, INIT_DEPTH, &mut rng), mask)
            })
            .collect();
        for _ in 0..steps {
            let a = rng.gen_range(0..pop.len());
            if rng.gen_bool(0.5) {
                let b = rng.gen_range(0..pop.len());
                let out = e_crossover((&pop[a].0, &pop[a].1), (&pop[b].0, &pop[b].1), &sim, &mut rng);
                let (ma, mb) = (pop[a].1.clone(), pop[b].1.clone());
                pop[a] = (out.first, ma);
                pop[b] = (out.second, mb);
            } else {
                pop[a].0 = e_mutation(&pop[a].0, &pop[a].1, MUTATION_DEPTH, &mut rng);
            }
            for (tree, mask) in &pop {
                prop_assert!(tree.respects(mask));
            }
        }
    }

    #[test]
    fn protected_eval_is_total(seed in any::<u64>(), scale in -300i32..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = FeatureMask::full(4);
        let tree = ramped_half_and_half(&mask, (2, 8), &mut rng);
        let row: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(scale)).collect();
        prop_assert!(tree.eval(&row).is_finite());
        let row32: Vec<f32> = row.iter().map(|&v| v as f32).collect();
        prop_assert!(tree.eval(&row32).is_finite());
    }

    #[test]
    fn certainties_lie_in_unit_interval(preds in prop::collection::vec(-1e6f64..1e6, 1..20), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let votes: Vec<u8> = preds.iter().map(|_| rng.gen_range(0..2)).collect();
        for c in certainty_row(&preds, &votes) {
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn equal_certainties_reduce_to_majority(
        rows in prop::collection::vec(prop::collection::vec(0u8..2, 5), 1..30),
        c in 0.01f64..1.0,
    ) {
        let v = VoteMatrix::from_rows(rows.clone());
        let cert = CertaintyMatrix::from_rows(vec![vec![c; 5]; rows.len()]);
        let w = weighted_vote(&v, &cert);
        let m = majority_vote(&v, &mut ChaCha8Rng::seed_from_u64(0));
        // five voters never tie
        prop_assert_eq!(w, m);
    }

    #[test]
    fn pruning_never_hurts_or_empties(
        member_votes in prop::collection::vec(prop::collection::vec(0u8..2, 12), 1..8),
        labels in prop::collection::vec(0u8..2, 12),
    ) {
        let score = |m: &[u64]| {
            let v = VoteMatrix::from_rows((0..12).map(|r| m.iter().map(|&i| member_votes[i as usize][r]).collect()).collect());
            let pred = majority_vote(&v, &mut ChaCha8Rng::seed_from_u64(1));
            pred.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / 12.0
        };
        let members: Vec<u64> = (0..member_votes.len() as u64).collect();
        let f = Forest { accuracy: score(&members), members };
        let p = prune(&f, score);
        prop_assert!(p.accuracy >= f.accuracy);
        prop_assert!(!p.members.is_empty());
        prop_assert_eq!(p.accuracy, score(&p.members));
    }

    #[test]
    fn kruskal_wallis_is_rank_invariant(
        groups in prop::collection::vec(prop::collection::vec(0u8..20, 1..10), 2..5),
    ) {
        let raw: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|&v| f64::from(v)).collect()).collect();
        prop_assume!(raw.iter().map(Vec::len).sum::<usize>() >= 3);
        let warped: Vec<Vec<f64>> = raw.iter().map(|g| g.iter().map(|&v| (v / 3.0).exp() - 7.0).collect()).collect();
        let a = kruskal_wallis(&raw).unwrap();
        let b = kruskal_wallis(&warped).unwrap();
        prop_assert!((a.h - b.h).abs() < 1e-9);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert_eq!(a.df, raw.len() - 1);
    }

    #[test]
    fn chi_square_tail_decreases_in_h(h in 0.0f64..60.0, dh in 0.001f64..5.0, df in 1usize..12) {
        prop_assert!(chi_square_sf(h + dh, df) <= chi_square_sf(h, df));
    }
}

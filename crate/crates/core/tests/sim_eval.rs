mod common;

use defframe::corpus::SimPair;
use defframe::frames::RowMask;
use defframe::sim_eval::{
    common_vocabulary, evaluate, kfold, permutation_pvalue, spearman, BasisCosine, EvalOptions, FrameCosine,
    GoldOracle, Representer,
};
use defframe::Error;
use proptest::prelude::*;
use rand::Rng;

fn distinct_values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1000i32..1000, 3..60).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #[test]
    fn spearman_symmetry_and_sign(x in distinct_values(), seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let y: Vec<f64> = x.iter().map(|_| f64::from(r.gen_range(-5..5))).collect();
        let (Ok(rho), Ok(back)) = (spearman(&x, &y), spearman(&y, &x)) else {
            return Ok(());
        };
        prop_assert_eq!(rho, back);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((spearman(&x, &neg).unwrap() + rho).abs() < 1e-12);
        let squashed: Vec<f64> = x.iter().map(|v| (v / 300.0).tanh()).collect();
        prop_assert!((spearman(&squashed, &y).unwrap() - rho).abs() < 1e-12);
    }

    #[test]
    fn kfold_is_a_partition(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let folds = kfold(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![false; n];
        for f in &folds {
            prop_assert!(f.test.len() == n / k || f.test.len() == n / k + 1);
            for &i in &f.test {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
            let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn gold_oracle_survives_any_filter(keep in proptest::collection::vec(any::<bool>(), 20)) {
        let pairs: Vec<SimPair> = (0..20)
            .map(|i| SimPair { word1: format!("a{i}"), word2: format!("b{i}"), gold: i as f64, gold_norm: (i as f64) / 19.0 })
            .collect();
        let filter = pairs
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .flat_map(|(p, _)| [p.word1.clone(), p.word2.clone()])
            .collect();
        let kept = keep.iter().filter(|k| **k).count();
        let result = evaluate(&pairs, &GoldOracle::new(&pairs), Some(&filter), EvalOptions { n_perm: 1000, seed: 0 });
        if kept >= 3 {
            let result = result.unwrap();
            prop_assert_eq!(result.rho, 1.0);
            prop_assert_eq!(result.n_pairs + result.n_skipped, pairs.len());
        } else {
            prop_assert!(matches!(result, Err(Error::TooFew(_))));
        }
    }
}

#[test]
fn independent_lists_are_not_significant_on_average() {
    let mut r = common::rng(99);
    let mut significant = 0;
    for rep in 0..40 {
        let x: Vec<f64> = (0..30).map(|_| r.gen()).collect();
        let y: Vec<f64> = (0..30).map(|_| r.gen()).collect();
        if permutation_pvalue(&x, &y, 1000, rep).unwrap() < 0.05 {
            significant += 1;
        }
    }
    // expect about 2 of 40 under the null
    assert!(significant <= 8, "{significant} of 40 significant");
}

#[test]
fn intersection_restricts_to_shared_words() {
    let basis = common::random_basis(&["a", "b", "c", "d", "e"], 3, 1);
    let mut r = common::rng(2);
    let frames = vec![
        common::random_encoded(&mut r, "a", 3, &[0, 1]),
        common::random_encoded(&mut r, "b", 3, &[0, 1]),
        common::random_encoded(&mut r, "C", 3, &[0]),
        common::random_encoded(&mut r, "d", 3, &[0, 2]),
    ];
    let basis_rep = BasisCosine::new(&basis);
    let frame_rep = FrameCosine::new(&frames, RowMask::all());
    assert!(frame_rep.contains("c"));
    let reps: [&dyn Representer; 2] = [&basis_rep, &frame_rep];
    let vocab = common_vocabulary(["a", "b", "c", "d", "e"], &reps);
    assert_eq!(vocab.len(), 4);
    assert!(!vocab.contains("e"));

    let pairs: Vec<SimPair> = [("a", "b", 0.1), ("a", "c", 0.4), ("b", "d", 0.8), ("a", "e", 0.3), ("c", "d", 0.6)]
        .iter()
        .map(|(a, b, g)| SimPair { word1: a.to_string(), word2: b.to_string(), gold: *g, gold_norm: *g })
        .collect();
    let opts = EvalOptions { n_perm: 1000, seed: 0 };
    let on_basis = evaluate(&pairs, &basis_rep, Some(&vocab), opts).unwrap();
    let on_frames = evaluate(&pairs, &frame_rep, Some(&vocab), opts).unwrap();
    assert_eq!(on_basis.n_pairs, 4);
    assert_eq!(on_frames.n_pairs, 4);
    assert_eq!(on_basis, evaluate(&pairs, &basis_rep, Some(&vocab), opts).unwrap());
}

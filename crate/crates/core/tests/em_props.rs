use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senseclust_core::em::{self, e_step, m_step, EmConfig, NaiveBayesParams};
use senseclust_core::eval::{best_mapping, ConfusionMatrix};
use senseclust_core::{Exec, FeatureMatrix, FeatureSchema};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn schema(cards: &[u32]) -> FeatureSchema {
    FeatureMatrix::from_codes(vec![cards.iter().map(|c| c - 1).collect()])
        .unwrap()
        .schema()
        .clone()
}

fn data(rows: Vec<Vec<u32>>, cards: &[u32]) -> FeatureMatrix {
    FeatureMatrix::new(schema(cards), rows).unwrap()
}

/// Random valid parameters: priors and per-sense conditionals from
/// normalised uniform draws.
fn random_params(rng: &mut ChaCha8Rng, k: usize, cards: &[u32]) -> NaiveBayesParams {
    let norm = |v: Vec<f64>| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect::<Vec<f64>>()
    };
    let priors = norm((0..k).map(|_| rng.random_range(0.1..1.0)).collect());
    let joints = cards
        .iter()
        .map(|&c| {
            let mut table = Vec::new();
            for p in &priors {
                let cond = norm((0..c).map(|_| rng.random_range(0.05..1.0)).collect());
                table.extend(cond.iter().map(|x| x * p));
            }
            table
        })
        .collect();
    NaiveBayesParams {
        k,
        cardinalities: cards.iter().map(|&c| c as usize).collect(),
        priors,
        joints,
    }
}

/// `P(s) Π_j P(y_j | s)` evaluated directly, without logs.
fn direct_joint(p: &NaiveBayesParams, row: &[u32], s: usize) -> f64 {
    let mut x = p.priors[s];
    for (j, &v) in row.iter().enumerate() {
        x *= p.joint(j, s, v as usize) / p.priors[s];
    }
    x
}

#[test]
fn e_step_matches_enumeration() {
    let cards = [2, 3, 2];
    let params = NaiveBayesParams {
        k: 2,
        cardinalities: vec![2, 3, 2],
        priors: vec![0.4, 0.6],
        joints: vec![
            vec![0.3, 0.1, 0.2, 0.4],
            vec![0.1, 0.1, 0.2, 0.3, 0.2, 0.1],
            vec![0.25, 0.15, 0.45, 0.15],
        ],
    };
    let rows = vec![vec![0, 0, 0], vec![1, 2, 1], vec![0, 1, 1], vec![1, 1, 0]];
    let d = data(rows.clone(), &cards);
    let got = e_step(&params, &d).unwrap();

    let mut loglik = 0.0;
    let mut counts = vec![vec![0.0; 2 * 3]; 3];
    let mut by_sense = [0.0; 2];
    for (i, row) in rows.iter().enumerate() {
        let joint: Vec<f64> = (0..2).map(|s| direct_joint(&params, row, s)).collect();
        let total: f64 = joint.iter().sum();
        loglik += total.ln();
        for s in 0..2 {
            let post = joint[s] / total;
            assert!((got.posteriors[i][s] - post).abs() < 1e-12);
            by_sense[s] += post;
            for (j, &v) in row.iter().enumerate() {
                counts[j][s * cards[j] as usize + v as usize] += post;
            }
        }
    }
    assert!((got.log_likelihood - loglik).abs() < 1e-12);
    for s in 0..2 {
        assert!((got.counts.by_sense[s] - by_sense[s]).abs() < 1e-12);
    }
    for j in 0..3 {
        for (a, b) in got.counts.joint[j].iter().zip(&counts[j]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    // one re-estimate divides the expected counts by N
    let next = m_step(&got.counts, 4).unwrap();
    for s in 0..2 {
        assert!((next.priors[s] - by_sense[s] / 4.0).abs() < 1e-12);
    }
    for j in 0..3 {
        for (a, b) in next.joints[j].iter().zip(&counts[j]) {
            assert!((a - b / 4.0).abs() < 1e-12);
        }
    }
    next.check(1e-12).unwrap();
}

#[test]
fn generator_matches_its_model() {
    let cards = [5, 5, 3, 2];
    let s = em::generate(2, &schema(&cards), 10_000, 0.6, 42).unwrap();
    for (j, &card) in cards.iter().enumerate() {
        let card = card as usize;
        let mut observed = vec![0.0; 2 * card];
        for (row, &label) in s.data.rows().zip(&s.labels) {
            observed[label * card + row[j] as usize] += 1.0;
        }
        let mut chi2 = 0.0;
        for label in 0..2 {
            let n_label: f64 = observed[label * card..(label + 1) * card].iter().sum();
            for v in 0..card {
                let expected = n_label * s.model.conditionals[j][label * card + v];
                chi2 += (observed[label * card + v] - expected).powi(2) / expected;
            }
        }
        let dof = (2 * (card - 1)) as f64;
        let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
        assert!(p > 1e-3, "feature {j}: chi2 {chi2}, p {p}");
    }
    let ones = s.labels.iter().filter(|&&l| l == 1).count() as f64;
    assert!((ones / 10_000.0 - 0.5).abs() < 0.02);
}

#[test]
fn synthetic_recovery_with_full_separation() {
    let s = em::generate(3, &schema(&[5, 5, 5, 2]), 300, 1.0, 5).unwrap();
    let r = em::fit(&s.data, 3, 1, &EmConfig::default()).unwrap();
    let cm = ConfusionMatrix::from_labels(vec!["a".into(), "b".into(), "c".into()], 3, &s.labels, &r.assignment).unwrap();
    // with three senses and a binary feature, two senses share that mode, but
    // the remaining features still separate them
    assert_eq!(best_mapping(&cm).unwrap().agreement, 300);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_space_posteriors_match_direct(seed: u64, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards = [3u32, 4, 2, 5];
        let params = random_params(&mut rng, k, &cards);
        let rows: Vec<Vec<u32>> = (0..20)
            .map(|_| cards.iter().map(|&c| rng.random_range(0..c)).collect())
            .collect();
        let got = e_step(&params, &data(rows.clone(), &cards)).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let joint: Vec<f64> = (0..k).map(|s| direct_joint(&params, row, s)).collect();
            let total: f64 = joint.iter().sum();
            for s in 0..k {
                prop_assert!((got.posteriors[i][s] - joint[s] / total).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn em_invariants(seed: u64, n in 1usize..200, q in 1usize..=6, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards: Vec<u32> = (0..q).map(|_| rng.random_range(1..6)).collect();
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|_| cards.iter().map(|&c| rng.random_range(0..c)).collect())
            .collect();
        let d = data(rows, &cards);
        let mut failures = Vec::new();
        let r = em::fit_with(&d, k, seed, &EmConfig { max_iter: 200, tol: 1e-8 }, Exec::Sequential, |it, p| {
            if let Err(e) = p.check(1e-9) {
                failures.push(format!("iteration {it}: {e}"));
            }
            let es = e_step(p, &d).unwrap();
            for j in 0..q {
                let card = cards[j] as usize;
                for v in 0..card {
                    let expected: f64 = (0..k).map(|s| es.counts.joint[j][s * card + v]).sum();
                    let actual = d.rows().filter(|r| r[j] as usize == v).count() as f64;
                    if (expected - actual).abs() > 1e-9 {
                        failures.push(format!("iteration {it}: marginal {expected} vs {actual}"));
                    }
                }
            }
        }).unwrap();
        prop_assert!(failures.is_empty(), "{:?}", failures);
        prop_assert_eq!(r.loglik_trace.len(), r.iterations + 1);
        for w in r.loglik_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "log-likelihood fell from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn fit_is_exec_independent(seed: u64) {
        let s = em::generate(2, &schema(&[4, 4, 3]), 150, 0.5, seed).unwrap();
        let cfg = EmConfig::default();
        let a = em::fit_with(&s.data, 2, seed, &cfg, Exec::Sequential, |_, _| {}).unwrap();
        let b = em::fit_with(&s.data, 2, seed, &cfg, Exec::Parallel, |_, _| {}).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }
}

use proptest::prelude::*;
use senseclust_core::dissim::{self, build_with, DissimilarityMatrix};
use senseclust_core::{Exec, FeatureMatrix};

fn rows_strategy(max_n: usize, q: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    proptest::collection::vec(proptest::collection::vec(0u32..4, q), 1..max_n)
}

#[test]
fn four_row_example() {
    let m = FeatureMatrix::from_codes(vec![
        vec![10, 2, 5],
        vec![1, 2, 1],
        vec![3, 2, 5],
        vec![10, 2, 5],
    ])
    .unwrap();
    let d = dissim::build(&m);
    assert_eq!(
        d.to_square(),
        vec![vec![0, 2, 1, 0], vec![2, 0, 2, 2], vec![1, 2, 0, 1], vec![0, 2, 1, 0]]
    );
    assert_eq!(d.row_vectors()[0], vec![0.0, 2.0, 1.0, 0.0]);
}

proptest! {
    #[test]
    fn matches_double_loop_recount(rows in rows_strategy(12, 6)) {
        let d = dissim::build(&FeatureMatrix::from_codes(rows.clone()).unwrap());
        let n = rows.len();
        for i in 0..n {
            for j in 0..n {
                let mut c = 0;
                for f in 0..6 {
                    if rows[i][f] != rows[j][f] {
                        c += 1;
                    }
                }
                prop_assert_eq!(d.get(i, j), c);
            }
        }
    }

    #[test]
    fn symmetric_bounded_zero_diagonal(rows in rows_strategy(100, 5)) {
        let m = FeatureMatrix::from_codes(rows).unwrap();
        let d = build_with(&m, Exec::Parallel);
        prop_assert_eq!(&d, &build_with(&m, Exec::Sequential));
        let v = d.row_vectors();
        for i in 0..d.len() {
            prop_assert_eq!(d.get(i, i), 0);
            for j in 0..d.len() {
                prop_assert_eq!(v[i][j], v[j][i]);
                prop_assert!(d.get(i, j) <= 5);
            }
        }
        prop_assert_eq!(DissimilarityMatrix::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn permutation_equivariant(rows in rows_strategy(15, 4), seed: u64) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = rows.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Vec<u32>> = perm.iter().map(|&p| rows[p].clone()).collect();
        let d = dissim::build(&FeatureMatrix::from_codes(rows).unwrap());
        let dp = dissim::build(&FeatureMatrix::from_codes(permuted).unwrap());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(dp.get(i, j), d.get(perm[i], perm[j]));
            }
        }
    }
}

//! Split indices checked against values produced by a separate
//! implementation of the documented shuffle.

use muboost_core::rng::permutation;
use muboost_core::split_indices;

#[test]
fn small_splits_match_reference() {
    let cases: [(usize, f64, i64, &[usize]); 2] =
        [(20, 0.25, 7, &[0, 3, 6, 8, 14]), (10, 0.3, -3, &[1, 4, 5])];
    for (n, frac, seed, expected) in cases {
        let (train, dev) = split_indices(n, frac, seed).unwrap();
        assert_eq!(dev, expected);
        assert_eq!(train.len() + dev.len(), n);
        assert!(train.iter().all(|i| !dev.contains(i)));
    }
}

#[test]
fn large_split_matches_reference_summary() {
    let (_, dev) = split_indices(1000, 0.2, 7).unwrap();
    assert_eq!(dev.len(), 200);
    assert_eq!(&dev[..12], &[0, 2, 4, 29, 30, 35, 37, 39, 46, 52, 57, 65]);
    assert_eq!(dev.iter().sum::<usize>(), 103_109);
}

#[test]
fn permutation_matches_reference() {
    assert_eq!(permutation(8, 0), vec![4, 6, 5, 1, 2, 3, 7, 0]);
}

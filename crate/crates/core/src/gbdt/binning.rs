//! Quantile borders for numeric features.
//!
//! A value's bin is the number of borders strictly below it. Splitting at
//! threshold bin `t` sends a row right iff its bin exceeds `t`, which is the
//! same as `value > borders[t]`.

/// Borders for one column of training values; at most `max_bins - 1` of them.
pub fn compute_borders(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() < 2 {
        return Vec::new();
    }
    let between = |k: usize| {
        let (lo, hi) = (distinct[k].0, distinct[k + 1].0);
        let mid = lo + (hi - lo) / 2.0;
        if mid < hi {
            mid
        } else {
            lo
        }
    };
    if distinct.len() <= max_bins {
        return (0..distinct.len() - 1).map(between).collect();
    }
    // Cut after the first distinct value whose cumulative count reaches
    // each target `j * n / max_bins`.
    let n = values.len();
    let mut borders = Vec::with_capacity(max_bins - 1);
    let mut j = 1usize;
    let mut cumulative = 0usize;
    for (k, &(_, count)) in distinct[..distinct.len() - 1].iter().enumerate() {
        cumulative += count;
        if j < max_bins && cumulative * max_bins >= j * n {
            borders.push(between(k));
            while j < max_bins && j * n <= cumulative * max_bins {
                j += 1;
            }
        }
    }
    borders
}

#[inline]
pub fn bin_of(borders: &[f64], value: f64) -> u8 {
    borders.partition_point(|&b| b < value) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn few_distinct_values_get_midpoints() {
        assert_eq!(compute_borders(&[3.0, 1.0, 2.0, 1.0], 255), vec![1.5, 2.5]);
        assert!(compute_borders(&[4.0; 10], 255).is_empty());
        assert!(compute_borders(&[], 255).is_empty());
    }

    #[test]
    fn quantile_borders_respect_bin_cap() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let b = compute_borders(&values, 4);
        assert_eq!(b, vec![249.5, 499.5, 749.5]);
    }

    #[test]
    fn adjacent_floats_keep_order() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let b = compute_borders(&[lo, hi], 255);
        assert_eq!(bin_of(&b, lo), 0);
        assert_eq!(bin_of(&b, hi), 1);
    }

    proptest! {
        #[test]
        fn bins_are_monotone_and_bounded(
            values in proptest::collection::vec(-1e6f64..1e6, 1..500),
            max_bins in 2usize..=255,
        ) {
            let b = compute_borders(&values, max_bins);
            prop_assert!(b.len() < max_bins);
            prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
            let mut sorted = values.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            for w in sorted.windows(2) {
                prop_assert!(bin_of(&b, w[0]) <= bin_of(&b, w[1]));
            }
        }

        #[test]
        fn distinct_values_get_distinct_bins_under_cap(
            values in proptest::collection::vec(-1e3f64..1e3, 1..200),
        ) {
            let b = compute_borders(&values, 255);
            let mut sorted = values.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            sorted.dedup();
            for w in sorted.windows(2) {
                prop_assert!(bin_of(&b, w[0]) < bin_of(&b, w[1]));
            }
        }
    }
}

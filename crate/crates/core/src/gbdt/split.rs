//! Histogram split search for one level of an oblivious tree.
//!
//! Every candidate `(feature, threshold)` is scored by the sum, over all
//! current leaves and both children, of `G^2 / (H + l2)`. Histograms are
//! accumulated per feature in ascending row order and per-leaf scores are
//! summed in ascending leaf order, so the result does not depend on how
//! features are distributed across worker threads.

use rayon::prelude::*;

use super::binning::{bin_of, compute_borders};
use super::matrix::FeatureMatrix;

/// Training matrix in the layout the split search wants.
#[derive(Debug)]
pub(crate) struct BinnedData {
    pub n_rows: usize,
    pub n_numeric: usize,
    /// `numeric_bins[f][row]`.
    pub numeric_bins: Vec<Vec<u8>>,
    pub numeric_n_bins: Vec<usize>,
    /// `bow_rows[j]`: ascending rows in which boolean feature `j` is set.
    pub bow_rows: Vec<Vec<u32>>,
}

impl BinnedData {
    pub fn build(m: &FeatureMatrix, max_bins: usize) -> (Self, Vec<Vec<f64>>) {
        let n_rows = m.n_rows();
        let borders: Vec<Vec<f64>> = (0..m.n_numeric())
            .into_par_iter()
            .map(|f| {
                let col: Vec<f64> = (0..n_rows).map(|r| m.numeric(r, f)).collect();
                compute_borders(&col, max_bins)
            })
            .collect();
        let numeric_bins = (0..m.n_numeric())
            .into_par_iter()
            .map(|f| {
                (0..n_rows)
                    .map(|r| bin_of(&borders[f], m.numeric(r, f)))
                    .collect()
            })
            .collect();
        let numeric_n_bins = borders.iter().map(|b| b.len() + 1).collect();
        let mut bow_rows = vec![Vec::new(); m.bow_width()];
        for r in 0..n_rows {
            for &id in m.bow(r).ids() {
                bow_rows[id as usize].push(r as u32);
            }
        }
        (
            Self {
                n_rows,
                n_numeric: m.n_numeric(),
                numeric_bins,
                numeric_n_bins,
                bow_rows,
            },
            borders,
        )
    }

    pub fn n_features(&self) -> usize {
        self.n_numeric + self.bow_rows.len()
    }

    /// Whether the feature can separate any two training rows.
    pub fn is_splittable(&self, feature: usize) -> bool {
        if feature < self.n_numeric {
            self.numeric_n_bins[feature] >= 2
        } else {
            let n = self.bow_rows[feature - self.n_numeric].len();
            n > 0 && n < self.n_rows
        }
    }

    /// Sets bit `level` of `leaf_of[row]` for rows sent right by the split.
    pub fn apply_split(&self, feature: usize, threshold: u16, level: usize, leaf_of: &mut [u32]) {
        let bit = 1u32 << level;
        if feature < self.n_numeric {
            let bins = &self.numeric_bins[feature];
            for (leaf, &b) in leaf_of.iter_mut().zip(bins) {
                if b as u16 > threshold {
                    *leaf |= bit;
                }
            }
        } else {
            for &r in &self.bow_rows[feature - self.n_numeric] {
                leaf_of[r as usize] |= bit;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub feature: usize,
    pub threshold: u16,
    pub score: f64,
}

#[inline]
fn term(g: f64, h: f64, l2: f64) -> f64 {
    let d = h + l2;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

pub(crate) struct LevelInput<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub leaf_of: &'a [u32],
    pub n_leaves: usize,
    pub l2: f64,
}

impl LevelInput<'_> {
    fn leaf_totals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut g = vec![0.0; self.n_leaves];
        let mut h = vec![0.0; self.n_leaves];
        for ((&leaf, &gi), &hi) in self.leaf_of.iter().zip(self.grad).zip(self.hess) {
            g[leaf as usize] += gi;
            h[leaf as usize] += hi;
        }
        (g, h)
    }
}

fn numeric_candidate(
    data: &BinnedData,
    feature: usize,
    input: &LevelInput<'_>,
    totals: &(Vec<f64>, Vec<f64>),
) -> Option<Candidate> {
    let n_bins = data.numeric_n_bins[feature];
    let bins = &data.numeric_bins[feature];
    let mut hist = vec![(0.0f64, 0.0f64); input.n_leaves * n_bins];
    for row in 0..data.n_rows {
        let cell = &mut hist[input.leaf_of[row] as usize * n_bins + bins[row] as usize];
        cell.0 += input.grad[row];
        cell.1 += input.hess[row];
    }
    let mut scores = vec![0.0; n_bins - 1];
    for leaf in 0..input.n_leaves {
        let (tg, th) = (totals.0[leaf], totals.1[leaf]);
        let (mut lg, mut lh) = (0.0, 0.0);
        for (t, score) in scores.iter_mut().enumerate() {
            let cell = hist[leaf * n_bins + t];
            lg += cell.0;
            lh += cell.1;
            *score += term(lg, lh, input.l2) + term(tg - lg, th - lh, input.l2);
        }
    }
    let mut best: Option<Candidate> = None;
    for (t, &score) in scores.iter().enumerate() {
        if best.is_none_or(|b| score > b.score) {
            best = Some(Candidate {
                feature,
                threshold: t as u16,
                score,
            });
        }
    }
    best
}

fn bow_candidate(
    data: &BinnedData,
    feature: usize,
    input: &LevelInput<'_>,
    totals: &(Vec<f64>, Vec<f64>),
    scratch: &mut Vec<(f64, f64)>,
) -> Candidate {
    scratch.clear();
    scratch.resize(input.n_leaves, (0.0, 0.0));
    for &r in &data.bow_rows[feature - data.n_numeric] {
        let r = r as usize;
        let cell = &mut scratch[input.leaf_of[r] as usize];
        cell.0 += input.grad[r];
        cell.1 += input.hess[r];
    }
    let mut score = 0.0;
    for (leaf, &(pg, ph)) in scratch.iter().enumerate() {
        let (tg, th) = (totals.0[leaf], totals.1[leaf]);
        score += term(tg - pg, th - ph, input.l2) + term(pg, ph, input.l2);
    }
    Candidate {
        feature,
        threshold: 0,
        score,
    }
}

/// Best split for the level, or `None` when no feature is splittable.
///
/// Equal scores are resolved by the smaller `rank[feature]`, then by the
/// smaller threshold.
pub(crate) fn best_split(
    data: &BinnedData,
    input: &LevelInput<'_>,
    rank: &[usize],
) -> Option<Candidate> {
    let totals = input.leaf_totals();
    let per_feature: Vec<Option<Candidate>> = (0..data.n_features())
        .into_par_iter()
        .map_init(Vec::new, |scratch, f| {
            if !data.is_splittable(f) {
                None
            } else if f < data.n_numeric {
                numeric_candidate(data, f, input, &totals)
            } else {
                Some(bow_candidate(data, f, input, &totals, scratch))
            }
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for c in per_feature.into_iter().flatten() {
        let better = match best {
            None => true,
            Some(b) => {
                c.score > b.score || (c.score == b.score && rank[c.feature] < rank[b.feature])
            }
        };
        if better {
            best = Some(c);
        }
    }
    best
}

//! Gradient-boosted oblivious trees for binary classification.

mod binning;
mod loss;
mod matrix;
mod split;
mod train;

pub use binning::{bin_of, compute_borders};
pub use loss::{grad_hess, logloss, mean_logloss, sigmoid};
pub use matrix::{FeatureMatrix, FeatureRow};
pub use train::{train, OverfittingDetector, StopReason, TrainLog, TrainLogEntry};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtParams {
    pub iterations: usize,
    pub learning_rate: f64,
    pub depth: usize,
    pub od_wait: usize,
    pub l2_leaf_reg: f64,
    pub max_bins: usize,
    pub seed: i64,
}

impl GbdtParams {
    pub const MAX_DEPTH: usize = 16;

    /// Settings that train in seconds to minutes on a laptop.
    pub fn desk() -> Self {
        Self {
            iterations: 400,
            learning_rate: 0.35,
            depth: 6,
            od_wait: 100,
            l2_leaf_reg: 3.0,
            max_bins: 255,
            seed: 0,
        }
    }

    /// The competition configuration: 15000 rounds, depth 12.
    pub fn full() -> Self {
        Self {
            iterations: 15_000,
            learning_rate: 0.35,
            depth: 12,
            od_wait: 2_000,
            l2_leaf_reg: 3.0,
            max_bins: 255,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.depth == 0 || self.depth > Self::MAX_DEPTH {
            return Err(Error::invalid(format!(
                "depth must lie in [1, {}]",
                Self::MAX_DEPTH
            )));
        }
        if !(self.l2_leaf_reg >= 0.0 && self.l2_leaf_reg.is_finite()) {
            return Err(Error::invalid("l2_leaf_reg must be non-negative"));
        }
        if !(2..=255).contains(&self.max_bins) {
            return Err(Error::invalid("max_bins must lie in [2, 255]"));
        }
        Ok(())
    }
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self::desk()
    }
}

/// One level test of an oblivious tree. Boolean features use threshold 0
/// (present goes right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub feature: u32,
    pub threshold_bin: u16,
}

/// Tree whose nodes at each depth share one test. Leaf index bit `d` is set
/// when the row goes right at level `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousTree {
    pub splits: Vec<Split>,
    pub leaf_values: Vec<f64>,
}

impl ObliviousTree {
    pub fn depth(&self) -> usize {
        self.splits.len()
    }

    fn leaf_index(&self, row: FeatureRow<'_>, borders: &[Vec<f64>]) -> usize {
        let n_numeric = row.numeric.len();
        let mut leaf = 0usize;
        for (level, s) in self.splits.iter().enumerate() {
            let f = s.feature as usize;
            let right = if f < n_numeric {
                row.numeric[f] > borders[f][s.threshold_bin as usize]
            } else {
                row.bow.contains((f - n_numeric) as u32)
            };
            leaf |= (right as usize) << level;
        }
        leaf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub base_score: f64,
    pub trees: Vec<ObliviousTree>,
    pub n_numeric: usize,
    pub n_bow: usize,
    /// Quantile borders per numeric feature, fitted on the training data.
    pub borders: Vec<Vec<f64>>,
    pub params: GbdtParams,
    /// Last tree index used for prediction.
    pub best_iteration: usize,
}

impl GbdtModel {
    /// Number of trees that contribute to predictions.
    pub fn used_trees(&self) -> usize {
        self.trees.len().min(self.best_iteration + 1)
    }

    fn check_row(&self, row: FeatureRow<'_>) -> Result<()> {
        if row.numeric.len() != self.n_numeric {
            return Err(Error::DimensionMismatch(format!(
                "row has {} numeric features, model expects {}",
                row.numeric.len(),
                self.n_numeric
            )));
        }
        if let Some(&id) = row.bow.ids().last() {
            if id as usize >= self.n_bow {
                return Err(Error::DimensionMismatch(format!(
                    "bag-of-words id {id} outside model width {}",
                    self.n_bow
                )));
            }
        }
        Ok(())
    }

    /// Validates invariants that a deserialized model must satisfy.
    pub(crate) fn check_structure(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Format(m));
        if !self.base_score.is_finite() {
            return bad("non-finite base score".into());
        }
        if self.borders.len() != self.n_numeric {
            return bad("border table does not match numeric width".into());
        }
        let width = self.n_numeric + self.n_bow;
        for (i, t) in self.trees.iter().enumerate() {
            if t.leaf_values.len() != 1usize << t.splits.len() {
                return bad(format!("tree {i}: leaf count does not match depth"));
            }
            for s in &t.splits {
                let f = s.feature as usize;
                if f >= width {
                    return bad(format!("tree {i}: feature {f} out of range"));
                }
                if f < self.n_numeric && s.threshold_bin as usize >= self.borders[f].len() {
                    return bad(format!("tree {i}: threshold bin out of range"));
                }
            }
        }
        Ok(())
    }

    pub fn predict_raw(&self, row: FeatureRow<'_>) -> Result<f64> {
        self.check_row(row)?;
        let mut raw = self.base_score;
        for tree in &self.trees[..self.used_trees()] {
            raw += tree.leaf_values[tree.leaf_index(row, &self.borders)];
        }
        Ok(raw)
    }

    pub fn predict_proba(&self, row: FeatureRow<'_>) -> Result<f64> {
        self.predict_raw(row).map(sigmoid)
    }

    pub fn predict_proba_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        (0..m.n_rows())
            .into_par_iter()
            .map(|r| self.predict_proba(m.row(r)))
            .collect()
    }
}

use std::fmt::Write as _;

use rayon::prelude::*;

use super::loss::{grad_hess, logloss, mean_logloss, sigmoid};
use super::matrix::FeatureMatrix;
use super::split::{best_split, BinnedData, LevelInput};
use super::{GbdtModel, GbdtParams, ObliviousTree, Split};
use crate::error::{Error, Result};
use crate::eval::f1_at_threshold;
use crate::rng;

/// Decision threshold used for the training and dev F1 curves.
pub const EVAL_THRESHOLD: f64 = 0.5;

/// Halvings tried on a leaf whose Newton step would raise its loss.
const MAX_STEP_HALVINGS: usize = 12;

const TIE_BREAK_SALT: i64 = 0x7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogEntry {
    pub iteration: usize,
    pub train_logloss: f64,
    pub train_f1: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    IterationLimit,
    /// Dev F1 did not improve for `od_wait` iterations.
    OverfittingDetector,
    /// No feature separates any two training rows.
    NoSplits,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::IterationLimit => "iteration-limit",
            StopReason::OverfittingDetector => "overfitting-detector",
            StopReason::NoSplits => "no-splits",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// Train log-loss of the base score alone.
    pub initial_logloss: f64,
    pub entries: Vec<TrainLogEntry>,
    pub stop: StopReason,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "iteration,train_logloss,train_f1,dev_f1";

    /// CSV rows without the header; `prefix` is prepended to every row.
    pub fn csv_rows(&self, prefix: &str) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let dev = e.dev_f1.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{prefix}{},{},{},{dev}",
                e.iteration, e.train_logloss, e.train_f1
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows(""))
    }
}

/// Early stopping on a metric where larger is better. Ties keep the
/// earliest iteration.
#[derive(Debug, Clone)]
pub struct OverfittingDetector {
    wait: usize,
    best: Option<(usize, f64)>,
}

impl OverfittingDetector {
    pub fn new(wait: usize) -> Self {
        Self { wait, best: None }
    }

    /// Records the metric for `iteration`; returns true when training should stop.
    pub fn update(&mut self, iteration: usize, value: f64) -> bool {
        match self.best {
            Some((_, best)) if value <= best => {}
            _ => self.best = Some((iteration, value)),
        }
        let (best_iteration, _) = self.best.unwrap();
        iteration > best_iteration && iteration - best_iteration >= self.wait
    }

    pub fn best_iteration(&self) -> Option<usize> {
        self.best.map(|(i, _)| i)
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best.map(|(_, v)| v)
    }
}

fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|&l| l > 1) {
        Some(r) => Err(Error::LabelDomain {
            row: r,
            value: labels[r].to_string(),
        }),
        None => Ok(()),
    }
}

fn check_finite(m: &FeatureMatrix) -> Result<()> {
    match m.first_non_finite() {
        Some((row, feature)) => Err(Error::NonFinite { row, feature }),
        None => Ok(()),
    }
}

fn f1_of_raw(raw: &[f64], labels: &[u8]) -> f64 {
    let probs: Vec<f64> = raw.iter().map(|&z| sigmoid(z)).collect();
    f1_at_threshold(labels, &probs, EVAL_THRESHOLD)
        .map(|(f1, _)| f1)
        .unwrap_or(0.0)
}

/// Newton leaf values, each halved until it does not raise its leaf's loss.
fn leaf_values(
    raw: &[f64],
    labels: &[u8],
    grad: &[f64],
    hess: &[f64],
    leaf_of: &[u32],
    n_leaves: usize,
    params: &GbdtParams,
) -> Vec<f64> {
    let mut g = vec![0.0; n_leaves];
    let mut h = vec![0.0; n_leaves];
    let mut before = vec![0.0; n_leaves];
    for i in 0..raw.len() {
        let leaf = leaf_of[i] as usize;
        g[leaf] += grad[i];
        h[leaf] += hess[i];
        before[leaf] += logloss(raw[i], labels[i]);
    }
    let mut values: Vec<f64> = g
        .iter()
        .zip(&h)
        .map(|(&g, &h)| {
            let d = h + params.l2_leaf_reg;
            if d > 0.0 {
                -params.learning_rate * g / d
            } else {
                0.0
            }
        })
        .collect();
    let mut pending: Vec<bool> = values.iter().map(|&v| v != 0.0).collect();
    for _ in 0..=MAX_STEP_HALVINGS {
        if !pending.iter().any(|&p| p) {
            break;
        }
        let mut after = vec![0.0; n_leaves];
        for i in 0..raw.len() {
            let leaf = leaf_of[i] as usize;
            if pending[leaf] {
                after[leaf] += logloss(raw[i] + values[leaf], labels[i]);
            }
        }
        for leaf in 0..n_leaves {
            if !pending[leaf] {
                continue;
            }
            if after[leaf] <= before[leaf] {
                pending[leaf] = false;
            } else {
                values[leaf] *= 0.5;
            }
        }
    }
    for (v, p) in values.iter_mut().zip(&pending) {
        if *p {
            *v = 0.0;
        }
    }
    values
}

/// Trains a boosted ensemble of oblivious trees with logistic loss.
///
/// With a dev set, dev F1 at threshold 0.5 is evaluated after every tree and
/// training stops once it has not improved for `od_wait` iterations; the
/// model then predicts with trees up to the best dev iteration.
pub fn train(
    features: &FeatureMatrix,
    labels: &[u8],
    dev: Option<(&FeatureMatrix, &[u8])>,
    params: &GbdtParams,
) -> Result<(GbdtModel, TrainLog)> {
    params.validate()?;
    let n = features.n_rows();
    if n == 0 {
        return Err(Error::invalid("training requires at least one row"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows but {} labels",
            labels.len()
        )));
    }
    check_labels(labels)?;
    check_finite(features)?;
    if let Some((dm, dl)) = dev {
        if dm.n_numeric() != features.n_numeric() || dm.bow_width() != features.bow_width() {
            return Err(Error::DimensionMismatch(
                "dev feature space differs from training".into(),
            ));
        }
        if dl.len() != dm.n_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} dev rows but {} dev labels",
                dm.n_rows(),
                dl.len()
            )));
        }
        check_labels(dl)?;
        check_finite(dm)?;
    }

    let positive_rate = labels.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
    let p = positive_rate.clamp(1e-6, 1.0 - 1e-6);
    let base_score = (p / (1.0 - p)).ln();

    let (data, borders) = BinnedData::build(features, params.max_bins);
    let n_features = data.n_features();
    let mut rank = vec![0usize; n_features];
    for (pos, f) in rng::permutation(n_features, params.seed ^ TIE_BREAK_SALT)
        .into_iter()
        .enumerate()
    {
        rank[f] = pos;
    }

    let mut raw = vec![base_score; n];
    let mut log = TrainLog {
        initial_logloss: mean_logloss(&raw, labels),
        entries: Vec::new(),
        stop: StopReason::IterationLimit,
    };
    let mut model = GbdtModel {
        base_score,
        trees: Vec::new(),
        n_numeric: features.n_numeric(),
        n_bow: features.bow_width(),
        borders,
        params: params.clone(),
        best_iteration: 0,
    };
    if !(0..n_features).any(|f| data.is_splittable(f)) {
        log.stop = StopReason::NoSplits;
        return Ok((model, log));
    }

    let mut dev_raw = dev.map(|(dm, _)| vec![base_score; dm.n_rows()]);
    let mut detector = OverfittingDetector::new(params.od_wait);
    let n_leaves = 1usize << params.depth;

    for iteration in 0..params.iterations {
        let (grad, hess): (Vec<f64>, Vec<f64>) = raw
            .par_iter()
            .zip(labels.par_iter())
            .map(|(&z, &y)| grad_hess(z, y))
            .unzip();

        let mut leaf_of = vec![0u32; n];
        let mut splits = Vec::with_capacity(params.depth);
        for level in 0..params.depth {
            let input = LevelInput {
                grad: &grad,
                hess: &hess,
                leaf_of: &leaf_of,
                n_leaves: 1 << level,
                l2: params.l2_leaf_reg,
            };
            let best = best_split(&data, &input, &rank)
                .expect("a splittable feature exists at every level");
            data.apply_split(best.feature, best.threshold, level, &mut leaf_of);
            splits.push(Split {
                feature: best.feature as u32,
                threshold_bin: best.threshold,
            });
        }

        let values = leaf_values(&raw, labels, &grad, &hess, &leaf_of, n_leaves, params);
        raw.par_iter_mut()
            .zip(leaf_of.par_iter())
            .for_each(|(z, &leaf)| *z += values[leaf as usize]);
        let tree = ObliviousTree {
            splits,
            leaf_values: values,
        };

        let dev_f1 = match (dev, dev_raw.as_mut()) {
            (Some((dm, dl)), Some(dr)) => {
                dr.par_iter_mut().enumerate().for_each(|(r, z)| {
                    *z += tree.leaf_values[tree.leaf_index(dm.row(r), &model.borders)];
                });
                Some(f1_of_raw(dr, dl))
            }
            _ => None,
        };
        model.trees.push(tree);
        log.entries.push(TrainLogEntry {
            iteration,
            train_logloss: mean_logloss(&raw, labels),
            train_f1: f1_of_raw(&raw, labels),
            dev_f1,
        });
        if let Some(f1) = dev_f1 {
            if detector.update(iteration, f1) {
                log.stop = StopReason::OverfittingDetector;
                break;
            }
        }
    }

    model.best_iteration = match detector.best_iteration() {
        Some(best) if dev.is_some() => best,
        _ => model.trees.len().saturating_sub(1),
    };
    Ok((model, log))
}

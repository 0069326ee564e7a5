//! Binary F1 and decision-threshold sweeps.
//!
//! A row is predicted positive when its probability is `>=` the threshold;
//! the same rule is used for early stopping, sweeps and prediction output.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_SWEEP_MIN: f64 = 0.45;
pub const DEFAULT_SWEEP_MAX: f64 = 0.55;
pub const DEFAULT_SWEEP_STEP: f64 = 0.01;

/// Slack allowed when deciding whether the last grid point is inside the range.
const GRID_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    /// Harmonic mean of precision and recall; zero when there are no true positives.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            return 0.0;
        }
        let (p, r) = (self.precision(), self.recall());
        2.0 * p * r / (p + r)
    }
}

pub fn confusion_at_threshold(labels: &[u8], probs: &[f64], t: f64) -> Result<ConfusionCounts> {
    if labels.len() != probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels but {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(probs) {
        match (p >= t, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn f1_at_threshold(labels: &[u8], probs: &[f64], t: f64) -> Result<(f64, ConfusionCounts)> {
    let c = confusion_at_threshold(labels, probs, t)?;
    Ok((c.f1(), c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<(f64, f64)>,
    pub best_threshold: f64,
    pub best_f1: f64,
}

/// Grid points `t_min + k * step` up to `t_max`, each rounded to 12
/// decimal places so that e.g. `0.45 + 3 * 0.01` is exactly `0.48`.
pub fn threshold_grid(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(t_min.is_finite() && t_max.is_finite() && step.is_finite()) {
        return Err(Error::invalid("sweep bounds and step must be finite"));
    }
    if t_min > t_max {
        return Err(Error::invalid(format!(
            "sweep min {t_min} exceeds max {t_max}"
        )));
    }
    if step <= 0.0 {
        return Err(Error::invalid(format!(
            "sweep step {step} must be positive"
        )));
    }
    let mut grid = Vec::new();
    for k in 0usize.. {
        let t = t_min + k as f64 * step;
        if t > t_max + GRID_SLACK {
            break;
        }
        grid.push((t * 1e12).round() / 1e12);
    }
    Ok(grid)
}

pub fn sweep_threshold(
    labels: &[u8],
    probs: &[f64],
    t_min: f64,
    t_max: f64,
    step: f64,
) -> Result<SweepResult> {
    let thresholds = threshold_grid(t_min, t_max, step)?;
    let mut grid = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        grid.push((t, f1_at_threshold(labels, probs, t)?.0));
    }
    let (best_threshold, best_f1) = grid
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, (t, f)| match best {
            Some((_, bf)) if f <= bf => best,
            _ => Some((t, f)),
        })
        .expect("grid contains t_min");
    Ok(SweepResult {
        grid,
        best_threshold,
        best_f1,
    })
}

impl SweepResult {
    /// `threshold,f1` rows followed by a `# best_threshold=..,best_f1=..` summary line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,f1\n");
        for (t, f) in &self.grid {
            let _ = writeln!(s, "{t},{f}");
        }
        let _ = writeln!(
            s,
            "# best_threshold={},best_f1={}",
            self.best_threshold, self.best_f1
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_f1_case() {
        let (f1, c) = f1_at_threshold(&[1, 0, 0, 1], &[0.9, 0.8, 0.1, 0.7], 0.5).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (2, 1, 1, 0));
        assert!((c.precision() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.recall(), 1.0);
        assert!((f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_empty_predictions() {
        assert_eq!(f1_at_threshold(&[1, 0], &[1.0, 0.0], 0.5).unwrap().0, 1.0);
        let (f1, c) = f1_at_threshold(&[1, 1, 0], &[0.1, 0.2, 0.3], 0.5).unwrap();
        assert_eq!(f1, 0.0);
        assert_eq!(c.tp + c.fp, 0);
    }

    #[test]
    fn threshold_is_inclusive() {
        let (_, c) = f1_at_threshold(&[1], &[0.5], 0.5).unwrap();
        assert_eq!(c.tp, 1);
    }

    #[test]
    fn length_mismatch() {
        assert!(f1_at_threshold(&[1], &[0.5, 0.2], 0.5).is_err());
    }

    #[test]
    fn default_grid_has_eleven_exact_points() {
        let g = threshold_grid(DEFAULT_SWEEP_MIN, DEFAULT_SWEEP_MAX, DEFAULT_SWEEP_STEP).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.48);
        assert_eq!(g[4], 0.49);
        assert_eq!(g[10], 0.55);
    }

    #[test]
    fn worked_sweep() {
        let s =
            sweep_threshold(&[0, 0, 1, 1], &[0.46, 0.48, 0.50, 0.52], 0.45, 0.55, 0.01).unwrap();
        assert_eq!(s.best_threshold, 0.49);
        assert_eq!(s.best_f1, 1.0);
        assert!(s.to_csv().contains("# best_threshold=0.49,best_f1=1"));
    }

    #[test]
    fn single_point_and_bad_ranges() {
        let s = sweep_threshold(&[1, 0], &[0.7, 0.2], 0.5, 0.5, 0.1).unwrap();
        assert_eq!(s.grid.len(), 1);
        assert_eq!(s.best_threshold, 0.5);
        assert!(sweep_threshold(&[1], &[0.5], 0.6, 0.5, 0.01).is_err());
        assert!(sweep_threshold(&[1], &[0.5], 0.4, 0.5, 0.0).is_err());
    }

    #[test]
    fn constant_scores_give_flat_curve_below_score() {
        let s = sweep_threshold(&[0, 1, 1, 0], &[0.5; 4], 0.45, 0.5, 0.01).unwrap();
        assert!(s.grid.iter().all(|&(_, f)| f == s.grid[0].1));
    }
}

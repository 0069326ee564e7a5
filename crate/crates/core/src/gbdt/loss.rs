//! Logistic loss on raw scores.

/// `1 / (1 + exp(-z))`, clamped into the open unit interval.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Negative log-likelihood of `label` under raw score `z`.
#[inline]
pub fn logloss(z: f64, label: u8) -> f64 {
    softplus(z) - label as f64 * z
}

/// First and second derivative of `logloss` with respect to `z`.
#[inline]
pub fn grad_hess(z: f64, label: u8) -> (f64, f64) {
    let p = sigmoid(z);
    (p - label as f64, p * (1.0 - p))
}

pub fn mean_logloss(raw: &[f64], labels: &[u8]) -> f64 {
    if raw.is_empty() {
        return 0.0;
    }
    raw.iter()
        .zip(labels)
        .map(|(&z, &y)| logloss(z, y))
        .sum::<f64>()
        / raw.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        let tiny = sigmoid(-1e6);
        assert!(tiny > 0.0 && tiny < 1.0);
        let big = sigmoid(1e6);
        assert!(big > 0.0 && big < 1.0);
    }

    #[test]
    fn logloss_is_stable_for_large_scores() {
        assert!(logloss(800.0, 1) < 1e-300);
        assert!((logloss(-800.0, 1) - 800.0).abs() < 1e-9);
        assert!((logloss(0.0, 0) - 2f64.ln()).abs() < 1e-15);
    }
}

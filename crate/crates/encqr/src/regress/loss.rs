//! Pinball (quantile) loss.

use crate::error::{Error, Result};
use crate::quantile::QuantileLevels;
use crate::regress::QuantilePrediction;

/// Pinball loss of the prediction `q_hat` against the observation `y` at
/// quantile level `alpha`:
///
/// * `(1 - alpha) * (q_hat - y)` when `q_hat >= y`,
/// * `alpha * (y - q_hat)` otherwise.
///
/// Over-prediction is cheap for low levels and expensive for high ones,
/// which is what makes the minimizer the `alpha`-quantile.
pub fn pinball_loss(y: f64, q_hat: f64, alpha: f64) -> f64 {
    if q_hat >= y {
        (1.0 - alpha) * (q_hat - y)
    } else {
        alpha * (y - q_hat)
    }
}

/// Subgradient of [`pinball_loss`] with respect to `q_hat`: `1 - alpha`
/// when `q_hat >= y`, `-alpha` below. At the kink `q_hat == y` the
/// right-hand derivative is used, matching the loss branch taken there.
pub fn pinball_subgradient(y: f64, q_hat: f64, alpha: f64) -> f64 {
    if q_hat >= y {
        1.0 - alpha
    } else {
        -alpha
    }
}

/// Mean pinball loss over observations, horizon steps and the three
/// quantile tracks.
pub fn multi_quantile_loss(
    targets: &[Vec<f64>],
    predictions: &[QuantilePrediction],
    levels: QuantileLevels,
) -> Result<f64> {
    if targets.len() != predictions.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::NoTrainingData);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (y, pred) in targets.iter().zip(predictions) {
        if y.len() != pred.horizon() {
            return Err(Error::ShapeMismatch(format!(
                "target of length {} for prediction horizon {}",
                y.len(),
                pred.horizon()
            )));
        }
        for (h, &obs) in y.iter().enumerate() {
            total += pinball_loss(obs, pred.lo[h], levels.lo);
            total += pinball_loss(obs, pred.mid[h], levels.mid());
            total += pinball_loss(obs, pred.hi[h], levels.hi);
            count += 3;
        }
    }
    Ok(total / count as f64)
}

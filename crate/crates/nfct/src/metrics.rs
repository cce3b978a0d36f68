//! Evaluation metrics: wrapped azimuth error, planar localization error,
//! MAE aggregates, success rate, classification accuracy, and gain-map
//! coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::GroundTruth;

/// Wraps an angle to [-pi, pi). The boundary is half-open: pi maps to -pi.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI
}

/// Exact Euclidean localization error in the sensing plane (law of cosines):
/// sqrt(r_hat^2 + r^2 - 2 r_hat r cos(wrap(theta_hat - theta))).
pub fn planar_error(r_hat: f64, r: f64, theta_hat: f64, theta: f64) -> f64 {
    let dtheta = wrap_angle(theta_hat - theta);
    let arg = r_hat * r_hat + r * r - 2.0 * r_hat * r * dtheta.cos();
    arg.max(0.0).sqrt()
}

/// A per-sample estimate to score against ground truth. Estimators that do
/// not classify leave `class_id` unset.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_id: Option<usize>,
    pub range: f64,
    pub azimuth: f64,
}

/// Aggregated metrics over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Fraction of correct class predictions; absent when the predictions
    /// carry no class ids.
    pub accuracy: Option<f64>,
    pub range_mae: f64,
    /// Mean absolute wrapped azimuth error, reported in degrees.
    pub azimuth_mae_deg: f64,
    pub planar_mae: f64,
    /// Fraction of samples with planar error at most the success threshold.
    pub success_at_1m: f64,
    pub sample_count: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str =
        "accuracy,range_mae_m,azimuth_mae_deg,planar_mae_m,succ_1m,n";

    /// One CSV row in the fixed column order. An absent accuracy serializes
    /// as an empty field.
    pub fn csv_row(&self) -> String {
        let acc = self.accuracy.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{acc},{},{},{},{},{}",
            self.range_mae, self.azimuth_mae_deg, self.planar_mae, self.success_at_1m, self.sample_count
        )
    }
}

/// Aggregates predictions against truths with the default 1 m success
/// threshold.
pub fn aggregate(predictions: &[Prediction], truths: &[GroundTruth]) -> Result<MetricReport> {
    aggregate_with_threshold(predictions, truths, 1.0)
}

/// Aggregates with a configurable planar success threshold in meters.
///
/// Accuracy is reported only when every prediction carries a class id.
pub fn aggregate_with_threshold(
    predictions: &[Prediction],
    truths: &[GroundTruth],
    success_threshold: f64,
) -> Result<MetricReport> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Numeric("cannot aggregate an empty batch".into()));
    }
    let n = predictions.len() as f64;
    let mut range_sum = 0.0;
    let mut az_sum = 0.0;
    let mut planar_sum = 0.0;
    let mut successes = 0usize;
    let mut correct = 0usize;
    let mut classified = true;
    for (p, t) in predictions.iter().zip(truths) {
        range_sum += (p.range - t.range).abs();
        az_sum += wrap_angle(p.azimuth - t.azimuth).abs();
        let pe = planar_error(p.range, t.range, p.azimuth, t.azimuth);
        planar_sum += pe;
        if pe <= success_threshold {
            successes += 1;
        }
        match p.class_id {
            Some(c) if c == t.class_id => correct += 1,
            Some(_) => {}
            None => classified = false,
        }
    }
    Ok(MetricReport {
        accuracy: classified.then(|| correct as f64 / n),
        range_mae: range_sum / n,
        azimuth_mae_deg: (az_sum / n).to_degrees(),
        planar_mae: planar_sum / n,
        success_at_1m: successes as f64 / n,
        sample_count: predictions.len(),
    })
}

/// Gain-map coordinates relative to single-task references:
/// (accuracy delta, relative planar-error reduction).
pub fn gain_map_point(
    acc: f64,
    acc_single: f64,
    planar: f64,
    planar_single: f64,
) -> Result<(f64, f64)> {
    if planar_single <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "single-task planar baseline must be positive, got {planar_single}"
        )));
    }
    Ok((acc - acc_single, (planar_single - planar) / planar_single))
}

use serde::Serialize;

use crate::datagen::LABEL_COUNT;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("predictions and labels differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples")]
    Empty,
    #[error("label value {0} outside 0..5")]
    LabelOutOfRange(u8),
    #[error("label {0} missing from the histogram")]
    MissingLabel(usize),
}

/// Confusion matrix (rows are true labels, columns predictions) and the
/// derived per-label scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub confusion: [[u64; LABEL_COUNT]; LABEL_COUNT],
    pub precision: [f64; LABEL_COUNT],
    pub recall: [f64; LABEL_COUNT],
    pub f1: [f64; LABEL_COUNT],
    /// Labels occurring as truth or prediction; the macro average runs
    /// over these.
    pub present: [bool; LABEL_COUNT],
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(confusion: [[u64; LABEL_COUNT]; LABEL_COUNT]) -> Result<Self, MetricsError> {
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        let mut precision = [0.0; LABEL_COUNT];
        let mut recall = [0.0; LABEL_COUNT];
        let mut f1 = [0.0; LABEL_COUNT];
        let mut present = [false; LABEL_COUNT];
        for x in 0..LABEL_COUNT {
            let tp = confusion[x][x];
            let actual: u64 = confusion[x].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[x]).sum();
            present[x] = actual + predicted > 0;
            precision[x] = ratio(tp, predicted);
            recall[x] = ratio(tp, actual);
            let s = precision[x] + recall[x];
            f1[x] = if s == 0.0 { 0.0 } else { 2.0 * precision[x] * recall[x] / s };
        }
        let n = present.iter().filter(|&&p| p).count();
        let macro_f1 = (0..LABEL_COUNT).filter(|&x| present[x]).map(|x| f1[x]).sum::<f64>() / n as f64;
        let trace: u64 = (0..LABEL_COUNT).map(|x| confusion[x][x]).sum();
        Ok(Self {
            confusion,
            precision,
            recall,
            f1,
            present,
            macro_f1,
            accuracy: ratio(trace, total),
            total,
        })
    }
}

/// Scores `predictions` against `labels`; both hold label codes 0..5.
pub fn confusion_and_macro_f1(predictions: &[u8], labels: &[u8]) -> Result<MetricsReport, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut confusion = [[0u64; LABEL_COUNT]; LABEL_COUNT];
    for (&p, &t) in predictions.iter().zip(labels) {
        for v in [p, t] {
            if v as usize >= LABEL_COUNT {
                return Err(MetricsError::LabelOutOfRange(v));
            }
        }
        confusion[t as usize][p as usize] += 1;
    }
    MetricsReport::from_confusion(confusion)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabelWeights(pub [f64; LABEL_COUNT]);

/// Loss weights from a label histogram (counts or shares): the majority
/// label's amount divided by each label's.
pub fn label_weights(histogram: &[f64; LABEL_COUNT]) -> Result<LabelWeights, MetricsError> {
    if let Some(x) = histogram.iter().position(|&h| !(h > 0.0)) {
        return Err(MetricsError::MissingLabel(x));
    }
    let max = histogram.iter().copied().fold(f64::MIN, f64::max);
    Ok(LabelWeights(histogram.map(|h| max / h)))
}

//! Pair-counting external clustering measures.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Counts over all unordered document pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall.
    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Classifies every pair `i < j` by whether the clustering and the labels
/// put the two documents together.
pub fn pairwise_counts<A: PartialEq, L: PartialEq>(assignment: &[A], labels: &[L]) -> Result<ConfusionCounts> {
    check_len(labels.len(), assignment.len())?;
    if assignment.len() < 2 {
        return Err(Error::invalid("at least two documents are needed to form a pair"));
    }
    let mut c = ConfusionCounts::default();
    for i in 0..assignment.len() {
        for j in i + 1..assignment.len() {
            match (assignment[i] == assignment[j], labels[i] == labels[j]) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// Share of the original features removed by selection.
pub fn reduction_ratio(t_original: usize, t_selected: usize) -> Result<f64> {
    if t_original == 0 {
        return Err(Error::invalid("original feature count is zero"));
    }
    if t_selected == 0 || t_selected > t_original {
        return Err(Error::invalid(format!(
            "selected feature count {t_selected} outside 1..={t_original}"
        )));
    }
    Ok(1.0 - t_selected as f64 / t_original as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub reduction_ratio: f64,
}

impl MetricsReport {
    pub const MEASURES: [&'static str; 5] = ["accuracy", "precision", "recall", "f_measure", "reduction_ratio"];

    pub fn get(&self, measure: &str) -> Option<f64> {
        match measure {
            "accuracy" => Some(self.accuracy),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f_measure" => Some(self.f_measure),
            "reduction_ratio" => Some(self.reduction_ratio),
            _ => None,
        }
    }
}

pub fn evaluate<A: PartialEq, L: PartialEq>(
    assignment: &[A],
    labels: &[L],
    reduction_ratio: f64,
) -> Result<MetricsReport> {
    let c = pairwise_counts(assignment, labels)?;
    Ok(MetricsReport {
        accuracy: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f_measure: c.f_measure(),
        reduction_ratio,
    })
}

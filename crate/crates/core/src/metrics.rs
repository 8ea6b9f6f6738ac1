//! Binary outlier-detection metrics: ROC-AUC, F-Score, detection rate and
//! G-Mean, plus the confusion-matrix plumbing behind them.

use crate::error::{Error, Result};

/// Per-sample minority-class scores paired with the true binary labels
/// (1 = minority / outlier).
#[derive(Debug, Clone)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<usize>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} scores vs {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Ok(ScoredLabels { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Confusion counts at a fixed threshold; "positive" is the minority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// ROC-AUC in the Mann-Whitney formulation: the probability that a random
/// positive outscores a random negative, ties counted one half. Computed
/// with midranks, so it is exact under ties.
pub fn roc_auc(s: &ScoredLabels) -> Result<f64> {
    let n_pos = s.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = s.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs at least one sample of each class".into(),
        ));
    }

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].partial_cmp(&s.scores[b]).expect("finite scores"));

    // Midrank assignment over tied score runs.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s.scores[order[j + 1]] == s.scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if s.labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Confusion counts at `threshold`; a sample is predicted minority iff its
/// score is greater than or equal to the threshold (ties go to minority).
pub fn confusion(s: &ScoredLabels, threshold: f64) -> Confusion {
    let mut c = Confusion {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (score, &label) in s.scores.iter().zip(&s.labels) {
        let predicted_minority = *score >= threshold;
        match (label == 1, predicted_minority) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_neg += 1,
            (false, true) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    c
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Minority-class F1: harmonic mean of precision and recall, 0 when undefined.
pub fn f_score(c: &Confusion) -> f64 {
    let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Detection rate: recall of the minority class.
pub fn detection_rate(c: &Confusion) -> f64 {
    ratio(c.true_pos, c.true_pos + c.false_neg)
}

/// Geometric mean of the true-positive and true-negative rates.
pub fn g_mean(c: &Confusion) -> f64 {
    let tpr = ratio(c.true_pos, c.true_pos + c.false_neg);
    let tnr = ratio(c.true_neg, c.true_neg + c.false_pos);
    (tpr * tnr).sqrt()
}

/// The four reported metrics for one model on one test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub roc_auc: f64,
    pub f_score: f64,
    pub dr: f64,
    pub g_mean: f64,
}

/// All four metrics at the default 0.5 threshold.
pub fn evaluate(s: &ScoredLabels) -> Result<MetricRecord> {
    let auc = roc_auc(s)?;
    let c = confusion(s, 0.5);
    Ok(MetricRecord {
        roc_auc: auc,
        f_score: f_score(&c),
        dr: detection_rate(&c),
        g_mean: g_mean(&c),
    })
}

/// Median of a sample; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either sample is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples required");
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

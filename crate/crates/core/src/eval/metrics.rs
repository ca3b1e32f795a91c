use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqdata::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Fractions in `[0, 1]` (MCC in `[-1, 1]`). A metric whose denominator vanishes is
/// reported as 0 and sets `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub mcc: f64,
    pub degenerate: bool,
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {i}")));
    }
    Ok(())
}

/// A record is predicted positive iff its score is at least `threshold`.
pub fn confusion(scores: &[f64], labels: &[Label], threshold: f64) -> Result<ConfusionCounts> {
    check_inputs(scores, labels)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} not in (0, 1)")));
    }
    let mut c = ConfusionCounts::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyDataset("confusion counts".into()));
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| {
        if den == 0.0 {
            degenerate = true;
            0.0
        } else {
            num / den
        }
    };
    let sen = ratio(tp, tp + fn_);
    let spe = ratio(tn, tn + fp);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, den);
    Ok(Metrics {
        acc: (tp + tn) / total as f64,
        sen,
        spe,
        mcc,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores at or above this value are called positive. The first point uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps the distinct scores from high to low, one point per tie group, and
/// integrates with the trapezoid rule.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let p = RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok(RocCurve { points, auc })
}

//! Confusion matrix, threshold metrics and curve areas.
//!
//! Threshold metrics are total: a metric whose denominator is zero is
//! reported as 0 and its name is added to `degenerate`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same predictions scored with the class roles swapped.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

pub fn confusion(preds: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: truth.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        match (p, t) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
            (Label::Positive, Label::Negative) => cm.fp += 1,
            (Label::Negative, Label::Positive) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Named metrics. `name()` gives the fixed JSON key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acc,
    Sens,
    Spec,
    Prec,
    Recall,
    Fpr,
    F1,
    Kappa,
    Mcc,
    BalAcc,
    Gmean,
    RocAuc,
    PrAuc,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::Acc,
        Metric::Sens,
        Metric::Spec,
        Metric::Prec,
        Metric::Recall,
        Metric::Fpr,
        Metric::F1,
        Metric::Kappa,
        Metric::Mcc,
        Metric::BalAcc,
        Metric::Gmean,
        Metric::RocAuc,
        Metric::PrAuc,
    ];

    /// The eight metrics aggregated by UIC and compared in concordance plots.
    pub const UIC_SET: [Metric; 8] = [
        Metric::Acc,
        Metric::Kappa,
        Metric::BalAcc,
        Metric::F1,
        Metric::RocAuc,
        Metric::PrAuc,
        Metric::Mcc,
        Metric::Gmean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acc => "acc",
            Metric::Sens => "sens",
            Metric::Spec => "spec",
            Metric::Prec => "prec",
            Metric::Recall => "recall",
            Metric::Fpr => "fpr",
            Metric::F1 => "f1",
            Metric::Kappa => "kappa",
            Metric::Mcc => "mcc",
            Metric::BalAcc => "bal_acc",
            Metric::Gmean => "gmean",
            Metric::RocAuc => "roc_auc",
            Metric::PrAuc => "pr_auc",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    pub acc: f64,
    pub sens: f64,
    pub spec: f64,
    pub prec: f64,
    pub recall: f64,
    pub fpr: f64,
    pub f1: f64,
    pub kappa: f64,
    pub mcc: f64,
    pub bal_acc: f64,
    pub gmean: f64,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub degenerate: BTreeSet<Metric>,
}

impl MetricVector {
    /// Value of `m`; unset curve metrics read as 0.
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Acc => self.acc,
            Metric::Sens => self.sens,
            Metric::Spec => self.spec,
            Metric::Prec => self.prec,
            Metric::Recall => self.recall,
            Metric::Fpr => self.fpr,
            Metric::F1 => self.f1,
            Metric::Kappa => self.kappa,
            Metric::Mcc => self.mcc,
            Metric::BalAcc => self.bal_acc,
            Metric::Gmean => self.gmean,
            Metric::RocAuc => self.roc_auc.unwrap_or(0.0),
            Metric::PrAuc => self.pr_auc.unwrap_or(0.0),
        }
    }

    /// Element-wise mean; degenerate flags are unioned.
    pub fn mean(vs: &[MetricVector]) -> MetricVector {
        let n = vs.len() as f64;
        let avg = |f: &dyn Fn(&MetricVector) -> f64| vs.iter().map(f).sum::<f64>() / n;
        let avg_opt = |f: &dyn Fn(&MetricVector) -> Option<f64>| {
            vs.iter()
                .map(f)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / n)
        };
        MetricVector {
            acc: avg(&|v| v.acc),
            sens: avg(&|v| v.sens),
            spec: avg(&|v| v.spec),
            prec: avg(&|v| v.prec),
            recall: avg(&|v| v.recall),
            fpr: avg(&|v| v.fpr),
            f1: avg(&|v| v.f1),
            kappa: avg(&|v| v.kappa),
            mcc: avg(&|v| v.mcc),
            bal_acc: avg(&|v| v.bal_acc),
            gmean: avg(&|v| v.gmean),
            roc_auc: avg_opt(&|v| v.roc_auc),
            pr_auc: avg_opt(&|v| v.pr_auc),
            degenerate: vs.iter().flat_map(|v| v.degenerate.iter().copied()).collect(),
        }
    }
}

/// Kappa formulations. `ClosedForm` is the 2x2 closed form
/// `2(TP·TN − FN·FP) / ((TP+FP)(FP+TN) + (TP+FN)(FN+TN))`;
/// `Agreement` is `(p_o − p_e) / (1 − p_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaForm {
    #[default]
    ClosedForm,
    Agreement,
}

pub fn threshold_metrics(cm: &ConfusionMatrix) -> MetricVector {
    threshold_metrics_with(cm, KappaForm::ClosedForm)
}

pub fn threshold_metrics_with(cm: &ConfusionMatrix, kappa_form: KappaForm) -> MetricVector {
    let (tp, tn, fp, fn_) = (cm.tp as f64, cm.tn as f64, cm.fp as f64, cm.fn_ as f64);
    let mut degenerate = BTreeSet::new();
    let mut ratio = |num: f64, den: f64, m: Metric| {
        if den == 0.0 {
            degenerate.insert(m);
            0.0
        } else {
            num / den
        }
    };

    let acc = ratio(tp + tn, tp + tn + fp + fn_, Metric::Acc);
    let sens = ratio(tp, tp + fn_, Metric::Sens);
    let spec = ratio(tn, tn + fp, Metric::Spec);
    let prec = ratio(tp, tp + fp, Metric::Prec);
    let recall = ratio(tp, tp + fn_, Metric::Recall);
    let fpr = ratio(fp, fp + tn, Metric::Fpr);
    let f1 = ratio(2.0 * prec * recall, prec + recall, Metric::F1);
    let kappa = match kappa_form {
        KappaForm::ClosedForm => ratio(
            2.0 * (tp * tn - fn_ * fp),
            (tp + fp) * (fp + tn) + (tp + fn_) * (fn_ + tn),
            Metric::Kappa,
        ),
        KappaForm::Agreement => {
            let n = tp + tn + fp + fn_;
            let p_e = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
            ratio(acc - p_e, 1.0 - p_e, Metric::Kappa)
        }
    };
    let mcc = ratio(
        tp * tn - fn_ * fp,
        ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt(),
        Metric::Mcc,
    );

    let bal_acc = (sens + spec) / 2.0;
    let gmean = (sens * spec).sqrt();
    if degenerate.contains(&Metric::Sens) || degenerate.contains(&Metric::Spec) {
        degenerate.insert(Metric::BalAcc);
        degenerate.insert(Metric::Gmean);
    }
    if degenerate.contains(&Metric::Prec) || degenerate.contains(&Metric::Recall) {
        degenerate.insert(Metric::F1);
    }

    MetricVector {
        acc,
        sens,
        spec,
        prec,
        recall,
        fpr,
        f1,
        kappa,
        mcc,
        bal_acc,
        gmean,
        roc_auc: None,
        pr_auc: None,
        degenerate,
    }
}

/// Probability-of-positive scores with their true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPredictions {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
    pub threshold: f64,
}

impl ScoredPredictions {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: scores.len(),
                right: labels.len(),
            });
        }
        if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidScore(bad));
        }
        Ok(ScoredPredictions {
            scores,
            labels,
            threshold: 0.5,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Positive iff score >= threshold.
    pub fn hard_labels(&self) -> Vec<Label> {
        self.scores
            .iter()
            .map(|&s| if s >= self.threshold { Label::Positive } else { Label::Negative })
            .collect()
    }

    fn class_counts(&self) -> (u64, u64) {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count() as u64;
        (pos, self.labels.len() as u64 - pos)
    }
}

/// Indices sorted by ascending score.
fn ascending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Area under the ROC curve as the Mann–Whitney statistic (ties count 1/2),
/// from mid-ranks. Twice the rank sum is kept in integers so the result is
/// the exact ratio `(2·wins + ties) / (2·P·N)`.
pub fn roc_auc(sp: &ScoredPredictions) -> Result<f64> {
    let (pos, neg) = sp.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::OneClassOnly);
    }
    let order = ascending(&sp.scores);
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && sp.scores[order[j]] == sp.scores[order[i]] {
            j += 1;
        }
        // mid-rank of 1-based ranks i+1..=j, doubled
        let twice_mid = (i + 1 + j) as u64;
        let group_pos = order[i..j].iter().filter(|&&k| sp.labels[k].is_positive()).count() as u64;
        twice_rank_sum += twice_mid * group_pos;
        i = j;
    }
    let twice_u = twice_rank_sum - pos * (pos + 1);
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

/// Area under the precision–recall step curve: sum over distinct score
/// thresholds (descending) of `Δrecall × precision`.
pub fn pr_auc(sp: &ScoredPredictions) -> Result<f64> {
    let (pos, _) = sp.class_counts();
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut order = ascending(&sp.scores);
    order.reverse();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && sp.scores[order[j]] == sp.scores[order[i]] {
            if sp.labels[order[j]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(area)
}

/// Full metric vector for scored predictions. Hard labels come from the
/// threshold unless `hard` overrides them (ensembles with their own vote
/// rules). Curve metrics that cannot be computed are 0 and flagged.
pub fn evaluate(sp: &ScoredPredictions, hard: Option<&[Label]>) -> Result<MetricVector> {
    let derived;
    let preds = match hard {
        Some(h) => h,
        None => {
            derived = sp.hard_labels();
            &derived
        }
    };
    let cm = confusion(preds, &sp.labels)?;
    let mut mv = threshold_metrics(&cm);
    mv.roc_auc = Some(roc_auc(sp).unwrap_or_else(|_| {
        mv.degenerate.insert(Metric::RocAuc);
        0.0
    }));
    mv.pr_auc = Some(pr_auc(sp).unwrap_or_else(|_| {
        mv.degenerate.insert(Metric::PrAuc);
        0.0
    }));
    Ok(mv)
}

//! Link-placement statistics: confusion counts and classifier scores.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::PairEnsemble;
use crate::network::BipartiteNetwork;

/// TP/TN/FP/FN. Real-valued so that ensemble expectations fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionCounts {
    pub true_positive: f64,
    pub true_negative: f64,
    pub false_positive: f64,
    pub false_negative: f64,
}

impl ConfusionCounts {
    pub fn total(&self) -> f64 {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.true_positive,
            self.true_negative,
            self.false_positive,
            self.false_negative,
        ]
    }
}

/// Ratios derived from a confusion matrix; `None` where the ratio is 0/0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierScores {
    /// TP / (TP + FN)
    pub tpr: Option<f64>,
    /// TN / (FP + TN)
    pub spc: Option<f64>,
    /// 1 − SPC
    pub fpr: Option<f64>,
    /// TP / (TP + FP)
    pub ppv: Option<f64>,
    /// (TP + TN) / N·M
    pub acc: Option<f64>,
}

fn check_dims(truth: &BipartiteNetwork, n: usize, m: usize) -> Result<()> {
    if truth.n_holders() != n || truth.n_issuers() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", truth.n_holders(), truth.n_issuers()),
            found: format!("{n}x{m}"),
        });
    }
    Ok(())
}

/// Counts of correctly and wrongly placed links of `candidate` against
/// `truth`.
pub fn confusion(truth: &BipartiteNetwork, candidate: &BipartiteNetwork) -> Result<ConfusionCounts> {
    check_dims(truth, candidate.n_holders(), candidate.n_issuers())?;
    let mut tp = 0usize;
    for i in 0..truth.n_holders() {
        let (a, b) = (truth.row(i), candidate.row(i));
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].issuer.cmp(&b[y].issuer) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    tp += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    let l_true = truth.n_links();
    let l_cand = candidate.n_links();
    let pairs = truth.n_pairs();
    Ok(ConfusionCounts {
        true_positive: tp as f64,
        false_negative: (l_true - tp) as f64,
        false_positive: (l_cand - tp) as f64,
        true_negative: (pairs + tp - l_true - l_cand) as f64,
    })
}

/// Ensemble expectation of the confusion counts:
/// ⟨TP⟩ = Σ a_iα p_iα, ⟨FP⟩ = ⟨L⟩ − ⟨TP⟩, ⟨FN⟩ = L − ⟨TP⟩,
/// ⟨TN⟩ = N·M − L − ⟨FP⟩. Exact for any model, with p its link probability.
pub fn expected_confusion<M: PairEnsemble + ?Sized>(truth: &BipartiteNetwork, model: &M) -> Result<ConfusionCounts> {
    expected_confusion_with(Execution::default(), truth, model)
}

pub fn expected_confusion_with<M: PairEnsemble + ?Sized>(
    exec: Execution,
    truth: &BipartiteNetwork,
    model: &M,
) -> Result<ConfusionCounts> {
    check_dims(truth, model.n_holders(), model.n_issuers())?;
    let m = model.n_issuers();
    let (tp, expected_links) = exec.sum_pairs(truth.n_holders(), |i| {
        let on_support: f64 = truth.row(i).iter().map(|e| model.link_probability(i, e.issuer)).sum();
        let all: f64 = (0..m).map(|a| model.link_probability(i, a)).sum();
        (on_support, all)
    });
    let l = truth.n_links() as f64;
    let pairs = truth.n_pairs() as f64;
    let fp = expected_links - tp;
    Ok(ConfusionCounts {
        true_positive: tp,
        false_negative: l - tp,
        false_positive: fp,
        true_negative: pairs - l - fp,
    })
}

/// Dense-limit (q → 1) values for MECAPM: TP ≃ L, TN ≃ 0, FP ≃ N·M − L,
/// FN ≃ 0. Diagnostic only; [`expected_confusion`] is exact.
pub fn mecapm_dense_limit_confusion(truth: &BipartiteNetwork) -> ConfusionCounts {
    let l = truth.n_links() as f64;
    ConfusionCounts {
        true_positive: l,
        true_negative: 0.0,
        false_positive: truth.n_pairs() as f64 - l,
        false_negative: 0.0,
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn classifier_scores(counts: &ConfusionCounts) -> ClassifierScores {
    let ConfusionCounts {
        true_positive: tp,
        true_negative: tn,
        false_positive: fp,
        false_negative: fn_,
    } = *counts;
    let spc = ratio(tn, fp + tn);
    ClassifierScores {
        tpr: ratio(tp, tp + fn_),
        spc,
        fpr: spc.map(|s| 1.0 - s),
        ppv: ratio(tp, tp + fp),
        acc: ratio(tp + tn, counts.total()),
    }
}

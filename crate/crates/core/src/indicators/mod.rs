//! Topological, statistical and financial validation indicators.

pub mod ann;
pub mod confusion;
pub mod systemic;

pub use ann::{
    ann_degrees, ann_strengths, expected_ann, expected_ann_with, mecapm_dense_limits, observed_ann, AnnReport,
    DenseLimitAnn, NeighborAverages,
};
pub use confusion::{
    classifier_scores, confusion, expected_confusion, expected_confusion_with, mecapm_dense_limit_confusion,
    ClassifierScores, ConfusionCounts,
};
pub use systemic::{
    expected_overlap, expected_systemicness_ratio, model_systemicness, overlap_against, overlap_term, overlap_variance,
    overlap_variance_decoupled, relative_systemicness, systemicness, systemicness_report, systemicness_sigma_ratio,
    systemicness_variance, systemicness_variance_decoupled, ColumnMoments, ModelSystemicness, SystemicnessInputs,
    SystemicnessReport,
};

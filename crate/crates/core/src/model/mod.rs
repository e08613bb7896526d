//! Domain types of the augmented linear mixing model and the evaluators
//! shared by every solver: reconstruction, the regularized objective,
//! soft thresholding and endmember/variability coherence.

mod ops;
mod types;

pub use ops::{
    coherence_stats, objective_value, reconstruct, shrink, soft_threshold, ObjectiveTerms,
};
pub(crate) use ops::objective_terms_raw;
pub use types::{
    AbundanceMatrix, EndmemberDictionary, HyperspectralImage, ScalingFactors, SolverConfig,
    VariabilityCoefficients, VariabilityDictionary, ASC_TOLERANCE, NEGATIVE_ABUNDANCE_SLACK,
};

//! Probe construction, Chebyshev interpolation and index weighting.

mod explain;
mod plan;
mod weights;

pub use explain::{
    all_subsets, expected_forwards, explain, explain_batch, normalize_subset, probe_value,
    Attribution, AttributionSet, Evaluation, ExplainOptions, Explainer, ProbeMode, Subsets,
};
pub use plan::{PolySolve, ProbePlan, CONDITIONING_WARN_NODES, RESIDUAL_FLAG};
pub use weights::{
    binomial, chebyshev_nodes, monomial_to_marginals, shapley_weights, sii_weights, MAX_FEATURES,
};

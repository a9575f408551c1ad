//! Observation model, likelihood, kriging weights, positive definite repair,
//! matrix comparison metrics and the likelihood grid search.

mod likelihood;
mod metrics;
mod mle;
mod pd;
mod simulate;

pub use likelihood::{kriging_weights, neg_log_lik, region_means, ObservationSet};
pub use metrics::{kl_div, maed, rmsed};
pub use mle::{
    candidate_grid, default_candidates, geomspace, linspace, mle_grid_search, profile_candidate,
    search_surface, BestFit, Candidate, CandidateResult, CovarianceBackend, MleResult,
    Normalization, PhaseTimings, DEFAULT_RANGES, DEFAULT_RATIOS,
};
pub use pd::{nearest_pd, PD_EPSILON};
pub use simulate::GaussianSampler;

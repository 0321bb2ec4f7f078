//! Privacy accounting for posterior sampling under a contaminated likelihood.

pub mod bounds;
pub mod budget;
pub mod decomposition;
pub mod estimate;
pub mod search;

pub use bounds::{
    choose_phi, eta_bound, expectation_ratio, linf_distance, EtaBound, ExpectationRatio, NeighbourhoodBox, Witness,
};
pub use budget::{dp_from_zcdp, zcdp_from_dp, PrivacyBudget, ZcdpBudget};
pub use decomposition::{verify_decomposition, DecompositionConfig, DecompositionReport, TrialReport};
pub use estimate::{
    estimate_epsilon, estimate_epsilon_once, percentile_nearest_rank, repeat_seed, BoxCenter, EpsilonEstimate,
    EpsilonSetup, RepeatOutcome, RepeatRecord,
};
pub use search::{covariate_corners, extremize, multistart_box, CovariateDomain, SearchOptions, XSearch};

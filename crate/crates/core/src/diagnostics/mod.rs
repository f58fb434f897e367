//! Executable checks of the half-plane estimates and the illposedness
//! mechanism.

mod estimates;
mod illposedness;
mod lemmas;

pub use estimates::{
    velocity_estimate_suite, velocity_estimates, EstimateConfig, EstimateSet,
    VelocitySuiteReport, REFINEMENT_TOLERANCE,
};
pub use illposedness::{
    illposedness_experiment, illposedness_series, illposedness_series_on, trajectory_bounds_check, BoundKind,
    CertifiedBox, IllposednessConfig, ProbeSample, SlopeReport, Violation, MIN_SLOPE_PROBES,
};
pub use lemmas::{
    extension_check, extension_lemma_suite, ExtensionReport, FieldExtensionCheck,
    COMMUTATOR_TOLERANCE, DOUBLING_TOLERANCE, HOLDER_RATIO_BOUND,
};

//! Finite-blocklength simulation of the auxiliary coding scheme and the key
//! generation protocol built on it.

pub mod auxiliary;
pub mod bounds;
pub mod codebook;
pub mod decay;
pub mod exact;
pub mod plan;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod stats;

pub use auxiliary::{aux_metrics, aux_round, decode, AuxIndices, AuxOutcome, Decoder};
pub use bounds::{
    bernstein_bound, hoeffding_bound, oneshot_resolvability_bound, reliability_rhs, reliability_rhs_with,
    resolvability_rhs, resolvability_rhs_with, BoundTerms,
};
pub use codebook::{sample_codebooks, sample_codebooks_capped, Codebook, CodebookPair, Entry};
pub use decay::{decay_study, DecayRow, DecaySettings, DecayStudy, MetricFit};
pub use exact::{
    aux_covertness_kl, aux_secrecy, budget, covertness_kl, enumeration_terms, exact_error, exact_metrics,
    exact_protocol_metrics, protocol_secrecy, source_tv,
};
pub use plan::{rate_plan, ConstraintCheck, PlanInformation, RatePlan, UserSizes};
pub use protocol::{protocol_metrics, protocol_run, protocol_trials, TrialRecord};
pub use report::{Estimate, Mode, Scheme, SecrecyKind, SimReport};

//! ALP parameters by column generation, reductions, closed form and checks.

mod closed;
mod column;
mod feasibility;
mod master;
mod params;
pub(crate) mod pricing;
mod reduce;
mod subproblem;
mod tune;

pub use closed::{
    alp_objective, base_price, closed_form_params, dual_certificate, max_full_visits, special_case_violations,
    DualCertificate, DIVERSION_TRAVEL_RATIO,
};
pub use column::{initial_action, initial_column, initial_column_for, initial_state, Column};
pub use feasibility::{
    check_feasibility, extreme_pairs, random_pair, violation, CheckMode, FeasibilityReport, EXHAUSTIVE_LIMIT,
};
pub use master::{column_generation, column_generation_with, CgHistory, CgOptions, CgOutcome};
pub use params::{delta_coefficients, AlpParams, ParamsDoc, ParamsMeta, Variant};
pub use pricing::{price, price_with_extras, Priced, Prices};
pub use reduce::{lift, project_to_1d, Projection};
pub use subproblem::{build_subproblem, Subproblem};
pub use tune::{tune_epsilon, TuneOptions, TuneOutcome, TunePoint};

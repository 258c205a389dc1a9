//! Scenario plumbing, end-to-end runs, horizon studies and sweeps.

mod compare;
mod run;
mod scenario;
mod sweep;

pub use compare::{reference_horizon, run_comparison, split_index, study_states, train_on_study, ComparisonTable};
pub use run::{run_scenario, EventKind, MessageEvent, RunOutput};
pub use scenario::{ComparisonStudy, PredictorKind, PredictorSpec, Scenario, DEFAULT_MESSAGE_SIZE};
pub use sweep::{sweep, SweepAxis, SweepResult, SweepRow};

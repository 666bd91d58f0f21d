//! Simulation benchmarks: scenarios, recovery metrics, the distance
//! correlation baseline and the replication runner.

mod dcsis;
mod experiment;
mod metrics;
mod scenario;

pub use dcsis::{dc_sis, dc_sis_scores, distance_correlation};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult, Method, ReplicationResult, Summary};
pub use metrics::{
    interaction_hit, large_model_size, mrs, nearest_rank, records_hit, selected, small_model_size, QUANTILES,
};
pub use scenario::{generate, Scenario, ScenarioId, Truth};

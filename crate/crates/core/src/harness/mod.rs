//! Scenario configuration, the weekly simulation loop, metrics and output files.

mod config;
mod metrics;
mod output;
mod run;

pub use config::{
    heterogeneous_mix, premium_mix, reference_scenario, reference_station, LoadSpec, OperatorSpec, RpMetric, Scenario,
    ScenarioConfig, StableSetStrategy, E_HI, E_LO, REFERENCE_COALITION_COST, REFERENCE_MEAN_LOADS, SCENARIO_PRICES,
};
pub use metrics::{metric_on, metric_rp, metric_xl, Metrics};
pub use output::{
    metrics_csv, read_steps, recheck_records, write_outputs, write_rp_sweep, RecheckSummary, CONFIG_FILE, METRICS_FILE,
    SHIFTS_FILE, STEPS_FILE,
};
pub use run::{
    aggregate, class_counts, enumerate_stable_outcomes, populate_step, run_scenario, run_step, step_loads, RunResult,
    StepRecord, MAX_ENUMERATION_PLAYERS,
};

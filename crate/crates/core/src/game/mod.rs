//! The operators' cooperative game: coalition values, Aumann-Drèze payoffs,
//! hedonic shift formation over a shared partition, and Nash-stability checks.

mod coalition;
mod context;
mod formation;
mod shapley;

pub use coalition::{all_partitions, bell_numbers, Coalition, Partition, MAX_PLAYERS};
pub use context::{coalition_cost, CoalitionEval, StepContext, VALUE_TOLERANCE};
pub use formation::{
    is_nash_stable, prefers, run_formation, run_formation_threaded, shift_search, FormationOutcome, HistorySet,
    PartitionStore, Preference, Schedule, ShiftChoice, ShiftRecord, StoreState, Witness, IMPROVEMENT_EPS, MAX_ROUNDS,
};
pub use shapley::{aumann_dreze, PayoffVector, MAX_SHAPLEY_MEMBERS};

/// Value of `coalition` at the context's subinterval.
pub fn coalition_value(coalition: Coalition, ctx: &StepContext) -> crate::Result<f64> {
    ctx.value(coalition)
}

/// Payoffs of the members of `coalition`.
pub fn shapley_payoffs(coalition: Coalition, ctx: &StepContext) -> crate::Result<PayoffVector> {
    ctx.payoffs(coalition)
}

use std::collections::BTreeSet;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::coalition::{Coalition, Partition};
use super::context::StepContext;
use crate::error::{Error, Result};
use crate::model::NoId;

/// A shift must raise the mover's payoff by more than this, $/hour. Guards against
/// rounding noise between payoffs that are equal in exact arithmetic.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// Safety net on activation rounds; formation converges long before this.
pub const MAX_ROUNDS: usize = 10_000;

/// Per-operator sets of partner groups already left during one execution.
///
/// A coalition `S` containing `i` is masked for `i` when `S \ {i}` is in `h(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HistorySet {
    per_operator: Vec<BTreeSet<Coalition>>,
}

impl HistorySet {
    pub fn new(players: usize) -> Self {
        HistorySet { per_operator: vec![BTreeSet::new(); players] }
    }

    pub fn contains(&self, id: NoId, partners: Coalition) -> bool {
        self.per_operator[id.0].contains(&partners)
    }

    /// Whether `coalition` (which holds `id`) is masked for `id`.
    pub fn masks(&self, id: NoId, coalition: Coalition) -> bool {
        self.contains(id, coalition.without(id))
    }

    /// Returns false when `partners` was already recorded.
    pub fn insert(&mut self, id: NoId, partners: Coalition) -> bool {
        self.per_operator[id.0].insert(partners)
    }

    pub fn of(&self, id: NoId) -> &BTreeSet<Coalition> {
        &self.per_operator[id.0]
    }

    pub fn clear(&mut self) {
        self.per_operator.iter_mut().for_each(BTreeSet::clear);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    /// The first coalition is strictly preferred.
    First,
    /// The second coalition is at least as good.
    SecondWeakly,
}

fn utility(id: NoId, coalition: Coalition, history: &HistorySet, ctx: &StepContext) -> Result<f64> {
    if history.masks(id, coalition) {
        Ok(f64::NEG_INFINITY)
    } else {
        ctx.payoff(id, coalition)
    }
}

/// History-aware preference of `id` between two coalitions that both contain it.
pub fn prefers(
    id: NoId,
    first: Coalition,
    second: Coalition,
    history: &HistorySet,
    ctx: &StepContext,
) -> Result<Preference> {
    if !first.contains(id) || !second.contains(id) {
        return Err(Error::InvalidArgument(format!("{id} must belong to both {first} and {second}")));
    }
    let (a, b) = (utility(id, first, history, ctx)?, utility(id, second, history, ctx)?);
    Ok(if a > b + IMPROVEMENT_EPS { Preference::First } else { Preference::SecondWeakly })
}

/// Outcome of one operator's search for a better coalition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftChoice {
    /// Coalition the operator should belong to; its current one if nothing is better.
    pub best: Coalition,
    pub current: Coalition,
    pub current_payoff: f64,
    pub best_payoff: f64,
}

impl ShiftChoice {
    pub fn is_shift(&self) -> bool {
        self.best != self.current
    }
}

/// Coalitions `id` could move into: every other coalition of the partition plus
/// standing alone, each joined by `id`, in canonical order.
fn candidates(id: NoId, partition: &Partition) -> Vec<Coalition> {
    let current = partition.coalition_of(id);
    let mut out: Vec<Coalition> =
        partition.coalitions().iter().filter(|&&c| c != current).map(|c| c.with(id)).collect();
    if current.len() > 1 {
        out.push(Coalition::singleton(id));
    }
    out.sort();
    out
}

/// Best strictly improving move of `id`. Candidates whose partner group is in
/// `h(id)` are skipped; the current coalition is always the reference.
pub fn shift_search(id: NoId, partition: &Partition, history: &HistorySet, ctx: &StepContext) -> Result<ShiftChoice> {
    let current = partition.coalition_of(id);
    let current_payoff = ctx.payoff(id, current)?;
    let mut choice = ShiftChoice { best: current, current, current_payoff, best_payoff: current_payoff };
    for cand in candidates(id, partition) {
        if history.masks(id, cand) {
            continue;
        }
        let payoff = ctx.payoff(id, cand)?;
        if payoff > choice.best_payoff + IMPROVEMENT_EPS {
            choice.best = cand;
            choice.best_payoff = payoff;
        }
    }
    Ok(choice)
}

/// One applied hedonic shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub execution_index: usize,
    pub actor: NoId,
    pub from_coalition: Coalition,
    pub to_coalition: Coalition,
    pub payoff_before: f64,
    pub payoff_after: f64,
}

/// Activation order, repeated round after round until a full round is quiet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    order: Vec<NoId>,
}

impl Schedule {
    pub fn round_robin(players: usize) -> Self {
        Schedule { order: (0..players).map(NoId).collect() }
    }

    /// Seeded random permutation of the operators.
    pub fn seeded(players: usize, seed: u64) -> Self {
        let mut order: Vec<NoId> = (0..players).map(NoId).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Schedule { order }
    }

    /// `order` must be a permutation of `0..order.len()`.
    pub fn from_order(order: Vec<NoId>) -> Result<Self> {
        let mut sorted = order.clone();
        sorted.sort();
        if sorted.iter().enumerate().any(|(k, id)| id.0 != k) {
            return Err(Error::InvalidArgument("schedule must activate every operator once per round".into()));
        }
        Ok(Schedule { order })
    }

    pub fn order(&self) -> &[NoId] {
        &self.order
    }
}

/// Shared state of one execution, guarded by [`PartitionStore`].
#[derive(Debug, Clone)]
pub struct StoreState {
    pub partition: Partition,
    pub history: HistorySet,
    pub shifts: Vec<ShiftRecord>,
}

/// The shared partition. Every read-modify-write happens under one lock, so no
/// agent ever observes a half-applied shift.
#[derive(Debug)]
pub struct PartitionStore {
    state: Mutex<StoreState>,
}

impl PartitionStore {
    /// All singletons with empty histories.
    pub fn new(players: usize) -> Self {
        PartitionStore {
            state: Mutex::new(StoreState {
                partition: Partition::singletons(players),
                history: HistorySet::new(players),
                shifts: Vec::new(),
            }),
        }
    }

    pub fn with_lock<T>(&self, f: impl FnOnce(&mut StoreState) -> T) -> T {
        f(&mut self.state.lock().unwrap())
    }

    pub fn snapshot(&self) -> Partition {
        self.with_lock(|s| s.partition.clone())
    }

    pub fn into_inner(self) -> StoreState {
        self.state.into_inner().unwrap()
    }

    /// Activates `id` once: search, and on improvement move it and record the
    /// partner group it left. Returns whether a shift happened.
    pub fn activate(&self, id: NoId, ctx: &StepContext, execution_index: usize) -> Result<bool> {
        self.with_lock(|s| {
            let choice = shift_search(id, &s.partition, &s.history, ctx)?;
            if !choice.is_shift() {
                return Ok(false);
            }
            s.partition = s.partition.shifted(id, choice.best.without(id))?;
            // Others may have rebuilt a group this operator left before, so the
            // insert can be a repeat.
            s.history.insert(id, choice.current.without(id));
            s.shifts.push(ShiftRecord {
                execution_index,
                actor: id,
                from_coalition: choice.current,
                to_coalition: choice.best,
                payoff_before: choice.current_payoff,
                payoff_after: choice.best_payoff,
            });
            Ok(true)
        })
    }
}

#[derive(Debug, Clone)]
pub struct FormationOutcome {
    pub partition: Partition,
    pub history: HistorySet,
    pub shifts: Vec<ShiftRecord>,
    pub activations: usize,
    /// False only if the round cap was hit.
    pub converged: bool,
}

/// Runs the hedonic shift process from all singletons, activating operators in
/// `schedule` order until one full round passes without a shift.
pub fn run_formation(ctx: &StepContext, schedule: &Schedule, execution_index: usize) -> Result<FormationOutcome> {
    if schedule.order().len() != ctx.players() {
        return Err(Error::InvalidArgument(format!(
            "schedule covers {} operators, context has {}",
            schedule.order().len(),
            ctx.players()
        )));
    }
    let store = PartitionStore::new(ctx.players());
    let mut activations = 0;
    let mut converged = false;
    for _ in 0..MAX_ROUNDS {
        let mut moved = false;
        for &id in schedule.order() {
            moved |= store.activate(id, ctx, execution_index)?;
            activations += 1;
        }
        if !moved {
            converged = true;
            break;
        }
    }
    let state = store.into_inner();
    Ok(FormationOutcome {
        partition: state.partition,
        history: state.history,
        shifts: state.shifts,
        activations,
        converged,
    })
}

/// Like [`run_formation`], but each operator is its own thread contending for
/// the store's lock. Terminates once every operator has had a quiet activation
/// since the most recent shift. The interleaving, and so the outcome, is up
/// to the OS scheduler.
pub fn run_formation_threaded(ctx: &StepContext, execution_index: usize) -> Result<FormationOutcome> {
    struct Progress {
        quiet: Vec<bool>,
        done: bool,
        activations: usize,
        error: Option<Error>,
    }
    let n = ctx.players();
    let store = PartitionStore::new(n);
    let progress = Mutex::new(Progress { quiet: vec![false; n], done: n == 0, activations: 0, error: None });
    let cap = MAX_ROUNDS * n.max(1);
    std::thread::scope(|scope| {
        for k in 0..n {
            let (store, progress) = (&store, &progress);
            scope.spawn(move || loop {
                if progress.lock().unwrap().done {
                    break;
                }
                // The progress lock is only taken while the store is free, and
                // vice versa, so the two never nest.
                let outcome = store.activate(NoId(k), ctx, execution_index);
                let mut p = progress.lock().unwrap();
                p.activations += 1;
                match outcome {
                    Ok(true) => {
                        p.quiet.iter_mut().for_each(|q| *q = false);
                    }
                    Ok(false) => p.quiet[k] = true,
                    Err(e) => {
                        p.error.get_or_insert(e);
                        p.done = true;
                    }
                }
                if p.quiet.iter().all(|&q| q) || p.activations >= cap {
                    p.done = true;
                }
                drop(p);
                std::thread::yield_now();
            });
        }
    });
    let progress = progress.into_inner().unwrap();
    if let Some(e) = progress.error {
        return Err(e);
    }
    let converged = progress.quiet.iter().all(|&q| q);
    let state = store.into_inner();
    Ok(FormationOutcome {
        partition: state.partition,
        history: state.history,
        shifts: state.shifts,
        activations: progress.activations,
        converged,
    })
}

/// A profitable unilateral deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub actor: NoId,
    /// Coalition joined, empty when standing alone.
    pub partners: Coalition,
    pub current_payoff: f64,
    pub deviation_payoff: f64,
}

/// Nash stability of `partition`. With a history, deviations into masked
/// coalitions do not count; with `None` every deviation is considered. Returns
/// the first profitable deviation found, if any.
pub fn is_nash_stable(
    partition: &Partition,
    history: Option<&HistorySet>,
    ctx: &StepContext,
) -> Result<Option<Witness>> {
    if partition.players() != ctx.players() {
        return Err(Error::InvalidArgument(format!(
            "{}-player partition for {} operators",
            partition.players(),
            ctx.players()
        )));
    }
    let empty = HistorySet::new(ctx.players());
    let history = history.unwrap_or(&empty);
    for id in (0..ctx.players()).map(NoId) {
        let choice = shift_search(id, partition, history, ctx)?;
        if choice.is_shift() {
            return Ok(Some(Witness {
                actor: id,
                partners: choice.best.without(id),
                current_payoff: choice.current_payoff,
                deviation_payoff: choice.best_payoff,
            }));
        }
    }
    Ok(None)
}

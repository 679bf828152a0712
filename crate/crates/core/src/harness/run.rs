use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RpMetric, Scenario, StableSetStrategy};
use super::metrics::{metric_on, metric_rp, metric_xl, Metrics};
use crate::error::{Error, Result};
use crate::game::{
    all_partitions, is_nash_stable, run_formation, Coalition, HistorySet, Partition, Schedule, ShiftRecord, StepContext,
};
use crate::model::{users_at, NoId, UserClass, UserDemand};
use crate::traces::{discretize, StepLoad};

/// Player count up to which stable outcomes are enumerated.
pub const MAX_ENUMERATION_PLAYERS: usize = 6;

/// Fixed-output mixer for deriving sub-seeds.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed, |acc, &p| splitmix(acc ^ p))
}

/// Splits `n` users over the mix by largest remainder. Remainder ties go to
/// classes in cyclic order starting at `offset`, so an equal mix amounts to
/// round-robin assignment from `offset`.
pub fn class_counts(n: usize, mix: &[UserClass], offset: usize) -> Vec<usize> {
    let k = mix.len();
    let quotas: Vec<f64> = mix.iter().map(|c| c.mix_probability * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    let rank = |c: usize| (c + k - offset % k) % k;
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        if (fa - fb).abs() > 1e-9 {
            fb.total_cmp(&fa)
        } else {
            rank(a).cmp(&rank(b))
        }
    });
    for &c in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Peak-load discretization of every operator at the scenario's step width.
pub fn step_loads(scenario: &Scenario) -> Result<Vec<StepLoad>> {
    scenario
        .operators
        .iter()
        .map(|no| {
            discretize(
                no.load_profile.as_ref().expect("prepared operators carry a profile"),
                scenario.config.step_hours,
            )
        })
        .collect()
}

/// Users present at execution `step`, one list per operator.
pub fn populate_step(scenario: &Scenario, loads: &[StepLoad], step: usize, seed: u64) -> Result<StepContext> {
    if step >= scenario.config.executions() {
        return Err(Error::InvalidArgument(format!("step {step} beyond {} executions", scenario.config.executions())));
    }
    let mix = &scenario.config.user_mix;
    let users = scenario
        .operators
        .iter()
        .enumerate()
        .map(|(k, no)| {
            let n = users_at(loads[k].peak(step), scenario.max_users[k])?;
            let offset = (derive_seed(&[seed, step as u64, k as u64]) % mix.len() as u64) as usize;
            let counts = class_counts(n, mix, offset);
            Ok(mix
                .iter()
                .zip(counts)
                .flat_map(|(class, c)| std::iter::repeat_with(|| UserDemand::new(no.id, class.clone())).take(c))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    StepContext::new(scenario.operators.clone(), users)
}

fn permutations(n: usize) -> Vec<Vec<NoId>> {
    let mut out = Vec::new();
    let mut current: Vec<NoId> = (0..n).map(NoId).collect();
    // Heap's algorithm
    let mut c = vec![0usize; n];
    out.push(current.clone());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                current.swap(0, i);
            } else {
                current.swap(c[i], i);
            }
            out.push(current.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Distinct stable partitions at one step, in canonical order.
pub fn enumerate_stable_outcomes(
    ctx: &StepContext,
    strategy: StableSetStrategy,
    execution_index: usize,
) -> Result<Vec<Partition>> {
    let n = ctx.players();
    if n > MAX_ENUMERATION_PLAYERS {
        return Err(Error::BoundExceeded(format!(
            "{n} operators, stable outcomes enumerated up to {MAX_ENUMERATION_PLAYERS}"
        )));
    }
    if strategy == StableSetStrategy::Exhaustive {
        let mut stable = Vec::new();
        for p in all_partitions(n)? {
            if is_nash_stable(&p, None, ctx)?.is_none() {
                stable.push(p);
            }
        }
        if !stable.is_empty() {
            return Ok(stable);
        }
    }
    let mut found = BTreeSet::new();
    for order in permutations(n) {
        found.insert(run_formation(ctx, &Schedule::from_order(order)?, execution_index)?.partition);
    }
    Ok(found.into_iter().collect())
}

/// Everything recorded about one execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub seed: u64,
    pub step: usize,
    pub peak_load: Vec<f64>,
    pub users: Vec<usize>,
    /// Outcome of the seeded schedule; on/off flags and served users come from it.
    pub partition: Partition,
    /// Partner groups each operator left while forming `partition`.
    pub history: Vec<Vec<Coalition>>,
    pub shifts: usize,
    /// `partition` passed the stability check under its terminal histories.
    pub stable: bool,
    pub stable_partitions: Vec<Partition>,
    /// Payoff averaged over `stable_partitions`, $/hour.
    pub payoff: Vec<f64>,
    /// Payoff in `partition`.
    pub formed_payoff: Vec<f64>,
    /// Value of each coalition of `partition`, aligned with its coalitions.
    pub coalition_values: Vec<f64>,
    /// Standalone profit, $/hour.
    pub baseline: Vec<f64>,
    pub on: Vec<bool>,
    pub baseline_on: Vec<bool>,
    pub served: Vec<usize>,
    pub baseline_served: Vec<usize>,
}

impl StepRecord {
    pub fn history_set(&self) -> HistorySet {
        let mut h = HistorySet::new(self.history.len());
        for (k, groups) in self.history.iter().enumerate() {
            for &g in groups {
                h.insert(NoId(k), g);
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub metrics: Vec<Metrics>,
    pub steps: Vec<StepRecord>,
    pub shifts: Vec<ShiftRecord>,
}

fn station_of(coalition: Coalition, id: NoId) -> usize {
    coalition.members().position(|m| m == id).expect("member")
}

/// Simulates one execution.
pub fn run_step(
    scenario: &Scenario,
    loads: &[StepLoad],
    step: usize,
    seed: u64,
) -> Result<(StepRecord, Vec<ShiftRecord>)> {
    let ctx = populate_step(scenario, loads, step, seed)?;
    let n = ctx.players();
    let ids: Vec<NoId> = (0..n).map(NoId).collect();

    let mut baseline = Vec::with_capacity(n);
    let mut baseline_on = Vec::with_capacity(n);
    let mut baseline_served = Vec::with_capacity(n);
    for &id in &ids {
        let eval = ctx.evaluate(Coalition::singleton(id))?;
        baseline.push(eval.value);
        baseline_on.push(eval.solution.on[0]);
        baseline_served.push(eval.solution.served_count(0));
    }

    let schedule = Schedule::seeded(n, derive_seed(&[seed, step as u64, 0x5c4e]));
    let formed = run_formation(&ctx, &schedule, step)?;
    let stable = formed.converged && is_nash_stable(&formed.partition, Some(&formed.history), &ctx)?.is_none();

    let mut on = Vec::with_capacity(n);
    let mut served = Vec::with_capacity(n);
    let mut formed_payoff = Vec::with_capacity(n);
    for &id in &ids {
        let c = formed.partition.coalition_of(id);
        let eval = ctx.evaluate(c)?;
        let k = station_of(c, id);
        on.push(eval.solution.on[k]);
        served.push(eval.solution.served_count(k));
        formed_payoff.push(ctx.payoff(id, c)?);
    }
    let coalition_values = formed.partition.coalitions().iter().map(|&c| ctx.value(c)).collect::<Result<_>>()?;

    let stable_partitions = if n <= MAX_ENUMERATION_PLAYERS {
        enumerate_stable_outcomes(&ctx, scenario.config.stable_set_strategy, step)?
    } else {
        vec![formed.partition.clone()]
    };
    let mut payoff = vec![0.0; n];
    for p in &stable_partitions {
        for &id in &ids {
            payoff[id.0] += ctx.payoff(id, p.coalition_of(id))?;
        }
    }
    payoff.iter_mut().for_each(|x| *x /= stable_partitions.len() as f64);

    let record = StepRecord {
        seed,
        step,
        peak_load: loads.iter().map(|l| l.peak(step)).collect(),
        users: ids.iter().map(|&id| ctx.users(id).len()).collect(),
        partition: formed.partition.clone(),
        history: ids.iter().map(|&id| formed.history.of(id).iter().copied().collect()).collect(),
        shifts: formed.shifts.len(),
        stable,
        stable_partitions,
        payoff,
        formed_payoff,
        coalition_values,
        baseline,
        on,
        baseline_on,
        served,
        baseline_served,
    };
    Ok((record, formed.shifts))
}

/// Per-operator metrics from step records.
pub fn aggregate(steps: &[StepRecord], players: usize, metric: RpMetric) -> Result<Vec<Metrics>> {
    (0..players)
        .map(|i| {
            let mut x: Vec<f64> = steps.iter().map(|s| s.payoff[i]).collect();
            let mut p: Vec<f64> = steps.iter().map(|s| s.baseline[i]).collect();
            if metric == RpMetric::Literal {
                // steps with a zero baseline have no defined ratio
                let keep: Vec<bool> = p.iter().map(|&v| v != 0.0).collect();
                x = x.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v).collect();
                p = p.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v).collect();
            }
            let rp = if p.iter().all(|&v| v == 0.0) && x.iter().all(|&v| v == 0.0) {
                0.0
            } else {
                metric_rp(&x, &p, metric)?
            };
            let on: Vec<bool> = steps.iter().map(|s| s.on[i]).collect();
            let served: Vec<usize> = steps.iter().map(|s| s.served[i]).collect();
            let base: Vec<usize> = steps.iter().map(|s| s.baseline_served[i]).collect();
            let load_deviation = if base.iter().sum::<usize>() == 0 { f64::NAN } else { metric_xl(&served, &base)? };
            Ok(Metrics { rp, on_ratio: metric_on(&on), load_deviation })
        })
        .collect()
}

/// Runs every execution of the horizon for one seed. Executions run in
/// parallel; results are collected in step order.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<RunResult> {
    let loads = step_loads(scenario)?;
    let outcomes: Vec<(StepRecord, Vec<ShiftRecord>)> = (0..scenario.config.executions())
        .into_par_iter()
        .map(|k| run_step(scenario, &loads, k, seed))
        .collect::<Result<_>>()?;
    let (steps, shifts): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let shifts: Vec<ShiftRecord> = shifts.into_iter().flatten().collect();
    let metrics = aggregate(&steps, scenario.operators.len(), scenario.config.rp_metric)?;
    Ok(RunResult { seed, metrics, steps, shifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{
        heterogeneous_mix, premium_mix, reference_station, LoadSpec, OperatorSpec, ScenarioConfig,
    };

    fn constant_scenario(loads: &[f64], mix: Vec<UserClass>, cost: f64) -> Scenario {
        ScenarioConfig {
            operators: loads
                .iter()
                .map(|&l| OperatorSpec {
                    name: None,
                    base_station: reference_station(0.12),
                    coalition_cost_rate: cost,
                    load: LoadSpec::Constant(l),
                })
                .collect(),
            energy_prices: None,
            user_mix: mix,
            step_hours: 1.0,
            horizon_hours: 4.0,
            seeds: vec![1],
            stable_set_strategy: StableSetStrategy::Schedules,
            rp_metric: RpMetric::RatioOfSums,
            dt_sweep: None,
        }
        .prepare()
        .unwrap()
    }

    #[test]
    fn counts_split_evenly() {
        let mix = heterogeneous_mix();
        assert_eq!(class_counts(6, &mix, 0), vec![2, 2, 2]);
        assert_eq!(class_counts(7, &mix, 0), vec![3, 2, 2]);
        assert_eq!(class_counts(7, &mix, 1), vec![2, 3, 2]);
        assert_eq!(class_counts(8, &mix, 2), vec![3, 2, 3]);
        assert_eq!(class_counts(0, &mix, 1), vec![0, 0, 0]);
        assert_eq!(class_counts(9, &premium_mix(), 0), vec![9]);
    }

    #[test]
    fn premium_population_from_peak() {
        let scenario = constant_scenario(&[0.8], premium_mix(), 0.01);
        let loads = step_loads(&scenario).unwrap();
        let ctx = populate_step(&scenario, &loads, 0, 1).unwrap();
        assert_eq!(ctx.users(NoId(0)).len(), 8);
        assert!(populate_step(&scenario, &loads, 4, 1).is_err());
    }

    #[test]
    fn mixed_population_rotates_remainder() {
        // 0.25 * 28 = 7 users
        let scenario = constant_scenario(&[0.25], heterogeneous_mix(), 0.01);
        let loads = step_loads(&scenario).unwrap();
        let mut seen = BTreeSet::new();
        for step in 0..4 {
            for seed in 0..8 {
                let ctx = populate_step(&scenario, &loads, step, seed).unwrap();
                let users = ctx.users(NoId(0));
                assert_eq!(users.len(), 7);
                let counts: Vec<usize> = ["Base", "Standard", "Premium"]
                    .iter()
                    .map(|n| users.iter().filter(|u| u.class.name == *n).count())
                    .collect();
                let mut sorted = counts.clone();
                sorted.sort();
                assert_eq!(sorted, vec![2, 2, 3]);
                seen.insert(counts);
            }
        }
        assert_eq!(seen.len(), 3, "the extra user should land on every class for some seed");
    }

    #[test]
    fn heaps_algorithm_lists_every_order() {
        for n in 0..=5 {
            let perms = permutations(n);
            let distinct: BTreeSet<_> = perms.iter().cloned().collect();
            let fact: usize = (1..=n).product();
            assert_eq!(perms.len(), fact);
            assert_eq!(distinct.len(), fact);
        }
    }

    #[test]
    fn single_operator_has_zero_rp() {
        let mut scenario = constant_scenario(&[0.6], premium_mix(), 0.01);
        scenario.config.horizon_hours = 1.0;
        let run = run_scenario(&scenario, 1).unwrap();
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.metrics[0].rp, 0.0);
        assert_eq!(run.steps[0].stable_partitions, vec![Partition::singletons(1)]);
    }

    #[test]
    fn symmetric_pair_single_outcome() {
        let scenario = constant_scenario(&[0.3, 0.3], premium_mix(), 0.01);
        let loads = step_loads(&scenario).unwrap();
        let ctx = populate_step(&scenario, &loads, 0, 1).unwrap();
        let outcomes = enumerate_stable_outcomes(&ctx, StableSetStrategy::Schedules, 0).unwrap();
        assert_eq!(outcomes, vec![Partition::grand(2)]);
    }

    #[test]
    fn prohibitive_cost_replicates_baseline() {
        let scenario = constant_scenario(&[0.3, 0.7, 0.0], premium_mix(), 1000.0);
        let run = run_scenario(&scenario, 3).unwrap();
        for s in &run.steps {
            assert_eq!(s.partition, Partition::singletons(3));
            assert_eq!(s.payoff, s.baseline);
        }
        assert!(run.metrics.iter().all(|m| m.rp == 0.0));
        assert_eq!(run.metrics[0].load_deviation, 0.0);
        assert_eq!(run.metrics[1].on_ratio, 1.0);
        // no users at all: station asleep, deviation undefined
        assert_eq!(run.metrics[2].on_ratio, 0.0);
        assert!(run.metrics[2].load_deviation.is_nan());
    }

    #[test]
    fn accounting_identity_per_step() {
        let scenario = constant_scenario(&[0.3, 0.7, 0.1, 0.5], premium_mix(), 0.01);
        let run = run_scenario(&scenario, 2).unwrap();
        for s in &run.steps {
            for (c, v) in s.partition.coalitions().iter().zip(&s.coalition_values) {
                let sum: f64 = c.members().map(|id| s.formed_payoff[id.0]).sum();
                assert_close!(sum, *v, 1e-9);
            }
            assert!(s.stable);
        }
        let again = aggregate(&run.steps, 4, RpMetric::RatioOfSums).unwrap();
        assert_eq!(format!("{again:?}"), format!("{:?}", run.metrics));
    }

    #[test]
    fn exhaustive_strategy_returns_history_free_stable_sets() {
        let scenario = constant_scenario(&[0.3, 0.7, 0.1], premium_mix(), 0.01);
        let loads = step_loads(&scenario).unwrap();
        let ctx = populate_step(&scenario, &loads, 0, 1).unwrap();
        let stable = enumerate_stable_outcomes(&ctx, StableSetStrategy::Exhaustive, 0).unwrap();
        assert!(!stable.is_empty());
        for p in &stable {
            let free = is_nash_stable(p, None, &ctx).unwrap().is_none();
            let via_schedules = enumerate_stable_outcomes(&ctx, StableSetStrategy::Schedules, 0).unwrap().contains(p);
            assert!(free || via_schedules);
        }
    }
}

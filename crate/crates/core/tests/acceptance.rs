//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use greencoop::game::{aumann_dreze, bell_numbers, is_nash_stable, run_formation, Coalition, Partition, Schedule};
use greencoop::harness::{
    enumerate_stable_outcomes, heterogeneous_mix, populate_step, premium_mix, reference_scenario, run_scenario,
    step_loads, write_outputs, LoadSpec, Metrics, ScenarioConfig, StableSetStrategy, SCENARIO_PRICES,
};
use greencoop::model::NoId;
use greencoop::solver::{greedy_rates, penalty_of, solve_bruteforce, solve_exact, validate, AllocationInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{coalition, grid_penalty, premium_context, random_instance, shapley_by_orderings};

const OBJECTIVE_TOL: f64 = 1e-6;
const PENALTY_TOL: f64 = 1e-6;
const SHAPLEY_TOL: f64 = 1e-9;
const PINNED_SEED: u64 = 1;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn rp(cfg: &ScenarioConfig) -> Vec<f64> {
    let run = run_scenario(&cfg.prepare().unwrap(), PINNED_SEED).unwrap();
    run.metrics.iter().map(|m: &Metrics| m.rp).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let (mut shared, mut short) = (0, 0);
    for k in 0..200 {
        let inst = random_instance(&mut rng, 3, 6);
        let exact = solve_exact(&inst, 1e-9).map_err(|e| format!("instance {k}: {e}"))?;
        let brute = solve_bruteforce(&inst).map_err(|e| format!("instance {k}: {e}"))?;
        let gap = (exact.objective - brute.objective).abs();
        worst = worst.max(gap);
        shared += usize::from(exact.on.iter().filter(|&&b| b).count() > 1);
        short += usize::from(
            exact
                .rates
                .iter()
                .flatten()
                .zip(inst.users.iter().cycle())
                .any(|(&d, u)| d > 0.0 && d < u.class.min_rate - 1e-9),
        );
        let violations = validate(&inst, &exact);
        if gap > OBJECTIVE_TOL || !violations.is_empty() {
            return Err(format!("instance {k}: gap {gap:.3e}, violations {violations:?}"));
        }
    }
    let t = start.elapsed();
    check(within(t, 60), format!(
            "200 instances ({shared} with several stations on, {short} with a partially served user), max gap {worst:.2e}, {:.2}s",
            t.as_secs_f64()
        ))
}

fn greedy_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let inst: AllocationInstance = random_instance(&mut rng, 1, 4);
        let demands: Vec<(f64, f64)> = inst.users.iter().map(|u| (u.class.min_rate, u.class.revenue_rate)).collect();
        let capacity = inst.stations[0].capacity * rng.gen_range(0.05..1.0);
        let rates = greedy_rates(capacity, &demands);
        if rates.iter().sum::<f64>() > capacity + 1e-9 {
            return Err(format!("subproblem {k}: greedy exceeds capacity"));
        }
        let margin = penalty_of(&demands, &rates) - grid_penalty(capacity, &demands);
        worst = worst.max(margin);
        if margin > PENALTY_TOL {
            return Err(format!("subproblem {k}: greedy worse than grid by {margin:.3e}"));
        }
    }
    check(true, format!("100 subproblems, greedy minus grid at most {worst:.2e}"))
}

fn shapley_axioms() -> Outcome {
    // efficiency on everything a full run evaluates
    let scenario = reference_scenario(1, premium_mix()).unwrap().prepare().unwrap();
    let loads = step_loads(&scenario).unwrap();
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for step in 0..scenario.config.executions() {
        let ctx = populate_step(&scenario, &loads, step, PINNED_SEED).unwrap();
        run_formation(&ctx, &Schedule::seeded(5, step as u64), step).unwrap();
        enumerate_stable_outcomes(&ctx, StableSetStrategy::Schedules, step).unwrap();
        for (c, p) in ctx.cached_payoffs() {
            let gap = (p.total() - ctx.value(c).unwrap()).abs();
            worst = worst.max(gap);
            checked += 1;
            if gap > SHAPLEY_TOL {
                return Err(format!("step {step}, {c}: efficiency gap {gap:.3e}"));
            }
        }
    }
    // symmetry against the orderings oracle
    let ctx = premium_context(&[0.12, 0.12, 0.24, 0.12], &[4, 4, 7, 1], 0.01);
    let grand = ctx.grand();
    let phi = ctx.payoffs(grand).unwrap();
    let oracle = shapley_by_orderings(grand, &|t| ctx.value(t).unwrap());
    let sym = (phi.get(NoId(0)).unwrap() - phi.get(NoId(1)).unwrap()).abs();
    let oracle_gap = phi.iter().map(|(id, x)| (x - oracle[&id]).abs()).fold(0.0, f64::max);
    // three-player worked game
    let table = |s: Coalition| match s.bits() {
        0b001 => 1.0,
        0b010 => 2.0,
        0b100 => 3.0,
        0b011 => 4.0,
        0b101 => 5.0,
        0b110 => 6.0,
        0b111 => 9.0,
        _ => 0.0,
    };
    let three = coalition(&[0, 1, 2]);
    let phi3 = aumann_dreze(three, |s| Ok(table(s))).unwrap();
    let oracle3 = shapley_by_orderings(three, &table);
    let gap3 = phi3.iter().map(|(id, x)| (x - oracle3[&id]).abs()).fold(0.0, f64::max);
    let expected = [2.0, 3.0, 4.0];
    let gap_expected = phi3.values.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        sym <= SHAPLEY_TOL && oracle_gap <= SHAPLEY_TOL && gap3 <= SHAPLEY_TOL && gap_expected <= SHAPLEY_TOL,
        format!(
            "{checked} payoff vectors, max efficiency gap {worst:.1e}; symmetry gap {sym:.1e}; oracle gap {oracle_gap:.1e}; 3-player {}",
            fmt(&phi3.values)
        ),
    )
}

fn convergence_and_stability() -> Outcome {
    let start = Instant::now();
    let bell = bell_numbers(5)[5] as usize;
    let mut max_shifts = 0;
    let mut runs = 0;
    for seed in 0..100u64 {
        let mut cfg = reference_scenario(1, if seed % 3 == 0 { heterogeneous_mix() } else { premium_mix() }).unwrap();
        cfg.energy_prices = Some(SCENARIO_PRICES[seed as usize % 4].to_vec());
        cfg.horizon_hours = 24.0;
        for (k, op) in cfg.operators.iter_mut().enumerate() {
            if let LoadSpec::Synthetic { seed: s, .. } = &mut op.load {
                *s = Some(seed * 10 + k as u64);
            }
        }
        let scenario = cfg.prepare().unwrap();
        let loads = step_loads(&scenario).unwrap();
        for step in 0..cfg.executions() {
            let ctx = populate_step(&scenario, &loads, step, seed).unwrap();
            let out = run_formation(&ctx, &Schedule::seeded(5, seed * 1000 + step as u64), step).unwrap();
            runs += 1;
            max_shifts = max_shifts.max(out.shifts.len());
            if !out.converged || out.shifts.len() > bell {
                return Err(format!(
                    "seed {seed} step {step}: {} shifts, converged {}",
                    out.shifts.len(),
                    out.converged
                ));
            }
            if let Some(w) = is_nash_stable(&out.partition, Some(&out.history), &ctx).unwrap() {
                return Err(format!("seed {seed} step {step}: {} unstable, witness {w:?}", out.partition));
            }
        }
    }
    let t = start.elapsed();
    check(
        within(t, 600),
        format!("{runs} formations over 100 seeds, max {max_shifts} shifts (bound {bell}), {:.2}s", t.as_secs_f64()),
    )
}

fn scenario_one_replication(rp1: &[f64]) -> Outcome {
    let argmax = (0..5).max_by(|&a, &b| rp1[a].total_cmp(&rp1[b])).unwrap();
    let argmin = (0..5).min_by(|&a, &b| rp1[a].total_cmp(&rp1[b])).unwrap();
    check(
        rp1.iter().all(|&r| r > 0.0) && argmax == 2 && argmin == 0,
        format!("RP {} (max NO {}, min NO {})", fmt(rp1), argmax + 1, argmin + 1),
    )
}

fn price_trend(rp1: &[f64]) -> Outcome {
    let rp2 = rp(&reference_scenario(2, premium_mix()).unwrap());
    check(rp2.iter().zip(rp1).all(|(b, a)| b >= a), format!("scenario 2 RP {} vs scenario 1 {}", fmt(&rp2), fmt(rp1)))
}

fn heterogeneity_trend(rp1: &[f64]) -> Outcome {
    let mixed = rp(&reference_scenario(1, heterogeneous_mix()).unwrap());
    check(
        mixed.iter().zip(rp1).all(|(m, p)| m < p && *m > 0.0),
        format!("mixed-class RP {} vs Premium-only {}", fmt(&mixed), fmt(rp1)),
    )
}

fn step_width_trend(rp1: &[f64]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for dt in [2.0, 4.0, 6.0] {
        let mut cfg = reference_scenario(1, premium_mix()).unwrap();
        cfg.step_hours = dt;
        let r = rp(&cfg);
        ok &= r.iter().zip(rp1).all(|(a, b)| a <= b);
        lines.push(format!("dt={dt}: {}", fmt(&r)));
    }
    check(ok, format!("{} vs dt=1: {}", lines.join("; "), fmt(rp1)))
}

fn degenerate_controls() -> Outcome {
    let mut cfg = reference_scenario(1, premium_mix()).unwrap();
    cfg.operators.iter_mut().for_each(|o| o.coalition_cost_rate = 1000.0);
    let run = run_scenario(&cfg.prepare().unwrap(), PINNED_SEED).unwrap();
    let singletons = run
        .steps
        .iter()
        .all(|s| s.partition == Partition::singletons(5) && s.stable_partitions == vec![Partition::singletons(5)]);
    let zero_rp = run.metrics.iter().all(|m| m.rp == 0.0);

    let mut empty = reference_scenario(1, premium_mix()).unwrap();
    empty.operators.iter_mut().for_each(|o| o.load = LoadSpec::Constant(0.0));
    empty.horizon_hours = 6.0;
    let scenario = empty.prepare().unwrap();
    let loads = step_loads(&scenario).unwrap();
    let ctx = populate_step(&scenario, &loads, 0, PINNED_SEED).unwrap();
    let mut quiet = true;
    for s in ctx.grand().subsets().skip(1) {
        let e = ctx.evaluate(s).unwrap();
        quiet &= e.serving_cost == 0.0 && e.solution.on.iter().all(|&b| !b);
    }
    let empty_run = run_scenario(&scenario, PINNED_SEED).unwrap();
    quiet &= empty_run.steps.iter().all(|s| s.on.iter().all(|&b| !b) && s.baseline_on.iter().all(|&b| !b));
    check(
        singletons && zero_rp && quiet,
        format!("K=1000: singletons every step {singletons}, RP all zero {zero_rp}; no users: Q=0 and all off {quiet}"),
    )
}

fn determinism() -> Outcome {
    let cfg = reference_scenario(3, heterogeneous_mix()).unwrap();
    let scenario = cfg.prepare().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let run = run_scenario(&scenario, 11).unwrap();
        write_outputs(dir, &cfg, &[run]).unwrap();
    }
    let same = |name: &str| fs::read(a.path().join(name)).unwrap() == fs::read(b.path().join(name)).unwrap();
    check(
        same("metrics.csv") && same("steps.jsonl"),
        "metrics.csv and steps.jsonl byte-identical across two runs".into(),
    )
}

fn main() {
    let start = Instant::now();
    let rp1 = rp(&reference_scenario(1, premium_mix()).unwrap());
    let criteria: Vec<Criterion> = vec![
        ("solver matches brute force", Box::new(solver_oracle)),
        ("greedy rates optimal", Box::new(greedy_optimality)),
        ("Shapley axioms", Box::new(shapley_axioms)),
        ("convergence and stability", Box::new(convergence_and_stability)),
        ("scenario 1 replication", Box::new(|| scenario_one_replication(&rp1))),
        ("energy price trend", Box::new(|| price_trend(&rp1))),
        ("heterogeneity trend", Box::new(|| heterogeneity_trend(&rp1))),
        ("step width trend", Box::new(|| step_width_trend(&rp1))),
        ("degenerate controls", Box::new(degenerate_controls)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

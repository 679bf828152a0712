//! Builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use greencoop::game::{Coalition, StepContext};
use greencoop::model::{BaseStation, NetworkOperator, NoId, UserClass, UserDemand};
use greencoop::solver::AllocationInstance;
use rand::Rng;

pub fn station(price: f64) -> BaseStation {
    BaseStation::new(100.0, 0.551, 0.00146, price).unwrap()
}

pub fn premium() -> UserClass {
    UserClass::new("Premium", 10.0, 0.07, 1.0).unwrap()
}

pub fn op(k: usize, price: f64, cost: f64) -> NetworkOperator {
    NetworkOperator::new(NoId(k), station(price), vec![premium()], cost).unwrap()
}

/// Reference stations at `prices`, operator `k` holding `counts[k]` Premium users.
pub fn premium_context(prices: &[f64], counts: &[usize], cost: f64) -> StepContext {
    let ops: Vec<NetworkOperator> = prices.iter().enumerate().map(|(k, &p)| op(k, p, cost)).collect();
    let users = counts.iter().enumerate().map(|(k, &n)| vec![UserDemand::new(NoId(k), premium()); n]).collect();
    StepContext::new(Arc::from(ops), users).unwrap()
}

/// Instance with parameters drawn around the reference values; capacities
/// are cut down so that shortfalls and sharing both occur.
pub fn random_instance<R: Rng>(rng: &mut R, max_stations: usize, max_users: usize) -> AllocationInstance {
    let k = rng.gen_range(1..=max_stations);
    let n = rng.gen_range(0..=max_users);
    // The tight regime has small cells and lucrative users, so that several
    // stations are worth switching on.
    let tight = rng.gen_bool(0.5);
    let stations = (0..k)
        .map(|_| {
            let price = if rng.gen_bool(0.7) { [0.12, 0.24][rng.gen_range(0..2)] } else { rng.gen_range(0.05..2.0) };
            BaseStation::new(
                if tight { rng.gen_range(5.0..20.0) } else { rng.gen_range(8.0..60.0) },
                0.551 * rng.gen_range(0.5..1.5),
                0.00146 * rng.gen_range(0.5..5.0),
                price,
            )
            .unwrap()
        })
        .collect();
    let classes = [(0.0122, 0.0175), (0.384, 0.035), (10.0, 0.07)];
    let users = (0..n)
        .map(|_| {
            let (d, r) = if rng.gen_bool(0.6) {
                classes[rng.gen_range(0..3)]
            } else {
                (rng.gen_range(1.0..20.0), rng.gen_range(0.01..if tight { 0.6 } else { 0.15 }))
            };
            UserDemand::new(NoId(0), UserClass::new("u", d, r, 1.0).unwrap())
        })
        .collect();
    AllocationInstance::new(stations, users).unwrap()
}

/// Smallest penalty over rates on the grid `{0, D/20, ..., D}` per user that
/// fit in `capacity`.
pub fn grid_penalty(capacity: f64, demands: &[(f64, f64)]) -> f64 {
    const STEPS: usize = 20;
    let mut best = f64::INFINITY;
    let mut digits = vec![0usize; demands.len()];
    loop {
        let load: f64 = digits.iter().zip(demands).map(|(&g, &(d, _))| d * g as f64 / STEPS as f64).sum();
        if load <= capacity + 1e-9 {
            let pen: f64 = digits.iter().zip(demands).map(|(&g, &(_, r))| r * (1.0 - g as f64 / STEPS as f64)).sum();
            best = best.min(pen);
        }
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return best;
            }
            digits[pos] += 1;
            if digits[pos] <= STEPS {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn permutations(items: &[NoId]) -> Vec<Vec<NoId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Shapley value as the mean marginal contribution over all arrival orders.
pub fn shapley_by_orderings(coalition: Coalition, v: &dyn Fn(Coalition) -> f64) -> HashMap<NoId, f64> {
    let members: Vec<NoId> = coalition.members().collect();
    let orders = permutations(&members);
    let mut sums: HashMap<NoId, f64> = members.iter().map(|&m| (m, 0.0)).collect();
    for order in &orders {
        let mut before = Coalition::EMPTY;
        for &m in order {
            let after = before.with(m);
            let prev = if before.is_empty() { 0.0 } else { v(before) };
            *sums.get_mut(&m).unwrap() += v(after) - prev;
            before = after;
        }
    }
    sums.values_mut().for_each(|s| *s /= orders.len() as f64);
    sums
}

pub fn coalition(ids: &[usize]) -> Coalition {
    Coalition::new(ids.iter().map(|&k| NoId(k))).unwrap()
}

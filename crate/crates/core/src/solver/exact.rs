//! Exact solver.
//!
//! Every subset of stations is tried as the switched-on set, cheapest
//! relaxation bound first. With the on-set fixed the energy term is linear in
//! the attachment, and users with identical (rate, revenue) are
//! interchangeable, so the search branches on how many users of each class go
//! to each station. Classes are visited by decreasing revenue per Mbps, which
//! is also the order in which a station grants rates, so a class's served rate
//! is final once it is placed. The last class is placed by marginal-cost
//! greedy, which is optimal for a single class because each station's marginal
//! cost is nondecreasing in its user count. Interior nodes are bounded by the
//! transportation relaxation of the classes still to place.

use super::{all_off, complete_assignment, transport, AllocationInstance, AllocationSolution};
use crate::error::{Error, Result};

const MAX_STATIONS: usize = 16;

#[derive(Debug)]
struct ClassGroup {
    min_rate: f64,
    revenue: f64,
    density: f64,
    users: Vec<usize>,
}

fn group_classes(inst: &AllocationInstance) -> Vec<ClassGroup> {
    let mut groups: Vec<ClassGroup> = Vec::new();
    for (j, u) in inst.users.iter().enumerate() {
        let (d, r) = (u.class.min_rate, u.class.revenue_rate);
        match groups.iter_mut().find(|g| g.min_rate.to_bits() == d.to_bits() && g.revenue.to_bits() == r.to_bits()) {
            Some(g) => g.users.push(j),
            None => groups.push(ClassGroup { min_rate: d, revenue: r, density: r / d, users: vec![j] }),
        }
    }
    groups.sort_by(|a, b| b.density.total_cmp(&a.density).then(a.users[0].cmp(&b.users[0])));
    groups
}

/// Minimum-cost placement of `n` interchangeable users over stations with the
/// given per-user energy cost and residual capacity. Ties go to the lowest
/// position. Returns the counts and the cost (energy plus penalty).
fn greedy_class(n: usize, class: &ClassGroup, unit_cost: &[f64], residual: &[f64]) -> (Vec<usize>, f64) {
    let k = unit_cost.len();
    let mut counts = vec![0usize; k];
    let mut left: Vec<f64> = residual.to_vec();
    let mut cost = 0.0;
    for _ in 0..n {
        let mut best = 0;
        let mut best_mc = f64::INFINITY;
        for s in 0..k {
            let mc = unit_cost[s] + class.revenue - class.density * class.min_rate.min(left[s].max(0.0));
            if mc < best_mc {
                best_mc = mc;
                best = s;
            }
        }
        counts[best] += 1;
        left[best] = (left[best] - class.min_rate).max(0.0);
        cost += best_mc;
    }
    (counts, cost)
}

struct Search<'a> {
    classes: &'a [ClassGroup],
    unit_cost: Vec<f64>,
    /// Earlier position holding an identical station, used for symmetry breaking.
    twin: Vec<Option<usize>>,
    tol: f64,
    best_cost: f64,
    best_counts: Option<Vec<Vec<usize>>>,
    counts: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    /// Lower bound on the cost of placing the `left` remaining users of class
    /// `class` on positions `pos..` and every later class anywhere.
    fn bound(&self, class: usize, pos: usize, left: usize, residual: &[f64]) -> f64 {
        let k = self.unit_cost.len();
        let mut base = 0.0;
        let mut supply = Vec::new();
        let mut profit = Vec::new();
        for (c, group) in self.classes.iter().enumerate().skip(class) {
            let (n, first) = if c == class { (left, pos) } else { (group.users.len(), 0) };
            if n == 0 {
                continue;
            }
            let cheapest = self.unit_cost[first..].iter().copied().fold(f64::INFINITY, f64::min);
            base += n as f64 * (group.revenue + cheapest);
            supply.push(n as f64 * group.min_rate);
            profit.push(
                (0..k)
                    .map(|s| {
                        if s < first {
                            f64::NEG_INFINITY
                        } else {
                            group.density - (self.unit_cost[s] - cheapest) / group.min_rate
                        }
                    })
                    .collect::<Vec<f64>>(),
            );
        }
        base - transport::max_profit(&supply, residual, &profit)
    }

    fn visit(&mut self, class: usize, pos: usize, left: usize, cost: f64, residual: &mut [f64], tied: &mut [bool]) {
        let k = self.unit_cost.len();
        let last_class = self.classes.len() - 1;
        let group = &self.classes[class];

        if class == last_class {
            let (counts, extra) = greedy_class(left, group, &self.unit_cost, residual);
            let total = cost + extra;
            if total < self.best_cost {
                self.best_cost = total;
                self.counts[class] = counts;
                self.best_counts = Some(self.counts.clone());
            }
            return;
        }

        if cost + self.bound(class, pos, left, residual) >= self.best_cost - self.tol {
            return;
        }

        let cap = match self.twin[pos] {
            Some(p) if tied[pos] => left.min(self.counts[class][p]),
            _ => left,
        };
        let choices: Vec<usize> = if pos == k - 1 {
            if left > cap {
                return;
            }
            vec![left]
        } else {
            let (guess, _) = greedy_class(left, group, &self.unit_cost[pos..], &residual[pos..]);
            alternate_around(guess[0].min(cap), cap)
        };

        for n in choices {
            let served = (n as f64 * group.min_rate).min(residual[pos].max(0.0));
            let step_cost = n as f64 * (self.unit_cost[pos] + group.revenue) - group.density * served;
            let saved = residual[pos];
            residual[pos] = (residual[pos] - served).max(0.0);
            self.counts[class][pos] = n;
            if pos == k - 1 {
                let saved_tied = tied.to_vec();
                for q in 0..k {
                    if let Some(p) = self.twin[q] {
                        tied[q] = tied[q] && self.counts[class][q] == self.counts[class][p];
                    }
                }
                let next = self.classes[class + 1].users.len();
                self.visit(class + 1, 0, next, cost + step_cost, residual, tied);
                tied.copy_from_slice(&saved_tied);
            } else {
                self.visit(class, pos + 1, left - n, cost + step_cost, residual, tied);
            }
            residual[pos] = saved;
            self.counts[class][pos] = 0;
        }
    }
}

/// `start`, then alternately below and above it, within `0..=max`.
fn alternate_around(start: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(start);
    let mut step = 1;
    while out.len() <= max {
        if step <= start {
            out.push(start - step);
        }
        if start + step <= max {
            out.push(start + step);
        }
        step += 1;
    }
    out
}

/// Provably optimal allocation, within `tol` (absolute, $/hour) of the true
/// minimum cost.
pub fn solve_exact(inst: &AllocationInstance, tol: f64) -> Result<AllocationSolution> {
    inst.check()?;
    if !(1e-9..=1e-4).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} outside [1e-9, 1e-4]")));
    }
    let k = inst.stations.len();
    if k > MAX_STATIONS {
        return Err(Error::BoundExceeded(format!("{k} stations, at most {MAX_STATIONS} supported")));
    }
    let mut best = all_off(inst);
    if inst.users.is_empty() {
        return Ok(best);
    }
    let classes = group_classes(inst);

    let mut on_sets: Vec<(f64, u32, Search)> = Vec::new();
    for mask in 1u32..(1u32 << k) {
        let on: Vec<usize> = (0..k).filter(|&s| mask & (1 << s) != 0).collect();
        let stations: Vec<_> = on.iter().map(|&s| &inst.stations[s]).collect();
        let twin = (0..on.len()).map(|q| (0..q).rev().find(|&p| stations[p] == stations[q])).collect();
        let search = Search {
            classes: &classes,
            unit_cost: stations.iter().map(|bs| bs.per_user_cost_rate()).collect(),
            twin,
            tol,
            best_cost: f64::INFINITY,
            best_counts: None,
            counts: vec![vec![0; on.len()]; classes.len()],
        };
        let static_cost: f64 = stations.iter().map(|bs| bs.static_cost_rate()).sum();
        let residual: Vec<f64> = stations.iter().map(|bs| bs.capacity).collect();
        let lb = static_cost + search.bound(0, 0, classes[0].users.len(), &residual);
        on_sets.push((lb, mask, search));
    }
    on_sets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best_cost = best.objective;
    let mut winner: Option<(u32, Vec<Vec<usize>>)> = None;
    for (lb, mask, mut search) in on_sets {
        if lb >= best_cost - tol {
            break;
        }
        let on: Vec<usize> = (0..k).filter(|&s| mask & (1 << s) != 0).collect();
        let static_cost: f64 = on.iter().map(|&s| inst.stations[s].static_cost_rate()).sum();
        let mut residual: Vec<f64> = on.iter().map(|&s| inst.stations[s].capacity).collect();
        let mut tied = vec![true; on.len()];
        search.best_cost = best_cost;
        search.visit(0, 0, classes[0].users.len(), static_cost, &mut residual, &mut tied);
        if let Some(counts) = search.best_counts {
            best_cost = search.best_cost;
            winner = Some((mask, counts));
        }
    }

    if let Some((mask, counts)) = winner {
        let on_list: Vec<usize> = (0..k).filter(|&s| mask & (1 << s) != 0).collect();
        let mut server = vec![None; inst.users.len()];
        for (group, per_pos) in classes.iter().zip(&counts) {
            let mut users = group.users.iter();
            for (&s, &n) in on_list.iter().zip(per_pos) {
                for &j in users.by_ref().take(n) {
                    server[j] = Some(s);
                }
            }
        }
        let on = (0..k).map(|s| mask & (1 << s) != 0).collect();
        best = complete_assignment(inst, on, &server);
        debug_assert!((best.objective - best_cost).abs() <= 1e-7, "{} vs {}", best.objective, best_cost);
    }
    Ok(best)
}

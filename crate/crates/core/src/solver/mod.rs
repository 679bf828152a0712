//! Minimum-cost allocation of a coalition's pooled users onto its stations.
//!
//! Decision variables are the per-station on flags, the user-to-station
//! assignment and the granted rates. The cost rate is the energy of switched-on
//! stations plus the QoS penalties of under-served users. Besides the
//! classical configurations where every user is attached to exactly one
//! switched-on station, the all-off configuration is admitted: every station
//! sleeps, nobody is served, every user costs its full revenue in penalty.

mod bruteforce;
mod exact;
mod lp_format;
mod transport;
mod validate;

use crate::error::{Error, Result};
use crate::model::{BaseStation, NetworkOperator, UserDemand};

pub use bruteforce::{solve_bruteforce, BRUTEFORCE_MAX_STATIONS, BRUTEFORCE_MAX_USERS};
pub use exact::solve_exact;
pub use lp_format::export_milp_text;
pub use validate::{validate, Violation};

/// Absolute objective tolerance used when callers have no preference.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Rates below this are treated as zero when counting served users.
pub const RATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AllocationInstance {
    pub stations: Vec<BaseStation>,
    pub users: Vec<UserDemand>,
    /// Total number of users, the big-M of the on/assignment coupling.
    pub big_u: usize,
}

impl AllocationInstance {
    pub fn new(stations: Vec<BaseStation>, users: Vec<UserDemand>) -> Result<Self> {
        let instance = AllocationInstance { big_u: users.len(), stations, users };
        instance.check()?;
        Ok(instance)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::MalformedInstance("no stations".into()));
        }
        if self.big_u != self.users.len() {
            return Err(Error::MalformedInstance(format!("big_u = {} but {} users", self.big_u, self.users.len())));
        }
        for bs in &self.stations {
            bs.validate().map_err(|e| Error::MalformedInstance(e.to_string()))?;
        }
        for u in &self.users {
            u.class.validate().map_err(|e| Error::MalformedInstance(e.to_string()))?;
        }
        Ok(())
    }

    /// Total revenue of the pooled users.
    pub fn revenue(&self) -> f64 {
        self.users.iter().map(|u| u.class.revenue_rate).sum()
    }
}

/// Pools the users of a coalition onto the coalition's stations, in member order.
pub fn build_instance(coalition: &[&NetworkOperator], users: &[UserDemand]) -> Result<AllocationInstance> {
    if coalition.is_empty() {
        return Err(Error::InvalidArgument("empty coalition".into()));
    }
    if let Some(u) = users.iter().find(|u| !coalition.iter().any(|no| no.id == u.owner)) {
        return Err(Error::InvalidArgument(format!("user owned by NO {} is not a coalition member", u.owner)));
    }
    AllocationInstance::new(coalition.iter().map(|no| no.base_station.clone()).collect(), users.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Never produced for a well-formed instance; kept for solutions built by hand.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct AllocationSolution {
    /// Cost rate, $/hour.
    pub objective: f64,
    pub on: Vec<bool>,
    /// `assignment[station][user]`
    pub assignment: Vec<Vec<bool>>,
    /// `rates[station][user]`, Mbps.
    pub rates: Vec<Vec<f64>>,
    pub status: SolveStatus,
}

impl AllocationSolution {
    /// Serving station of each user, `None` when unattached.
    pub fn server_of(&self, user: usize) -> Option<usize> {
        self.assignment.iter().position(|row| row[user])
    }

    /// Users granted a positive rate by `station`.
    pub fn served_count(&self, station: usize) -> usize {
        self.rates[station].iter().filter(|&&d| d > RATE_EPS).count()
    }

    pub fn attached_count(&self, station: usize) -> usize {
        self.assignment[station].iter().filter(|&&a| a).count()
    }
}

/// Splits a station's capacity among its users, best revenue per Mbps first,
/// ties to the lowest position. Each entry is `(min_rate, revenue_rate)`.
pub fn greedy_rates(capacity: f64, demands: &[(f64, f64)]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| {
        let da = demands[a].1 / demands[a].0;
        let db = demands[b].1 / demands[b].0;
        db.total_cmp(&da).then(a.cmp(&b))
    });
    let mut rates = vec![0.0; demands.len()];
    let mut residual = capacity;
    for j in order {
        if residual <= 0.0 {
            break;
        }
        let granted = demands[j].0.min(residual);
        rates[j] = granted;
        residual -= granted;
    }
    rates
}

/// Penalty total `sum (1 - d/D) R` of a set of demands under the given rates.
pub fn penalty_of(demands: &[(f64, f64)], rates: &[f64]) -> f64 {
    demands.iter().zip(rates).map(|(&(d_req, r), &d)| (1.0 - d / d_req) * r).sum()
}

/// Cost rate of a solution, recomputed from its on flags, attachments and rates.
pub fn objective_of(inst: &AllocationInstance, on: &[bool], assignment: &[Vec<bool>], rates: &[Vec<f64>]) -> f64 {
    let mut energy = 0.0;
    for (i, bs) in inst.stations.iter().enumerate() {
        if on[i] {
            let attached = assignment[i].iter().filter(|&&a| a).count();
            energy += crate::model::power_draw(bs, attached) * bs.energy_price;
        }
    }
    let mut penalty = 0.0;
    for (j, u) in inst.users.iter().enumerate() {
        let granted: f64 = rates.iter().map(|row| row[j]).sum();
        penalty += (1.0 - granted / u.class.min_rate) * u.class.revenue_rate;
    }
    energy + penalty
}

/// Completes an on-set plus attachment into a solution: every station splits
/// its capacity greedily among its attached users.
pub(crate) fn complete_assignment(
    inst: &AllocationInstance,
    on: Vec<bool>,
    server: &[Option<usize>],
) -> AllocationSolution {
    let k = inst.stations.len();
    let n = inst.users.len();
    let mut assignment = vec![vec![false; n]; k];
    let mut rates = vec![vec![0.0; n]; k];
    for (j, s) in server.iter().enumerate() {
        if let Some(s) = *s {
            debug_assert!(on[s]);
            assignment[s][j] = true;
        }
    }
    for s in 0..k {
        let members: Vec<usize> = (0..n).filter(|&j| assignment[s][j]).collect();
        let demands: Vec<(f64, f64)> =
            members.iter().map(|&j| (inst.users[j].class.min_rate, inst.users[j].class.revenue_rate)).collect();
        let granted = greedy_rates(inst.stations[s].capacity, &demands);
        for (&j, d) in members.iter().zip(granted) {
            rates[s][j] = d;
        }
    }
    let objective = objective_of(inst, &on, &assignment, &rates);
    AllocationSolution { objective, on, assignment, rates, status: SolveStatus::Optimal }
}

/// The all-off configuration.
pub(crate) fn all_off(inst: &AllocationInstance) -> AllocationSolution {
    complete_assignment(inst, vec![false; inst.stations.len()], &vec![None; inst.users.len()])
}

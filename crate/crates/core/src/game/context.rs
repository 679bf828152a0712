use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::coalition::{Coalition, MAX_PLAYERS};
use super::shapley::{aumann_dreze, PayoffVector};
use crate::error::{Error, Result};
use crate::model::{NetworkOperator, NoId, UserDemand};
use crate::solver::{self, AllocationSolution};

/// Formation cost of a coalition: nothing for a singleton, otherwise the sum of
/// the members' cost rates.
pub fn coalition_cost(coalition: Coalition, operators: &[NetworkOperator]) -> f64 {
    if coalition.len() <= 1 {
        return 0.0;
    }
    coalition.members().map(|id| operators[id.0].coalition_cost_rate).sum()
}

/// Value of one coalition together with the allocation behind it.
#[derive(Debug, Clone)]
pub struct CoalitionEval {
    pub value: f64,
    pub revenue: f64,
    /// Minimum serving cost of the pooled users.
    pub serving_cost: f64,
    pub formation_cost: f64,
    /// Station `k` of the solution is the `k`-th member in ascending order.
    pub solution: Arc<AllocationSolution>,
}

/// Operators and user populations of one subinterval, with memoized values and payoffs.
#[derive(Debug)]
pub struct StepContext {
    operators: Arc<[NetworkOperator]>,
    users: Vec<Vec<UserDemand>>,
    tolerance: f64,
    evals: Mutex<HashMap<Coalition, CoalitionEval>>,
    payoffs: Mutex<HashMap<Coalition, PayoffVector>>,
}

/// Solver tolerance for coalition values; tight so that payoff comparisons are meaningful.
pub const VALUE_TOLERANCE: f64 = 1e-9;

impl StepContext {
    /// `operators[k]` must carry id `k` and `users[k]` the users of operator `k`.
    pub fn new(operators: Arc<[NetworkOperator]>, users: Vec<Vec<UserDemand>>) -> Result<Self> {
        if operators.len() > MAX_PLAYERS {
            return Err(Error::BoundExceeded(format!("{} operators, at most {MAX_PLAYERS}", operators.len())));
        }
        if users.len() != operators.len() {
            return Err(Error::InvalidArgument(format!(
                "{} user lists for {} operators",
                users.len(),
                operators.len()
            )));
        }
        for (k, no) in operators.iter().enumerate() {
            if no.id != NoId(k) {
                return Err(Error::InvalidArgument(format!("operator at position {} has id {}", k + 1, no.id)));
            }
            if let Some(u) = users[k].iter().find(|u| u.owner != no.id) {
                return Err(Error::InvalidArgument(format!("user of {} listed under {}", u.owner, no.id)));
            }
        }
        Ok(StepContext {
            operators,
            users,
            tolerance: VALUE_TOLERANCE,
            evals: Mutex::new(HashMap::new()),
            payoffs: Mutex::new(HashMap::new()),
        })
    }

    pub fn players(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[NetworkOperator] {
        &self.operators
    }

    pub fn users(&self, id: NoId) -> &[UserDemand] {
        &self.users[id.0]
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.players())
    }

    /// Solves the pooled allocation of `coalition` without touching the cache.
    pub fn evaluate_fresh(&self, coalition: Coalition) -> Result<CoalitionEval> {
        if !coalition.is_subset(self.grand()) {
            return Err(Error::InvalidArgument(format!("{coalition} has members beyond {}", self.players())));
        }
        if coalition.is_empty() {
            let nothing = AllocationSolution {
                objective: 0.0,
                on: Vec::new(),
                assignment: Vec::new(),
                rates: Vec::new(),
                status: solver::SolveStatus::Optimal,
            };
            return Ok(CoalitionEval {
                value: 0.0,
                revenue: 0.0,
                serving_cost: 0.0,
                formation_cost: 0.0,
                solution: Arc::new(nothing),
            });
        }
        let members: Vec<&NetworkOperator> = coalition.members().map(|id| &self.operators[id.0]).collect();
        let pooled: Vec<UserDemand> = coalition.members().flat_map(|id| self.users[id.0].iter().cloned()).collect();
        let instance = solver::build_instance(&members, &pooled)?;
        let solution = solver::solve_exact(&instance, self.tolerance)?;
        let revenue = instance.revenue();
        let formation_cost = coalition_cost(coalition, &self.operators);
        Ok(CoalitionEval {
            value: revenue - solution.objective - formation_cost,
            revenue,
            serving_cost: solution.objective,
            formation_cost,
            solution: Arc::new(solution),
        })
    }

    /// Cached [`evaluate_fresh`](Self::evaluate_fresh). The solve runs outside the
    /// lock, so concurrent callers may duplicate work but never block on it.
    pub fn evaluate(&self, coalition: Coalition) -> Result<CoalitionEval> {
        if let Some(e) = self.evals.lock().unwrap().get(&coalition) {
            return Ok(e.clone());
        }
        let eval = self.evaluate_fresh(coalition)?;
        Ok(self.evals.lock().unwrap().entry(coalition).or_insert(eval).clone())
    }

    /// Coalition value `v(S)`.
    pub fn value(&self, coalition: Coalition) -> Result<f64> {
        Ok(self.evaluate(coalition)?.value)
    }

    /// Aumann-Drèze payoffs of the members of `coalition`, memoized.
    pub fn payoffs(&self, coalition: Coalition) -> Result<PayoffVector> {
        if let Some(p) = self.payoffs.lock().unwrap().get(&coalition) {
            return Ok(p.clone());
        }
        let p = aumann_dreze(coalition, |t| self.value(t))?;
        Ok(self.payoffs.lock().unwrap().entry(coalition).or_insert(p).clone())
    }

    /// Payoff of `id` inside `coalition`.
    pub fn payoff(&self, id: NoId, coalition: Coalition) -> Result<f64> {
        self.payoffs(coalition)?
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("{id} is not a member of {coalition}")))
    }

    /// Snapshot of every cached coalition value.
    pub fn cached_values(&self) -> Vec<(Coalition, f64)> {
        let mut v: Vec<_> = self.evals.lock().unwrap().iter().map(|(c, e)| (*c, e.value)).collect();
        v.sort_by_key(|&(c, _)| c);
        v
    }

    /// Snapshot of every cached payoff vector.
    pub fn cached_payoffs(&self) -> Vec<(Coalition, PayoffVector)> {
        let mut v: Vec<_> = self.payoffs.lock().unwrap().iter().map(|(c, p)| (*c, p.clone())).collect();
        v.sort_by_key(|&(c, _)| c);
        v
    }
}

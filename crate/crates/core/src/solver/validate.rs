use std::fmt;

use super::{AllocationInstance, AllocationSolution};

const FEAS_TOL: f64 = 1e-6;

/// A broken constraint of the allocation model.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    /// Granted rates exceed the station's capacity.
    Capacity {
        station: usize,
        load: f64,
        capacity: f64,
    },
    /// A user is attached to `count` stations. Zero is only allowed when every
    /// station is off.
    Attachment {
        user: usize,
        count: usize,
    },
    /// A switched-off station serves a user.
    InactiveServer {
        station: usize,
        user: usize,
    },
    /// Rate above the requested one, or granted without attachment.
    RateAboveDemand {
        station: usize,
        user: usize,
        rate: f64,
        bound: f64,
    },
    /// Negative or non-finite rate.
    Domain {
        station: usize,
        user: usize,
        rate: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::Capacity { station, load, capacity } => {
                write!(f, "capacity: station {station} grants {load} Mbps > {capacity}")
            }
            Violation::Attachment { user, count } => write!(f, "attachment: user {user} on {count} stations"),
            Violation::InactiveServer { station, user } => {
                write!(f, "activation: user {user} attached to switched-off station {station}")
            }
            Violation::RateAboveDemand { station, user, rate, bound } => {
                write!(f, "rate: user {user} gets {rate} > {bound} from station {station}")
            }
            Violation::Domain { station, user, rate } => write!(f, "domain: rate {rate} for user {user} at {station}"),
        }
    }
}

/// Lists every constraint the solution breaks; empty means feasible.
pub fn validate(inst: &AllocationInstance, sol: &AllocationSolution) -> Vec<Violation> {
    let k = inst.stations.len();
    let n = inst.users.len();
    if sol.on.len() != k
        || sol.assignment.len() != k
        || sol.rates.len() != k
        || sol.assignment.iter().any(|row| row.len() != n)
        || sol.rates.iter().any(|row| row.len() != n)
    {
        return vec![Violation::Shape(format!("expected {k} stations x {n} users"))];
    }
    let mut out = Vec::new();
    let any_on = sol.on.iter().any(|&b| b);

    for (i, bs) in inst.stations.iter().enumerate() {
        let load: f64 = sol.rates[i].iter().sum();
        if load > bs.capacity + FEAS_TOL {
            out.push(Violation::Capacity { station: i, load, capacity: bs.capacity });
        }
    }
    for j in 0..n {
        let count = (0..k).filter(|&i| sol.assignment[i][j]).count();
        if count > 1 || (count == 0 && any_on) {
            out.push(Violation::Attachment { user: j, count });
        }
    }
    for i in 0..k {
        for j in 0..n {
            if sol.assignment[i][j] && !sol.on[i] {
                out.push(Violation::InactiveServer { station: i, user: j });
            }
            let rate = sol.rates[i][j];
            if !rate.is_finite() || rate < -FEAS_TOL {
                out.push(Violation::Domain { station: i, user: j, rate });
                continue;
            }
            let bound = if sol.assignment[i][j] { inst.users[j].class.min_rate } else { 0.0 };
            if rate > bound + FEAS_TOL {
                out.push(Violation::RateAboveDemand { station: i, user: j, rate, bound });
            }
        }
    }
    out
}

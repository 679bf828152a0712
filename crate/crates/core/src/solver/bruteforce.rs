use super::{all_off, complete_assignment, AllocationInstance, AllocationSolution};
use crate::error::{Error, Result};

pub const BRUTEFORCE_MAX_STATIONS: usize = 3;
pub const BRUTEFORCE_MAX_USERS: usize = 7;

/// Reference solver: every on-set, every attachment of every user to a
/// switched-on station, greedy rates per station. Only for tiny instances.
pub fn solve_bruteforce(inst: &AllocationInstance) -> Result<AllocationSolution> {
    inst.check()?;
    let k = inst.stations.len();
    let n = inst.users.len();
    if k > BRUTEFORCE_MAX_STATIONS || n > BRUTEFORCE_MAX_USERS {
        return Err(Error::BoundExceeded(format!(
            "brute force handles at most {BRUTEFORCE_MAX_STATIONS} stations and {BRUTEFORCE_MAX_USERS} users, got {k} and {n}"
        )));
    }
    let mut best = all_off(inst);
    for mask in 1u32..(1 << k) {
        let on_list: Vec<usize> = (0..k).filter(|&s| mask & (1 << s) != 0).collect();
        let on: Vec<bool> = (0..k).map(|s| mask & (1 << s) != 0).collect();
        // Odometer over on_list.len()^n attachments.
        let mut digits = vec![0usize; n];
        loop {
            let server: Vec<Option<usize>> = digits.iter().map(|&d| Some(on_list[d])).collect();
            let candidate = complete_assignment(inst, on.clone(), &server);
            if candidate.objective < best.objective {
                best = candidate;
            }
            let mut pos = 0;
            while pos < n {
                digits[pos] += 1;
                if digits[pos] < on_list.len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    Ok(best)
}

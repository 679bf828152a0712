use serde::{Deserialize, Serialize};

use super::coalition::Coalition;
use crate::error::{Error, Result};
use crate::model::NoId;

/// Largest coalition whose payoffs are computed by subset enumeration.
pub const MAX_SHAPLEY_MEMBERS: usize = 12;

/// Payoffs of the members of one coalition, $/hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffVector {
    pub coalition: Coalition,
    /// Aligned with `coalition.members()`.
    pub values: Vec<f64>,
}

impl PayoffVector {
    pub fn get(&self, id: NoId) -> Option<f64> {
        self.coalition.members().position(|m| m == id).map(|k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NoId, f64)> + '_ {
        self.coalition.members().zip(self.values.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Shapley value of the game `v` restricted to the members of `coalition`,
/// with `v(∅) = 0`.
pub fn aumann_dreze<F>(coalition: Coalition, mut v: F) -> Result<PayoffVector>
where
    F: FnMut(Coalition) -> Result<f64>,
{
    let members: Vec<NoId> = coalition.members().collect();
    let s = members.len();
    if s > MAX_SHAPLEY_MEMBERS {
        return Err(Error::BoundExceeded(format!("coalition of {s}, payoffs enumerated up to {MAX_SHAPLEY_MEMBERS}")));
    }
    let lift = |local: usize| {
        Coalition::from_bits(
            members.iter().enumerate().filter(|(b, _)| local >> b & 1 == 1).fold(0, |acc, (_, id)| acc | 1 << id.0),
        )
    };
    let mut values = vec![0.0; 1 << s];
    for (local, slot) in values.iter_mut().enumerate().skip(1) {
        *slot = v(lift(local))?;
    }
    let factorial: Vec<f64> = (0..=s)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let weight: Vec<f64> = (0..s).map(|t| factorial[t] * factorial[s - t - 1] / factorial[s]).collect();
    let payoffs = (0..s)
        .map(|i| {
            let bit = 1 << i;
            (0..1usize << s)
                .filter(|t| t & bit == 0)
                .map(|t| weight[t.count_ones() as usize] * (values[t | bit] - values[t]))
                .sum()
        })
        .collect();
    Ok(PayoffVector { coalition, values: payoffs })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;
    use crate::game::context::testing::premium_context;

    fn c(ids: &[usize]) -> Coalition {
        Coalition::new(ids.iter().map(|&k| NoId(k))).unwrap()
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

    /// Average marginal contribution over every arrival order.
    fn all_orderings(coalition: Coalition, v: &dyn Fn(Coalition) -> f64) -> HashMap<NoId, f64> {
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

    fn table(entries: &[(&[usize], f64)]) -> impl Fn(Coalition) -> f64 {
        let map: HashMap<Coalition, f64> = entries.iter().map(|(ids, val)| (c(ids), *val)).collect();
        move |s| if s.is_empty() { 0.0 } else { map[&s] }
    }

    #[test]
    fn three_player_example() {
        let v = table(&[
            (&[0], 1.0),
            (&[1], 2.0),
            (&[2], 3.0),
            (&[0, 1], 4.0),
            (&[0, 2], 5.0),
            (&[1, 2], 6.0),
            (&[0, 1, 2], 9.0),
        ]);
        let s = c(&[0, 1, 2]);
        let phi = aumann_dreze(s, |t| Ok(v(t))).unwrap();
        let oracle = all_orderings(s, &v);
        for (id, x) in phi.iter() {
            assert_close!(x, oracle[&id], 1e-9);
        }
        assert_close!(phi.get(NoId(0)).unwrap(), 2.0, 1e-9);
        assert_close!(phi.get(NoId(1)).unwrap(), 3.0, 1e-9);
        assert_close!(phi.get(NoId(2)).unwrap(), 4.0, 1e-9);
    }

    #[test]
    fn singleton_gets_its_value() {
        let phi = aumann_dreze(c(&[3]), |_| Ok(0.25)).unwrap();
        assert_eq!(phi.values, vec![0.25]);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let v = table(&[(&[0], 0.3), (&[1], 0.3), (&[0, 1], 1.1)]);
        let phi = aumann_dreze(c(&[0, 1]), |t| Ok(v(t))).unwrap();
        assert_close!(phi.values[0], 0.55, 1e-12);
        assert_close!(phi.values[1], 0.55, 1e-12);
    }

    #[test]
    fn size_bound() {
        let big = Coalition::grand(13);
        assert!(matches!(aumann_dreze(big, |_| Ok(0.0)), Err(Error::BoundExceeded(_))));
        assert!(aumann_dreze(Coalition::grand(12), |_| Ok(1.0)).is_ok());
    }

    #[test]
    fn identical_operators_share_equally() {
        let ctx = premium_context(&[0.12, 0.12, 0.24], &[3, 3, 5], 0.01);
        let phi = ctx.payoffs(ctx.grand()).unwrap();
        assert_close!(phi.values[0], phi.values[1], 1e-9);
        assert_close!(phi.total(), ctx.value(ctx.grand()).unwrap(), 1e-9);
    }

    #[test]
    fn null_operator_against_orderings_oracle() {
        // Operator 3 has no users and a station too expensive to ever switch on.
        let ctx = premium_context(&[0.12, 0.24, 1e6], &[4, 6, 0], 0.01);
        let s = ctx.grand();
        for t in s.subsets().filter(|t| t.len() > 1 && t.contains(NoId(2))) {
            assert!(!ctx.evaluate(t).unwrap().solution.on.last().unwrap());
        }
        let phi = ctx.payoffs(s).unwrap();
        let oracle = all_orderings(s, &|t| ctx.value(t).unwrap());
        for (id, x) in phi.iter() {
            assert_close!(x, oracle[&id], 1e-9);
        }
        // Its marginal is pure formation cost.
        assert!(phi.get(NoId(2)).unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn efficient_and_matches_orderings(raw in proptest::collection::vec(-5.0f64..5.0, 31)) {
            let s = Coalition::grand(5);
            let v = move |t: Coalition| if t.is_empty() { 0.0 } else { raw[t.bits() as usize - 1] };
            let phi = aumann_dreze(s, |t| Ok(v(t))).unwrap();
            prop_assert!((phi.total() - v(s)).abs() <= 1e-9);
            let oracle = all_orderings(s, &v);
            for (id, x) in phi.iter() {
                prop_assert!((x - oracle[&id]).abs() <= 1e-9);
            }
        }
    }
}

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NoId;

/// Largest number of operators a [`Coalition`] can address.
pub const MAX_PLAYERS: usize = 32;

/// Set of operators, stored as a bitmask over zero-based ids.
///
/// Ordering is lexicographic on the ascending member lists, so `{1,2} < {1,3} < {2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn new(members: impl IntoIterator<Item = NoId>) -> Result<Self> {
        let mut bits = 0u32;
        for id in members {
            if id.0 >= MAX_PLAYERS {
                return Err(Error::BoundExceeded(format!("operator {id} beyond the {MAX_PLAYERS}-player limit")));
            }
            bits |= 1 << id.0;
        }
        Ok(Coalition(bits))
    }

    pub fn singleton(id: NoId) -> Self {
        assert!(id.0 < MAX_PLAYERS, "operator {id} beyond the {MAX_PLAYERS}-player limit");
        Coalition(1 << id.0)
    }

    /// All of `0..n`.
    pub fn grand(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS);
        Coalition(if n == MAX_PLAYERS { u32::MAX } else { (1u32 << n) - 1 })
    }

    pub const fn from_bits(bits: u32) -> Self {
        Coalition(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, id: NoId) -> bool {
        id.0 < MAX_PLAYERS && self.0 & (1 << id.0) != 0
    }

    pub fn with(self, id: NoId) -> Self {
        Coalition(self.0 | Coalition::singleton(id).0)
    }

    pub fn without(self, id: NoId) -> Self {
        Coalition(self.0 & !Coalition::singleton(id).0)
    }

    pub fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub fn intersects(self, other: Coalition) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn members(self) -> impl Iterator<Item = NoId> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(NoId(k))
        })
    }

    /// Every subset, the empty set and `self` included, in increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = Coalition> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(Coalition(cur))
        })
    }
}

impl Ord for Coalition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.members().cmp(other.members())
    }
}

impl PartialOrd for Coalition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, id) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Coalition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members())
    }
}

impl<'de> Deserialize<'de> for Coalition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<NoId>::deserialize(deserializer)?;
        Coalition::new(ids).map_err(serde::de::Error::custom)
    }
}

/// Disjoint nonempty coalitions covering operators `0..n`, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    coalitions: Vec<Coalition>,
    players: usize,
}

impl Partition {
    pub fn new(players: usize, mut coalitions: Vec<Coalition>) -> Result<Self> {
        if players > MAX_PLAYERS {
            return Err(Error::BoundExceeded(format!("{players} players, at most {MAX_PLAYERS}")));
        }
        let mut seen = Coalition::EMPTY;
        for &c in &coalitions {
            if c.is_empty() {
                return Err(Error::InvalidArgument("partition contains an empty coalition".into()));
            }
            if c.intersects(seen) {
                return Err(Error::InvalidArgument(format!("coalition {c} overlaps another one")));
            }
            seen = seen.union(c);
        }
        if seen != Coalition::grand(players) {
            return Err(Error::InvalidArgument(format!("coalitions cover {seen}, expected all {players} operators")));
        }
        coalitions.sort();
        Ok(Partition { coalitions, players })
    }

    pub fn singletons(players: usize) -> Self {
        Partition::new(players, (0..players).map(|k| Coalition::singleton(NoId(k))).collect())
            .expect("valid singletons")
    }

    pub fn grand(players: usize) -> Self {
        let coalitions = if players == 0 { Vec::new() } else { vec![Coalition::grand(players)] };
        Partition::new(players, coalitions).expect("valid grand coalition")
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn coalitions(&self) -> &[Coalition] {
        &self.coalitions
    }

    /// The coalition holding `id`.
    pub fn coalition_of(&self, id: NoId) -> Coalition {
        *self
            .coalitions
            .iter()
            .find(|c| c.contains(id))
            .unwrap_or_else(|| panic!("operator {id} not in a {}-player partition", self.players))
    }

    /// Moves `id` out of its coalition and into `partners`, which must be one of the
    /// other coalitions or empty (standing alone).
    pub fn shifted(&self, id: NoId, partners: Coalition) -> Result<Partition> {
        let current = self.coalition_of(id);
        if partners.contains(id) {
            return Err(Error::InvalidArgument(format!("{id} already belongs to {partners}")));
        }
        if !partners.is_empty() && !self.coalitions.contains(&partners) {
            return Err(Error::InvalidArgument(format!("{partners} is not a coalition of the partition")));
        }
        let mut next: Vec<Coalition> =
            self.coalitions.iter().copied().filter(|&c| c != current && c != partners).collect();
        let left = current.without(id);
        if !left.is_empty() {
            next.push(left);
        }
        next.push(partners.with(id));
        Partition::new(self.players, next)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.coalitions {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coalitions.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coalitions = Vec::<Coalition>::deserialize(deserializer)?;
        let players = coalitions.iter().map(|c| c.len()).sum();
        Partition::new(players, coalitions).map_err(serde::de::Error::custom)
    }
}

/// Bell numbers `B_0..=B_n`.
pub fn bell_numbers(n: usize) -> Vec<u128> {
    // Bell triangle.
    let mut bells = vec![1u128];
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        bells.push(next[0]);
        row = next;
    }
    bells
}

/// Every partition of `0..players`, via restricted growth strings.
pub fn all_partitions(players: usize) -> Result<Vec<Partition>> {
    const LIMIT: usize = 10;
    if players > LIMIT {
        return Err(Error::BoundExceeded(format!("{players} players, partitions enumerated up to {LIMIT}")));
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; players];
    loop {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut coalitions = vec![Coalition::EMPTY; blocks];
        for (k, &b) in labels.iter().enumerate() {
            coalitions[b] = coalitions[b].with(NoId(k));
        }
        out.push(Partition::new(players, coalitions)?);
        // next restricted growth string: a[k] <= 1 + max(a[0..k])
        let mut k = players;
        loop {
            if k <= 1 {
                return Ok(out);
            }
            k -= 1;
            let prefix_max = labels[..k].iter().copied().max().unwrap_or(0);
            if labels[k] <= prefix_max {
                labels[k] += 1;
                labels[k + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
        }
    }
}

//! Physical and economic entities of the operator system, with the closed-form
//! cost and capacity formulas used everywhere else.
//!
//! Units: capacity and rates in Mbps, power in kW, energy prices in $/kWh, so
//! every cost rate comes out in $/hour.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{self, AllocationInstance};
use crate::traces::LoadProfile;

/// Zero-based operator index. Displayed and serialized one-based, which is how
/// operators are numbered in every output file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoId(pub usize);

impl Serialize for NoId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u64(self.0 as u64 + 1)
    }
}

impl<'de> Deserialize<'de> for NoId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let n = u64::deserialize(deserializer)?;
        if n == 0 {
            return Err(serde::de::Error::custom("operator numbers start at 1"));
        }
        Ok(NoId(n as usize - 1))
    }
}

impl fmt::Display for NoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    /// Downlink capacity, Mbps.
    pub capacity: f64,
    /// Load-independent power draw, kW.
    pub static_power: f64,
    /// Additional power per connected user, kW.
    pub per_user_power: f64,
    /// Electricity price, $/kWh.
    pub energy_price: f64,
}

impl BaseStation {
    pub fn new(capacity: f64, static_power: f64, per_user_power: f64, energy_price: f64) -> Result<Self> {
        let bs = BaseStation { capacity, static_power, per_user_power, energy_price };
        bs.validate()?;
        Ok(bs)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.capacity.is_finite()
            && self.capacity > 0.0
            && self.static_power.is_finite()
            && self.static_power >= 0.0
            && self.per_user_power.is_finite()
            && self.per_user_power >= 0.0
            && self.energy_price.is_finite()
            && self.energy_price >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("base station parameters out of range: {self:?}")))
        }
    }

    /// Energy cost rate of the static term when switched on, $/hour.
    pub fn static_cost_rate(&self) -> f64 {
        self.static_power * self.energy_price
    }

    /// Energy cost rate of one additional connected user, $/hour.
    pub fn per_user_cost_rate(&self) -> f64 {
        self.per_user_power * self.energy_price
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserClass {
    pub name: String,
    /// Requested downlink rate, Mbps.
    pub min_rate: f64,
    /// Revenue rate when fully served, $/hour.
    pub revenue_rate: f64,
    /// Share of this class in the operator's population.
    pub mix_probability: f64,
}

impl UserClass {
    pub fn new(name: impl Into<String>, min_rate: f64, revenue_rate: f64, mix_probability: f64) -> Result<Self> {
        let class = UserClass { name: name.into(), min_rate, revenue_rate, mix_probability };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.min_rate.is_finite()
            && self.min_rate > 0.0
            && self.revenue_rate.is_finite()
            && self.revenue_rate >= 0.0
            && (0.0..=1.0).contains(&self.mix_probability);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("user class parameters out of range: {self:?}")))
        }
    }

    /// Revenue per Mbps of served rate. Penalties fall at this rate as the
    /// user's allocation grows.
    pub fn revenue_density(&self) -> f64 {
        self.revenue_rate / self.min_rate
    }
}

/// Checks that a mix is nonempty and its probabilities sum to one.
pub fn validate_mix(mix: &[UserClass]) -> Result<()> {
    if mix.is_empty() {
        return Err(Error::InvalidArgument("user mix is empty".into()));
    }
    for class in mix {
        class.validate()?;
    }
    let total: f64 = mix.iter().map(|c| c.mix_probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("mix probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct NetworkOperator {
    pub id: NoId,
    pub name: String,
    pub base_station: BaseStation,
    pub user_mix: Vec<UserClass>,
    /// Per-member cost rate of belonging to a multi-member coalition, $/hour.
    pub coalition_cost_rate: f64,
    pub load_profile: Option<Arc<LoadProfile>>,
}

impl NetworkOperator {
    pub fn new(
        id: NoId,
        base_station: BaseStation,
        user_mix: Vec<UserClass>,
        coalition_cost_rate: f64,
    ) -> Result<Self> {
        base_station.validate()?;
        validate_mix(&user_mix)?;
        if !(coalition_cost_rate.is_finite() && coalition_cost_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("coalition cost rate {coalition_cost_rate} must be >= 0")));
        }
        Ok(NetworkOperator {
            id,
            name: format!("NO{id}"),
            base_station,
            user_mix,
            coalition_cost_rate,
            load_profile: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_load_profile(mut self, profile: Arc<LoadProfile>) -> Self {
        self.load_profile = Some(profile);
        self
    }

    /// Number of users the station can fully serve under this operator's mix.
    pub fn max_users(&self) -> Result<usize> {
        max_users(&self.base_station, &self.user_mix)
    }
}

/// One subscriber present during a subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDemand {
    pub owner: NoId,
    pub class: UserClass,
}

impl UserDemand {
    pub fn new(owner: NoId, class: UserClass) -> Self {
        UserDemand { owner, class }
    }
}

/// Power drawn by a switched-on station serving `n_users`, kW.
pub fn power_draw(bs: &BaseStation, n_users: usize) -> f64 {
    bs.static_power + bs.per_user_power * n_users as f64
}

/// QoS penalty rate for a user granted `rate` out of its requested
/// `min_rate`, given its revenue rate.
pub fn qos_penalty_rate(rate: f64, min_rate: f64, revenue_rate: f64) -> Result<f64> {
    if !(min_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("requested rate {min_rate} must be positive")));
    }
    if !(0.0..=min_rate).contains(&rate) {
        return Err(Error::InvalidArgument(format!("granted rate {rate} outside [0, {min_rate}]")));
    }
    Ok((1.0 - rate / min_rate) * revenue_rate)
}

/// Maximum number of fully served users: capacity over the mix's weighted
/// mean requested rate, floored.
pub fn max_users(bs: &BaseStation, mix: &[UserClass]) -> Result<usize> {
    validate_mix(mix)?;
    let mean_rate: f64 = mix.iter().map(|c| c.mix_probability * c.min_rate).sum();
    if !(mean_rate > 0.0) {
        return Err(Error::InvalidArgument("mean requested rate is zero".into()));
    }
    // Guard against 100/10 evaluating to 9.999...
    Ok((bs.capacity / mean_rate + 1e-9).floor() as usize)
}

/// Users present at normalized load `load` for a station that fits `max` users.
/// Rounds half up.
pub fn users_at(load: f64, max: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&load) {
        return Err(Error::InvalidArgument(format!("load {load} outside [0, 1]")));
    }
    let n = (load * max as f64 + 0.5 + 1e-9).floor() as usize;
    Ok(n.min(max))
}

/// Optimal profit rate of the operator working alone: revenues minus the
/// cheapest combination of energy cost and penalties, with switching off
/// allowed and no coalition cost.
pub fn standalone_profit_rate(no: &NetworkOperator, users: &[UserDemand]) -> Result<f64> {
    if let Some(u) = users.iter().find(|u| u.owner != no.id) {
        return Err(Error::InvalidArgument(format!("user owned by NO {} given to NO {}", u.owner, no.id)));
    }
    let instance = AllocationInstance::new(vec![no.base_station.clone()], users.to_vec())?;
    let revenue: f64 = users.iter().map(|u| u.class.revenue_rate).sum();
    let solution = solver::solve_exact(&instance, solver::DEFAULT_TOLERANCE)?;
    Ok(revenue - solution.objective)
}

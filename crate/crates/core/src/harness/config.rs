use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_mix, BaseStation, NetworkOperator, NoId, UserClass};
use crate::traces::{self, synthesize_profile, LoadProfile, DEFAULT_PERIOD_HOURS};

/// Where an operator's load profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadSpec {
    /// Generated profile with the given mean hourly load.
    Synthetic {
        target_mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Trace CSV; relative paths resolve against the config file's directory.
    Trace {
        path: PathBuf,
        #[serde(default = "default_period")]
        period: f64,
    },
    /// Flat load.
    Constant(f64),
}

fn default_period() -> f64 {
    DEFAULT_PERIOD_HOURS
}

fn default_horizon() -> f64 {
    DEFAULT_PERIOD_HOURS
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub base_station: BaseStation,
    pub coalition_cost_rate: f64,
    pub load: LoadSpec,
}

/// How the set of stable partitions averaged into payoffs is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StableSetStrategy {
    /// Formation under every first-round activation order.
    #[default]
    Schedules,
    /// All partitions passing the history-free stability check; falls back to
    /// `Schedules` at steps where none passes.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpMetric {
    /// `Σx / ΣP - 1`.
    #[default]
    RatioOfSums,
    /// `Σ (x / P) - 1` over steps, as printed.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub operators: Vec<OperatorSpec>,
    /// Per-operator energy prices overriding the stations' own, $/kWh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_prices: Option<Vec<f64>>,
    pub user_mix: Vec<UserClass>,
    pub step_hours: f64,
    #[serde(default = "default_horizon")]
    pub horizon_hours: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub stable_set_strategy: StableSetStrategy,
    #[serde(default)]
    pub rp_metric: RpMetric,
    /// Extra step widths for the RP-versus-step series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_sweep: Option<Vec<f64>>,
}

/// A validated configuration with its profiles built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub operators: Arc<[NetworkOperator]>,
    /// Users each operator can fully serve.
    pub max_users: Vec<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file, resolving relative trace paths against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for op in &mut cfg.operators {
            if let LoadSpec::Trace { path: p, .. } = &mut op.load {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of executions over the horizon.
    pub fn executions(&self) -> usize {
        (self.horizon_hours / self.step_hours - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.operators.is_empty() {
            return bad("at least one operator is required".into());
        }
        if !(self.step_hours.is_finite() && self.step_hours > 0.0) {
            return bad(format!("step_hours {} must be positive", self.step_hours));
        }
        if !(self.horizon_hours.is_finite() && self.horizon_hours > 0.0) {
            return bad(format!("horizon_hours {} must be positive", self.horizon_hours));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if let Some(prices) = &self.energy_prices {
            if prices.len() != self.operators.len() {
                return bad(format!("{} energy prices for {} operators", prices.len(), self.operators.len()));
            }
            if let Some(p) = prices.iter().find(|&&p| !(p.is_finite() && p > 0.0)) {
                return bad(format!("energy price {p} must be positive"));
            }
        }
        if let Some(sweep) = &self.dt_sweep {
            if let Some(dt) = sweep.iter().find(|&&dt| !(dt.is_finite() && dt > 0.0)) {
                return bad(format!("dt_sweep entry {dt} must be positive"));
            }
        }
        validate_mix(&self.user_mix).map_err(|e| Error::Config(e.to_string()))?;
        for (k, op) in self.operators.iter().enumerate() {
            op.base_station.validate().map_err(|e| Error::Config(format!("operator {}: {e}", k + 1)))?;
            if let LoadSpec::Constant(l) = op.load {
                if !(0.0..=1.0).contains(&l) {
                    return bad(format!("operator {}: constant load {l} outside [0, 1]", k + 1));
                }
            }
        }
        Ok(())
    }

    /// Validates, builds every load profile and the operators.
    pub fn prepare(&self) -> Result<Scenario> {
        self.validate()?;
        let mut operators = Vec::with_capacity(self.operators.len());
        for (k, spec) in self.operators.iter().enumerate() {
            let mut bs = spec.base_station.clone();
            if let Some(prices) = &self.energy_prices {
                bs.energy_price = prices[k];
            }
            let profile = match &spec.load {
                LoadSpec::Synthetic { target_mean, seed } => {
                    synthesize_profile(*target_mean, seed.unwrap_or(k as u64 + 1), DEFAULT_PERIOD_HOURS)?
                }
                LoadSpec::Trace { path, period } => {
                    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
                    LoadProfile::fit(&traces::parse_trace(file, *period)?)?
                }
                LoadSpec::Constant(l) => LoadProfile::constant(*l, DEFAULT_PERIOD_HOURS)?,
            };
            let name = spec.name.clone().unwrap_or_else(|| format!("NO{}", k + 1));
            let no = NetworkOperator::new(NoId(k), bs, self.user_mix.clone(), spec.coalition_cost_rate)
                .map_err(|e| Error::Config(format!("operator {}: {e}", k + 1)))?
                .with_name(name)
                .with_load_profile(Arc::new(profile));
            operators.push(no);
        }
        let max_users = operators.iter().map(NetworkOperator::max_users).collect::<Result<_>>()?;
        Ok(Scenario { config: self.clone(), operators: operators.into(), max_users })
    }
}

/// Reference station: 100 Mbps, 0.551 kW idle plus 0.00146 kW per user.
pub fn reference_station(energy_price: f64) -> BaseStation {
    BaseStation { capacity: 100.0, static_power: 0.551, per_user_power: 0.00146, energy_price }
}

pub const REFERENCE_COALITION_COST: f64 = 0.01;

/// Mean hourly loads the synthetic profiles of the five reference operators are matched to.
pub const REFERENCE_MEAN_LOADS: [f64; 5] = [0.316, 0.221, 0.143, 0.240, 0.218];

pub const E_LO: f64 = 0.12;
pub const E_HI: f64 = 0.24;

/// Energy prices of the four reference scenarios, per operator.
pub const SCENARIO_PRICES: [[f64; 5]; 4] = [
    [E_LO, E_LO, E_LO, E_LO, E_LO],
    [E_HI, E_HI, E_HI, E_HI, E_HI],
    [E_LO, E_HI, E_HI, E_LO, E_LO],
    [E_LO, E_LO, E_LO, E_HI, E_HI],
];

pub fn premium_mix() -> Vec<UserClass> {
    vec![UserClass { name: "Premium".into(), min_rate: 10.0, revenue_rate: 0.07, mix_probability: 1.0 }]
}

/// Base, Standard and Premium users in equal thirds.
pub fn heterogeneous_mix() -> Vec<UserClass> {
    let third = 1.0 / 3.0;
    vec![
        UserClass { name: "Base".into(), min_rate: 0.0122, revenue_rate: 0.0175, mix_probability: third },
        UserClass { name: "Standard".into(), min_rate: 0.384, revenue_rate: 0.035, mix_probability: third },
        UserClass { name: "Premium".into(), min_rate: 10.0, revenue_rate: 0.07, mix_probability: third },
    ]
}

/// One of the four reference scenarios (numbered from 1) with synthetic loads
/// and the given user mix, hourly steps over one week.
pub fn reference_scenario(number: usize, user_mix: Vec<UserClass>) -> Result<ScenarioConfig> {
    let prices = SCENARIO_PRICES
        .get(number.wrapping_sub(1))
        .ok_or_else(|| Error::Config(format!("no reference scenario {number}, expected 1 to 4")))?;
    let operators = REFERENCE_MEAN_LOADS
        .iter()
        .zip(prices)
        .enumerate()
        .map(|(k, (&mean, &price))| OperatorSpec {
            name: Some(format!("NO{}", k + 1)),
            base_station: reference_station(price),
            coalition_cost_rate: REFERENCE_COALITION_COST,
            load: LoadSpec::Synthetic { target_mean: mean, seed: Some(k as u64 + 1) },
        })
        .collect();
    Ok(ScenarioConfig {
        operators,
        energy_prices: None,
        user_mix,
        step_hours: 1.0,
        horizon_hours: DEFAULT_PERIOD_HOURS,
        seeds: vec![1],
        stable_set_strategy: StableSetStrategy::Schedules,
        rp_metric: RpMetric::RatioOfSums,
        dt_sweep: None,
    })
}

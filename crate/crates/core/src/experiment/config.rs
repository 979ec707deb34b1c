use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::broker::{StrategyOptions, StrategyRegistry};
use crate::des::{SimTime, HOUR};
use crate::error::{Error, Result};
use crate::fault::{MechanismOptions, MechanismRegistry, TransferRates};
use crate::market::synthetic::SyntheticPriceParams;
use crate::market::{InstanceType, PROVISIONING_LAG};
use crate::money::Micros;
use crate::simulation::SimulationConfig;
use crate::workload::{SyntheticSwfParams, WorkloadModel};

/// Source keyword selecting a generated workload or price trace.
pub const SYNTHETIC: &str = "synthetic";

/// Row of the instance-type table; prices in USD/hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSpec {
    pub name: String,
    pub ecus: f64,
    pub cores: u32,
    pub memory_mb: u32,
    pub on_demand_usd: f64,
}

impl TypeSpec {
    pub fn to_instance_type(&self) -> Result<InstanceType> {
        InstanceType::new(&self.name, self.ecus, self.cores, self.memory_mb, Micros::from_dollars(self.on_demand_usd))
    }
}

impl From<&InstanceType> for TypeSpec {
    fn from(t: &InstanceType) -> Self {
        TypeSpec {
            name: t.name.clone(),
            ecus: t.ecus,
            cores: t.cores,
            memory_mb: t.memory_mb,
            on_demand_usd: t.on_demand.dollars(),
        }
    }
}

/// `strategy:mechanism` pairs left out of the grid.
pub fn default_exclusions() -> Vec<String> {
    ["checkpointing", "migration", "duplication"]
        .iter()
        .map(|m| format!("high:{m}"))
        .collect()
}

/// Everything a sweep needs. Read from a TOML document of top-level keys;
/// structured parameters are inline tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// SWF path or `synthetic`.
    pub workload: String,
    pub jobs_limit: Option<usize>,
    pub synthetic_workload: SyntheticSwfParams,
    pub workload_model: WorkloadModel,
    /// Price CSV path or `synthetic`.
    pub prices: String,
    pub synthetic_prices: SyntheticPriceParams,
    pub strategies: Vec<String>,
    pub alphas: Vec<f64>,
    pub mechanisms: Vec<String>,
    pub exclusions: Vec<String>,
    pub replications: u32,
    pub base_seed: u64,
    pub horizon_days: f64,
    /// Minimum price history before the workload starts.
    pub warmup_days: f64,
    pub schedule_interval_s: SimTime,
    pub provisioning_lag_s: SimTime,
    pub rates: TransferRates,
    pub instance_types: Vec<TypeSpec>,
    pub datacenters: Vec<String>,
    pub strategy_options: StrategyOptions,
    pub mechanism_options: MechanismOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            workload: SYNTHETIC.into(),
            jobs_limit: None,
            synthetic_workload: SyntheticSwfParams::default(),
            workload_model: WorkloadModel::default(),
            prices: SYNTHETIC.into(),
            synthetic_prices: SyntheticPriceParams::default(),
            strategies: StrategyRegistry::builtin().names().iter().map(|s| s.to_string()).collect(),
            alphas: vec![1.0, 2.0, 4.0, 8.0, 10.0, 20.0],
            mechanisms: MechanismRegistry::builtin().names().iter().map(|s| s.to_string()).collect(),
            exclusions: default_exclusions(),
            replications: 31,
            base_seed: 2011,
            horizon_days: 7.0,
            warmup_days: 7.0,
            schedule_interval_s: 60,
            provisioning_lag_s: PROVISIONING_LAG,
            rates: TransferRates::default(),
            instance_types: InstanceType::defaults().iter().map(TypeSpec::from).collect(),
            datacenters: ["us-east-1a", "us-east-1b", "us-east-1c", "us-east-1d"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            strategy_options: StrategyOptions::default(),
            mechanism_options: MechanismOptions::default(),
        }
    }
}

fn days_to_seconds(days: f64) -> SimTime {
    (days * 24.0 * HOUR as f64).round() as SimTime
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn horizon_s(&self) -> SimTime {
        days_to_seconds(self.horizon_days)
    }

    pub fn warmup_s(&self) -> SimTime {
        days_to_seconds(self.warmup_days)
    }

    pub fn instance_types(&self) -> Result<Vec<InstanceType>> {
        self.instance_types.iter().map(TypeSpec::to_instance_type).collect()
    }

    pub fn simulation(&self, alpha: f64) -> SimulationConfig {
        SimulationConfig {
            horizon_s: self.horizon_s(),
            schedule_interval_s: self.schedule_interval_s,
            alpha,
            provisioning_lag_s: self.provisioning_lag_s,
            rates: self.rates,
            record_events: false,
        }
    }

    /// Whether `strategy` × `mechanism` is on the exclusion list.
    pub fn is_excluded(&self, strategy: &str, mechanism: &str) -> bool {
        let strategies = StrategyRegistry::builtin();
        let mechanisms = MechanismRegistry::builtin();
        let s = strategies.canonical(strategy).unwrap_or(strategy);
        let m = mechanisms.canonical(mechanism).unwrap_or(mechanism);
        self.exclusions.iter().any(|pair| {
            let Some((es, em)) = pair.split_once(':') else {
                return false;
            };
            let es = strategies.canonical(es.trim()).unwrap_or(es);
            let em = mechanisms.canonical(em.trim()).unwrap_or(em);
            es == s && em == m
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.alphas.is_empty() || self.mechanisms.is_empty() {
            return Err(Error::Config("strategies, alphas and mechanisms must be non-empty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let strategies = StrategyRegistry::builtin();
        for s in &self.strategies {
            strategies.canonical(s)?;
        }
        let mechanisms = MechanismRegistry::builtin();
        for m in &self.mechanisms {
            mechanisms.canonical(m)?;
        }
        for pair in &self.exclusions {
            let (s, m) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("exclusion {pair:?} is not strategy:mechanism")))?;
            strategies.canonical(s.trim())?;
            mechanisms.canonical(m.trim())?;
        }
        if !(self.horizon_days > 0.0) || self.warmup_days < 0.0 {
            return Err(Error::Config("horizon must be positive and warm-up non-negative".into()));
        }
        if self.instance_types.is_empty() || self.datacenters.is_empty() {
            return Err(Error::Config("instance types and datacenters must be non-empty".into()));
        }
        if self.jobs_limit == Some(0) {
            return Err(Error::Config("jobs_limit must be positive".into()));
        }
        self.instance_types()?;
        self.workload_model.validate()?;
        self.synthetic_prices.validate()?;
        for &alpha in &self.alphas {
            self.simulation(alpha).validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn partial_document_keeps_defaults() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            strategies = ["minimum", "high"]
            alphas = [2, 4.5]
            replications = 3
            synthetic_prices = { days = 30, volatility = 0.1 }
            "#,
        )
        .unwrap();
        assert_eq!(c.alphas, vec![2.0, 4.5]);
        assert_eq!(c.synthetic_prices.days, 30);
        assert_eq!(c.synthetic_prices.mean_change_interval_s, 3600.0);
        assert_eq!(c.base_seed, 2011);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_names_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("strategy = [\"x\"]").is_err());
        let c = ExperimentConfig {
            strategies: vec!["bogus".into()],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn high_is_excluded_with_mechanisms() {
        let c = ExperimentConfig::default();
        assert!(c.is_excluded("High", "migration"));
        assert!(c.is_excluded("high", "Checkpointing"));
        assert!(!c.is_excluded("high", "none"));
        assert!(!c.is_excluded("minimum", "migration"));
    }
}

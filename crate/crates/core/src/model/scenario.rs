use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridDefaults, ModelError, WcuSpec, SCHEMA_VERSION};
use crate::los::{LosGrade, LosTable};
use crate::optimize::GaParams;

/// How sample runs derive their random seed from the master seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every sample run reuses the master seed (common random numbers).
    #[default]
    Common,
    /// Seed is a stable hash of the master seed and the point key.
    PerPoint,
}

/// Edge weight used for shortest paths in the centrality baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityWeight {
    #[default]
    TravelTime,
    Hops,
}

/// Planning study parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Dollars.
    pub budget: u64,
    pub min_green: f64,
    pub sim_duration: f64,
    pub warmup: f64,
    pub seed: u64,
    pub los_limit: LosGrade,
    pub los_table: LosTable,
    pub ga: GaParams,
    pub wcu: WcuSpec,
    /// Fraction of a lane's usable length, from the stop bar, open to coils.
    pub coverage_fraction: f64,
    /// Seconds of delay on a single link that count as gridlock.
    pub gridlock_bound: f64,
    pub sample_seeds: SeedPolicy,
    pub centrality_weight: CentralityWeight,
    /// Extra budgets (dollars) to re-plan at for utility-vs-budget curves.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub budget_sweep: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDefaults>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            budget: 10_000,
            min_green: 15.0,
            sim_duration: 4200.0,
            warmup: 600.0,
            seed: 1,
            los_limit: LosGrade::C,
            los_table: LosTable::default(),
            ga: GaParams::default(),
            wcu: WcuSpec::default(),
            coverage_fraction: 0.25,
            gridlock_bound: 1800.0,
            sample_seeds: SeedPolicy::Common,
            centrality_weight: CentralityWeight::TravelTime,
            budget_sweep: Vec::new(),
            grid: None,
        }
    }
}

impl Scenario {
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, ModelError> {
        let scenario: Scenario = serde_json::from_slice(bytes)?;
        if scenario.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: scenario.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_slice(&bytes)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| Err(ModelError::validation("scenario", reason));
        if !(self.min_green > 0.0) {
            return bad("min_green must be > 0");
        }
        if !(self.warmup >= 0.0 && self.sim_duration > self.warmup) {
            return bad("need sim_duration > warmup >= 0");
        }
        if !(self.coverage_fraction > 0.0 && self.coverage_fraction <= 1.0) {
            return bad("coverage_fraction outside (0, 1]");
        }
        if !(self.gridlock_bound > 0.0) {
            return bad("gridlock_bound must be > 0");
        }
        self.los_table.validate()?;
        self.wcu.validate()?;
        self.ga
            .validate()
            .map_err(|e| ModelError::validation("scenario.ga", e.to_string()))?;
        Ok(())
    }

    /// Units purchasable with the whole budget.
    pub fn budget_units(&self) -> u32 {
        u32::try_from(self.budget / self.wcu.unit_cost).unwrap_or(u32::MAX)
    }

    /// Largest unit count a lane of the given usable length may carry.
    pub fn max_units(&self, usable_length: f64) -> u32 {
        let by_length =
            (usable_length * self.coverage_fraction / self.wcu.unit_length + 1e-9).floor();
        (by_length.max(0.0) as u32).min(self.budget_units())
    }

    /// Upper delay bound of the configured LOS limit, seconds.
    pub fn delay_limit(&self) -> f64 {
        self.los_table.upper_bound(self.los_limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_study_constants() {
        let s = Scenario::default();
        assert_eq!(s.budget, 10_000);
        assert_eq!(s.wcu.unit_cost, 2_000);
        assert_eq!(s.budget_units(), 5);
        assert_eq!(s.min_green, 15.0);
        assert_eq!(s.delay_limit(), 35.0);
    }

    #[test]
    fn per_lane_max_units() {
        let s = Scenario::default();
        // 300 m * 0.25 / 5 m = 15, capped by the 5-unit budget.
        assert_eq!(s.max_units(300.0), 5);
        assert_eq!(s.max_units(60.0), 3);
        assert_eq!(s.max_units(10.0), 0);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let s = Scenario::from_json_slice(br#"{"schema_version": 1, "budget": 4000}"#).unwrap();
        assert_eq!(s.budget, 4000);
        assert_eq!(s.min_green, 15.0);
    }

    #[test]
    fn rejects_unknown_field_and_version() {
        assert!(Scenario::from_json_slice(br#"{"schema_version": 1, "budjet": 1}"#).is_err());
        assert!(matches!(
            Scenario::from_json_slice(br#"{"schema_version": 7}"#),
            Err(ModelError::SchemaVersion { found: 7, .. })
        ));
    }

    #[test]
    fn rejects_warmup_past_duration() {
        let s = Scenario {
            warmup: 100.0,
            sim_duration: 100.0,
            ..Scenario::default()
        };
        assert!(s.validate().is_err());
    }
}

//! Climate impacts: the sixteen-sector national model, its benchmark
//! calibration, and the single-equation aggregate damage functions.

pub mod calibration;
pub mod damage_fn;
pub mod sectors;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibration::{
    benchmark_scale, calibrate_national_params, load_benchmarks, national_sums, regional_decomposition,
    BenchmarkClimate, Benchmarks, Calibration, CalibrationIssue, BENCHMARK_WARMING, CALIBRATION_TOLERANCE,
};
pub use damage_fn::{aggregate_damage_function, bma_damage, BmaSpec, DamageForm, DamageFunctionSpec};
pub use sectors::{evaluate_sectors, sector_impact, Drivers, Exposure, SectorConstants, SectorId, N_SECTORS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpactError {
    #[error("unknown damage function `{0}`")]
    UnknownForm(String),
    #[error("unknown sector `{0}`")]
    UnknownSector(String),
    #[error("invalid damage specification: {0}")]
    InvalidSpec(String),
    #[error("tol_linear is discontinuous at its threshold: {left} vs {right}")]
    Discontinuous { left: f64, right: f64 },
    #[error("weitzman2012 is undefined for negative warming {0}")]
    NegativeTemperature(f64),
    #[error("model-average weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("incomes must be positive: country {country}, world {world}")]
    NonPositiveIncome { country: f64, world: f64 },
    #[error("no calibrated parameters for {0}")]
    Uncalibrated(String),
    #[error("benchmarks: {0}")]
    Benchmarks(String),
    #[error("calibration failed: {}", join(.0))]
    Calibration(Vec<CalibrationIssue>),
}

fn join(issues: &[CalibrationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Rescales a damage by relative income: `damage · (y_n / y_world)^ε`.
pub fn apply_income_elasticity(damage: f64, y_n: f64, y_world: f64, epsilon: f64) -> Result<f64, ImpactError> {
    if !(y_n > 0.0 && y_world > 0.0) {
        return Err(ImpactError::NonPositiveIncome {
            country: y_n,
            world: y_world,
        });
    }
    Ok(damage * (y_n / y_world).powf(epsilon))
}

/// How damages are computed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DamageMode {
    #[default]
    Sectoral,
    Aggregate(DamageFunctionSpec),
    Bma(BmaSpec),
}

impl DamageMode {
    pub fn label(&self) -> String {
        match self {
            DamageMode::Sectoral => "sectoral".into(),
            DamageMode::Aggregate(spec) => spec.form.name().into(),
            DamageMode::Bma(_) => "bma".into(),
        }
    }

    pub fn validate(&self) -> Result<(), ImpactError> {
        match self {
            DamageMode::Sectoral => Ok(()),
            DamageMode::Aggregate(spec) => spec.validate(),
            DamageMode::Bma(bma) => bma.validate(),
        }
    }

    /// Parses `sectoral`, `bma`, or a form name with placeholder coefficients.
    pub fn from_name(name: &str) -> Result<Self, ImpactError> {
        match name {
            "sectoral" => Ok(DamageMode::Sectoral),
            "bma" => Ok(DamageMode::Bma(BmaSpec::default())),
            other => Ok(DamageMode::Aggregate(DamageFunctionSpec::default_for(other.parse()?))),
        }
    }
}

/// Impacts of one country in one year, US$; positive is damage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactBreakdown {
    pub sectors: [f64; N_SECTORS],
    pub market: f64,
    pub nonmarket: f64,
    /// market impacts over gross output
    pub market_fraction: f64,
}

impl ImpactBreakdown {
    pub fn from_sectors(sectors: [f64; N_SECTORS], gdp: f64) -> Self {
        let mut market = 0.0;
        let mut nonmarket = 0.0;
        for s in SectorId::ALL {
            if s.is_market() {
                market += sectors[s.index()];
            } else {
                nonmarket += sectors[s.index()];
            }
        }
        Self {
            sectors,
            market,
            nonmarket,
            market_fraction: market / gdp,
        }
    }

    /// A single aggregate damage, booked as market when it feeds back on output.
    pub fn aggregate(damage: f64, gdp: f64, feedback: bool) -> Self {
        let (market, nonmarket) = if feedback { (damage, 0.0) } else { (0.0, damage) };
        Self {
            sectors: [0.0; N_SECTORS],
            market,
            nonmarket,
            market_fraction: market / gdp,
        }
    }

    pub fn total(&self) -> f64 {
        self.market + self.nonmarket
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            sectors: self.sectors.map(|v| v * k),
            market: self.market * k,
            nonmarket: self.nonmarket * k,
            market_fraction: self.market_fraction * k,
        }
    }
}

/// Damage configuration shared by every country-year of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactModel {
    pub mode: DamageMode,
    pub constants: SectorConstants,
    /// aggregate forms reduce output when set
    pub aggregate_feedback: bool,
}

/// Per-country draw of impact uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactMultipliers {
    pub sectors: [f64; N_SECTORS],
    pub aggregate: f64,
}

impl Default for ImpactMultipliers {
    fn default() -> Self {
        Self {
            sectors: [1.0; N_SECTORS],
            aggregate: 1.0,
        }
    }
}

impl ImpactModel {
    pub fn evaluate(
        &self,
        alpha: &[f64; N_SECTORS],
        multipliers: &ImpactMultipliers,
        x: &Exposure,
        d: &Drivers,
    ) -> Result<ImpactBreakdown, ImpactError> {
        let fraction = match &self.mode {
            DamageMode::Sectoral => {
                let sectors = evaluate_sectors(alpha, &multipliers.sectors, x, d, &self.constants);
                return Ok(ImpactBreakdown::from_sectors(sectors, x.gdp));
            }
            DamageMode::Aggregate(spec) => aggregate_damage_function(spec, d.temperature)?,
            DamageMode::Bma(bma) => bma_damage(&bma.forms, &bma.weights, d.temperature)?,
        };
        Ok(ImpactBreakdown::aggregate(
            fraction * multipliers.aggregate * x.gdp,
            x.gdp,
            self.aggregate_feedback,
        ))
    }
}

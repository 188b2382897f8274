//! A calibrated, horizon-length world ready to be run.

use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::climate::{CarbonCycleParams, ClimateParams};
use crate::economy::{EconomyParams, YearInputs};
use crate::emissions::{EmissionsVector, Gas};
use crate::impacts::{
    calibrate_national_params, sector_impact, BenchmarkClimate, Benchmarks, Calibration, DamageMode, Exposure,
    ImpactError, ImpactModel, SectorConstants, SectorId, BENCHMARK_WARMING, N_SECTORS,
};
use crate::scenario::{
    aggregate_records, CountryRecord, CountryScenario, CountryTable, ExtrapolationConfig, ScenarioSet, TimeSeries,
    Variable,
};

pub const WORLD_REGION: &str = "WORLD";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub start_year: i32,
    pub horizon: i32,
    pub economy: EconomyParams,
    pub carbon_cycle: CarbonCycleParams,
    pub climate: ClimateParams,
    pub sectors: SectorConstants,
    pub damage: DamageMode,
    /// aggregate damage forms reduce output when set
    pub aggregate_feedback: bool,
    /// global income-elasticity reweighting of damages; 0 disables
    pub income_elasticity: f64,
    pub extrapolation: ExtrapolationConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            start_year: 2019,
            horizon: 2200,
            economy: EconomyParams::default(),
            carbon_cycle: CarbonCycleParams::default(),
            climate: ClimateParams::default(),
            sectors: SectorConstants::default(),
            damage: DamageMode::Sectoral,
            aggregate_feedback: false,
            income_elasticity: 0.0,
            extrapolation: ExtrapolationConfig::default(),
        }
    }
}

impl ModelSettings {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.horizon <= self.start_year {
            return Err(EngineError::Settings(format!(
                "horizon {} must follow start year {}",
                self.horizon, self.start_year
            )));
        }
        if !self.income_elasticity.is_finite() {
            return Err(EngineError::Settings("income_elasticity must be finite".into()));
        }
        self.economy.validate()?;
        self.carbon_cycle.validate()?;
        self.climate.validate()?;
        self.sectors.validate()?;
        self.damage.validate()?;
        Ok(())
    }

    pub fn years(&self) -> usize {
        (self.horizon - self.start_year + 1) as usize
    }

    pub fn impact_model(&self) -> ImpactModel {
        ImpactModel {
            mode: self.damage.clone(),
            constants: self.sectors.clone(),
            aggregate_feedback: self.aggregate_feedback,
        }
    }

    pub fn benchmark_climate(&self) -> BenchmarkClimate {
        BenchmarkClimate::new(BENCHMARK_WARMING, &self.carbon_cycle, &self.climate)
    }
}

/// Exogenous per-year inputs of one country, indexed from the start year.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryPaths {
    pub population: Vec<f64>,
    pub tfp_growth: Vec<f64>,
    pub savings_rate: Vec<f64>,
    /// per-gas log change of emission intensity
    pub intensity_rates: Vec<EmissionsVector>,
}

impl CountryPaths {
    pub fn inputs(&self, k: usize, population_shock: f64) -> YearInputs {
        YearInputs {
            population: self.population[k] * population_shock,
            tfp_growth: self.tfp_growth[k],
            savings_rate: self.savings_rate[k],
        }
    }

    fn from_scenario(record: &CountryRecord, scen: &CountryScenario, start: i32, years: usize) -> Self {
        let at = |var: Variable, k: usize| {
            scen.series(var)
                .get(start + k as i32)
                .expect("scenario coverage checked")
        };
        let p0 = at(Variable::Population, 0);
        let rate_vars = [
            (Gas::Co2, Variable::IntensityRateCo2),
            (Gas::Ch4, Variable::IntensityRateCh4),
            (Gas::N2o, Variable::IntensityRateN2o),
            (Gas::Sf6, Variable::IntensityRateSf6),
            (Gas::So2, Variable::IntensityRateSo2),
        ];
        Self {
            population: (0..years)
                .map(|k| record.base_population * at(Variable::Population, k) / p0)
                .collect(),
            tfp_growth: (0..years).map(|k| at(Variable::TfpGrowth, k)).collect(),
            savings_rate: (0..years).map(|k| at(Variable::SavingsRate, k)).collect(),
            intensity_rates: (0..years)
                .map(|k| {
                    let mut v = EmissionsVector::default();
                    for (gas, var) in rate_vars {
                        *v.get_mut(gas) = at(var, k);
                    }
                    v
                })
                .collect(),
        }
    }
}

/// Countries, their calibrated parameters and exogenous paths.
#[derive(Debug, Clone)]
pub struct World {
    pub table: CountryTable,
    pub paths: Vec<CountryPaths>,
    pub base_emissions: Vec<EmissionsVector>,
    pub alpha: Vec<[f64; N_SECTORS]>,
    pub cfc11: TimeSeries,
    pub cfc12: TimeSeries,
    pub settings: ModelSettings,
    id: u64,
}

impl World {
    /// Extends the scenario to the horizon when needed and attaches the
    /// calibration, which the sectoral damage mode requires.
    pub fn new(
        table: CountryTable,
        scenario: &ScenarioSet,
        base_emissions: Vec<EmissionsVector>,
        calibration: Option<&Calibration>,
        settings: ModelSettings,
    ) -> Result<World, EngineError> {
        settings.validate()?;
        if table.is_empty() {
            return Err(EngineError::Settings("country table is empty".into()));
        }
        if base_emissions.len() != table.len() || scenario.countries.len() != table.len() {
            return Err(EngineError::Settings(
                "scenario, emissions and country table disagree".into(),
            ));
        }
        let scenario = if scenario.needs_extrapolation(settings.horizon) {
            scenario.extrapolated(settings.horizon, &settings.extrapolation)?
        } else {
            scenario.clone()
        };
        for year in [settings.start_year, settings.horizon] {
            scenario.check_covers(year)?;
        }
        let years = settings.years();
        let mut paths = Vec::with_capacity(table.len());
        let mut alpha = Vec::with_capacity(table.len());
        for (record, scen) in table.records().iter().zip(&scenario.countries) {
            if scen.iso != record.iso_code {
                return Err(EngineError::Settings(format!(
                    "scenario order mismatch: {} vs {}",
                    scen.iso, record.iso_code
                )));
            }
            paths.push(CountryPaths::from_scenario(record, scen, settings.start_year, years));
            alpha.push(match (&settings.damage, calibration) {
                (_, Some(cal)) => cal
                    .country(&record.iso_code)
                    .ok_or_else(|| ImpactError::Uncalibrated(record.iso_code.clone()))?
                    .alpha_array(),
                (DamageMode::Sectoral, None) => return Err(ImpactError::Uncalibrated(record.iso_code.clone()).into()),
                (_, None) => [0.0; N_SECTORS],
            });
        }
        Ok(Self::assemble(
            table,
            paths,
            base_emissions,
            alpha,
            scenario.cfc11,
            scenario.cfc12,
            settings,
        ))
    }

    fn assemble(
        table: CountryTable,
        paths: Vec<CountryPaths>,
        base_emissions: Vec<EmissionsVector>,
        alpha: Vec<[f64; N_SECTORS]>,
        cfc11: TimeSeries,
        cfc12: TimeSeries,
        settings: ModelSettings,
    ) -> World {
        let mut w = World {
            table,
            paths,
            base_emissions,
            alpha,
            cfc11,
            cfc12,
            settings,
            id: 0,
        };
        w.id = w.compute_id();
        w
    }

    fn compute_id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        serde_json::to_string(&self.settings).unwrap_or_default().hash(&mut h);
        for r in self.table.records() {
            format!("{r:?}").hash(&mut h);
        }
        let mut bits = |v: f64| v.to_bits().hash(&mut h);
        for p in &self.paths {
            p.population
                .iter()
                .chain(&p.tfp_growth)
                .chain(&p.savings_rate)
                .for_each(|v| bits(*v));
            p.intensity_rates.iter().flat_map(|e| e.to_array()).for_each(&mut bits);
        }
        self.base_emissions
            .iter()
            .flat_map(|e| e.to_array())
            .for_each(&mut bits);
        self.alpha.iter().flatten().for_each(|v| bits(*v));
        self.cfc11
            .values
            .iter()
            .chain(&self.cfc12.values)
            .for_each(|v| bits(*v));
        h.finish()
    }

    /// Identifies inputs and settings; two runs are comparable only when equal.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn with_settings(&self, settings: ModelSettings) -> Result<World, EngineError> {
        settings.validate()?;
        let mut w = self.clone();
        w.settings = settings;
        w.id = w.compute_id();
        Ok(w)
    }

    pub fn with_damage(&self, damage: DamageMode) -> Result<World, EngineError> {
        self.with_settings(ModelSettings {
            damage,
            ..self.settings.clone()
        })
    }

    /// All countries merged into one region: summed population, output and
    /// emissions, GDP-weighted temperature pattern, TFP growth and savings,
    /// emission-weighted intensity changes. Sector scales are recalibrated so
    /// the single region reproduces the summed national impacts at the
    /// benchmark warming.
    pub fn collapse(&self) -> Result<World, EngineError> {
        let records = self.table.records();
        let record = aggregate_records(records, WORLD_REGION, WORLD_REGION).expect("non-empty world");
        let table = CountryTable::new(vec![record.clone()])?;
        if self.len() == 1 {
            return Ok(Self::assemble(
                table,
                self.paths.clone(),
                self.base_emissions.clone(),
                self.alpha.clone(),
                self.cfc11.clone(),
                self.cfc12.clone(),
                self.settings.clone(),
            ));
        }
        let gdp: Vec<f64> = records.iter().map(|r| r.base_gdp).collect();
        let weighted = |values: &dyn Fn(usize) -> f64, weights: &[f64]| {
            let total: f64 = weights.iter().sum();
            (0..weights.len()).map(|i| weights[i] * values(i)).sum::<f64>() / total
        };
        let years = self.settings.years();
        let mut paths = CountryPaths {
            population: vec![0.0; years],
            tfp_growth: vec![0.0; years],
            savings_rate: vec![0.0; years],
            intensity_rates: vec![EmissionsVector::default(); years],
        };
        for k in 0..years {
            paths.population[k] = self.paths.iter().map(|p| p.population[k]).sum();
            paths.tfp_growth[k] = weighted(&|i| self.paths[i].tfp_growth[k], &gdp);
            paths.savings_rate[k] = weighted(&|i| self.paths[i].savings_rate[k], &gdp);
            for gas in Gas::ALL {
                let em: Vec<f64> = self.base_emissions.iter().map(|e| e.get(gas)).collect();
                let w = if em.iter().sum::<f64>() > 0.0 { &em } else { &gdp };
                *paths.intensity_rates[k].get_mut(gas) = weighted(&|i| self.paths[i].intensity_rates[k].get(gas), w);
            }
        }
        let alpha = match self.settings.damage {
            DamageMode::Sectoral => self.collapsed_alpha(&table, &record)?,
            _ => [0.0; N_SECTORS],
        };
        Ok(Self::assemble(
            table,
            vec![paths],
            vec![self.base_emissions.iter().copied().sum()],
            vec![alpha],
            self.cfc11.clone(),
            self.cfc12.clone(),
            self.settings.clone(),
        ))
    }

    fn collapsed_alpha(&self, table: &CountryTable, record: &CountryRecord) -> Result<[f64; N_SECTORS], EngineError> {
        let climate = self.settings.benchmark_climate();
        let k = &self.settings.sectors;
        let mut targets = Benchmarks::new();
        for sector in SectorId::ALL {
            let total: f64 = self
                .table
                .records()
                .iter()
                .zip(&self.alpha)
                .map(|(r, a)| sector_impact(sector, a[sector.index()], &Exposure::base(r), &climate.drivers(r), k))
                .sum();
            targets.insert(&record.region_id, sector, total);
        }
        let cal = calibrate_national_params(table, &targets, k, &climate)?;
        Ok(cal.countries[0].alpha_array())
    }
}

#![allow(dead_code)]

use std::path::PathBuf;

use nscc_core::config::{ModelInputs, RunConfig};
use nscc_core::emissions::EmissionsVector;
use nscc_core::engine::{ModelSettings, World};
use nscc_core::scenario::{
    CountryRecord, CountryScenario, CountryTable, ScenarioSet, TimeSeries, Variable, COUNTRY_VARIABLES,
};

pub fn toy_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy/config.json")
}

pub fn toy_config() -> RunConfig {
    let cfg = RunConfig::load(&toy_config_path()).expect("toy config");
    cfg.validate().expect("valid toy config");
    cfg
}

pub fn toy_inputs(cfg: &RunConfig) -> ModelInputs {
    ModelInputs::load(cfg).expect("toy inputs")
}

/// Toy world under the named damage configuration.
pub fn toy_world(damage: &str) -> (RunConfig, ModelInputs, World) {
    let mut cfg = toy_config();
    cfg.model.damage = cfg.damage_spec(damage).unwrap();
    let inputs = toy_inputs(&cfg);
    let world = inputs.world(&cfg.model).unwrap();
    (cfg, inputs, world)
}

pub fn record(iso: &str, region: &str, pop: f64, gdp: f64, pattern: f64) -> CountryRecord {
    CountryRecord {
        iso_code: iso.into(),
        name: iso.into(),
        region_id: region.into(),
        base_population: pop,
        base_gdp: gdp,
        base_temperature: 15.0,
        coast_length: 1500.0,
        wetland_area: 2e4,
        dryland_area: 1e5,
        urban_share: 0.6,
        temperature_pattern: pattern,
    }
}

/// Identical constant-growth paths for every country over `start..=end`.
pub fn uniform_scenario(table: &CountryTable, start: i32, end: i32, tfp: f64, pop_growth: f64) -> ScenarioSet {
    let n = (end - start + 1) as usize;
    let countries = table
        .records()
        .iter()
        .map(|r| {
            let series = COUNTRY_VARIABLES
                .iter()
                .map(|v| {
                    let values = match v {
                        Variable::Population => (0..n).map(|k| (1.0 + pop_growth).powi(k as i32)).collect(),
                        Variable::TfpGrowth => vec![tfp; n],
                        Variable::SavingsRate => vec![0.22; n],
                        Variable::IntensityRateSo2 => vec![-0.03; n],
                        _ => vec![-0.01; n],
                    };
                    TimeSeries::new(start, values)
                })
                .collect();
            CountryScenario::new(r.iso_code.clone(), series)
        })
        .collect();
    ScenarioSet {
        countries,
        cfc11: TimeSeries::constant(start, end, 220.0),
        cfc12: TimeSeries::constant(start, end, 500.0),
    }
}

/// Base emissions split in proportion to GDP, so every country has the same intensity.
pub fn gdp_share_emissions(table: &CountryTable) -> Vec<EmissionsVector> {
    let total = table.total_gdp();
    table
        .records()
        .iter()
        .map(|r| EmissionsVector::from_array([10.0, 350.0, 7.0, 8.0, 50.0]) * (r.base_gdp / total))
        .collect()
}

pub fn synthetic_world(table: CountryTable, scenario: &ScenarioSet, settings: ModelSettings) -> World {
    let emissions = gdp_share_emissions(&table);
    World::new(table, scenario, emissions, None, settings).unwrap()
}

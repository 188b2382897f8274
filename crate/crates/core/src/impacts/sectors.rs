//! Sectoral national impact functions.
//!
//! Each sector's impact is `GDP · α · v · g(driver) · exposure`, where
//! `v = (y / y_base)^ε` is the income-dependent vulnerability. Agriculture
//! adds a CO2-fertilization term that does not scale with `α`. Health
//! sectors count death-equivalents valued at a multiple of per-capita income.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ImpactError;
use crate::economy::CountryState;
use crate::scenario::CountryRecord;

pub const N_SECTORS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorId {
    Agriculture,
    Cooling,
    Heating,
    Hurricanes,
    ExtratropicalStorms,
    Forests,
    Water,
    Cardiovascular,
    Respiratory,
    Diarrhoea,
    VectorBorne,
    Biodiversity,
    SlrDryland,
    SlrWetland,
    SlrProtection,
    SlrMigration,
}

impl SectorId {
    pub const ALL: [SectorId; N_SECTORS] = [
        SectorId::Agriculture,
        SectorId::Cooling,
        SectorId::Heating,
        SectorId::Hurricanes,
        SectorId::ExtratropicalStorms,
        SectorId::Forests,
        SectorId::Water,
        SectorId::Cardiovascular,
        SectorId::Respiratory,
        SectorId::Diarrhoea,
        SectorId::VectorBorne,
        SectorId::Biodiversity,
        SectorId::SlrDryland,
        SectorId::SlrWetland,
        SectorId::SlrProtection,
        SectorId::SlrMigration,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SectorId::Agriculture => "agriculture",
            SectorId::Cooling => "cooling",
            SectorId::Heating => "heating",
            SectorId::Hurricanes => "hurricanes",
            SectorId::ExtratropicalStorms => "extratropical_storms",
            SectorId::Forests => "forests",
            SectorId::Water => "water",
            SectorId::Cardiovascular => "cardiovascular",
            SectorId::Respiratory => "respiratory",
            SectorId::Diarrhoea => "diarrhoea",
            SectorId::VectorBorne => "vector_borne",
            SectorId::Biodiversity => "biodiversity",
            SectorId::SlrDryland => "slr_dryland",
            SectorId::SlrWetland => "slr_wetland",
            SectorId::SlrProtection => "slr_protection",
            SectorId::SlrMigration => "slr_migration",
        }
    }

    /// Market sectors reduce output; the rest are welfare losses.
    pub fn is_market(self) -> bool {
        !matches!(
            self,
            SectorId::Cardiovascular
                | SectorId::Respiratory
                | SectorId::Diarrhoea
                | SectorId::VectorBorne
                | SectorId::Biodiversity
                | SectorId::SlrWetland
        )
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SectorId {
    type Err = ImpactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SectorId::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ImpactError::UnknownSector(s.to_string()))
    }
}

/// Shape constants shared by all countries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectorConstants {
    /// vulnerability income elasticity per sector, in `SectorId::ALL` order
    pub income_elasticity: [f64; N_SECTORS],
    /// °C of national warming at which agricultural damage is minimal
    pub agriculture_optimum: f64,
    /// fraction of GDP per unit ln(C/C0), benefit
    pub co2_fertilization: f64,
    pub cooling_exponent: f64,
    /// value of a death-equivalent in multiples of per-capita income
    pub vsl_income_multiple: f64,
}

impl Default for SectorConstants {
    fn default() -> Self {
        Self {
            income_elasticity: [
                -0.31, 0.0, 0.0, -0.514, -0.514, -0.31, -0.85, 0.0, 0.0, -1.58, -2.65, 0.0, 0.0, 0.0, 0.0, 0.0,
            ],
            agriculture_optimum: 1.0,
            co2_fertilization: 0.0005,
            cooling_exponent: 1.5,
            vsl_income_multiple: 200.0,
        }
    }
}

impl SectorConstants {
    pub fn elasticity(&self, sector: SectorId) -> f64 {
        self.income_elasticity[sector.index()]
    }

    pub fn validate(&self) -> Result<(), ImpactError> {
        let all = self.income_elasticity.iter().chain([
            &self.agriculture_optimum,
            &self.co2_fertilization,
            &self.cooling_exponent,
            &self.vsl_income_multiple,
        ]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(ImpactError::InvalidSpec("non-finite sector constant".into()));
        }
        if self.cooling_exponent < 0.0 {
            return Err(ImpactError::InvalidSpec("cooling exponent must be non-negative".into()));
        }
        Ok(())
    }
}

/// Economic and geographic inputs of one country-year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exposure {
    /// US$
    pub gdp: f64,
    pub population: f64,
    /// US$/person
    pub per_capita_income: f64,
    /// US$/person, reference for vulnerability
    pub base_income: f64,
    pub urban_share: f64,
    pub coast_length: f64,
    pub wetland_area: f64,
    pub dryland_area: f64,
}

impl Exposure {
    pub fn new(record: &CountryRecord, state: &CountryState) -> Self {
        Self {
            gdp: state.gross_output,
            population: state.population,
            per_capita_income: state.per_capita_income,
            ..Self::base(record)
        }
    }

    /// Base-year exposure of `record`.
    pub fn base(record: &CountryRecord) -> Self {
        Self {
            gdp: record.base_gdp,
            population: record.base_population,
            per_capita_income: record.base_income(),
            base_income: record.base_income(),
            urban_share: record.urban_share,
            coast_length: record.coast_length,
            wetland_area: record.wetland_area,
            dryland_area: record.dryland_area,
        }
    }
}

/// Climate drivers seen by one country in one year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drivers {
    /// national temperature anomaly, °C
    pub temperature: f64,
    pub co2_ppm: f64,
    pub preindustrial_ppm: f64,
    /// m
    pub sea_level: f64,
    /// m/yr
    pub sea_level_change: f64,
}

impl Drivers {
    /// No warming, no sea-level rise, preindustrial CO2.
    pub fn neutral(preindustrial_ppm: f64) -> Self {
        Self {
            temperature: 0.0,
            co2_ppm: preindustrial_ppm,
            preindustrial_ppm,
            sea_level: 0.0,
            sea_level_change: 0.0,
        }
    }
}

/// The part of a sector impact that scales with `α`, per unit `α`, and the
/// part that does not.
pub fn sector_components(sector: SectorId, x: &Exposure, d: &Drivers, k: &SectorConstants) -> (f64, f64) {
    let t = d.temperature;
    let v = (x.per_capita_income / x.base_income).powf(k.elasticity(sector));
    let s = d.sea_level.max(0.0);
    let ds = d.sea_level_change.max(0.0);
    let unit = x.gdp * v;
    let deaths_value = x.population * v * t * k.vsl_income_multiple * x.per_capita_income;
    match sector {
        SectorId::Agriculture => (
            unit * (t * t - 2.0 * k.agriculture_optimum * t),
            -x.gdp * k.co2_fertilization * (d.co2_ppm / d.preindustrial_ppm).ln(),
        ),
        SectorId::Cooling => (unit * t.max(0.0).powf(k.cooling_exponent), 0.0),
        SectorId::Heating => (-unit * t, 0.0),
        SectorId::Hurricanes
        | SectorId::ExtratropicalStorms
        | SectorId::Forests
        | SectorId::Water
        | SectorId::Biodiversity => (unit * t, 0.0),
        SectorId::Cardiovascular | SectorId::Respiratory => (deaths_value * x.urban_share, 0.0),
        SectorId::Diarrhoea | SectorId::VectorBorne => (deaths_value * (1.0 - x.urban_share), 0.0),
        SectorId::SlrDryland => (unit * (s * x.coast_length).min(x.dryland_area), 0.0),
        SectorId::SlrWetland => (unit * s * x.wetland_area, 0.0),
        SectorId::SlrProtection | SectorId::SlrMigration => (unit * ds * x.coast_length, 0.0),
    }
}

/// US$ impact of one sector; positive is damage.
pub fn sector_impact(sector: SectorId, alpha: f64, x: &Exposure, d: &Drivers, k: &SectorConstants) -> f64 {
    let (per_alpha, fixed) = sector_components(sector, x, d, k);
    let impact = alpha * per_alpha + fixed;
    match sector {
        SectorId::SlrProtection | SectorId::SlrMigration => impact.max(0.0),
        _ => impact,
    }
}

/// All sixteen sector impacts, each scaled by its multiplier.
pub fn evaluate_sectors(
    alpha: &[f64; N_SECTORS],
    multipliers: &[f64; N_SECTORS],
    x: &Exposure,
    d: &Drivers,
    k: &SectorConstants,
) -> [f64; N_SECTORS] {
    SectorId::ALL.map(|s| sector_impact(s, alpha[s.index()] * multipliers[s.index()], x, d, k))
}

//! Benchmark rescaling of national sector parameters.
//!
//! Provisional national scales follow relative income within the region,
//! `(y_n / ȳ_R)^ε_s`; one common factor per region and sector then makes the
//! national impacts at the benchmark warming add up to the regional figure.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sectors::{sector_components, sector_impact, Drivers, Exposure, SectorConstants, SectorId, N_SECTORS};
use super::ImpactError;
use crate::climate::{CarbonCycleParams, ClimateParams};
use crate::scenario::{aggregate_records, CountryRecord, CountryTable};

/// Global warming at which regional benchmarks are stated, °C.
pub const BENCHMARK_WARMING: f64 = 2.5;

/// Share of equilibrium sea-level rise reached in the benchmark state.
pub const BENCHMARK_SLR_FRACTION: f64 = 0.4;

/// Relative tolerance on the calibrated regional sums.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

const BENCHMARK_HEADER: [&str; 3] = ["region", "sector", "impact_usd_at_2p5C"];

/// Regional impacts in US$ at the benchmark warming, keyed by region and sector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Benchmarks(BTreeMap<(String, SectorId), f64>);

impl Benchmarks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, region: &str, sector: SectorId, usd: f64) -> Option<f64> {
        self.0.insert((region.to_string(), sector), usd)
    }

    pub fn get(&self, region: &str, sector: SectorId) -> Option<f64> {
        self.0.get(&(region.to_string(), sector)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, SectorId, f64)> {
        self.0.iter().map(|((r, s), v)| (r.as_str(), *s, *v))
    }
}

/// Reads `benchmarks.csv`.
pub fn load_benchmarks(path: &Path) -> Result<Benchmarks, ImpactError> {
    let fail = |msg: String| ImpactError::Benchmarks(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let idx: Vec<usize> = BENCHMARK_HEADER
        .iter()
        .map(|h| col(h).ok_or_else(|| fail(format!("missing column `{h}`"))))
        .collect::<Result<_, _>>()?;
    let mut out = Benchmarks::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| fail(e.to_string()))?;
        let region = row.get(idx[0]).unwrap_or("");
        let sector: SectorId = row
            .get(idx[1])
            .unwrap_or("")
            .parse()
            .map_err(|e: ImpactError| fail(format!("line {line}: {e}")))?;
        let text = row.get(idx[2]).unwrap_or("");
        let usd: f64 = text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| fail(format!("line {line}: cannot parse `{text}` as US$")))?;
        if out.insert(region, sector, usd).is_some() {
            return Err(fail(format!("line {line}: duplicate benchmark for {region}/{sector}")));
        }
    }
    Ok(out)
}

/// Stylised climate state at a given global warming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkClimate {
    /// °C
    pub warming: f64,
    pub ecs: f64,
    pub preindustrial_ppm: f64,
    pub slr_equilibrium_per_degree: f64,
    pub slr_response_time: f64,
}

impl BenchmarkClimate {
    pub fn new(warming: f64, carbon: &CarbonCycleParams, climate: &ClimateParams) -> Self {
        Self {
            warming,
            ecs: climate.ecs,
            preindustrial_ppm: carbon.preindustrial_ppm,
            slr_equilibrium_per_degree: climate.slr_equilibrium_per_degree,
            slr_response_time: climate.slr_response_time,
        }
    }

    pub fn at(&self, warming: f64) -> Self {
        Self { warming, ..*self }
    }

    /// Equilibrium CO2 for the warming, pattern-scaled national temperature,
    /// and partially adjusted sea level.
    pub fn drivers(&self, record: &CountryRecord) -> Drivers {
        let equilibrium = self.slr_equilibrium_per_degree * self.warming;
        let sea_level = BENCHMARK_SLR_FRACTION * equilibrium;
        Drivers {
            temperature: record.temperature_pattern * self.warming,
            co2_ppm: self.preindustrial_ppm * 2f64.powf(self.warming / self.ecs),
            preindustrial_ppm: self.preindustrial_ppm,
            sea_level,
            sea_level_change: (equilibrium - sea_level) / self.slr_response_time,
        }
    }
}

/// Common factor that makes `Σ (fixed + scale · provisional)` equal the
/// benchmark. `None` when the provisional impacts sum to zero but the
/// benchmark is not matched by the fixed part alone.
pub fn benchmark_scale(provisional: &[f64], fixed: &[f64], benchmark: f64) -> Option<f64> {
    let p: f64 = provisional.iter().sum();
    let f: f64 = fixed.iter().sum();
    let target = benchmark - f;
    if p == 0.0 {
        return (target == 0.0).then_some(1.0);
    }
    Some(target / p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryCalibration {
    pub iso: String,
    pub region: String,
    pub alpha: BTreeMap<SectorId, f64>,
}

impl CountryCalibration {
    pub fn alpha_array(&self) -> [f64; N_SECTORS] {
        SectorId::ALL.map(|s| self.alpha.get(&s).copied().unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScale {
    pub region: String,
    pub sector: SectorId,
    /// US$
    pub benchmark: f64,
    /// US$, sum of provisional scalable impacts
    pub provisional: f64,
    /// US$, sum of impacts independent of the scale
    pub fixed: f64,
    pub scale: f64,
    /// US$, re-evaluated with calibrated parameters
    pub calibrated: f64,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub benchmark_warming: f64,
    pub countries: Vec<CountryCalibration>,
    pub scales: Vec<RegionScale>,
}

impl Calibration {
    pub fn country(&self, iso: &str) -> Option<&CountryCalibration> {
        self.countries.iter().find(|c| c.iso == iso)
    }

    pub fn max_residual(&self) -> f64 {
        self.scales.iter().map(|s| s.relative_residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalibrationIssue {
    MissingBenchmark {
        region: String,
        sector: SectorId,
    },
    ZeroProvisional {
        region: String,
        sector: SectorId,
        benchmark: String,
    },
}

impl fmt::Display for CalibrationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationIssue::MissingBenchmark { region, sector } => {
                write!(f, "{region}/{sector}: no benchmark")
            }
            CalibrationIssue::ZeroProvisional {
                region,
                sector,
                benchmark,
            } => write!(
                f,
                "{region}/{sector}: provisional impacts sum to zero but benchmark is {benchmark}"
            ),
        }
    }
}

fn relative_residual(calibrated: f64, benchmark: f64, fixed: f64) -> f64 {
    let denom = benchmark.abs().max(fixed.abs()).max(1.0);
    (calibrated - benchmark).abs() / denom
}

/// Calibrates every country's sector scales against the regional benchmarks.
/// All region/sector failures are collected into one error.
pub fn calibrate_national_params(
    table: &CountryTable,
    benchmarks: &Benchmarks,
    constants: &SectorConstants,
    climate: &BenchmarkClimate,
) -> Result<Calibration, ImpactError> {
    let records = table.records();
    let mut alphas = vec![[0.0; N_SECTORS]; records.len()];
    let mut scales = Vec::new();
    let mut issues = Vec::new();

    for region in table.regions() {
        let members = table.members(&region);
        let pop: f64 = members.iter().map(|&i| records[i].base_population).sum();
        let gdp: f64 = members.iter().map(|&i| records[i].base_gdp).sum();
        let mean_income = gdp / pop;
        for sector in SectorId::ALL {
            let Some(benchmark) = benchmarks.get(&region, sector) else {
                issues.push(CalibrationIssue::MissingBenchmark {
                    region: region.clone(),
                    sector,
                });
                continue;
            };
            let eps = constants.elasticity(sector);
            let mut provisional = Vec::with_capacity(members.len());
            let mut fixed = Vec::with_capacity(members.len());
            for &i in &members {
                let r = &records[i];
                let alpha0 = (r.base_income() / mean_income).powf(eps);
                alphas[i][sector.index()] = alpha0;
                let (per_alpha, f) = sector_components(sector, &Exposure::base(r), &climate.drivers(r), constants);
                provisional.push(alpha0 * per_alpha);
                fixed.push(f);
            }
            let Some(scale) = benchmark_scale(&provisional, &fixed, benchmark) else {
                issues.push(CalibrationIssue::ZeroProvisional {
                    region: region.clone(),
                    sector,
                    benchmark: format!("{benchmark}"),
                });
                continue;
            };
            let mut calibrated = 0.0;
            for &i in &members {
                let r = &records[i];
                alphas[i][sector.index()] *= scale;
                calibrated += sector_impact(
                    sector,
                    alphas[i][sector.index()],
                    &Exposure::base(r),
                    &climate.drivers(r),
                    constants,
                );
            }
            let fixed_sum: f64 = fixed.iter().sum();
            scales.push(RegionScale {
                region: region.clone(),
                sector,
                benchmark,
                provisional: provisional.iter().sum(),
                fixed: fixed_sum,
                scale,
                calibrated,
                relative_residual: relative_residual(calibrated, benchmark, fixed_sum),
            });
        }
    }
    if !issues.is_empty() {
        return Err(ImpactError::Calibration(issues));
    }
    let countries = records
        .iter()
        .zip(alphas)
        .map(|(r, a)| CountryCalibration {
            iso: r.iso_code.clone(),
            region: r.region_id.clone(),
            alpha: SectorId::ALL.iter().map(|s| (*s, a[s.index()])).collect(),
        })
        .collect();
    Ok(Calibration {
        benchmark_warming: climate.warming,
        countries,
        scales,
    })
}

/// Region/sector impacts in US$.
pub type RegionalImpacts = BTreeMap<(String, SectorId), f64>;

/// Sum of calibrated national impacts per region and sector at `climate`,
/// using base-year economies.
pub fn national_sums(
    table: &CountryTable,
    calibration: &Calibration,
    constants: &SectorConstants,
    climate: &BenchmarkClimate,
) -> Result<RegionalImpacts, ImpactError> {
    let mut out = RegionalImpacts::new();
    for r in table.records() {
        let cal = calibration
            .country(&r.iso_code)
            .ok_or_else(|| ImpactError::Uncalibrated(r.iso_code.clone()))?;
        let alpha = cal.alpha_array();
        for sector in SectorId::ALL {
            let v = sector_impact(
                sector,
                alpha[sector.index()],
                &Exposure::base(r),
                &climate.drivers(r),
                constants,
            );
            *out.entry((r.region_id.clone(), sector)).or_insert(0.0) += v;
        }
    }
    Ok(out)
}

/// Impacts of each region treated as one aggregate country, calibrated to
/// the same benchmarks and evaluated at `climate`.
pub fn regional_decomposition(
    table: &CountryTable,
    benchmarks: &Benchmarks,
    constants: &SectorConstants,
    benchmark_climate: &BenchmarkClimate,
    climate: &BenchmarkClimate,
) -> Result<RegionalImpacts, ImpactError> {
    let records = table.records();
    let regional: Vec<CountryRecord> = table
        .regions()
        .into_iter()
        .filter_map(|region| aggregate_records(table.members(&region).iter().map(|&i| &records[i]), &region, &region))
        .collect();
    let regional = CountryTable::new(regional).map_err(|e| ImpactError::InvalidSpec(e.to_string()))?;
    let cal = calibrate_national_params(&regional, benchmarks, constants, benchmark_climate)?;
    national_sums(&regional, &cal, constants, climate)
}

//! Ingestion of exogenous inputs: the country master table, per-country
//! scenario trajectories, base-year emissions, and the trend extrapolation
//! that carries scenarios out to the model horizon.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions::EmissionsVector;

/// Identifier used in long-format scenario files for global (non-country) series.
pub const WORLD_ISO: &str = "WLD";

/// Minimum fraction of a reference global total the country table must cover.
pub const COVERAGE_THRESHOLD: f64 = 0.99;

/// Number of trailing observations used by constant-rate extrapolation.
const RATE_WINDOW: usize = 10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: missing required column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}, line {line}: duplicate iso code `{iso}`", path.display())]
    DuplicateIso { path: PathBuf, line: u64, iso: String },
    #[error("{}, line {line}, column `{column}`: {reason}", path.display())]
    InvalidValue {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },
    #[error("scenario `{variable}` has no series for country `{iso}`")]
    MissingCountry { variable: String, iso: String },
    #[error("scenario `{variable}` for `{iso}`: {reason}")]
    Gap {
        variable: String,
        iso: String,
        reason: String,
    },
    #[error("target year {target} precedes series start {start}")]
    TargetBeforeStart { target: i32, start: i32 },
    #[error("scenario `{variable}` for `{iso}` covers {start}..={end}, not year {year}")]
    NotCovered {
        variable: String,
        iso: String,
        start: i32,
        end: i32,
        year: i32,
    },
}

/// One row of the country master table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub iso_code: String,
    pub name: String,
    pub region_id: String,
    /// persons
    pub base_population: f64,
    /// constant US$/yr
    pub base_gdp: f64,
    /// national annual mean, °C
    pub base_temperature: f64,
    /// km
    pub coast_length: f64,
    /// km²
    pub wetland_area: f64,
    /// km²
    pub dryland_area: f64,
    pub urban_share: f64,
    /// national warming per degree of global warming
    pub temperature_pattern: f64,
}

impl CountryRecord {
    /// Base-year GDP per person, US$.
    pub fn base_income(&self) -> f64 {
        self.base_gdp / self.base_population
    }
}

/// Country records keyed by iso code, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryTable {
    records: Vec<CountryRecord>,
    index: HashMap<String, usize>,
}

impl CountryTable {
    /// Builds a table, rejecting duplicate iso codes.
    pub fn new(records: Vec<CountryRecord>) -> Result<Self, ScenarioError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.iso_code.clone(), i).is_some() {
                return Err(ScenarioError::DuplicateIso {
                    path: PathBuf::new(),
                    line: i as u64 + 2,
                    iso: r.iso_code.clone(),
                });
            }
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[CountryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, iso: &str) -> Option<&CountryRecord> {
        self.index.get(iso).map(|&i| &self.records[i])
    }

    pub fn position(&self, iso: &str) -> Option<usize> {
        self.index.get(iso).copied()
    }

    /// Region identifiers in order of first appearance.
    pub fn regions(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.region_id) {
                out.push(r.region_id.clone());
            }
        }
        out
    }

    /// Indices of the countries belonging to `region`.
    pub fn members(&self, region: &str) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.region_id == region)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_population(&self) -> f64 {
        self.records.iter().map(|r| r.base_population).sum()
    }

    pub fn total_gdp(&self) -> f64 {
        self.records.iter().map(|r| r.base_gdp).sum()
    }

    /// World GDP per person in the base year.
    pub fn world_income(&self) -> f64 {
        self.total_gdp() / self.total_population()
    }
}

const COUNTRY_HEADER: [&str; 11] = [
    "iso",
    "name",
    "region",
    "pop",
    "gdp",
    "temp",
    "coast_km",
    "wetland_km2",
    "dryland_km2",
    "urban_share",
    "temp_pattern",
];

/// Covariates that default to zero when the column or cell is absent.
const OPTIONAL_COLUMNS: [&str; 3] = ["coast_km", "wetland_km2", "dryland_km2"];

struct Columns<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        Self { path, index }
    }

    fn require(&self, names: &[&str]) -> Result<(), ScenarioError> {
        for name in names {
            if !self.index.contains_key(*name) {
                return Err(ScenarioError::MissingColumn {
                    path: self.path.to_path_buf(),
                    column: name.to_string(),
                });
            }
        }
        Ok(())
    }

    fn text<'r>(&self, row: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        self.index.get(column).and_then(|&i| row.get(i)).map(str::trim)
    }

    fn invalid(&self, line: u64, column: &str, reason: impl Into<String>) -> ScenarioError {
        ScenarioError::InvalidValue {
            path: self.path.to_path_buf(),
            line,
            column: column.to_string(),
            reason: reason.into(),
        }
    }

    fn number(&self, row: &csv::StringRecord, line: u64, column: &str) -> Result<f64, ScenarioError> {
        let cell = self.text(row, column).unwrap_or("");
        parse_number(cell).map_err(|r| self.invalid(line, column, r))
    }

    fn optional_number(&self, row: &csv::StringRecord, line: u64, column: &str) -> Result<Option<f64>, ScenarioError> {
        match self.text(row, column) {
            None | Some("") => Ok(None),
            Some(cell) => parse_number(cell).map(Some).map_err(|r| self.invalid(line, column, r)),
        }
    }
}

fn parse_number(cell: &str) -> Result<f64, String> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite number `{cell}`")),
        Err(_) => Err(format!("cannot parse `{cell}` as a number")),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, ScenarioError> {
    let file = File::open(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads `countries.csv`.
pub fn load_country_table(path: &Path) -> Result<CountryTable, ScenarioError> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let cols = Columns::new(path, &headers);
    let required: Vec<&str> = COUNTRY_HEADER
        .iter()
        .copied()
        .filter(|c| !OPTIONAL_COLUMNS.contains(c))
        .collect();
    cols.require(&required)?;

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let line = i as u64 + 2;
        let iso = cols.text(&row, "iso").unwrap_or("").to_string();
        if iso.is_empty() {
            return Err(cols.invalid(line, "iso", "empty iso code"));
        }
        if seen.insert(iso.clone(), line).is_some() {
            return Err(ScenarioError::DuplicateIso {
                path: path.to_path_buf(),
                line,
                iso,
            });
        }
        let region = cols.text(&row, "region").unwrap_or("").to_string();
        if region.is_empty() {
            return Err(cols.invalid(line, "region", "empty region id"));
        }
        let pop = cols.number(&row, line, "pop")?;
        if pop < 1.0 {
            return Err(cols.invalid(line, "pop", format!("population must be at least 1, got {pop}")));
        }
        let gdp = cols.number(&row, line, "gdp")?;
        if gdp <= 0.0 {
            return Err(cols.invalid(line, "gdp", format!("gdp must be positive, got {gdp}")));
        }
        let mut extensive = [0.0; 3];
        for (slot, column) in extensive.iter_mut().zip(OPTIONAL_COLUMNS) {
            let v = cols.optional_number(&row, line, column)?.unwrap_or(0.0);
            if v < 0.0 {
                return Err(cols.invalid(line, column, format!("must be non-negative, got {v}")));
            }
            *slot = v;
        }
        let urban = cols.number(&row, line, "urban_share")?;
        if !(0.0..=1.0).contains(&urban) {
            return Err(cols.invalid(line, "urban_share", format!("must lie in [0, 1], got {urban}")));
        }
        let pattern = cols.number(&row, line, "temp_pattern")?;
        if pattern <= 0.0 {
            return Err(cols.invalid(line, "temp_pattern", format!("must be positive, got {pattern}")));
        }
        records.push(CountryRecord {
            iso_code: iso,
            name: cols.text(&row, "name").unwrap_or("").to_string(),
            region_id: region,
            base_population: pop,
            base_gdp: gdp,
            base_temperature: cols.number(&row, line, "temp")?,
            coast_length: extensive[0],
            wetland_area: extensive[1],
            dryland_area: extensive[2],
            urban_share: urban,
            temperature_pattern: pattern,
        });
    }
    CountryTable::new(records)
}

/// Writes a table in the `countries.csv` schema.
pub fn write_country_table<W: Write>(table: &CountryTable, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUNTRY_HEADER)?;
    for r in table.records() {
        w.write_record([
            r.iso_code.clone(),
            r.name.clone(),
            r.region_id.clone(),
            r.base_population.to_string(),
            r.base_gdp.to_string(),
            r.base_temperature.to_string(),
            r.coast_length.to_string(),
            r.wetland_area.to_string(),
            r.dryland_area.to_string(),
            r.urban_share.to_string(),
            r.temperature_pattern.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Annual series starting at `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start_year: i32,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// # Panics
    /// Panics if `values` is empty.
    pub fn new(start_year: i32, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "time series must be non-empty");
        Self { start_year, values }
    }

    pub fn constant(start_year: i32, end_year: i32, value: f64) -> Self {
        Self::new(start_year, vec![value; (end_year - start_year + 1).max(1) as usize])
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        if year < self.start_year {
            return None;
        }
        self.values.get((year - self.start_year) as usize).copied()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationMode {
    /// Repeat the final value.
    ConstantLevel,
    /// Continue the mean growth factor of the final ten observations.
    ConstantRate,
}

/// Extends `series` to `target_year`. A series that already reaches the
/// target is returned unchanged.
pub fn extrapolate_series(
    series: &TimeSeries,
    target_year: i32,
    mode: ExtrapolationMode,
) -> Result<TimeSeries, ScenarioError> {
    if target_year < series.start_year {
        return Err(ScenarioError::TargetBeforeStart {
            target: target_year,
            start: series.start_year,
        });
    }
    let extra = target_year - series.end_year();
    if extra <= 0 {
        return Ok(series.clone());
    }
    let last = series.last();
    let factor = match mode {
        ExtrapolationMode::ConstantLevel => 1.0,
        ExtrapolationMode::ConstantRate => match mean_growth_factor(&series.values) {
            Some(f) => f,
            None => {
                warn!(
                    "constant-rate extrapolation undefined for series starting {} (zero or sign change); repeating final value",
                    series.start_year
                );
                1.0
            }
        },
    };
    let mut values = series.values.clone();
    values.extend((1..=extra).map(|k| last * factor.powi(k)));
    Ok(TimeSeries::new(series.start_year, values))
}

/// Geometric mean year-on-year factor over the trailing window.
fn mean_growth_factor(values: &[f64]) -> Option<f64> {
    let window = &values[values.len().saturating_sub(RATE_WINDOW)..];
    if window.len() < 2 {
        return Some(1.0);
    }
    let first = window[0];
    let last = window[window.len() - 1];
    if first == 0.0 || last == 0.0 || window.iter().any(|v| v.signum() != first.signum()) {
        return None;
    }
    let steps = (window.len() - 1) as f64;
    Some((last / first).powf(1.0 / steps))
}

/// Scenario variables, one `scenario_<stem>.csv` file each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Population,
    TfpGrowth,
    SavingsRate,
    IntensityRateCo2,
    IntensityRateCh4,
    IntensityRateN2o,
    IntensityRateSf6,
    IntensityRateSo2,
    Cfc11,
    Cfc12,
}

/// Per-country variables in storage order.
pub const COUNTRY_VARIABLES: [Variable; 8] = [
    Variable::Population,
    Variable::TfpGrowth,
    Variable::SavingsRate,
    Variable::IntensityRateCo2,
    Variable::IntensityRateCh4,
    Variable::IntensityRateN2o,
    Variable::IntensityRateSf6,
    Variable::IntensityRateSo2,
];

impl Variable {
    pub fn stem(self) -> &'static str {
        match self {
            Variable::Population => "population",
            Variable::TfpGrowth => "tfp_growth",
            Variable::SavingsRate => "savings_rate",
            Variable::IntensityRateCo2 => "intensity_rate_co2",
            Variable::IntensityRateCh4 => "intensity_rate_ch4",
            Variable::IntensityRateN2o => "intensity_rate_n2o",
            Variable::IntensityRateSf6 => "intensity_rate_sf6",
            Variable::IntensityRateSo2 => "intensity_rate_so2",
            Variable::Cfc11 => "cfc11",
            Variable::Cfc12 => "cfc12",
        }
    }

    pub fn file_name(self) -> String {
        format!("scenario_{}.csv", self.stem())
    }

    pub fn is_share(self) -> bool {
        matches!(self, Variable::SavingsRate)
    }

    pub fn default_mode(self) -> ExtrapolationMode {
        match self {
            Variable::SavingsRate | Variable::Cfc11 | Variable::Cfc12 => ExtrapolationMode::ConstantLevel,
            _ => ExtrapolationMode::ConstantRate,
        }
    }

    fn slot(self) -> usize {
        COUNTRY_VARIABLES
            .iter()
            .position(|v| *v == self)
            .expect("not a per-country variable")
    }
}

/// All per-country series for one country.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryScenario {
    pub iso: String,
    series: Vec<TimeSeries>,
}

impl CountryScenario {
    pub fn new(iso: impl Into<String>, series: Vec<TimeSeries>) -> Self {
        assert_eq!(series.len(), COUNTRY_VARIABLES.len());
        Self {
            iso: iso.into(),
            series,
        }
    }

    pub fn series(&self, var: Variable) -> &TimeSeries {
        &self.series[var.slot()]
    }

    pub fn series_mut(&mut self, var: Variable) -> &mut TimeSeries {
        &mut self.series[var.slot()]
    }
}

/// Exogenous trajectories for every country plus prescribed global series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub countries: Vec<CountryScenario>,
    pub cfc11: TimeSeries,
    pub cfc12: TimeSeries,
}

/// Per-variable extrapolation overrides keyed by file stem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    #[serde(default)]
    pub overrides: BTreeMap<String, ExtrapolationMode>,
}

impl ExtrapolationConfig {
    pub fn mode(&self, var: Variable) -> ExtrapolationMode {
        self.overrides
            .get(var.stem())
            .copied()
            .unwrap_or_else(|| var.default_mode())
    }
}

impl ScenarioSet {
    fn all_series(&self) -> impl Iterator<Item = (Variable, &str, &TimeSeries)> {
        self.countries
            .iter()
            .flat_map(|c| {
                COUNTRY_VARIABLES
                    .iter()
                    .map(move |v| (*v, c.iso.as_str(), c.series(*v)))
            })
            .chain([
                (Variable::Cfc11, WORLD_ISO, &self.cfc11),
                (Variable::Cfc12, WORLD_ISO, &self.cfc12),
            ])
    }

    /// True when some series stops short of `horizon`.
    pub fn needs_extrapolation(&self, horizon: i32) -> bool {
        self.all_series().any(|(_, _, s)| s.end_year() < horizon)
    }

    /// Every series must contain `year`.
    pub fn check_covers(&self, year: i32) -> Result<(), ScenarioError> {
        for (var, iso, s) in self.all_series() {
            if s.get(year).is_none() {
                return Err(ScenarioError::NotCovered {
                    variable: var.stem().to_string(),
                    iso: iso.to_string(),
                    start: s.start_year,
                    end: s.end_year(),
                    year,
                });
            }
        }
        Ok(())
    }

    /// Extends every series to `horizon`; share variables are clipped to [0, 1].
    pub fn extrapolated(&self, horizon: i32, config: &ExtrapolationConfig) -> Result<Self, ScenarioError> {
        let mut out = self.clone();
        for c in &mut out.countries {
            let iso = c.iso.clone();
            for var in COUNTRY_VARIABLES {
                let s = c.series_mut(var);
                let end = s.end_year();
                *s = extrapolate_series(s, horizon, config.mode(var))?;
                if var.is_share() {
                    clip_shares(s, end, var, &iso);
                }
            }
        }
        out.cfc11 = extrapolate_series(&out.cfc11, horizon, config.mode(Variable::Cfc11))?;
        out.cfc12 = extrapolate_series(&out.cfc12, horizon, config.mode(Variable::Cfc12))?;
        Ok(out)
    }
}

fn clip_shares(series: &mut TimeSeries, observed_end: i32, var: Variable, iso: &str) {
    for (i, v) in series.values.iter_mut().enumerate() {
        if !(0.0..=1.0).contains(v) {
            let year = series.start_year + i as i32;
            if year > observed_end {
                warn!("{iso}: extrapolated {} {v} in {year} clipped to [0, 1]", var.stem());
            }
            *v = v.clamp(0.0, 1.0);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Linearly interpolate between listed years instead of rejecting gaps,
    /// for scenarios published on 5- or 10-year steps.
    #[serde(default)]
    pub interpolate: bool,
}

type LongRows = BTreeMap<String, Vec<(i32, Option<f64>, u64)>>;

fn read_long(path: &Path) -> Result<LongRows, ScenarioError> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let cols = Columns::new(path, &headers);
    cols.require(&["iso", "year", "value"])?;
    let mut rows: LongRows = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let line = i as u64 + 2;
        let iso = cols.text(&row, "iso").unwrap_or("").to_string();
        let year_text = cols.text(&row, "year").unwrap_or("");
        let year: i32 = year_text
            .parse()
            .map_err(|_| cols.invalid(line, "year", format!("cannot parse `{year_text}` as a year")))?;
        let value = cols.optional_number(&row, line, "value")?;
        rows.entry(iso).or_default().push((year, value, line));
    }
    Ok(rows)
}

fn assemble(
    path: &Path,
    var: Variable,
    iso: &str,
    mut rows: Vec<(i32, Option<f64>, u64)>,
    opts: LoadOptions,
) -> Result<TimeSeries, ScenarioError> {
    let gap = |reason: String| ScenarioError::Gap {
        variable: var.stem().to_string(),
        iso: iso.to_string(),
        reason,
    };
    rows.sort_by_key(|r| r.0);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(ScenarioError::InvalidValue {
                path: path.to_path_buf(),
                line: pair[1].2,
                column: "year".into(),
                reason: format!("duplicate year {} for `{iso}`", pair[1].0),
            });
        }
    }
    let points: Vec<(i32, f64)> = rows.iter().filter_map(|(y, v, _)| v.map(|v| (*y, v))).collect();
    if points.is_empty() {
        return Err(gap("empty series".into()));
    }
    let start = points[0].0;
    let end = points[points.len() - 1].0;
    let mut values = Vec::with_capacity((end - start + 1) as usize);
    for pair in points.windows(2) {
        let ((y0, v0), (y1, v1)) = (pair[0], pair[1]);
        if y1 - y0 > 1 && !opts.interpolate {
            return Err(gap(format!("no value for years {}..{}", y0 + 1, y1)));
        }
        let span = (y1 - y0) as f64;
        for k in 0..(y1 - y0) {
            values.push(v0 + (v1 - v0) * k as f64 / span);
        }
    }
    values.push(points[points.len() - 1].1);
    if opts.interpolate && points.len() < rows.len() {
        warn!("{iso}: {} has empty cells; filled by linear interpolation", var.stem());
    }
    Ok(TimeSeries::new(start, values))
}

/// Reads every `scenario_<var>.csv` in `dir` for the countries of `table`.
pub fn load_scenario(dir: &Path, table: &CountryTable, opts: LoadOptions) -> Result<ScenarioSet, ScenarioError> {
    let mut per_var: Vec<LongRows> = Vec::new();
    for var in COUNTRY_VARIABLES {
        per_var.push(read_long(&dir.join(var.file_name()))?);
    }
    let mut countries = Vec::with_capacity(table.len());
    for record in table.records() {
        let mut series = Vec::with_capacity(COUNTRY_VARIABLES.len());
        for (var, rows) in COUNTRY_VARIABLES.iter().zip(per_var.iter_mut()) {
            let path = dir.join(var.file_name());
            let country_rows = rows
                .remove(&record.iso_code)
                .ok_or_else(|| ScenarioError::MissingCountry {
                    variable: var.stem().to_string(),
                    iso: record.iso_code.clone(),
                })?;
            let s = assemble(&path, *var, &record.iso_code, country_rows, opts)?;
            if *var == Variable::SavingsRate {
                if let Some(bad) = s.values.iter().find(|v| **v <= 0.0 || **v >= 1.0) {
                    return Err(ScenarioError::Gap {
                        variable: var.stem().to_string(),
                        iso: record.iso_code.clone(),
                        reason: format!("savings rate {bad} outside (0, 1)"),
                    });
                }
            }
            if *var == Variable::Population {
                if let Some(bad) = s.values.iter().find(|v| **v <= 0.0) {
                    return Err(ScenarioError::Gap {
                        variable: var.stem().to_string(),
                        iso: record.iso_code.clone(),
                        reason: format!("non-positive population {bad}"),
                    });
                }
            }
            series.push(s);
        }
        countries.push(CountryScenario::new(record.iso_code.clone(), series));
    }
    let global = |var: Variable| -> Result<TimeSeries, ScenarioError> {
        let path = dir.join(var.file_name());
        let mut rows = read_long(&path)?;
        let world = rows.remove(WORLD_ISO).ok_or_else(|| ScenarioError::MissingCountry {
            variable: var.stem().to_string(),
            iso: WORLD_ISO.to_string(),
        })?;
        assemble(&path, var, WORLD_ISO, world, opts)
    };
    let cfc11 = global(Variable::Cfc11)?;
    let cfc12 = global(Variable::Cfc12)?;
    Ok(ScenarioSet {
        countries,
        cfc11,
        cfc12,
    })
}

/// Collapses several countries into one pseudo-country: extensive
/// quantities are summed, the temperature pattern and base temperature are
/// GDP-weighted, and the urban share is population-weighted.
pub fn aggregate_records<'a, I>(records: I, iso: &str, region: &str) -> Option<CountryRecord>
where
    I: IntoIterator<Item = &'a CountryRecord>,
{
    let members: Vec<&CountryRecord> = records.into_iter().collect();
    if members.len() == 1 {
        let mut only = members[0].clone();
        only.iso_code = iso.to_string();
        only.name = iso.to_string();
        only.region_id = region.to_string();
        return Some(only);
    }
    if members.is_empty() {
        return None;
    }
    let gdp: f64 = members.iter().map(|r| r.base_gdp).sum();
    let pop: f64 = members.iter().map(|r| r.base_population).sum();
    let gdp_mean = |f: fn(&CountryRecord) -> f64| members.iter().map(|r| r.base_gdp * f(r)).sum::<f64>() / gdp;
    Some(CountryRecord {
        iso_code: iso.to_string(),
        name: iso.to_string(),
        region_id: region.to_string(),
        base_population: pop,
        base_gdp: gdp,
        base_temperature: gdp_mean(|r| r.base_temperature),
        coast_length: members.iter().map(|r| r.coast_length).sum(),
        wetland_area: members.iter().map(|r| r.wetland_area).sum(),
        dryland_area: members.iter().map(|r| r.dryland_area).sum(),
        urban_share: members.iter().map(|r| r.base_population * r.urban_share).sum::<f64>() / pop,
        temperature_pattern: gdp_mean(|r| r.temperature_pattern),
    })
}

const EMISSIONS_HEADER: [&str; 6] = ["iso", "co2_gtc", "ch4_mt", "n2o_mt", "sf6_kt", "so2_mts"];

/// Reads `emissions.csv` (base-year emissions per country), returned in table order.
pub fn load_base_emissions(path: &Path, table: &CountryTable) -> Result<Vec<EmissionsVector>, ScenarioError> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let cols = Columns::new(path, &headers);
    cols.require(&EMISSIONS_HEADER)?;
    let mut by_iso: HashMap<String, EmissionsVector> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let line = i as u64 + 2;
        let iso = cols.text(&row, "iso").unwrap_or("").to_string();
        let mut v = [0.0; 5];
        for (slot, column) in v.iter_mut().zip(&EMISSIONS_HEADER[1..]) {
            let x = cols.number(&row, line, column)?;
            if x < 0.0 {
                return Err(cols.invalid(line, column, format!("emissions must be non-negative, got {x}")));
            }
            *slot = x;
        }
        if by_iso.insert(iso.clone(), EmissionsVector::from_array(v)).is_some() {
            return Err(ScenarioError::DuplicateIso {
                path: path.to_path_buf(),
                line,
                iso,
            });
        }
    }
    table
        .records()
        .iter()
        .map(|r| {
            by_iso.remove(&r.iso_code).ok_or_else(|| ScenarioError::MissingCountry {
                variable: "emissions".into(),
                iso: r.iso_code.clone(),
            })
        })
        .collect()
}

/// Reads a whole file into memory, mapping the error to a [`ScenarioError`].
pub fn read_bytes(path: &Path) -> Result<Vec<u8>, ScenarioError> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageWarning {
    pub variable: String,
    /// Country sum divided by the reference total; `None` when the variable is unknown.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<CoverageWarning>,
}

/// Compares country sums with reference global totals and warns below 99% coverage.
///
/// Known variables: `population`, `gdp`, and the gases `co2`, `ch4`, `n2o`,
/// `sf6`, `so2` (the gases need `emissions`).
pub fn validate_world_totals(
    table: &CountryTable,
    emissions: Option<&[EmissionsVector]>,
    reference: &BTreeMap<String, f64>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (variable, &total) in reference {
        let sum = match variable.as_str() {
            "population" => Some(table.total_population()),
            "gdp" => Some(table.total_gdp()),
            gas => emissions
                .and_then(|e| crate::emissions::Gas::from_name(gas).map(|g| e.iter().map(|v| v.get(g)).sum::<f64>())),
        };
        match sum {
            Some(sum) => {
                let coverage = if total > 0.0 { sum / total } else { 1.0 };
                if coverage < COVERAGE_THRESHOLD {
                    warn!("country table covers {:.1}% of global {variable}", coverage * 100.0);
                    report.warnings.push(CoverageWarning {
                        variable: variable.clone(),
                        coverage: Some(coverage),
                    });
                }
            }
            None => {
                warn!("cannot check coverage of `{variable}`");
                report.warnings.push(CoverageWarning {
                    variable: variable.clone(),
                    coverage: None,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const TABLE: &str = "iso,name,region,pop,gdp,temp,coast_km,wetland_km2,dryland_km2,urban_share,temp_pattern\n\
        AAA,Aland,R1,1000000,2e10,10,100,5,1000,0.5,1.2\n\
        BBB,Bland,R2,2000000,1e10,25,,,,0.3,0.9\n";

    #[test]
    fn loads_table_and_defaults_missing_covariates() {
        let dir = tempfile::tempdir().unwrap();
        let t = load_country_table(&write(dir.path(), "c.csv", TABLE)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.regions(), vec!["R1", "R2"]);
        let b = t.get("BBB").unwrap();
        assert_eq!((b.coast_length, b.wetland_area, b.dryland_area), (0.0, 0.0, 0.0));
    }

    #[test]
    fn duplicate_iso_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{TABLE}AAA,Again,R1,5,5,5,0,0,0,0.1,1\n");
        let err = load_country_table(&write(dir.path(), "c.csv", &body)).unwrap_err();
        assert!(matches!(err, ScenarioError::DuplicateIso { line: 4, .. }), "{err}");
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let body = TABLE.replace("2e10", "-3");
        let err = load_country_table(&write(dir.path(), "c.csv", &body)).unwrap_err();
        match err {
            ScenarioError::InvalidValue { line, column, .. } => assert_eq!((line, column.as_str()), (2, "gdp")),
            e => panic!("{e}"),
        }
        let body = TABLE.replace(",0.9\n", ",abc\n");
        let err = load_country_table(&write(dir.path(), "c.csv", &body)).unwrap_err();
        assert!(err.to_string().contains("temp_pattern"));
        let body = TABLE.replace(",0.9\n", ",0\n");
        assert!(load_country_table(&write(dir.path(), "c.csv", &body)).is_err());
        let body = TABLE.replace("iso,name,region,pop", "iso,name,region,people");
        let err = load_country_table(&write(dir.path(), "c.csv", &body)).unwrap_err();
        assert!(matches!(err, ScenarioError::MissingColumn { .. }));
    }

    #[test]
    fn constant_series_extends_either_mode() {
        let s = TimeSeries::new(2000, vec![5.0; 3]);
        for mode in [ExtrapolationMode::ConstantLevel, ExtrapolationMode::ConstantRate] {
            let e = extrapolate_series(&s, 2005, mode).unwrap();
            assert_eq!(e.values, vec![5.0; 6]);
        }
    }

    #[test]
    fn constant_rate_continues_growth() {
        let values: Vec<f64> = (0..10).map(|i| 100.0 * 1.02f64.powi(i)).collect();
        let s = TimeSeries::new(2000, values);
        let e = extrapolate_series(&s, 2010, ExtrapolationMode::ConstantRate).unwrap();
        let expected = s.last() * 1.02;
        assert!((e.last() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn extending_to_own_end_is_identity() {
        let s = TimeSeries::new(2000, vec![1.0, 2.0]);
        assert_eq!(
            extrapolate_series(&s, 2001, ExtrapolationMode::ConstantRate).unwrap(),
            s
        );
        assert!(matches!(
            extrapolate_series(&s, 1999, ExtrapolationMode::ConstantLevel),
            Err(ScenarioError::TargetBeforeStart { .. })
        ));
    }

    #[test]
    fn sign_change_falls_back_to_level() {
        let s = TimeSeries::new(2000, vec![-1.0, 0.5, 1.0]);
        let e = extrapolate_series(&s, 2003, ExtrapolationMode::ConstantRate).unwrap();
        assert_eq!(e.values[3], 1.0);
    }

    #[test]
    fn coverage_warnings() {
        let dir = tempfile::tempdir().unwrap();
        let t = load_country_table(&write(dir.path(), "c.csv", TABLE)).unwrap();
        let em = vec![
            EmissionsVector::from_array([0.95, 0.0, 0.0, 0.0, 0.0]),
            EmissionsVector::default(),
        ];
        assert!(validate_world_totals(&t, Some(&em), &BTreeMap::new())
            .warnings
            .is_empty());
        let own: BTreeMap<_, _> = [("population".to_string(), 3e6), ("gdp".to_string(), 3e10)].into();
        assert!(validate_world_totals(&t, Some(&em), &own).warnings.is_empty());
        let co2: BTreeMap<_, _> = [("co2".to_string(), 1.0)].into();
        let r = validate_world_totals(&t, Some(&em), &co2);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.warnings[0].variable, "co2");
        assert!((r.warnings[0].coverage.unwrap() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn long_format_gaps_and_interpolation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            "iso,year,value\nAAA,2020,1\nAAA,2025,2\nAAA,2030,4\nBBB,2020,\n",
        );
        let mut rows = read_long(&p).unwrap();
        let a = rows.remove("AAA").unwrap();
        let err = assemble(&p, Variable::Population, "AAA", a.clone(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, ScenarioError::Gap { .. }));
        let s = assemble(&p, Variable::Population, "AAA", a, LoadOptions { interpolate: true }).unwrap();
        assert_eq!(s.values.len(), 11);
        assert!((s.get(2022).unwrap() - 1.4).abs() < 1e-12);
        assert!((s.get(2027).unwrap() - 2.8).abs() < 1e-12);
        let b = rows.remove("BBB").unwrap();
        let err = assemble(&p, Variable::Population, "BBB", b, LoadOptions { interpolate: true }).unwrap_err();
        assert!(err.to_string().contains("empty series"));
    }

    proptest! {
        #[test]
        fn exponential_series_reproduced(a in 0.1f64..1e6, g in -0.05f64..0.08, n in 2usize..40, extra in 1i32..200) {
            let f = 1.0 + g;
            let values: Vec<f64> = (0..n).map(|i| a * f.powi(i as i32)).collect();
            let s = TimeSeries::new(1990, values);
            let e = extrapolate_series(&s, s.end_year() + extra, ExtrapolationMode::ConstantRate).unwrap();
            for (i, v) in e.values.iter().enumerate() {
                let exact = a * f.powi(i as i32);
                prop_assert!((v - exact).abs() <= 1e-12 * exact.abs(),
                    "i={} v={} exact={}", i, v, exact);
            }
        }

        #[test]
        fn extrapolation_idempotent(values in prop::collection::vec(0.5f64..2.0, 1..30), target in 0i32..60) {
            let s = TimeSeries::new(2000, values);
            let once = extrapolate_series(&s, 2000 + target, ExtrapolationMode::ConstantRate).unwrap();
            let twice = extrapolate_series(&once, 2000 + target, ExtrapolationMode::ConstantRate).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn table_round_trip(pops in prop::collection::vec(1.0f64..1e10, 1..6), pattern in 0.1f64..3.0) {
            let records: Vec<CountryRecord> = pops.iter().enumerate().map(|(i, p)| CountryRecord {
                iso_code: format!("C{i:02}"),
                name: format!("Country {i}"),
                region_id: format!("R{}", i % 2),
                base_population: *p,
                base_gdp: p * 1234.5,
                base_temperature: 12.25 + i as f64,
                coast_length: 10.0 * i as f64,
                wetland_area: 0.1,
                dryland_area: 0.0,
                urban_share: 0.3,
                temperature_pattern: pattern,
            }).collect();
            let table = CountryTable::new(records).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            write_country_table(&table, File::create(&path).unwrap()).unwrap();
            prop_assert_eq!(load_country_table(&path).unwrap(), table);
        }
    }
}

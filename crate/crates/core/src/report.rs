//! CSV and JSON outputs. Every file has a fixed header and is
//! byte-deterministic for a given configuration and seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ComparisonRow, Covariates, SweepRow};
use crate::engine::{MonteCarloOutput, PreferenceParams, SccRequest, SccResult, Trajectory};
use crate::scenario::CountryTable;

pub type ReportResult = Result<(), csv::Error>;

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn nscc_file_name(year: i32) -> String {
    format!("nscc_{year}.csv")
}

pub fn montecarlo_file_name(year: i32) -> String {
    format!("montecarlo_{year}.csv")
}

/// Column name for one preference pair and estimate kind.
pub fn nscc_column(prefs: &PreferenceParams, kind: &str) -> String {
    format!("{}_{kind}", prefs.label())
}

/// One row per country; for each preference pair an uncertainty column
/// (when present) followed by a deterministic column.
pub fn write_nscc_table<W: Write>(out: W, table: &CountryTable, results: &[&SccResult]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    let with_uncertainty = results
        .iter()
        .any(|r| r.countries.iter().any(|c| c.uncertainty.is_some()));
    let mut header = vec!["iso".to_string(), "name".into(), "region".into()];
    for r in results {
        if with_uncertainty {
            header.push(nscc_column(&r.preferences, "uncertainty"));
        }
        header.push(nscc_column(&r.preferences, "deterministic"));
    }
    w.write_record(&header)?;
    for (i, rec) in table.records().iter().enumerate() {
        let mut row = vec![rec.iso_code.clone(), rec.name.clone(), rec.region_id.clone()];
        for r in results {
            let c = &r.countries[i];
            if with_uncertainty {
                row.push(c.uncertainty.as_ref().map(|u| num(u.mean)).unwrap_or_default());
            }
            row.push(num(c.nscc));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Global sums per evaluation year and preference pair.
pub fn write_global_sums<W: Write>(out: W, results: &[SccResult]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    let with_uncertainty = results.iter().any(|r| r.global_sum_uncertainty.is_some());
    let mut header = vec!["eval_year", "prtp", "rra"];
    if with_uncertainty {
        header.push("global_sum_uncertainty");
    }
    header.extend(["global_sum_deterministic", "single_region_scc", "clamp_count"]);
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.eval_year.to_string(), num(r.preferences.prtp), num(r.preferences.rra)];
        if with_uncertainty {
            row.push(r.global_sum_uncertainty.map(num).unwrap_or_default());
        }
        row.push(num(r.global_sum));
        row.push(r.single_region_scc.map(num).unwrap_or_default());
        row.push(r.clamp_count.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-draw national SCCs for one evaluation year, long format.
pub fn write_draws<W: Write>(
    out: W,
    mc: &MonteCarloOutput,
    req: &SccRequest,
    year: i32,
    table: &CountryTable,
) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["draw", "status", "ecs", "iso", "prtp", "rra", "nscc"])?;
    let combos = req.combos();
    for d in &mc.draws {
        match &d.outcome {
            Ok(m) => {
                for (j, (y, prefs)) in combos.iter().enumerate().filter(|(_, (y, _))| *y == year) {
                    debug_assert_eq!(*y, year);
                    for (c, rec) in table.records().iter().enumerate() {
                        w.write_record([
                            d.draw.to_string(),
                            "ok".into(),
                            num(d.ecs),
                            rec.iso_code.clone(),
                            num(prefs.prtp),
                            num(prefs.rra),
                            num(m[j][c]),
                        ])?;
                    }
                }
            }
            Err(_) => w.write_record([
                d.draw.to_string(),
                "failed".into(),
                num(d.ecs),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_states<W: Write>(out: W, traj: &Trajectory) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "year",
        "iso",
        "population",
        "capital",
        "gross_output",
        "net_output",
        "consumption",
        "investment",
        "per_capita_income",
        "temperature_anomaly",
        "market_damage",
        "nonmarket_damage",
        "co2_emissions_gtc",
    ])?;
    for k in 0..traj.years() {
        for (c, iso) in traj.isos.iter().enumerate() {
            let t = &traj.countries[c];
            let s = &t.states[k];
            let i = &t.impacts[k];
            w.write_record([
                s.year.to_string(),
                iso.clone(),
                num(s.population),
                num(s.capital),
                num(s.gross_output),
                num(s.net_output),
                num(s.consumption),
                num(s.investment),
                num(s.per_capita_income),
                num(t.temperature[k]),
                num(i.market),
                num(i.nonmarket),
                num(t.emissions[k].co2),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_climate<W: Write>(out: W, traj: &Trajectory) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "year",
        "co2_emissions_gtc",
        "co2_ppm",
        "ch4_ppb",
        "n2o_ppb",
        "forcing",
        "t_global",
        "sea_level",
    ])?;
    for (k, c) in traj.climate.iter().enumerate() {
        w.write_record([
            (traj.start_year + k as i32).to_string(),
            num(traj.global_emissions[k].co2),
            num(c.co2_ppm),
            num(c.ch4_ppb),
            num(c.n2o_ppb),
            num(c.forcing),
            num(c.t_global),
            num(c.sea_level),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["form", "formula", "global_sum"])?;
    for r in rows {
        w.write_record([r.form.clone(), r.formula.clone(), num(r.global_sum)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_covariates<W: Write>(out: W, rows: &[Covariates]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iso", "nscc", "population", "gdp", "gdp_per_capita", "temperature"])?;
    for r in rows {
        w.write_record([
            r.iso.clone(),
            num(r.nscc),
            num(r.population),
            num(r.gdp),
            num(r.gdp_per_capita),
            num(r.temperature),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_correlations<W: Write>(out: W, rows: &[(&str, Option<f64>)]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["covariate", "pearson"])?;
    for (name, r) in rows {
        w.write_record([name.to_string(), r.map(num).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> ReportResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epsilon",
        "global_sum",
        "below_average_contribution",
        "above_average_contribution",
        "below_average_share",
    ])?;
    for r in rows {
        w.write_record([
            num(r.epsilon),
            num(r.global_sum),
            num(r.below_average),
            num(r.above_average),
            num(r.below_average_share),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one column of an `nscc_<year>.csv` file as `(iso, value)` pairs.
pub fn read_nscc_column(path: &Path, column: &str) -> Result<Vec<(String, f64)>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let iso = pos("iso").ok_or_else(|| format!("{}: no iso column", path.display()))?;
    let col = pos(column).ok_or_else(|| format!("{}: no column `{column}`", path.display()))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        let v: f64 = row[col]
            .parse()
            .map_err(|_| format!("{}: cannot parse `{}`", path.display(), &row[col]))?;
        out.push((row[iso].to_string(), v));
    }
    Ok(out)
}

/// Header names of a CSV file.
pub fn read_headers(path: &Path) -> Result<Vec<String>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(r.headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(String::from)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub draws: usize,
    pub failed_draws: usize,
    pub workers: Option<usize>,
    pub inputs: Vec<InputDigest>,
    /// keyed by `<eval_year>_<preference label>`
    pub clamp_counts: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
    pub elapsed_seconds: f64,
}

impl Manifest {
    pub fn clamp_counts(results: &[SccResult]) -> BTreeMap<String, usize> {
        results
            .iter()
            .map(|r| (format!("{}_{}", r.eval_year, r.preferences.label()), r.clamp_count))
            .collect()
    }
}

//! Cross-run analyses: damage-function comparison, income-elasticity sweep,
//! and NSCC covariates.

use serde::Serialize;

use crate::engine::{deterministic_scc, EngineError, ModelSettings, PreferenceParams, SccRequest, World};
use crate::impacts::{DamageForm, DamageMode};
use crate::parallel::Execution;
use crate::scenario::CountryTable;
use crate::stats::pearson;

/// All forms compared by default: the twelve closed forms, the model
/// average, and the sectoral model.
pub fn default_comparison_forms() -> Vec<String> {
    DamageForm::ALL
        .iter()
        .map(|f| f.name().to_string())
        .chain(["bma".to_string(), "sectoral".to_string()])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub form: String,
    pub formula: String,
    pub global_sum: f64,
}

pub fn formula(mode: &DamageMode) -> String {
    match mode {
        DamageMode::Sectoral => "sixteen calibrated sector functions".into(),
        DamageMode::Aggregate(spec) => spec.form.formula().into(),
        DamageMode::Bma(bma) => format!("weighted mean of {} forms", bma.forms.len()),
    }
}

/// Global sum of national SCCs for each damage configuration, at one
/// evaluation year and preference pair.
pub fn compare_damage_functions(
    world: &World,
    modes: &[(String, DamageMode)],
    eval_year: i32,
    prefs: PreferenceParams,
    pulse_size: f64,
    exec: Execution,
) -> Result<Vec<ComparisonRow>, EngineError> {
    let req = single_request(world, eval_year, prefs, pulse_size);
    let sums = exec.map(modes.len(), |i| -> Result<f64, EngineError> {
        let w = world.with_damage(modes[i].1.clone())?;
        Ok(deterministic_scc(&w, &req, Execution::Sequential)?[0].global_sum)
    });
    modes
        .iter()
        .zip(sums)
        .map(|((name, mode), sum)| {
            Ok(ComparisonRow {
                form: name.clone(),
                formula: formula(mode),
                global_sum: sum?,
            })
        })
        .collect()
}

fn single_request(world: &World, eval_year: i32, prefs: PreferenceParams, pulse_size: f64) -> SccRequest {
    SccRequest {
        preferences: vec![prefs],
        discounting: Default::default(),
        pulse_size,
        eval_years: vec![eval_year.clamp(world.settings.start_year, world.settings.horizon)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub global_sum: f64,
    /// Σ NSCC of countries with base income below the world average
    pub below_average: f64,
    pub above_average: f64,
    pub below_average_share: f64,
}

/// Countries whose base-year income is below the world average.
pub fn below_average(table: &CountryTable) -> Vec<bool> {
    let w = table.world_income();
    table.records().iter().map(|r| r.base_income() < w).collect()
}

/// Reweights damages by `(y_n / y_world)^ε` for each `ε` and splits the
/// global sum between below- and above-average-income countries.
pub fn elasticity_sweep(
    world: &World,
    req: &SccRequest,
    epsilons: &[f64],
    exec: Execution,
) -> Result<Vec<SweepRow>, EngineError> {
    let poor = below_average(&world.table);
    let rows = exec.map(epsilons.len(), |i| -> Result<SweepRow, EngineError> {
        let w = world.with_settings(ModelSettings {
            income_elasticity: epsilons[i],
            ..world.settings.clone()
        })?;
        let r = &deterministic_scc(&w, req, Execution::Sequential)?[0];
        let mut below = 0.0;
        let mut above = 0.0;
        for (c, is_poor) in r.countries.iter().zip(&poor) {
            if *is_poor {
                below += c.nscc;
            } else {
                above += c.nscc;
            }
        }
        Ok(SweepRow {
            epsilon: epsilons[i],
            global_sum: r.global_sum,
            below_average: below,
            above_average: above,
            below_average_share: below / r.global_sum,
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Covariates {
    pub iso: String,
    pub nscc: f64,
    pub population: f64,
    pub gdp: f64,
    pub gdp_per_capita: f64,
    pub temperature: f64,
}

pub fn covariates(table: &CountryTable, nscc: &[(String, f64)]) -> Result<Vec<Covariates>, String> {
    if nscc.is_empty() {
        return Err("no countries in the results".into());
    }
    nscc.iter()
        .map(|(iso, v)| {
            let r = table
                .get(iso)
                .ok_or_else(|| format!("{iso} is not in the country table"))?;
            Ok(Covariates {
                iso: iso.clone(),
                nscc: *v,
                population: r.base_population,
                gdp: r.base_gdp,
                gdp_per_capita: r.base_income(),
                temperature: r.base_temperature,
            })
        })
        .collect()
}

/// Pearson correlation of NSCC with each covariate; `None` when undefined.
pub fn correlations(rows: &[Covariates]) -> Vec<(&'static str, Option<f64>)> {
    let nscc: Vec<f64> = rows.iter().map(|r| r.nscc).collect();
    let col = |f: fn(&Covariates) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    vec![
        ("population", pearson(&nscc, &col(|r| r.population))),
        ("gdp", pearson(&nscc, &col(|r| r.gdp))),
        ("gdp_per_capita", pearson(&nscc, &col(|r| r.gdp_per_capita))),
        ("temperature", pearson(&nscc, &col(|r| r.temperature))),
    ]
}

/// `(late - early) / |early|`.
pub fn relative_change(early: f64, late: f64) -> f64 {
    (late - early) / early.abs()
}

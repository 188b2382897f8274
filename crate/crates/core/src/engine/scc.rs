//! Discounting, national social costs of carbon and their aggregates.

use serde::{Deserialize, Serialize};

use super::run::{run_world, DrawParams, Trajectory};
use super::world::World;
use super::EngineError;
use crate::emissions::PulseSpec;
use crate::parallel::Execution;
use crate::stats::stable_sum;

/// Bound on a national SCC, US$/tCO2.
pub const NSCC_BOUND: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceParams {
    /// pure rate of time preference, 1/yr
    pub prtp: f64,
    /// relative risk aversion
    pub rra: f64,
}

impl PreferenceParams {
    pub fn new(prtp: f64, rra: f64) -> Self {
        Self { prtp, rra }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.prtp.is_finite() && self.prtp >= 0.0 && self.rra.is_finite() && self.rra >= 0.0) {
            return Err(EngineError::InvalidPreferences(format!(
                "prtp {} and rra {} must be finite and non-negative",
                self.prtp, self.rra
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("prtp{}_rra{}", self.prtp, self.rra)
    }
}

/// Whose consumption path drives the growth term of the discount factor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    /// each country's own per-capita consumption
    #[default]
    National,
    /// world per-capita consumption for every country
    Global,
}

/// `DF(t) = (1+ρ)^-(t-t0) · (c(t0)/c(t))^η` for a consumption path that
/// starts in the base year `t0`.
pub fn discount_factors(
    consumption: &[f64],
    base_year: i32,
    prefs: &PreferenceParams,
) -> Result<Vec<f64>, EngineError> {
    prefs.validate()?;
    if let Some((j, c)) = consumption.iter().enumerate().find(|(_, c)| !(**c > 0.0)) {
        return Err(EngineError::NonPositiveConsumption {
            year: base_year + j as i32,
            value: *c,
        });
    }
    let Some(&c0) = consumption.first() else {
        return Ok(Vec::new());
    };
    Ok(consumption
        .iter()
        .enumerate()
        .map(|(j, c)| (1.0 + prefs.prtp).powi(-(j as i32)) * (c0 / c).powf(prefs.rra))
        .collect())
}

/// `Σ DF · ΔD / tonnes`.
pub fn discounted_marginal_damage(differences: &[f64], factors: &[f64], tonnes_co2: f64) -> f64 {
    differences.iter().zip(factors).map(|(d, f)| d * f).sum::<f64>() / tonnes_co2
}

fn check_pair(baseline: &Trajectory, pulsed: &Trajectory) -> Result<(), EngineError> {
    if baseline.fingerprint != pulsed.fingerprint
        || baseline.start_year != pulsed.start_year
        || baseline.years() != pulsed.years()
        || baseline.isos != pulsed.isos
    {
        return Err(EngineError::MismatchedRuns(
            "baseline and pulse runs come from different inputs".into(),
        ));
    }
    Ok(())
}

/// Damage differences of one country from `eval_year` to the horizon.
pub fn marginal_damages(
    baseline: &Trajectory,
    pulsed: &Trajectory,
    country: usize,
    eval_year: i32,
) -> Result<Vec<f64>, EngineError> {
    check_pair(baseline, pulsed)?;
    let k0 = baseline
        .index(eval_year)
        .ok_or_else(|| EngineError::MismatchedRuns(format!("evaluation year {eval_year} outside the run")))?;
    Ok(pulsed
        .damages(country)
        .zip(baseline.damages(country))
        .skip(k0)
        .map(|(p, b)| p - b)
        .collect())
}

/// Consumption path (from `eval_year`) used to discount a country's damages.
pub fn discount_path(baseline: &Trajectory, country: usize, eval_year: i32, mode: DiscountMode) -> Vec<f64> {
    let k0 = baseline.index(eval_year).unwrap_or(0);
    let path = match mode {
        DiscountMode::National => baseline.per_capita_consumption(country),
        DiscountMode::Global => baseline.world_per_capita_consumption(),
    };
    path[k0..].to_vec()
}

/// National SCC in US$/tCO2, unclamped. Baseline consumption discounts both runs.
pub fn nscc(
    baseline: &Trajectory,
    pulsed: &Trajectory,
    country: usize,
    prefs: &PreferenceParams,
    mode: DiscountMode,
    pulse: &PulseSpec,
    eval_year: i32,
) -> Result<f64, EngineError> {
    pulse.validate()?;
    let diffs = marginal_damages(baseline, pulsed, country, eval_year)?;
    let df = discount_factors(&discount_path(baseline, country, eval_year, mode), eval_year, prefs)?;
    Ok(discounted_marginal_damage(&diffs, &df, pulse.tonnes_co2()))
}

/// Limits a national SCC to ±200; the flag reports whether it bound.
pub fn clamp_nscc(x: f64) -> (f64, bool) {
    let c = x.clamp(-NSCC_BOUND, NSCC_BOUND);
    (c, c != x)
}

/// Bottom-up global SCC; independent of country order.
pub fn sum_nscc(values: &[f64]) -> f64 {
    stable_sum(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SccMode {
    Deterministic,
    Uncertainty,
}

/// What to compute: one pulse per evaluation year, every preference pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccRequest {
    pub preferences: Vec<PreferenceParams>,
    #[serde(default)]
    pub discounting: DiscountMode,
    /// GtC
    pub pulse_size: f64,
    pub eval_years: Vec<i32>,
}

impl SccRequest {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.preferences.is_empty() || self.eval_years.is_empty() {
            return Err(EngineError::InvalidPreferences(
                "need at least one preference pair and evaluation year".into(),
            ));
        }
        self.preferences.iter().try_for_each(PreferenceParams::validate)?;
        PulseSpec::co2(self.eval_years[0], self.pulse_size).validate()?;
        Ok(())
    }

    pub fn pulse(&self, eval_year: i32) -> PulseSpec {
        PulseSpec::co2(eval_year, self.pulse_size)
    }

    /// `(eval_year, preferences)` combinations, year-major.
    pub fn combos(&self) -> Vec<(i32, PreferenceParams)> {
        self.eval_years
            .iter()
            .flat_map(|y| self.preferences.iter().map(move |p| (*y, *p)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub mean: f64,
    pub sd: f64,
    pub p5: f64,
    pub p95: f64,
    pub clamp_count: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryScc {
    pub iso: String,
    /// deterministic, clamped, US$/tCO2
    pub nscc: f64,
    /// deterministic before clamping
    pub unclamped: f64,
    pub uncertainty: Option<DrawStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccResult {
    pub eval_year: i32,
    pub preferences: PreferenceParams,
    pub mode: SccMode,
    pub pulse: PulseSpec,
    pub seed: Option<u64>,
    pub draws: usize,
    pub failed_draws: usize,
    pub countries: Vec<CountryScc>,
    /// Σ deterministic national SCCs
    pub global_sum: f64,
    /// Σ Monte Carlo mean national SCCs
    pub global_sum_uncertainty: Option<f64>,
    /// SCC of the collapsed single-region world
    pub single_region_scc: Option<f64>,
    /// clamped values: deterministic countries, or per-draw values under uncertainty
    pub clamp_count: usize,
}

impl SccResult {
    pub fn nscc_values(&self) -> Vec<f64> {
        self.countries.iter().map(|c| c.nscc).collect()
    }

    pub fn mean_values(&self) -> Option<Vec<f64>> {
        self.countries
            .iter()
            .map(|c| c.uncertainty.as_ref().map(|u| u.mean))
            .collect()
    }
}

/// Baseline plus one pulse run per evaluation year.
pub(crate) fn run_pairs(
    world: &World,
    draw: &DrawParams,
    req: &SccRequest,
) -> Result<(Trajectory, Vec<Trajectory>), EngineError> {
    let baseline = run_world(world, draw, None)?;
    let pulsed = req
        .eval_years
        .iter()
        .map(|y| run_world(world, draw, Some(&req.pulse(*y))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((baseline, pulsed))
}

/// Unclamped national SCCs, `[combo][country]` in `req.combos()` order.
pub(crate) fn nscc_matrix(
    baseline: &Trajectory,
    pulsed: &[Trajectory],
    req: &SccRequest,
) -> Result<Vec<Vec<f64>>, EngineError> {
    let n = baseline.countries.len();
    let mut out = Vec::with_capacity(req.eval_years.len() * req.preferences.len());
    for (year, run) in req.eval_years.iter().zip(pulsed) {
        let pulse = req.pulse(*year);
        let diffs: Vec<Vec<f64>> = (0..n)
            .map(|c| marginal_damages(baseline, run, c, *year))
            .collect::<Result<_, _>>()?;
        let paths: Vec<Vec<f64>> = (0..n)
            .map(|c| discount_path(baseline, c, *year, req.discounting))
            .collect();
        for prefs in &req.preferences {
            let row = (0..n)
                .map(|c| {
                    let df = discount_factors(&paths[c], *year, prefs)?;
                    Ok(discounted_marginal_damage(&diffs[c], &df, pulse.tonnes_co2()))
                })
                .collect::<Result<Vec<f64>, EngineError>>()?;
            out.push(row);
        }
    }
    Ok(out)
}

/// SCC of the single-region version of `world`, per `req.combos()`.
pub fn global_scc_single_region(world: &World, req: &SccRequest) -> Result<Vec<f64>, EngineError> {
    req.validate()?;
    let single = world.collapse()?;
    let (b, p) = run_pairs(&single, &DrawParams::central(&single), req)?;
    Ok(nscc_matrix(&b, &p, req)?.into_iter().map(|row| row[0]).collect())
}

pub(crate) fn assemble_deterministic(
    world: &World,
    req: &SccRequest,
    matrix: &[Vec<f64>],
    single: Option<&[f64]>,
) -> Vec<SccResult> {
    req.combos()
        .into_iter()
        .enumerate()
        .map(|(j, (year, prefs))| {
            let mut clamp_count = 0;
            let countries: Vec<CountryScc> = world
                .table
                .records()
                .iter()
                .zip(&matrix[j])
                .map(|(r, raw)| {
                    let (v, hit) = clamp_nscc(*raw);
                    clamp_count += hit as usize;
                    CountryScc {
                        iso: r.iso_code.clone(),
                        nscc: v,
                        unclamped: *raw,
                        uncertainty: None,
                    }
                })
                .collect();
            let values: Vec<f64> = countries.iter().map(|c| c.nscc).collect();
            SccResult {
                eval_year: year,
                preferences: prefs,
                mode: SccMode::Deterministic,
                pulse: req.pulse(year),
                seed: None,
                draws: 0,
                failed_draws: 0,
                global_sum: sum_nscc(&values),
                countries,
                global_sum_uncertainty: None,
                single_region_scc: single.map(|s| s[j]),
                clamp_count,
            }
        })
        .collect()
}

/// National SCCs with central parameters, plus the single-region SCC, for
/// every combination in `req`.
pub fn deterministic_scc(world: &World, req: &SccRequest, exec: Execution) -> Result<Vec<SccResult>, EngineError> {
    req.validate()?;
    let jobs = exec.map(2, |job| match job {
        0 => {
            let (b, p) = run_pairs(world, &DrawParams::central(world), req)?;
            nscc_matrix(&b, &p, req)
        }
        _ => global_scc_single_region(world, req).map(|v| vec![v]),
    });
    let mut jobs = jobs.into_iter();
    let matrix = jobs.next().expect("two jobs")?;
    let single = jobs.next().expect("two jobs")?.remove(0);
    Ok(assemble_deterministic(world, req, &matrix, Some(&single)))
}

#[cfg(test)]
mod tests {
    use super::super::world::fixtures::*;
    use super::*;
    use crate::impacts::{DamageForm, DamageFunctionSpec, DamageMode};
    use proptest::prelude::*;

    #[test]
    fn discount_examples() {
        let flat = [5.0; 20];
        let df = discount_factors(&flat, 2025, &PreferenceParams::new(0.03, 1.7)).unwrap();
        for (j, d) in df.iter().enumerate() {
            assert!((d - 1.03f64.powi(-(j as i32))).abs() < 1e-15);
        }
        let df = discount_factors(&[1.0, 2.0], 2025, &PreferenceParams::new(0.0, 1.0)).unwrap();
        assert_eq!(df[1], 0.5);
        let growing: Vec<f64> = (0..11).map(|j| 1.02f64.powi(j)).collect();
        let df = discount_factors(&growing, 2025, &PreferenceParams::new(0.03, 2.0)).unwrap();
        let expected = 1.03f64.powi(-10) * 1.02f64.powi(-20);
        assert!((df[10] - expected).abs() < 1e-14);
        assert!((df[10] - 0.5007).abs() < 1e-4);
        assert!(matches!(
            discount_factors(&[1.0, 0.0], 2025, &PreferenceParams::new(0.03, 1.0)),
            Err(EngineError::NonPositiveConsumption { year: 2026, .. })
        ));
    }

    #[test]
    fn nscc_examples() {
        assert_eq!(discounted_marginal_damage(&[100.0], &[0.9], 1.0), 90.0);
        assert_eq!(discounted_marginal_damage(&[0.0, 0.0], &[1.0, 0.5], 1.0), 0.0);
        let a = discounted_marginal_damage(&[3.0, 5.0], &[1.0, 0.5], 2.0);
        assert_eq!(discounted_marginal_damage(&[6.0, 10.0], &[1.0, 0.5], 2.0), 2.0 * a);
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_nscc(250.0), (200.0, true));
        assert_eq!(clamp_nscc(-300.0), (-200.0, true));
        assert_eq!(clamp_nscc(50.0), (50.0, false));
    }

    #[test]
    fn sum_examples() {
        assert_eq!(sum_nscc(&[0.0; 5]), 0.0);
        assert!((sum_nscc(&[3.9, 1.8, 1.2]) - 6.9).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_give_zero() {
        let w = aggregate_world(DamageMode::Aggregate(DamageFunctionSpec::default_for(
            DamageForm::Nordhaus,
        )));
        let b = run_world(&w, &DrawParams::central(&w), None).unwrap();
        let v = nscc(
            &b,
            &b,
            0,
            &PreferenceParams::new(0.03, 1.0),
            DiscountMode::National,
            &PulseSpec::co2(2025, 0.001),
            2025,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn mismatched_runs_rejected() {
        let w = aggregate_world(DamageMode::Aggregate(DamageFunctionSpec::default_for(
            DamageForm::Nordhaus,
        )));
        let other = w
            .with_damage(DamageMode::Aggregate(DamageFunctionSpec::default_for(DamageForm::Hope)))
            .unwrap();
        let a = run_world(&w, &DrawParams::central(&w), None).unwrap();
        let b = run_world(&other, &DrawParams::central(&other), Some(&PulseSpec::co2(2025, 0.001))).unwrap();
        let r = nscc(
            &a,
            &b,
            0,
            &PreferenceParams::new(0.03, 1.0),
            DiscountMode::National,
            &PulseSpec::co2(2025, 0.001),
            2025,
        );
        assert!(matches!(r, Err(EngineError::MismatchedRuns(_))));
    }

    #[test]
    fn one_country_world_matches_single_region() {
        let t = crate::scenario::CountryTable::new(vec![table().records()[0].clone()]).unwrap();
        let s = scenario(&t, 2019, 2150, 0.01);
        let settings = crate::engine::ModelSettings {
            horizon: 2150,
            damage: DamageMode::Aggregate(DamageFunctionSpec::default_for(DamageForm::Nordhaus)),
            ..Default::default()
        };
        let w = World::new(t.clone(), &s, emissions(&t), None, settings).unwrap();
        let req = SccRequest {
            preferences: vec![PreferenceParams::new(0.03, 1.0)],
            discounting: DiscountMode::National,
            pulse_size: 0.001,
            eval_years: vec![2025],
        };
        let r = &deterministic_scc(&w, &req, Execution::Sequential).unwrap()[0];
        assert_eq!(r.single_region_scc, Some(r.global_sum));
    }

    proptest! {
        #[test]
        fn sum_is_permutation_invariant(mut xs in proptest::collection::vec(-200.0f64..200.0, 1..12), seed in 0u64..1000) {
            let before = sum_nscc(&xs);
            let n = xs.len();
            xs.rotate_left((seed as usize) % n);
            xs.reverse();
            prop_assert_eq!(sum_nscc(&xs), before);
        }

        #[test]
        fn clamp_bound_holds(x in -1e6f64..1e6) {
            prop_assert!(clamp_nscc(x).0.abs() <= NSCC_BOUND);
        }
    }
}

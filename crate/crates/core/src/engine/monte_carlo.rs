//! Seeded Monte Carlo over climate sensitivity, impact scales and
//! population paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::run::DrawParams;
use super::scc::{
    assemble_deterministic, clamp_nscc, global_scc_single_region, nscc_matrix, run_pairs, sum_nscc, DrawStats, SccMode,
    SccRequest, SccResult,
};
use super::world::World;
use super::EngineError;
use crate::impacts::{ImpactMultipliers, N_SECTORS};
use crate::parallel::Execution;
use crate::stats::{mean, percentile, sample_sd};

/// Largest share of failed draws tolerated.
pub const MAX_FAILED_SHARE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalSpec {
    pub median: f64,
    /// sd of the log
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec {
    pub persistence: f64,
    /// sd of the annual growth-rate innovation
    pub innovation_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UncertaintyConfig {
    pub draws: usize,
    pub seed: u64,
    pub ecs: LognormalSpec,
    /// sd of the per-sector multiplier, normal around 1 truncated to [0, 2]
    pub sector_sd: f64,
    /// sd of the aggregate damage multiplier, same truncation
    pub aggregate_sd: f64,
    pub population: Ar1Spec,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            seed: 20190101,
            ecs: LognormalSpec {
                median: 3.0,
                sigma: 0.25,
            },
            sector_sd: 0.2,
            aggregate_sd: 0.2,
            population: Ar1Spec {
                persistence: 0.9,
                innovation_sd: 0.001,
            },
        }
    }
}

impl UncertaintyConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidUncertainty(msg));
        if self.draws == 0 {
            return bad("draw count must be at least 1".into());
        }
        if !(self.ecs.median > 0.0 && self.ecs.median.is_finite()) {
            return bad(format!("ecs median {}", self.ecs.median));
        }
        for (name, sd, max) in [
            ("ecs sigma", self.ecs.sigma, 2.0),
            ("sector_sd", self.sector_sd, 1.0),
            ("aggregate_sd", self.aggregate_sd, 1.0),
            ("population innovation_sd", self.population.innovation_sd, 0.1),
        ] {
            if !(0.0..=max).contains(&sd) {
                return bad(format!("{name} {sd} outside [0, {max}]"));
            }
        }
        if !(self.population.persistence.abs() < 1.0) {
            return bad(format!(
                "population persistence {} must lie in (-1, 1)",
                self.population.persistence
            ));
        }
        Ok(())
    }

    /// Parameters at the distribution medians.
    pub fn median_draw(&self, world: &World) -> DrawParams {
        DrawParams {
            ecs: self.ecs.median,
            ..DrawParams::central(world)
        }
    }

    /// Draw `d` from its own substream of the master seed. Sampling order:
    /// ecs, then per country the sector multipliers, the aggregate
    /// multiplier and the population path.
    pub fn sample(&self, world: &World, d: usize) -> DrawParams {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(d as u64);
        let z: f64 = rng.sample(StandardNormal);
        let ecs = self.ecs.median * (self.ecs.sigma * z).exp();
        let years = world.settings.years();
        let mut multipliers = Vec::with_capacity(world.len());
        let mut population_shock = Vec::with_capacity(world.len());
        for _ in 0..world.len() {
            let mut sectors = [1.0; N_SECTORS];
            for s in &mut sectors {
                *s = truncated_unit_normal(&mut rng, self.sector_sd);
            }
            let aggregate = truncated_unit_normal(&mut rng, self.aggregate_sd);
            multipliers.push(ImpactMultipliers { sectors, aggregate });
            population_shock.push(ar1_path(&mut rng, &self.population, years));
        }
        DrawParams {
            ecs,
            multipliers,
            population_shock,
        }
    }
}

/// Normal around 1 restricted to [0, 2]; exactly 1 when `sd` is 0.
fn truncated_unit_normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 1.0;
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = 1.0 + sd * z;
        if (0.0..=2.0).contains(&x) {
            return x;
        }
    }
}

/// `exp(Σ u)` with `u_k = φ u_{k-1} + σ ε_k`, starting at 1 in the first year.
fn ar1_path(rng: &mut ChaCha8Rng, spec: &Ar1Spec, years: usize) -> Vec<f64> {
    let mut out = vec![1.0; years];
    if spec.innovation_sd == 0.0 {
        return out;
    }
    let mut u = 0.0;
    let mut level = 0.0;
    for v in out.iter_mut().skip(1) {
        let e: f64 = rng.sample(StandardNormal);
        u = spec.persistence * u + spec.innovation_sd * e;
        level += u;
        *v = level.exp();
    }
    out
}

/// Outcome of one draw: clamped national SCCs `[combo][country]`, or why it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawRecord {
    pub draw: usize,
    pub ecs: f64,
    pub outcome: Result<Vec<Vec<f64>>, String>,
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    pub results: Vec<SccResult>,
    pub draws: Vec<DrawRecord>,
}

fn evaluate_draw(world: &World, unc: &UncertaintyConfig, req: &SccRequest, d: usize) -> DrawRecord {
    let params = unc.sample(world, d);
    let outcome = run_pairs(world, &params, req)
        .and_then(|(b, p)| nscc_matrix(&b, &p, req))
        .map_err(|e| e.to_string());
    let mut clamped = 0;
    let outcome = outcome.map(|m| {
        m.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| {
                        let (v, hit) = clamp_nscc(x);
                        clamped += hit as usize;
                        v
                    })
                    .collect()
            })
            .collect()
    });
    DrawRecord {
        draw: d,
        ecs: params.ecs,
        outcome,
        clamped,
    }
}

/// Runs every draw (baseline plus pulses), clamps each national SCC per
/// draw, and summarises the draws next to a deterministic companion run at
/// the distribution medians. Results are identical for any `exec`.
pub fn monte_carlo_scc(
    world: &World,
    unc: &UncertaintyConfig,
    req: &SccRequest,
    exec: Execution,
) -> Result<MonteCarloOutput, EngineError> {
    unc.validate()?;
    req.validate()?;
    let median = unc.median_draw(world);
    let (b, p) = run_pairs(world, &median, req)?;
    let central = nscc_matrix(&b, &p, req)?;
    let single = {
        let w = world.with_settings(crate::engine::ModelSettings {
            climate: crate::climate::ClimateParams {
                ecs: unc.ecs.median,
                ..world.settings.climate
            },
            ..world.settings.clone()
        })?;
        global_scc_single_region(&w, req)?
    };
    let mut results = assemble_deterministic(world, req, &central, Some(&single));

    let draws = exec.map(unc.draws, |d| evaluate_draw(world, unc, req, d));
    let failed = draws.iter().filter(|r| r.outcome.is_err()).count();
    for r in &draws {
        if let Err(e) = &r.outcome {
            log::warn!("draw {} failed: {e}", r.draw);
        }
    }
    if failed as f64 > MAX_FAILED_SHARE * unc.draws as f64 {
        return Err(EngineError::TooManyFailures {
            failed,
            draws: unc.draws,
        });
    }
    let ok: Vec<&Vec<Vec<f64>>> = draws.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    for (j, result) in results.iter_mut().enumerate() {
        result.mode = SccMode::Uncertainty;
        result.seed = Some(unc.seed);
        result.draws = unc.draws;
        result.failed_draws = failed;
        result.clamp_count = 0;
        let mut means = Vec::with_capacity(world.len());
        for (c, country) in result.countries.iter_mut().enumerate() {
            let xs: Vec<f64> = ok.iter().map(|m| m[j][c]).collect();
            let clamp_count = xs.iter().filter(|x| x.abs() == super::scc::NSCC_BOUND).count();
            result.clamp_count += clamp_count;
            let stats = DrawStats {
                mean: mean(&xs),
                sd: sample_sd(&xs),
                p5: percentile(&xs, 0.05),
                p95: percentile(&xs, 0.95),
                clamp_count,
                draws: xs.len(),
            };
            means.push(stats.mean);
            country.uncertainty = Some(stats);
        }
        result.global_sum_uncertainty = Some(sum_nscc(&means));
    }
    Ok(MonteCarloOutput { results, draws })
}

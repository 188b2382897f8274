//! The yearly simulation loop.

use std::hash::{DefaultHasher, Hash, Hasher};

use super::world::World;
use super::EngineError;
use crate::climate::{national_temperature, step_climate, ClimateParams, ClimateState};
use crate::economy::{apply_floors, step_economy, CountryState};
use crate::emissions::{compute_emissions, EmissionsError, EmissionsVector, Intensity, PulseSpec};
use crate::impacts::{apply_income_elasticity, Drivers, Exposure, ImpactBreakdown, ImpactMultipliers};

/// Parameters that vary between Monte Carlo draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawParams {
    pub ecs: f64,
    /// one entry per country
    pub multipliers: Vec<ImpactMultipliers>,
    /// per country, per year multiplier on population; empty for none
    pub population_shock: Vec<Vec<f64>>,
}

impl DrawParams {
    /// The world's own settings with no perturbation.
    pub fn central(world: &World) -> Self {
        Self {
            ecs: world.settings.climate.ecs,
            multipliers: vec![ImpactMultipliers::default(); world.len()],
            population_shock: Vec::new(),
        }
    }

    fn shock(&self, country: usize, k: usize) -> f64 {
        self.population_shock.get(country).map_or(1.0, |s| s[k])
    }

    fn fingerprint(&self, world: &World) -> u64 {
        let mut h = DefaultHasher::new();
        world.id().hash(&mut h);
        self.ecs.to_bits().hash(&mut h);
        for m in &self.multipliers {
            m.sectors
                .iter()
                .chain([&m.aggregate])
                .for_each(|v| v.to_bits().hash(&mut h));
        }
        self.population_shock
            .iter()
            .flatten()
            .for_each(|v| v.to_bits().hash(&mut h));
        h.finish()
    }
}

/// Year-by-year record of one country.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryTrajectory {
    pub states: Vec<CountryState>,
    /// national anomaly, °C
    pub temperature: Vec<f64>,
    pub emissions: Vec<EmissionsVector>,
    pub impacts: Vec<ImpactBreakdown>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start_year: i32,
    pub isos: Vec<String>,
    pub climate: Vec<ClimateState>,
    pub global_emissions: Vec<EmissionsVector>,
    pub countries: Vec<CountryTrajectory>,
    /// country-years in which a floor was applied
    pub floor_events: usize,
    pub pulse: Option<PulseSpec>,
    /// equal for runs that differ only in the pulse
    pub fingerprint: u64,
}

impl Trajectory {
    pub fn years(&self) -> usize {
        self.climate.len()
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.years() as i32 - 1
    }

    pub fn index(&self, year: i32) -> Option<usize> {
        (year >= self.start_year && year <= self.end_year()).then(|| (year - self.start_year) as usize)
    }

    /// Total (market plus non-market) damages of a country per year, US$.
    pub fn damages(&self, country: usize) -> impl Iterator<Item = f64> + '_ {
        self.countries[country].impacts.iter().map(|i| i.total())
    }

    pub fn per_capita_consumption(&self, country: usize) -> Vec<f64> {
        self.countries[country]
            .states
            .iter()
            .map(|s| s.per_capita_consumption())
            .collect()
    }

    /// World consumption over world population, per year.
    pub fn world_per_capita_consumption(&self) -> Vec<f64> {
        (0..self.years())
            .map(|k| {
                let (c, p) = self.countries.iter().fold((0.0, 0.0), |(c, p), t| {
                    (c + t.states[k].consumption, p + t.states[k].population)
                });
                c / p
            })
            .collect()
    }
}

fn check(value: f64, quantity: &'static str, iso: &str, year: i32) -> Result<f64, EngineError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EngineError::NonFinite {
            quantity,
            iso: iso.to_string(),
            year,
        })
    }
}

/// Simulates from the start year to the horizon. Each year the economies
/// step (with last year's market damages) and are floored, emissions follow
/// gross output, the climate advances on global emissions plus any pulse,
/// and impacts are evaluated on the new climate.
pub fn run_world(world: &World, draw: &DrawParams, pulse: Option<&PulseSpec>) -> Result<Trajectory, EngineError> {
    let settings = &world.settings;
    let n = world.len();
    let years = settings.years();
    let records = world.table.records();
    let model = settings.impact_model();
    let climate_params = ClimateParams {
        ecs: draw.ecs,
        ..settings.climate
    };
    climate_params.validate()?;
    if let Some(p) = pulse {
        if p.size != 0.0 {
            p.validate()?;
        }
        if p.year < settings.start_year || p.year > settings.horizon {
            return Err(EmissionsError::PulseOutOfRange {
                year: p.year,
                start: settings.start_year,
                end: settings.horizon,
            }
            .into());
        }
    }

    let mut climate = ClimateState::present_day(&settings.carbon_cycle);
    let mut traj = Trajectory {
        start_year: settings.start_year,
        isos: records.iter().map(|r| r.iso_code.clone()).collect(),
        climate: Vec::with_capacity(years),
        global_emissions: Vec::with_capacity(years),
        countries: vec![CountryTrajectory::default(); n],
        floor_events: 0,
        pulse: pulse.copied(),
        fingerprint: draw.fingerprint(world),
    };
    let mut states: Vec<CountryState> = Vec::with_capacity(n);
    let mut intensities: Vec<Intensity> = Vec::with_capacity(n);
    let mut market_fraction = vec![0.0; n];

    for k in 0..years {
        let year = settings.start_year + k as i32;
        let mut global = EmissionsVector::default();
        for i in 0..n {
            let r = &records[i];
            let inputs = world.paths[i].inputs(k, draw.shock(i, k));
            let raw = if k == 0 {
                CountryState::initial(r, &settings.economy, year, &inputs)
            } else {
                step_economy(&states[i], &settings.economy, &inputs, market_fraction[i], &r.iso_code)?
            };
            let (state, hits) = apply_floors(raw);
            check(state.net_output, "output", &r.iso_code, year)?;
            if hits.any() {
                traj.floor_events += 1;
            }
            let intensity = if k == 0 {
                Intensity::from_base(world.base_emissions[i], state.gross_output)
            } else {
                intensities[i].advance(world.paths[i].intensity_rates[k])
            };
            let e = compute_emissions(state.gross_output, &intensity)?;
            global += e;
            traj.countries[i].emissions.push(e);
            if k == 0 {
                states.push(state);
                intensities.push(intensity);
            } else {
                states[i] = state;
                intensities[i] = intensity;
            }
        }
        let mut forcing_emissions = global;
        if let Some(p) = pulse.filter(|p| p.year == year) {
            *forcing_emissions.get_mut(p.gas) += p.size;
        }
        climate = step_climate(
            &climate,
            &settings.carbon_cycle,
            &climate_params,
            &forcing_emissions,
            year,
            &world.cfc11,
            &world.cfc12,
        )?;
        check(climate.t_global, "temperature", "world", year)?;

        let (net, pop) = states
            .iter()
            .fold((0.0, 0.0), |(y, p), s| (y + s.net_output, p + s.population));
        let world_income = net / pop;
        for i in 0..n {
            let r = &records[i];
            let t = national_temperature(climate.t_global, r);
            let drivers = Drivers {
                temperature: t.anomaly,
                co2_ppm: climate.co2_ppm,
                preindustrial_ppm: settings.carbon_cycle.preindustrial_ppm,
                sea_level: climate.sea_level,
                sea_level_change: climate.sea_level_change,
            };
            let exposure = Exposure::new(r, &states[i]);
            let mut impacts = model.evaluate(&world.alpha[i], &draw.multipliers[i], &exposure, &drivers)?;
            if settings.income_elasticity != 0.0 {
                let k = apply_income_elasticity(
                    1.0,
                    states[i].per_capita_income,
                    world_income,
                    settings.income_elasticity,
                )?;
                impacts = impacts.scaled(k);
            }
            check(impacts.total(), "damages", &r.iso_code, year)?;
            market_fraction[i] = impacts.market_fraction;
            let c = &mut traj.countries[i];
            c.states.push(states[i]);
            c.temperature.push(t.anomaly);
            c.impacts.push(impacts);
        }
        traj.climate.push(climate);
        traj.global_emissions.push(global);
    }
    Ok(traj)
}

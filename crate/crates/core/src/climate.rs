//! Global carbon cycle, non-CO2 concentrations, radiative forcing,
//! temperature response, pattern-scaled national temperature and sea level.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions::EmissionsVector;
use crate::scenario::{CountryRecord, TimeSeries};

pub const N_BOXES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ClimateError {
    #[error("CO2 concentration must be positive, got {0} ppm")]
    NonPositiveCo2(f64),
    #[error("negative {gas} concentration {value}")]
    NegativeConcentration { gas: &'static str, value: f64 },
    #[error("no prescribed {gas} concentration for {year}")]
    MissingCfc { gas: &'static str, year: i32 },
    #[error("invalid climate parameter: {0}")]
    InvalidParams(String),
}

mod lifetimes {
    //! Infinite lifetimes travel as JSON `null`.
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; super::N_BOXES], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; super::N_BOXES], D::Error> {
        let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
        let v: Vec<f64> = opt.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected five box lifetimes"))
    }
}

/// Linear five-box impulse-response carbon cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CarbonCycleParams {
    pub shares: [f64; N_BOXES],
    /// years; `f64::INFINITY` for the permanent box
    #[serde(with = "lifetimes")]
    pub lifetimes: [f64; N_BOXES],
    pub preindustrial_ppm: f64,
    pub ppm_per_gtc: f64,
}

impl Default for CarbonCycleParams {
    fn default() -> Self {
        Self {
            shares: [0.13, 0.20, 0.32, 0.25, 0.10],
            lifetimes: [f64::INFINITY, 363.0, 74.0, 17.0, 2.0],
            preindustrial_ppm: 280.0,
            ppm_per_gtc: 0.47,
        }
    }
}

impl CarbonCycleParams {
    pub fn validate(&self) -> Result<(), ClimateError> {
        let sum: f64 = self.shares.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.shares.iter().any(|a| *a < 0.0) {
            return Err(ClimateError::InvalidParams(format!(
                "box shares must be non-negative and sum to 1, got {sum}"
            )));
        }
        if self.lifetimes.iter().any(|t| !(*t > 0.0)) {
            return Err(ClimateError::InvalidParams("box lifetimes must be positive".into()));
        }
        if !(self.preindustrial_ppm > 0.0 && self.ppm_per_gtc > 0.0) {
            return Err(ClimateError::InvalidParams(
                "preindustrial_ppm and ppm_per_gtc must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Fraction of a unit pulse still airborne `years` after emission
    /// (the emission year counts as the first year).
    pub fn airborne_fraction(&self, years: u32) -> f64 {
        self.shares
            .iter()
            .zip(&self.lifetimes)
            .map(|(a, tau)| a * (-(years as f64) / tau).exp())
            .sum()
    }
}

/// One-box decay towards a preindustrial level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasCycle {
    pub preindustrial: f64,
    /// years
    pub lifetime: f64,
    /// concentration units per emission unit
    pub conversion: f64,
}

impl GasCycle {
    fn step(&self, concentration: f64, emissions: f64) -> f64 {
        self.preindustrial
            + (concentration - self.preindustrial) * (-1.0 / self.lifetime).exp()
            + self.conversion * emissions
    }
}

/// Coefficients of the forcing terms other than CO2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForcingCoefficients {
    /// W/m² per √ppb
    pub ch4: f64,
    /// W/m² per √ppb
    pub n2o: f64,
    /// scale of the CH4–N2O band overlap term
    pub overlap: f64,
    /// W/m² per ppt
    pub sf6: f64,
    /// W/m² per ppt
    pub cfc11: f64,
    /// W/m² per ppt
    pub cfc12: f64,
    /// W/m² per MtS/yr (negative)
    pub so2: f64,
}

impl Default for ForcingCoefficients {
    fn default() -> Self {
        Self {
            ch4: 0.036,
            n2o: 0.12,
            overlap: 0.47,
            sf6: 0.00052,
            cfc11: 0.00025,
            cfc12: 0.00032,
            so2: -0.4 / 14.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClimateParams {
    /// °C per CO2 doubling
    pub ecs: f64,
    /// years
    pub response_time: f64,
    /// W/m² at CO2 doubling
    pub f2x: f64,
    pub ch4: GasCycle,
    pub n2o: GasCycle,
    pub sf6: GasCycle,
    pub forcing: ForcingCoefficients,
    /// m per °C
    pub slr_equilibrium_per_degree: f64,
    /// years
    pub slr_response_time: f64,
}

impl Default for ClimateParams {
    fn default() -> Self {
        Self {
            ecs: 3.0,
            response_time: 40.0,
            f2x: 3.71,
            ch4: GasCycle {
                preindustrial: 790.0,
                lifetime: 12.0,
                conversion: 0.3597,
            },
            n2o: GasCycle {
                preindustrial: 285.0,
                lifetime: 114.0,
                conversion: 0.2079,
            },
            sf6: GasCycle {
                preindustrial: 0.04,
                lifetime: 3200.0,
                conversion: 0.0398,
            },
            forcing: ForcingCoefficients::default(),
            slr_equilibrium_per_degree: 0.5,
            slr_response_time: 500.0,
        }
    }
}

impl ClimateParams {
    pub fn validate(&self) -> Result<(), ClimateError> {
        let positive = [
            ("ecs", self.ecs),
            ("response_time", self.response_time),
            ("f2x", self.f2x),
            ("ch4.lifetime", self.ch4.lifetime),
            ("n2o.lifetime", self.n2o.lifetime),
            ("sf6.lifetime", self.sf6.lifetime),
            ("slr_equilibrium_per_degree", self.slr_equilibrium_per_degree),
            ("slr_response_time", self.slr_response_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ClimateError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Global climate in one year. Box masses are perturbations above the
/// preindustrial carbon stock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateState {
    /// GtC
    pub box_masses: [f64; N_BOXES],
    pub co2_ppm: f64,
    pub ch4_ppb: f64,
    pub n2o_ppb: f64,
    pub sf6_ppt: f64,
    pub cfc11_ppt: f64,
    pub cfc12_ppt: f64,
    /// MtS/yr, enters forcing directly
    pub so2_emissions: f64,
    /// W/m²
    pub forcing: f64,
    /// °C above preindustrial
    pub t_global: f64,
    /// m above the base year
    pub sea_level: f64,
    /// m/yr, change over the last step
    pub sea_level_change: f64,
}

impl ClimateState {
    pub fn preindustrial(carbon: &CarbonCycleParams, params: &ClimateParams) -> Self {
        Self {
            box_masses: [0.0; N_BOXES],
            co2_ppm: carbon.preindustrial_ppm,
            ch4_ppb: params.ch4.preindustrial,
            n2o_ppb: params.n2o.preindustrial,
            sf6_ppt: params.sf6.preindustrial,
            cfc11_ppt: 0.0,
            cfc12_ppt: 0.0,
            so2_emissions: 0.0,
            forcing: 0.0,
            t_global: 0.0,
            sea_level: 0.0,
            sea_level_change: 0.0,
        }
    }

    /// Approximate conditions at the end of the 2010s.
    pub fn present_day(carbon: &CarbonCycleParams) -> Self {
        let box_masses = [120.0, 70.0, 55.0, 28.0, 3.6];
        Self {
            box_masses,
            co2_ppm: carbon.preindustrial_ppm + carbon.ppm_per_gtc * box_masses.iter().sum::<f64>(),
            ch4_ppb: 1866.0,
            n2o_ppb: 332.0,
            sf6_ppt: 10.0,
            cfc11_ppt: 226.0,
            cfc12_ppt: 503.0,
            so2_emissions: 50.0,
            forcing: 0.0,
            t_global: 1.1,
            sea_level: 0.0,
            sea_level_change: 0.0,
        }
    }
}

/// Adds the year's CO2 to the boxes by share, decays each box, and updates ppm.
pub fn step_carbon_cycle(state: &ClimateState, params: &CarbonCycleParams, co2_emissions: f64) -> ClimateState {
    let mut next = *state;
    for i in 0..N_BOXES {
        let decay = (-1.0 / params.lifetimes[i]).exp();
        next.box_masses[i] = (state.box_masses[i] + params.shares[i] * co2_emissions) * decay;
    }
    next.co2_ppm = params.preindustrial_ppm + params.ppm_per_gtc * next.box_masses.iter().sum::<f64>();
    next
}

/// Advances CH4, N2O and SF6 and reads the prescribed CFC concentrations.
pub fn step_ghg_concentrations(
    state: &ClimateState,
    params: &ClimateParams,
    emissions: &EmissionsVector,
    year: i32,
    cfc11: &TimeSeries,
    cfc12: &TimeSeries,
) -> Result<ClimateState, ClimateError> {
    let mut next = *state;
    next.ch4_ppb = params.ch4.step(state.ch4_ppb, emissions.ch4);
    next.n2o_ppb = params.n2o.step(state.n2o_ppb, emissions.n2o);
    next.sf6_ppt = params.sf6.step(state.sf6_ppt, emissions.sf6);
    next.cfc11_ppt = cfc11.get(year).ok_or(ClimateError::MissingCfc { gas: "CFC11", year })?;
    next.cfc12_ppt = cfc12.get(year).ok_or(ClimateError::MissingCfc { gas: "CFC12", year })?;
    next.so2_emissions = emissions.so2;
    Ok(next)
}

fn overlap(scale: f64, ch4: f64, n2o: f64) -> f64 {
    let mn = ch4 * n2o;
    scale * (1.0 + 2.01e-5 * mn.powf(0.75) + 5.31e-15 * ch4 * mn.powf(1.52)).ln()
}

/// Total radiative forcing relative to preindustrial, W/m².
///
/// Logarithmic in CO2, square-root in CH4 and N2O with the usual band-overlap
/// correction, linear in SF6 and the CFCs, and linear (negative) in SO2
/// emissions.
pub fn radiative_forcing(
    state: &ClimateState,
    carbon: &CarbonCycleParams,
    params: &ClimateParams,
) -> Result<f64, ClimateError> {
    if !(state.co2_ppm > 0.0) {
        return Err(ClimateError::NonPositiveCo2(state.co2_ppm));
    }
    for (gas, value) in [
        ("CH4", state.ch4_ppb),
        ("N2O", state.n2o_ppb),
        ("SF6", state.sf6_ppt),
        ("CFC11", state.cfc11_ppt),
        ("CFC12", state.cfc12_ppt),
    ] {
        if value < 0.0 {
            return Err(ClimateError::NegativeConcentration { gas, value });
        }
    }
    let c = &params.forcing;
    let (m0, n0) = (params.ch4.preindustrial, params.n2o.preindustrial);
    let (m, n) = (state.ch4_ppb, state.n2o_ppb);
    let base_overlap = overlap(c.overlap, m0, n0);

    let co2 = params.f2x / std::f64::consts::LN_2 * (state.co2_ppm / carbon.preindustrial_ppm).ln();
    let ch4 = c.ch4 * (m.sqrt() - m0.sqrt()) - (overlap(c.overlap, m, n0) - base_overlap);
    let n2o = c.n2o * (n.sqrt() - n0.sqrt()) - (overlap(c.overlap, m0, n) - base_overlap);
    let sf6 = c.sf6 * (state.sf6_ppt - params.sf6.preindustrial);
    let cfc = c.cfc11 * state.cfc11_ppt + c.cfc12 * state.cfc12_ppt;
    let so2 = c.so2 * state.so2_emissions;
    Ok(co2 + ch4 + n2o + sf6 + cfc + so2)
}

/// One-year relaxation of global temperature towards `ecs · F / f2x`.
pub fn step_temperature(t_global: f64, params: &ClimateParams, forcing: f64) -> f64 {
    t_global + (params.ecs * forcing / params.f2x - t_global) / params.response_time
}

/// One-year relaxation of sea level towards its equilibrium for `t_global`.
pub fn step_sea_level(sea_level: f64, t_global: f64, params: &ClimateParams) -> f64 {
    sea_level + (params.slr_equilibrium_per_degree * t_global - sea_level) / params.slr_response_time
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NationalTemperature {
    /// °C above preindustrial
    pub anomaly: f64,
    /// °C
    pub absolute: f64,
}

/// Pattern-scaled national temperature.
pub fn national_temperature(t_global: f64, record: &CountryRecord) -> NationalTemperature {
    let anomaly = record.temperature_pattern * t_global;
    NationalTemperature {
        anomaly,
        absolute: record.base_temperature + anomaly,
    }
}

/// Full climate year: carbon cycle, other gases, forcing, temperature, sea level.
pub fn step_climate(
    state: &ClimateState,
    carbon: &CarbonCycleParams,
    params: &ClimateParams,
    emissions: &EmissionsVector,
    year: i32,
    cfc11: &TimeSeries,
    cfc12: &TimeSeries,
) -> Result<ClimateState, ClimateError> {
    let next = step_carbon_cycle(state, carbon, emissions.co2);
    let mut next = step_ghg_concentrations(&next, params, emissions, year, cfc11, cfc12)?;
    next.forcing = radiative_forcing(&next, carbon, params)?;
    next.t_global = step_temperature(state.t_global, params, next.forcing);
    next.sea_level = step_sea_level(state.sea_level, state.t_global, params);
    next.sea_level_change = next.sea_level - state.sea_level;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_state() -> ClimateState {
        ClimateState::preindustrial(&CarbonCycleParams::default(), &ClimateParams::default())
    }

    #[test]
    fn carbon_fixed_point() {
        let p = CarbonCycleParams::default();
        let s = zero_state();
        assert_eq!(step_carbon_cycle(&s, &p, 0.0), s);
    }

    #[test]
    fn permanent_box_survives() {
        let p = CarbonCycleParams::default();
        let mut s = step_carbon_cycle(&zero_state(), &p, 1.0);
        for _ in 0..20_000 {
            s = step_carbon_cycle(&s, &p, 0.0);
        }
        let airborne: f64 = s.box_masses.iter().sum();
        assert!((airborne - 0.13).abs() < 1e-9, "{airborne}");
    }

    #[test]
    fn single_box_decay() {
        let p = CarbonCycleParams {
            shares: [1.0, 0.0, 0.0, 0.0, 0.0],
            lifetimes: [100.0, 1.0, 1.0, 1.0, 1.0],
            ..Default::default()
        };
        let mut s = zero_state();
        s.box_masses[0] = 1.0;
        let next = step_carbon_cycle(&s, &p, 0.0);
        assert!((next.box_masses[0] - (-0.01f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ghg_decay_and_cfc_pass_through() {
        let p = ClimateParams::default();
        let cfc11 = TimeSeries::new(2020, vec![230.125, 229.5]);
        let cfc12 = TimeSeries::new(2020, vec![500.0, 499.0]);
        let s = zero_state();
        let next = step_ghg_concentrations(&s, &p, &EmissionsVector::default(), 2021, &cfc11, &cfc12).unwrap();
        assert_eq!(next.ch4_ppb, p.ch4.preindustrial);
        assert_eq!(next.cfc11_ppt, 229.5);
        assert_eq!(next.cfc12_ppt, 499.0);

        let mut s = zero_state();
        s.ch4_ppb = p.ch4.preindustrial + 100.0;
        let next = step_ghg_concentrations(&s, &p, &EmissionsVector::default(), 2020, &cfc11, &cfc12).unwrap();
        let expected = p.ch4.preindustrial + 100.0 * (-1.0f64 / 12.0).exp();
        assert!((next.ch4_ppb - expected).abs() < 1e-10);

        assert_eq!(
            step_ghg_concentrations(&s, &p, &EmissionsVector::default(), 2030, &cfc11, &cfc12),
            Err(ClimateError::MissingCfc {
                gas: "CFC11",
                year: 2030
            })
        );
    }

    #[test]
    fn forcing_values() {
        let cc = CarbonCycleParams::default();
        let p = ClimateParams::default();
        let s = zero_state();
        assert_eq!(radiative_forcing(&s, &cc, &p).unwrap(), 0.0);

        let mut doubled = s;
        doubled.co2_ppm = 2.0 * cc.preindustrial_ppm;
        assert!((radiative_forcing(&doubled, &cc, &p).unwrap() - 3.71).abs() < 1e-12);

        let mut one_half = s;
        one_half.co2_ppm = 1.5 * cc.preindustrial_ppm;
        let expected = 3.71 * 1.5f64.ln() / 2.0f64.ln();
        assert!((radiative_forcing(&one_half, &cc, &p).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 2.170).abs() < 1e-3);

        let mut bad = s;
        bad.co2_ppm = 0.0;
        assert_eq!(radiative_forcing(&bad, &cc, &p), Err(ClimateError::NonPositiveCo2(0.0)));

        let mut sulphate = s;
        sulphate.so2_emissions = 10.0;
        assert!(radiative_forcing(&sulphate, &cc, &p).unwrap() < 0.0);
    }

    #[test]
    fn temperature_steps() {
        let p = ClimateParams::default();
        assert_eq!(step_temperature(0.0, &p, 0.0), 0.0);
        assert!((step_temperature(0.0, &p, p.f2x) - 0.075).abs() < 1e-15);
        let mut t = 0.0;
        for _ in 0..2000 {
            t = step_temperature(t, &p, p.f2x);
        }
        assert!((t - p.ecs).abs() < 1e-6);
    }

    #[test]
    fn sea_level_steps() {
        let p = ClimateParams::default();
        assert_eq!(step_sea_level(0.0, 0.0, &p), 0.0);
        assert!((step_sea_level(0.0, 2.0, &p) - 0.002).abs() < 1e-15);
        let mut s = 0.0;
        for _ in 0..20_000 {
            s = step_sea_level(s, 1.5, &p);
        }
        assert!((s - 0.75).abs() < 1e-9);
    }

    #[test]
    fn pattern_scaling() {
        let mut r = CountryRecord {
            iso_code: "X".into(),
            name: "X".into(),
            region_id: "R".into(),
            base_population: 1.0,
            base_gdp: 1.0,
            base_temperature: 5.0,
            coast_length: 0.0,
            wetland_area: 0.0,
            dryland_area: 0.0,
            urban_share: 0.0,
            temperature_pattern: 1.0,
        };
        assert_eq!(national_temperature(2.0, &r).anomaly, 2.0);
        r.temperature_pattern = 1.8;
        let t = national_temperature(2.0, &r);
        assert!((t.anomaly - 3.6).abs() < 1e-15);
        assert!((t.absolute - 8.6).abs() < 1e-15);
    }

    #[test]
    fn lifetimes_serialize_infinity_as_null() {
        let json = serde_json::to_string(&CarbonCycleParams::default()).unwrap();
        assert!(json.contains("[null,363.0,74.0,17.0,2.0]"), "{json}");
        let back: CarbonCycleParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, CarbonCycleParams::default());
    }

    fn run_climate(pulses: &[(usize, f64)], years: usize) -> Vec<ClimateState> {
        let cc = CarbonCycleParams::default();
        let p = ClimateParams::default();
        let cfc = TimeSeries::constant(2000, 2000 + years as i32, 0.0);
        let mut s = ClimateState::present_day(&cc);
        let mut out = Vec::new();
        for y in 0..years {
            let mut e = EmissionsVector::from_array([10.0, 300.0, 7.0, 8.0, 40.0]);
            for (py, size) in pulses {
                if *py == y {
                    e.co2 += size;
                }
            }
            s = step_climate(&s, &cc, &p, &e, 2000 + y as i32, &cfc, &cfc).unwrap();
            out.push(s);
        }
        out
    }

    #[test]
    fn pulse_warms_every_year() {
        let base = run_climate(&[], 200);
        let pulsed = run_climate(&[(5, 1.0)], 200);
        for (b, p) in base.iter().zip(&pulsed) {
            assert!(p.t_global - b.t_global >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn carbon_superposition(e1 in 0.0f64..20.0, e2 in 0.0f64..20.0, y1 in 0usize..50, y2 in 0usize..50) {
            let p = CarbonCycleParams::default();
            let path = |pulses: &[(usize, f64)]| {
                let mut s = zero_state();
                for y in 0..60 {
                    let e: f64 = pulses.iter().filter(|(py, _)| *py == y).map(|(_, v)| v).sum();
                    s = step_carbon_cycle(&s, &p, e);
                }
                s.box_masses.iter().sum::<f64>()
            };
            let both = path(&[(y1, e1), (y2, e2)]);
            let sum = path(&[(y1, e1)]) + path(&[(y2, e2)]);
            prop_assert!((both - sum).abs() <= 1e-10 * (1.0 + sum.abs()));
        }

        #[test]
        fn bounded_forcing_bounded_temperature(tau in 0.6f64..200.0, forcing in prop::collection::vec(-5.0f64..10.0, 1..300)) {
            let p = ClimateParams { response_time: tau, ..Default::default() };
            let contraction = (1.0 - 1.0 / tau).abs();
            let bound = p.ecs * 10.0 / p.f2x / tau / (1.0 - contraction);
            let mut t = 0.0f64;
            for f in forcing {
                t = step_temperature(t, &p, f);
                prop_assert!(t.abs() <= bound + 1e-9);
            }
        }
    }
}

//! Per-country Cobb–Douglas growth with a market-damage wedge on output and
//! hard floors on population and income.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::CountryRecord;

pub const POPULATION_FLOOR: f64 = 1_000.0;
/// US$ per person per year.
pub const INCOME_FLOOR: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum EconomyError {
    #[error("{iso} in {year}: market damages of {fraction} of output annihilate the economy")]
    Annihilated { iso: String, year: i32, fraction: f64 },
    #[error("invalid economy parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomyParams {
    pub capital_share: f64,
    /// 1/yr
    pub depreciation: f64,
    pub initial_capital_to_output: f64,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            capital_share: 0.3,
            depreciation: 0.1,
            initial_capital_to_output: 3.0,
        }
    }
}

impl EconomyParams {
    pub fn validate(&self) -> Result<(), EconomyError> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.capital_share) {
            return Err(EconomyError::InvalidParams(format!(
                "capital_share {}",
                self.capital_share
            )));
        }
        if !open_unit(self.depreciation) {
            return Err(EconomyError::InvalidParams(format!(
                "depreciation {}",
                self.depreciation
            )));
        }
        if !(self.initial_capital_to_output > 0.0 && self.initial_capital_to_output.is_finite()) {
            return Err(EconomyError::InvalidParams(format!(
                "initial_capital_to_output {}",
                self.initial_capital_to_output
            )));
        }
        Ok(())
    }

    /// Solow steady-state capital for constant savings, TFP and labour.
    pub fn steady_state_capital(&self, savings_rate: f64, tfp: f64, population: f64) -> f64 {
        let g = self.capital_share;
        (savings_rate * tfp * population.powf(1.0 - g) / self.depreciation).powf(1.0 / (1.0 - g))
    }
}

/// Economic state of one country in one year. Stocks (`population`, `tfp`,
/// `capital`) are the year's inputs; the flows are that year's outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountryState {
    pub year: i32,
    pub population: f64,
    pub tfp: f64,
    pub capital: f64,
    pub gross_output: f64,
    pub net_output: f64,
    pub investment: f64,
    pub consumption: f64,
    pub per_capita_income: f64,
}

/// Exogenous inputs for one country-year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearInputs {
    pub population: f64,
    pub tfp_growth: f64,
    pub savings_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FloorHits {
    pub population: bool,
    pub income: bool,
}

impl FloorHits {
    pub fn any(self) -> bool {
        self.population || self.income
    }
}

impl CountryState {
    /// Start-year state reproducing base GDP with capital at the configured
    /// capital-output ratio and no damages.
    pub fn initial(record: &CountryRecord, params: &EconomyParams, year: i32, inputs: &YearInputs) -> Self {
        let gdp = record.base_gdp;
        let capital = params.initial_capital_to_output * gdp;
        let g = params.capital_share;
        let tfp = gdp / (capital.powf(g) * inputs.population.powf(1.0 - g));
        Self::produce(year, inputs.population, tfp, capital, params, inputs.savings_rate, 0.0)
    }

    fn produce(
        year: i32,
        population: f64,
        tfp: f64,
        capital: f64,
        params: &EconomyParams,
        savings_rate: f64,
        damage_fraction: f64,
    ) -> Self {
        let g = params.capital_share;
        let gross_output = tfp * capital.powf(g) * population.powf(1.0 - g);
        let net_output = gross_output * (1.0 - damage_fraction);
        let investment = savings_rate * net_output;
        let consumption = net_output - investment;
        Self {
            year,
            population,
            tfp,
            capital,
            gross_output,
            net_output,
            investment,
            consumption,
            per_capita_income: net_output / population,
        }
    }

    /// Capital carried into the following year.
    pub fn next_capital(&self, params: &EconomyParams) -> f64 {
        (1.0 - params.depreciation) * self.capital + self.investment
    }

    pub fn per_capita_consumption(&self) -> f64 {
        self.consumption / self.population
    }
}

/// Advances `state` one year: capital accumulates last year's investment,
/// TFP and population follow the scenario, and output for the new year is
/// reduced by `market_damage_fraction`.
pub fn step_economy(
    state: &CountryState,
    params: &EconomyParams,
    next: &YearInputs,
    market_damage_fraction: f64,
    iso: &str,
) -> Result<CountryState, EconomyError> {
    let year = state.year + 1;
    if !(market_damage_fraction < 1.0) {
        return Err(EconomyError::Annihilated {
            iso: iso.to_string(),
            year,
            fraction: market_damage_fraction,
        });
    }
    let capital = state.next_capital(params).max(0.0);
    let tfp = state.tfp * (1.0 + next.tfp_growth);
    Ok(CountryState::produce(
        year,
        next.population,
        tfp,
        capital,
        params,
        next.savings_rate,
        market_damage_fraction,
    ))
}

/// Raises population to 1,000 persons and income to 100 US$/person,
/// rescaling the output flows so the accounting identity still holds.
pub fn apply_floors(state: CountryState) -> (CountryState, FloorHits) {
    let mut s = state;
    let mut hits = FloorHits::default();
    if s.population < POPULATION_FLOOR {
        s.population = POPULATION_FLOOR;
        hits.population = true;
    }
    s.per_capita_income = s.net_output / s.population;
    if s.per_capita_income < INCOME_FLOOR {
        let target = INCOME_FLOOR * s.population;
        if s.net_output > 0.0 {
            let k = target / s.net_output;
            s.gross_output *= k;
            s.investment *= k;
            s.consumption *= k;
        } else {
            s.gross_output = target;
            s.investment = 0.0;
            s.consumption = target;
        }
        s.net_output = target;
        s.per_capita_income = INCOME_FLOOR;
        hits.income = true;
    }
    (s, hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record() -> CountryRecord {
        CountryRecord {
            iso_code: "AAA".into(),
            name: "A".into(),
            region_id: "R".into(),
            base_population: 1e7,
            base_gdp: 2e11,
            base_temperature: 12.0,
            coast_length: 0.0,
            wetland_area: 0.0,
            dryland_area: 0.0,
            urban_share: 0.5,
            temperature_pattern: 1.0,
        }
    }

    fn inputs(s: f64) -> YearInputs {
        YearInputs {
            population: 1e7,
            tfp_growth: 0.0,
            savings_rate: s,
        }
    }

    #[test]
    fn initial_state_matches_base_gdp() {
        let p = EconomyParams::default();
        let s = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        assert!((s.gross_output - 2e11).abs() < 1e-3);
        assert!((s.capital - 6e11).abs() < 1e-3);
    }

    #[test]
    fn zero_damage_consumption_share() {
        let p = EconomyParams::default();
        let s0 = CountryState::initial(&record(), &p, 2019, &inputs(0.25));
        let s1 = step_economy(&s0, &p, &inputs(0.25), 0.0, "AAA").unwrap();
        assert!((s1.consumption - 0.75 * s1.gross_output).abs() <= 1e-12 * s1.gross_output);
    }

    #[test]
    fn half_damage_halves_net_output() {
        let p = EconomyParams::default();
        let s0 = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        let a = step_economy(&s0, &p, &inputs(0.2), 0.0, "AAA").unwrap();
        let b = step_economy(&s0, &p, &inputs(0.2), 0.5, "AAA").unwrap();
        assert_eq!(b.net_output, 0.5 * a.net_output);
        assert_eq!(b.gross_output, a.gross_output);
    }

    #[test]
    fn annihilation_is_fatal() {
        let p = EconomyParams::default();
        let s0 = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        let err = step_economy(&s0, &p, &inputs(0.2), 1.0, "AAA").unwrap_err();
        assert_eq!(
            err,
            EconomyError::Annihilated {
                iso: "AAA".into(),
                year: 2020,
                fraction: 1.0
            }
        );
    }

    #[test]
    fn floors() {
        let p = EconomyParams::default();
        let mut s = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        s.population = 500.0;
        s.net_output = 1e7;
        s.gross_output = 1e7;
        s.investment = 2e6;
        s.consumption = 8e6;
        let (f, hits) = apply_floors(s);
        assert_eq!(f.population, 1000.0);
        assert!(hits.population && !hits.income);

        s.population = 1e6;
        s.net_output = 4e7;
        s.investment = 0.8e7;
        s.consumption = 3.2e7;
        let (f, hits) = apply_floors(s);
        assert_eq!(f.per_capita_income, 100.0);
        assert!(hits.income);
        assert!((f.consumption + f.investment - f.net_output).abs() <= 1e-12 * f.net_output);

        let ok = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        assert_eq!(apply_floors(ok), (ok, FloorHits::default()));
    }

    #[test]
    fn converges_to_solow_steady_state() {
        let p = EconomyParams::default();
        let mut s = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
        for _ in 0..2000 {
            s = step_economy(&s, &p, &inputs(0.2), 0.0, "AAA").unwrap();
        }
        let k_star = p.steady_state_capital(0.2, s.tfp, 1e7);
        assert!((s.capital - k_star).abs() <= 1e-9 * k_star);
    }

    proptest! {
        #[test]
        fn accounting_identity(s in 0.01f64..0.6, d in -0.5f64..0.99, g in -0.02f64..0.05) {
            let p = EconomyParams::default();
            let s0 = CountryState::initial(&record(), &p, 2019, &inputs(s));
            let next = YearInputs { tfp_growth: g, ..inputs(s) };
            let s1 = step_economy(&s0, &p, &next, d, "AAA").unwrap();
            prop_assert!((s1.consumption + s1.investment - s1.net_output).abs() <= 1e-12 * s1.net_output.abs());
        }

        #[test]
        fn damage_monotonicity(d1 in 0.0f64..0.9, extra in 0.0f64..0.09, s in 0.05f64..0.5) {
            let p = EconomyParams::default();
            let s0 = CountryState::initial(&record(), &p, 2019, &inputs(s));
            let lo = step_economy(&s0, &p, &inputs(s), d1, "AAA").unwrap();
            let hi = step_economy(&s0, &p, &inputs(s), d1 + extra, "AAA").unwrap();
            prop_assert!(hi.net_output <= lo.net_output);
            prop_assert!(hi.consumption <= lo.consumption);
            prop_assert!(hi.next_capital(&p) <= lo.next_capital(&p));
        }

        #[test]
        fn income_nondecreasing_with_growth(g in 0.0f64..0.03) {
            let p = EconomyParams::default();
            let mut s = CountryState::initial(&record(), &p, 2019, &inputs(0.2));
            let next = YearInputs { tfp_growth: 0.0, ..inputs(0.2) };
            for _ in 0..400 {
                s = step_economy(&s, &p, &next, 0.0, "AAA").unwrap();
            }
            let grow = YearInputs { tfp_growth: g, ..inputs(0.2) };
            let mut prev = s.per_capita_income;
            for _ in 0..200 {
                s = step_economy(&s, &p, &grow, 0.0, "AAA").unwrap();
                prop_assert!(s.per_capita_income >= prev * (1.0 - 1e-12));
                prev = s.per_capita_income;
            }
        }
    }
}

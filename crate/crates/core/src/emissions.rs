//! Multi-gas emissions driven by gross output and declining intensities,
//! plus the single-cell pulse used by the marginal-damage experiment.

use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tonnes of CO2 per tonne of carbon.
pub const CO2_PER_C: f64 = 44.0 / 12.0;

/// Default pulse: 1 MtC.
pub const DEFAULT_PULSE_GTC: f64 = 0.001;

#[derive(Debug, Error, PartialEq)]
pub enum EmissionsError {
    #[error("negative emission intensity for {gas:?}: {value}")]
    NegativeIntensity { gas: Gas, value: f64 },
    #[error("pulse year {year} outside emissions path {start}..={end}")]
    PulseOutOfRange { year: i32, start: i32, end: i32 },
    #[error("pulse size must be positive and finite, got {0}")]
    InvalidPulseSize(f64),
    #[error("only CO2 pulses are supported, got {0:?}")]
    UnsupportedGas(Gas),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gas {
    Co2,
    Ch4,
    N2o,
    Sf6,
    So2,
}

impl Gas {
    pub const ALL: [Gas; 5] = [Gas::Co2, Gas::Ch4, Gas::N2o, Gas::Sf6, Gas::So2];

    pub fn from_name(name: &str) -> Option<Gas> {
        Gas::ALL.into_iter().find(|g| g.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Gas::Co2 => "co2",
            Gas::Ch4 => "ch4",
            Gas::N2o => "n2o",
            Gas::Sf6 => "sf6",
            Gas::So2 => "so2",
        }
    }
}

/// Annual emissions: CO2 in GtC, CH4 and N2O in Mt, SF6 in kt, SO2 in MtS.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmissionsVector {
    pub co2: f64,
    pub ch4: f64,
    pub n2o: f64,
    pub sf6: f64,
    pub so2: f64,
}

impl EmissionsVector {
    pub fn from_array([co2, ch4, n2o, sf6, so2]: [f64; 5]) -> Self {
        Self {
            co2,
            ch4,
            n2o,
            sf6,
            so2,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.co2, self.ch4, self.n2o, self.sf6, self.so2]
    }

    pub fn get(&self, gas: Gas) -> f64 {
        match gas {
            Gas::Co2 => self.co2,
            Gas::Ch4 => self.ch4,
            Gas::N2o => self.n2o,
            Gas::Sf6 => self.sf6,
            Gas::So2 => self.so2,
        }
    }

    pub fn get_mut(&mut self, gas: Gas) -> &mut f64 {
        match gas {
            Gas::Co2 => &mut self.co2,
            Gas::Ch4 => &mut self.ch4,
            Gas::N2o => &mut self.n2o,
            Gas::Sf6 => &mut self.sf6,
            Gas::So2 => &mut self.so2,
        }
    }

    fn zip(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array([
            f(a[0], b[0]),
            f(a[1], b[1]),
            f(a[2], b[2]),
            f(a[3], b[3]),
            f(a[4], b[4]),
        ])
    }
}

impl Add for EmissionsVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
}

impl AddAssign for EmissionsVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Mul<f64> for EmissionsVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * k))
    }
}

impl std::iter::Sum for EmissionsVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Emissions per US$ of gross output, per gas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Intensity(pub EmissionsVector);

impl Intensity {
    /// Intensity implied by base-year emissions and output.
    pub fn from_base(emissions: EmissionsVector, gross_output: f64) -> Self {
        Intensity(emissions * (1.0 / gross_output))
    }

    /// Applies one year of change: `intensity · exp(rate)` per gas.
    pub fn advance(self, rates: EmissionsVector) -> Self {
        Intensity(self.0.zip(rates, |i, r| i * r.exp()))
    }
}

/// Emissions for one country-year: `intensity · gross_output` per gas.
pub fn compute_emissions(gross_output: f64, intensity: &Intensity) -> Result<EmissionsVector, EmissionsError> {
    for gas in Gas::ALL {
        let value = intensity.0.get(gas);
        if value < 0.0 {
            return Err(EmissionsError::NegativeIntensity { gas, value });
        }
    }
    Ok(intensity.0 * gross_output)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub year: i32,
    #[serde(default = "default_gas")]
    pub gas: Gas,
    /// GtC for CO2.
    pub size: f64,
}

fn default_gas() -> Gas {
    Gas::Co2
}

impl PulseSpec {
    pub fn co2(year: i32, size_gtc: f64) -> Self {
        Self {
            year,
            gas: Gas::Co2,
            size: size_gtc,
        }
    }

    pub fn validate(&self) -> Result<(), EmissionsError> {
        if self.gas != Gas::Co2 {
            return Err(EmissionsError::UnsupportedGas(self.gas));
        }
        if !(self.size.is_finite() && self.size > 0.0) {
            return Err(EmissionsError::InvalidPulseSize(self.size));
        }
        Ok(())
    }

    /// Pulse size in tonnes of CO2.
    pub fn tonnes_co2(&self) -> f64 {
        self.size * 1e9 * CO2_PER_C
    }
}

/// Annual emissions over a contiguous span of years.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsPath {
    pub start_year: i32,
    pub values: Vec<EmissionsVector>,
}

impl EmissionsPath {
    pub fn zeros(start_year: i32, end_year: i32) -> Self {
        Self {
            start_year,
            values: vec![EmissionsVector::default(); (end_year - start_year + 1).max(0) as usize],
        }
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn get(&self, year: i32) -> Option<&EmissionsVector> {
        if year < self.start_year {
            return None;
        }
        self.values.get((year - self.start_year) as usize)
    }
}

/// Copy of `path` with the pulse added to one gas in one year.
pub fn inject_pulse(path: &EmissionsPath, pulse: &PulseSpec) -> Result<EmissionsPath, EmissionsError> {
    if pulse.year < path.start_year || pulse.year > path.end_year() {
        return Err(EmissionsError::PulseOutOfRange {
            year: pulse.year,
            start: path.start_year,
            end: path.end_year(),
        });
    }
    let mut out = path.clone();
    *out.values[(pulse.year - path.start_year) as usize].get_mut(pulse.gas) += pulse.size;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intensity() -> Intensity {
        Intensity(EmissionsVector::from_array([1e-13, 4e-12, 1e-13, 1e-13, 6e-13]))
    }

    #[test]
    fn zero_intensity_gives_zero() {
        let mut i = intensity();
        i.0.ch4 = 0.0;
        assert_eq!(compute_emissions(5e12, &i).unwrap().ch4, 0.0);
    }

    #[test]
    fn negative_intensity_rejected() {
        let mut i = intensity();
        i.0.so2 = -1e-15;
        assert!(matches!(
            compute_emissions(1.0, &i),
            Err(EmissionsError::NegativeIntensity { gas: Gas::So2, .. })
        ));
    }

    #[test]
    fn constant_decline_rate() {
        let rates = EmissionsVector::from_array([-0.02; 5]);
        let start = intensity();
        let mut i = start;
        for _ in 0..10 {
            i = i.advance(rates);
        }
        for gas in Gas::ALL {
            let expected = start.0.get(gas) * (-0.2f64).exp();
            assert!((i.0.get(gas) - expected).abs() <= 1e-14 * expected);
        }
    }

    #[test]
    fn emissions_linear_in_output() {
        let a = compute_emissions(3e12, &intensity()).unwrap();
        let b = compute_emissions(6e12, &intensity()).unwrap();
        for gas in Gas::ALL {
            assert_eq!(b.get(gas), 2.0 * a.get(gas));
        }
    }

    fn path() -> EmissionsPath {
        let mut p = EmissionsPath::zeros(2020, 2030);
        for (i, v) in p.values.iter_mut().enumerate() {
            v.co2 = 10.0 + i as f64 * 0.1;
            v.ch4 = 300.0;
        }
        p
    }

    #[test]
    fn pulse_adds_single_cell() {
        let base = path();
        let pulsed = inject_pulse(&base, &PulseSpec::co2(2025, 1.0)).unwrap();
        for year in 2020..=2030 {
            let (b, p) = (base.get(year).unwrap(), pulsed.get(year).unwrap());
            if year == 2025 {
                assert_eq!(p.co2, b.co2 + 1.0);
                assert_eq!(p.ch4, b.ch4);
            } else {
                assert_eq!(p, b);
            }
        }
        let zero = PulseSpec {
            size: 0.0,
            ..PulseSpec::co2(2025, 1.0)
        };
        assert_eq!(inject_pulse(&base, &zero).unwrap(), base);
        assert!(zero.validate().is_err());
    }

    #[test]
    fn pulse_outside_path() {
        assert!(matches!(
            inject_pulse(&path(), &PulseSpec::co2(2031, 1.0)),
            Err(EmissionsError::PulseOutOfRange { .. })
        ));
    }

    #[test]
    fn default_pulse_in_tonnes() {
        let p = PulseSpec::co2(2025, DEFAULT_PULSE_GTC);
        assert!((p.tonnes_co2() - 1e6 * 44.0 / 12.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn pulses_compose_additively(y1 in 2020i32..=2030, y2 in 2020i32..=2030, s1 in 0.001f64..5.0, s2 in 0.001f64..5.0) {
            let base = EmissionsPath::zeros(2020, 2030);
            let both = inject_pulse(&inject_pulse(&base, &PulseSpec::co2(y1, s1)).unwrap(), &PulseSpec::co2(y2, s2)).unwrap();
            for year in 2020..=2030 {
                let mut expected = 0.0;
                if year == y1 { expected += s1; }
                if year == y2 { expected += s2; }
                prop_assert_eq!(both.get(year).unwrap().co2, expected);
            }
        }
    }
}

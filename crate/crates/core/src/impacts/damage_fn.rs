//! Single-sector aggregate damage functions and their Bayesian model average.
//!
//! Every form maps a temperature increase `T` (°C) to damages as a fraction
//! of GDP. Coefficients shipped here are placeholders of plausible magnitude
//! for the published fits; real studies should supply their own through the
//! run configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ImpactError;

/// Exponent of the high-temperature term in the 2012 Weitzman form.
pub const WEITZMAN2012_EXPONENT: f64 = 6.754;

/// Tolerance on the BMA weight sum.
pub const BMA_WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageForm {
    TolParabolic,
    Weitzman6,
    Weitzman7,
    NewboldMarten,
    Nordhaus,
    Hope,
    VdpWithagen,
    TolLinear,
    BarrageNordhaus,
    HowardSterner,
    Weitzman2012,
    NordhausYang,
}

impl DamageForm {
    pub const ALL: [DamageForm; 12] = [
        DamageForm::TolParabolic,
        DamageForm::Weitzman6,
        DamageForm::Weitzman7,
        DamageForm::NewboldMarten,
        DamageForm::Nordhaus,
        DamageForm::Hope,
        DamageForm::VdpWithagen,
        DamageForm::TolLinear,
        DamageForm::BarrageNordhaus,
        DamageForm::HowardSterner,
        DamageForm::Weitzman2012,
        DamageForm::NordhausYang,
    ];

    /// The eight independent forms entering the model average.
    pub const BMA: [DamageForm; 8] = [
        DamageForm::TolParabolic,
        DamageForm::Weitzman6,
        DamageForm::Weitzman7,
        DamageForm::NewboldMarten,
        DamageForm::Nordhaus,
        DamageForm::Hope,
        DamageForm::VdpWithagen,
        DamageForm::TolLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DamageForm::TolParabolic => "tol_parabolic",
            DamageForm::Weitzman6 => "weitzman6",
            DamageForm::Weitzman7 => "weitzman7",
            DamageForm::NewboldMarten => "newbold_marten",
            DamageForm::Nordhaus => "nordhaus",
            DamageForm::Hope => "hope",
            DamageForm::VdpWithagen => "vdp_withagen",
            DamageForm::TolLinear => "tol_linear",
            DamageForm::BarrageNordhaus => "barrage_nordhaus",
            DamageForm::HowardSterner => "howard_sterner",
            DamageForm::Weitzman2012 => "weitzman2012",
            DamageForm::NordhausYang => "nordhaus_yang",
        }
    }

    /// Human-readable closed form.
    pub fn formula(self) -> &'static str {
        match self {
            DamageForm::TolParabolic => "a1*T + a2*T^2",
            DamageForm::Weitzman6 => "a1*T^2 + a2*T^6",
            DamageForm::Weitzman7 => "a1*T^2 + a2*T^7",
            DamageForm::NewboldMarten => "0 if T < b; a1*(T - b) if T >= b",
            DamageForm::Nordhaus
            | DamageForm::BarrageNordhaus
            | DamageForm::HowardSterner
            | DamageForm::NordhausYang => "a1*T^2",
            DamageForm::Hope => "a1*T",
            DamageForm::VdpWithagen => "a1*(exp(T) - 1)",
            DamageForm::TolLinear => "a1*T if T < b; a2 + a3*T if T >= b",
            DamageForm::Weitzman2012 => "a1*T^2 + a2*T^6.754",
        }
    }
}

impl fmt::Display for DamageForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DamageForm {
    type Err = ImpactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DamageForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ImpactError::UnknownForm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageFunctionSpec {
    pub form: DamageForm,
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
    #[serde(default)]
    pub alpha3: f64,
    /// threshold, °C
    #[serde(default)]
    pub beta: f64,
}

impl DamageFunctionSpec {
    pub fn new(form: DamageForm, alpha1: f64, alpha2: f64, alpha3: f64, beta: f64) -> Self {
        Self {
            form,
            alpha1,
            alpha2,
            alpha3,
            beta,
        }
    }

    /// Placeholder coefficients.
    pub fn default_for(form: DamageForm) -> Self {
        let spec = |a1, a2, a3, b| Self::new(form, a1, a2, a3, b);
        match form {
            DamageForm::TolParabolic => spec(-0.0012, 0.0023, 0.0, 0.0),
            DamageForm::Weitzman6 => spec(0.00236, 5.07e-6, 0.0, 0.0),
            DamageForm::Weitzman7 => spec(0.0022, 8.2e-7, 0.0, 0.0),
            DamageForm::NewboldMarten => spec(0.01, 0.0, 0.0, 1.0),
            DamageForm::Nordhaus => spec(0.00236, 0.0, 0.0, 0.0),
            DamageForm::Hope => spec(0.006, 0.0, 0.0, 0.0),
            DamageForm::VdpWithagen => spec(0.0003, 0.0, 0.0, 0.0),
            // continuity at b = 1: a1 * 1 = a2 + a3 * 1
            DamageForm::TolLinear => spec(0.002, -0.007, 0.009, 1.0),
            DamageForm::BarrageNordhaus => spec(0.003467, 0.0, 0.0, 0.0),
            DamageForm::HowardSterner => spec(0.01145, 0.0, 0.0, 0.0),
            DamageForm::Weitzman2012 => spec(1.0 / (20.46 * 20.46), 6.081f64.powf(-WEITZMAN2012_EXPONENT), 0.0, 0.0),
            DamageForm::NordhausYang => spec(0.00144, 0.0, 0.0, 0.0),
        }
    }

    /// Load-time checks: finite coefficients and continuity of the
    /// piecewise-linear form at its threshold.
    pub fn validate(&self) -> Result<(), ImpactError> {
        if ![self.alpha1, self.alpha2, self.alpha3, self.beta]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(ImpactError::InvalidSpec(format!(
                "{}: non-finite coefficient",
                self.form
            )));
        }
        if self.form == DamageForm::TolLinear {
            let left = self.alpha1 * self.beta;
            let right = self.alpha2 + self.alpha3 * self.beta;
            if (left - right).abs() > 1e-12 * left.abs().max(right.abs()).max(1e-12) {
                return Err(ImpactError::Discontinuous { left, right });
            }
        }
        Ok(())
    }
}

/// Damages as a fraction of GDP for one of the twelve closed forms.
pub fn aggregate_damage_function(spec: &DamageFunctionSpec, t: f64) -> Result<f64, ImpactError> {
    let DamageFunctionSpec {
        alpha1: a1,
        alpha2: a2,
        alpha3: a3,
        beta: b,
        ..
    } = *spec;
    Ok(match spec.form {
        DamageForm::TolParabolic => a1 * t + a2 * t * t,
        DamageForm::Weitzman6 => a1 * t * t + a2 * t.powi(6),
        DamageForm::Weitzman7 => a1 * t * t + a2 * t.powi(7),
        DamageForm::NewboldMarten => {
            if t < b {
                0.0
            } else {
                a1 * (t - b)
            }
        }
        DamageForm::Nordhaus | DamageForm::BarrageNordhaus | DamageForm::HowardSterner | DamageForm::NordhausYang => {
            a1 * t * t
        }
        DamageForm::Hope => a1 * t,
        DamageForm::VdpWithagen => a1 * (t.exp() - 1.0),
        DamageForm::TolLinear => {
            if t < b {
                a1 * t
            } else {
                a2 + a3 * t
            }
        }
        DamageForm::Weitzman2012 => {
            if t < 0.0 {
                return Err(ImpactError::NegativeTemperature(t));
            }
            a1 * t * t + a2 * t.powf(WEITZMAN2012_EXPONENT)
        }
    })
}

/// Weighted mixture of damage forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmaSpec {
    pub forms: Vec<DamageFunctionSpec>,
    pub weights: Vec<f64>,
}

impl Default for BmaSpec {
    fn default() -> Self {
        let forms: Vec<_> = DamageForm::BMA
            .iter()
            .map(|f| DamageFunctionSpec::default_for(*f))
            .collect();
        let w = 1.0 / forms.len() as f64;
        Self {
            weights: vec![w; forms.len()],
            forms,
        }
    }
}

impl BmaSpec {
    pub fn validate(&self) -> Result<(), ImpactError> {
        check_weights(&self.forms, &self.weights)?;
        self.forms.iter().try_for_each(DamageFunctionSpec::validate)
    }
}

fn check_weights(specs: &[DamageFunctionSpec], weights: &[f64]) -> Result<(), ImpactError> {
    if specs.is_empty() || specs.len() != weights.len() {
        return Err(ImpactError::InvalidSpec(format!(
            "model average needs one weight per form, got {} forms and {} weights",
            specs.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(ImpactError::InvalidSpec(
            "model-average weights must be non-negative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > BMA_WEIGHT_TOLERANCE {
        return Err(ImpactError::WeightSum(sum));
    }
    Ok(())
}

/// Weighted mean of the evaluated forms.
pub fn bma_damage(specs: &[DamageFunctionSpec], weights: &[f64], t: f64) -> Result<f64, ImpactError> {
    check_weights(specs, weights)?;
    let mut total = 0.0;
    for (spec, w) in specs.iter().zip(weights) {
        total += w * aggregate_damage_function(spec, t)?;
    }
    Ok(total)
}

//! Baseline and pulse runs, national social costs of carbon, and the Monte
//! Carlo layer.

pub mod monte_carlo;
pub mod run;
pub mod scc;
pub mod world;

use thiserror::Error;

use crate::climate::ClimateError;
use crate::economy::EconomyError;
use crate::emissions::EmissionsError;
use crate::impacts::ImpactError;
use crate::scenario::ScenarioError;

pub use monte_carlo::{monte_carlo_scc, DrawRecord, MonteCarloOutput, UncertaintyConfig};
pub use run::{run_world, DrawParams, Trajectory};
pub use scc::{
    clamp_nscc, deterministic_scc, discount_factors, global_scc_single_region, nscc, sum_nscc, CountryScc,
    DiscountMode, DrawStats, PreferenceParams, SccMode, SccRequest, SccResult, NSCC_BOUND,
};
pub use world::{ModelSettings, World};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Economy(#[from] EconomyError),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
    #[error(transparent)]
    Climate(#[from] ClimateError),
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("non-finite {quantity} for {iso} in {year}")]
    NonFinite {
        quantity: &'static str,
        iso: String,
        year: i32,
    },
    #[error("trajectories are not comparable: {0}")]
    MismatchedRuns(String),
    #[error("non-positive consumption {value} in {year}")]
    NonPositiveConsumption { year: i32, value: f64 },
    #[error("invalid preferences: {0}")]
    InvalidPreferences(String),
    #[error("invalid uncertainty configuration: {0}")]
    InvalidUncertainty(String),
    #[error("{failed} of {draws} draws failed, more than 1%")]
    TooManyFailures { failed: usize, draws: usize },
}

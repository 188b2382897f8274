//! JSON run configuration and input loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::emissions::{EmissionsVector, DEFAULT_PULSE_GTC};
use crate::engine::{DiscountMode, EngineError, ModelSettings, PreferenceParams, SccRequest, UncertaintyConfig, World};
use crate::impacts::{
    calibrate_national_params, load_benchmarks, Benchmarks, Calibration, DamageFunctionSpec, DamageMode, ImpactError,
};
use crate::scenario::{
    load_base_emissions, load_country_table, load_scenario, read_bytes, CountryTable, LoadOptions, ScenarioError,
    ScenarioSet, Variable, COUNTRY_VARIABLES,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Benchmarks(ImpactError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub countries: PathBuf,
    /// directory holding the `scenario_<variable>.csv` files
    pub scenarios: PathBuf,
    pub emissions: PathBuf,
    pub benchmarks: PathBuf,
    #[serde(default)]
    pub interpolate: bool,
}

fn default_preferences() -> Vec<PreferenceParams> {
    vec![
        PreferenceParams::new(0.01, 1.0),
        PreferenceParams::new(0.03, 1.0),
        PreferenceParams::new(0.03, 2.0),
    ]
}

fn default_pulse() -> f64 {
    DEFAULT_PULSE_GTC
}

fn default_eval_years() -> Vec<i32> {
    vec![2025, 2100]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_sweep() -> Vec<f64> {
    vec![0.0, -0.36]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default = "default_preferences")]
    pub preferences: Vec<PreferenceParams>,
    #[serde(default)]
    pub discounting: DiscountMode,
    #[serde(default = "default_pulse")]
    pub pulse_size_gtc: f64,
    #[serde(default = "default_eval_years")]
    pub eval_years: Vec<i32>,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    /// coefficients for named aggregate forms; placeholders otherwise
    #[serde(default)]
    pub damage_functions: Vec<DamageFunctionSpec>,
    #[serde(default = "default_sweep")]
    pub elasticity_sweep: Vec<f64>,
}

impl RunConfig {
    /// Reads a config; input paths are taken relative to the config's directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.inputs.countries);
        resolve(&mut cfg.inputs.scenarios);
        resolve(&mut cfg.inputs.emissions);
        resolve(&mut cfg.inputs.benchmarks);
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.preferences.is_empty() {
            return Err(ConfigError::Invalid("preference grid is empty".into()));
        }
        if self.eval_years.is_empty() {
            return Err(ConfigError::Invalid("no evaluation years".into()));
        }
        for y in &self.eval_years {
            if *y < self.model.start_year || *y > self.model.horizon {
                return Err(ConfigError::Invalid(format!(
                    "evaluation year {y} outside {}..={}",
                    self.model.start_year, self.model.horizon
                )));
            }
        }
        for (name, p) in [
            ("countries", &self.inputs.countries),
            ("scenarios", &self.inputs.scenarios),
            ("emissions", &self.inputs.emissions),
            ("benchmarks", &self.inputs.benchmarks),
        ] {
            if !p.exists() {
                return Err(ConfigError::Invalid(format!(
                    "{name} input {} does not exist",
                    p.display()
                )));
            }
        }
        self.model.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for p in &self.preferences {
            p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        self.uncertainty
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn request(&self) -> SccRequest {
        SccRequest {
            preferences: self.preferences.clone(),
            discounting: self.discounting,
            pulse_size: self.pulse_size_gtc,
            eval_years: self.eval_years.clone(),
        }
    }

    /// Coefficients for a named form: the config's entry if present, else placeholders.
    pub fn damage_spec(&self, name: &str) -> Result<DamageMode, ImpactError> {
        let mode = DamageMode::from_name(name)?;
        Ok(match mode {
            DamageMode::Aggregate(spec) => DamageMode::Aggregate(
                self.damage_functions
                    .iter()
                    .find(|s| s.form == spec.form)
                    .copied()
                    .unwrap_or(spec),
            ),
            other => other,
        })
    }

    pub fn scenario_files(&self) -> Vec<PathBuf> {
        COUNTRY_VARIABLES
            .iter()
            .chain(&[Variable::Cfc11, Variable::Cfc12])
            .map(|v| self.inputs.scenarios.join(v.file_name()))
            .collect()
    }

    /// Every input file in a fixed order.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files = vec![
            self.inputs.countries.clone(),
            self.inputs.emissions.clone(),
            self.inputs.benchmarks.clone(),
        ];
        files.extend(self.scenario_files());
        files
    }

    /// SHA-256 over the effective config and the bytes of every input file.
    /// Worker count and output directory do not affect results and are left out.
    pub fn hash(&self) -> Result<String, ConfigError> {
        let cfg = RunConfig {
            workers: None,
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&cfg).map_err(|e| ConfigError::Invalid(e.to_string()))?);
        for f in self.input_files() {
            let name = f
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            h.update(name.as_bytes());
            h.update(read_bytes(&f)?);
        }
        Ok(hex::encode(h.finalize()))
    }

    /// `(path, sha256)` for every input file.
    pub fn input_digests(&self) -> Result<Vec<(PathBuf, String)>, ConfigError> {
        self.input_files()
            .into_iter()
            .map(|f| {
                let d = Sha256::digest(read_bytes(&f)?);
                Ok((f, hex::encode(d)))
            })
            .collect()
    }
}

/// Everything read from disk for one configuration.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub table: CountryTable,
    pub scenario: ScenarioSet,
    pub emissions: Vec<EmissionsVector>,
    pub benchmarks: Benchmarks,
}

impl ModelInputs {
    pub fn load(cfg: &RunConfig) -> Result<ModelInputs, ConfigError> {
        let table = load_country_table(&cfg.inputs.countries)?;
        let opts = LoadOptions {
            interpolate: cfg.inputs.interpolate,
        };
        let scenario = load_scenario(&cfg.inputs.scenarios, &table, opts)?;
        let emissions = load_base_emissions(&cfg.inputs.emissions, &table)?;
        let benchmarks = load_benchmarks(&cfg.inputs.benchmarks).map_err(ConfigError::Benchmarks)?;
        Ok(ModelInputs {
            table,
            scenario,
            emissions,
            benchmarks,
        })
    }

    pub fn calibrate(&self, settings: &ModelSettings) -> Result<Calibration, ImpactError> {
        calibrate_national_params(
            &self.table,
            &self.benchmarks,
            &settings.sectors,
            &settings.benchmark_climate(),
        )
    }

    /// Calibrated world for `settings`.
    pub fn world(&self, settings: &ModelSettings) -> Result<World, EngineError> {
        let cal = self.calibrate(settings)?;
        World::new(
            self.table.clone(),
            &self.scenario,
            self.emissions.clone(),
            Some(&cal),
            settings.clone(),
        )
    }
}

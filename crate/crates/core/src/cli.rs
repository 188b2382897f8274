//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 calibration error, 4 engine error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    compare_damage_functions, correlations, covariates, default_comparison_forms, elasticity_sweep, relative_change,
};
use crate::config::{ConfigError, ModelInputs, RunConfig};
use crate::engine::{
    deterministic_scc, monte_carlo_scc, run_world, DrawParams, EngineError, PreferenceParams, SccRequest, SccResult,
    World,
};
use crate::impacts::{ImpactError, CALIBRATION_TOLERANCE};
use crate::parallel::Execution;
use crate::report::{self, InputDigest, Manifest};

#[derive(Debug, Parser)]
#[command(name = "nscc", version, about = "National social cost of carbon simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// pure rate of time preference; replaces the preference grid
    #[arg(long, global = true)]
    pub prtp: Option<f64>,
    /// elasticity of marginal utility; replaces the preference grid
    #[arg(long, global = true)]
    pub rra: Option<f64>,
    /// income elasticity of damages
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// `sectoral`, `bma`, or an aggregate form name
    #[arg(long = "damage-fn", global = true)]
    pub damage_fn: Option<String>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long = "output-dir", global = true)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate national impact parameters and write calibration.json
    Calibrate,
    /// Run one trajectory and write states.csv and climate.csv
    Run {
        /// use the sampled parameters of this Monte Carlo draw
        #[arg(long)]
        draw: Option<usize>,
    },
    /// National and global SCC tables
    Scc {
        #[arg(long)]
        deterministic_only: bool,
    },
    /// SCC tables plus per-draw output
    Montecarlo,
    /// Global SCC sum under each damage function
    CompareDamageFunctions {
        #[arg(long, value_delimiter = ',')]
        forms: Vec<String>,
    },
    /// Covariate correlations and the income-elasticity sweep
    Diagnostics {
        /// also compare the first two evaluation years
        #[arg(long)]
        relative_change: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Run { .. } => "run",
            Command::Scc { .. } => "scc",
            Command::Montecarlo => "montecarlo",
            Command::CompareDamageFunctions { .. } => "compare-damage-functions",
            Command::Diagnostics { .. } => "diagnostics",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Calibration(String),
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Calibration(_) => 3,
            CliError::Engine(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Calibration(m) | CliError::Engine(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match &e {
            EngineError::Impact(ImpactError::Calibration(_) | ImpactError::Uncalibrated(_)) => {
                CliError::Calibration(e.to_string())
            }
            EngineError::Settings(_) | EngineError::InvalidPreferences(_) | EngineError::InvalidUncertainty(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Engine(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Engine(format!("cannot write output: {e}"))
    }
}

/// Parses `std::env::args`, runs the command, and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Applies command-line overrides to a loaded configuration.
pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(seed) = o.seed {
        cfg.uncertainty.seed = seed;
    }
    if let Some(draws) = o.draws {
        cfg.uncertainty.draws = draws;
    }
    if o.prtp.is_some() || o.rra.is_some() {
        let first = cfg
            .preferences
            .first()
            .copied()
            .unwrap_or(PreferenceParams::new(0.03, 1.0));
        cfg.preferences = vec![PreferenceParams::new(
            o.prtp.unwrap_or(first.prtp),
            o.rra.unwrap_or(first.rra),
        )];
    }
    if let Some(eps) = o.epsilon {
        cfg.model.income_elasticity = eps;
    }
    if let Some(name) = &o.damage_fn {
        cfg.model.damage = cfg.damage_spec(name).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    if let Some(dir) = &o.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(())
}

struct Session {
    cfg: RunConfig,
    inputs: ModelInputs,
    exec: Execution,
    started: Instant,
    outputs: Vec<String>,
}

impl Session {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out(name);
        let f = File::create(&path).map_err(|e| CliError::Engine(format!("cannot create {}: {e}", path.display())))?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }

    fn world(&self) -> Result<World, CliError> {
        Ok(self.inputs.world(&self.cfg.model)?)
    }

    fn manifest(&mut self, command: &str, results: &[SccResult], mc: Option<(usize, usize)>) -> Result<(), CliError> {
        let inputs = self
            .cfg
            .input_digests()?
            .into_iter()
            .map(|(p, sha256)| InputDigest {
                path: p.display().to_string(),
                sha256,
            })
            .collect();
        let (draws, failed_draws) = mc.unwrap_or((0, 0));
        let m = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.cfg.hash()?,
            seed: mc.map(|_| self.cfg.uncertainty.seed),
            draws,
            failed_draws,
            workers: self.cfg.workers,
            inputs,
            clamp_counts: Manifest::clamp_counts(results),
            outputs: self.outputs.clone(),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        let f = self.create("manifest.json")?;
        serde_json::to_writer_pretty(f, &m).map_err(|e| CliError::Engine(format!("cannot write manifest: {e}")))
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .overrides
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    apply_overrides(&mut cfg, &cli.overrides)?;
    cfg.validate()?;
    let inputs = ModelInputs::load(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let exec = Execution::with_workers(cfg.workers);
    let mut s = Session {
        cfg,
        inputs,
        exec,
        started: Instant::now(),
        outputs: Vec::new(),
    };
    let name = cli.command.name();
    log::info!("{name}: writing to {}", s.cfg.output_dir.display());
    match &cli.command {
        Command::Calibrate => calibrate(&mut s),
        Command::Run { draw } => run(&mut s, *draw),
        Command::Scc { deterministic_only } => scc(&mut s, *deterministic_only, false),
        Command::Montecarlo => scc(&mut s, false, true),
        Command::CompareDamageFunctions { forms } => compare(&mut s, forms),
        Command::Diagnostics { relative_change } => diagnostics(&mut s, *relative_change),
    }
}

fn calibrate(s: &mut Session) -> Result<(), CliError> {
    let cal = s
        .inputs
        .calibrate(&s.cfg.model)
        .map_err(|e| CliError::Calibration(e.to_string()))?;
    let f = s.create("calibration.json")?;
    serde_json::to_writer_pretty(f, &cal).map_err(|e| CliError::Engine(e.to_string()))?;
    let residual = cal.max_residual();
    log::info!(
        "calibrated {} countries, max relative residual {residual:e}",
        cal.countries.len()
    );
    s.manifest("calibrate", &[], None)?;
    if residual > CALIBRATION_TOLERANCE {
        return Err(CliError::Calibration(format!(
            "regional benchmarks reproduced only to {residual:e}"
        )));
    }
    Ok(())
}

fn run(s: &mut Session, draw: Option<usize>) -> Result<(), CliError> {
    let world = s.world()?;
    let params = match draw {
        Some(d) => s.cfg.uncertainty.sample(&world, d),
        None => DrawParams::central(&world),
    };
    let traj = run_world(&world, &params, None)?;
    if traj.floor_events > 0 {
        log::warn!("{} country-years hit a population or income floor", traj.floor_events);
    }
    report::write_states(s.create("states.csv")?, &traj)?;
    report::write_climate(s.create("climate.csv")?, &traj)?;
    s.manifest("run", &[], None)
}

fn write_tables(s: &mut Session, results: &[SccResult]) -> Result<(), CliError> {
    for year in &s.cfg.eval_years.clone() {
        let rows: Vec<&SccResult> = results.iter().filter(|r| r.eval_year == *year).collect();
        let f = s.create(&report::nscc_file_name(*year))?;
        report::write_nscc_table(f, &s.inputs.table, &rows)?;
    }
    report::write_global_sums(s.create("global_sums.csv")?, results)?;
    Ok(())
}

fn scc(s: &mut Session, deterministic_only: bool, per_draw: bool) -> Result<(), CliError> {
    let world = s.world()?;
    let req = s.cfg.request();
    if deterministic_only {
        let results = deterministic_scc(&world, &req, s.exec)?;
        write_tables(s, &results)?;
        return s.manifest("scc", &results, None);
    }
    let mc = monte_carlo_scc(&world, &s.cfg.uncertainty, &req, s.exec)?;
    write_tables(s, &mc.results)?;
    if per_draw {
        for year in &s.cfg.eval_years.clone() {
            let f = s.create(&report::montecarlo_file_name(*year))?;
            report::write_draws(f, &mc, &req, *year, &s.inputs.table)?;
        }
    }
    let failed = mc.draws.iter().filter(|d| d.outcome.is_err()).count();
    let name = if per_draw { "montecarlo" } else { "scc" };
    s.manifest(name, &mc.results, Some((s.cfg.uncertainty.draws, failed)))
}

fn compare(s: &mut Session, forms: &[String]) -> Result<(), CliError> {
    let names = if forms.is_empty() {
        default_comparison_forms()
    } else {
        forms.to_vec()
    };
    let modes = names
        .iter()
        .map(|n| {
            s.cfg
                .damage_spec(n)
                .map(|m| (n.clone(), m))
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let world = s.world()?;
    let rows = compare_damage_functions(
        &world,
        &modes,
        s.cfg.eval_years[0],
        s.cfg.preferences[0],
        s.cfg.pulse_size_gtc,
        s.exec,
    )?;
    report::write_comparison(s.create("damage_comparison.csv")?, &rows)?;
    s.manifest("compare-damage-functions", &[], None)
}

/// NSCC by country for `year` under the first preference pair: read from
/// an existing table when present, preferring the uncertainty column.
fn nscc_for_year(s: &Session, world: &World, year: i32) -> Result<Vec<(String, f64)>, CliError> {
    let prefs = s.cfg.preferences[0];
    let path = s.out(&report::nscc_file_name(year));
    if path.exists() {
        let headers = report::read_headers(&path).map_err(CliError::Config)?;
        let unc = report::nscc_column(&prefs, "uncertainty");
        let col = if headers.contains(&unc) {
            unc
        } else {
            report::nscc_column(&prefs, "deterministic")
        };
        if let Ok(v) = report::read_nscc_column(&path, &col) {
            return Ok(v);
        }
        log::warn!("{} does not match the configuration; recomputing", path.display());
    }
    let req = SccRequest {
        preferences: vec![prefs],
        eval_years: vec![year],
        ..s.cfg.request()
    };
    let r = &deterministic_scc(world, &req, s.exec)?[0];
    Ok(r.countries.iter().map(|c| (c.iso.clone(), c.nscc)).collect())
}

fn diagnostics(s: &mut Session, with_relative_change: bool) -> Result<(), CliError> {
    let world = s.world()?;
    let year = s.cfg.eval_years[0];
    let nscc = nscc_for_year(s, &world, year)?;
    let cov = covariates(&s.inputs.table, &nscc).map_err(CliError::Config)?;
    report::write_covariates(s.create("nscc_covariates.csv")?, &cov)?;
    report::write_correlations(s.create("correlations.csv")?, &correlations(&cov))?;

    let req = SccRequest {
        preferences: vec![s.cfg.preferences[0]],
        eval_years: vec![year],
        ..s.cfg.request()
    };
    let sweep = elasticity_sweep(&world, &req, &s.cfg.elasticity_sweep, s.exec)?;
    report::write_sweep(s.create("elasticity_sweep.csv")?, &sweep)?;

    if with_relative_change {
        let [early, late] = match s.cfg.eval_years.as_slice() {
            [a, b, ..] => [*a, *b],
            _ => return Err(CliError::Config("relative change needs two evaluation years".into())),
        };
        let a = nscc_for_year(s, &world, early)?;
        let b = nscc_for_year(s, &world, late)?;
        write_relative_change(s, early, late, &a, &b)?;
    }
    s.manifest("diagnostics", &[], None)
}

fn write_relative_change(
    s: &mut Session,
    early: i32,
    late: i32,
    a: &[(String, f64)],
    b: &[(String, f64)],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(s.create("nscc_relative_change.csv")?);
    w.write_record([
        "iso".to_string(),
        format!("nscc_{early}"),
        format!("nscc_{late}"),
        "relative_change".into(),
    ])?;
    for (iso, x) in a {
        let Some((_, y)) = b.iter().find(|(i, _)| i == iso) else {
            continue;
        };
        w.write_record([
            iso.clone(),
            x.to_string(),
            y.to_string(),
            relative_change(*x, *y).to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Engine(e.to_string()))?;
    Ok(())
}

/// Convenience for callers holding a path rather than parsed arguments.
pub fn run_with_config(command: Command, config: &Path, overrides: Overrides) -> Result<(), CliError> {
    execute(&Cli {
        command,
        overrides: Overrides {
            config: Some(config.to_path_buf()),
            ..overrides
        },
    })
}

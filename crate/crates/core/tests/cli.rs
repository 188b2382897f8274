mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nscc_core::config::RunConfig;

use common::toy_config_path;

fn nscc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nscc")).args(args).output().unwrap()
}

fn with_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    nscc(&args)
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

/// Copy of the toy data in a scratch directory.
fn toy_copy(dir: &Path) -> PathBuf {
    let src = toy_config_path();
    for entry in std::fs::read_dir(src.parent().unwrap()).unwrap() {
        let entry = entry.unwrap();
        if entry.path().is_file() {
            std::fs::copy(entry.path(), dir.join(entry.file_name())).unwrap();
        }
    }
    dir.join("config.json")
}

#[test]
fn missing_config_is_a_config_error() {
    let out = nscc(&["scc"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nscc(&["scc", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_damage_function_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = with_config("scc", &toy_config_path(), tmp.path(), &["--damage-fn", "quartic"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("quartic"));
}

#[test]
fn missing_benchmark_is_a_calibration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_copy(tmp.path());
    let bench = tmp.path().join("benchmarks.csv");
    let text = std::fs::read_to_string(&bench).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("SOUTH,water")).collect();
    std::fs::write(&bench, kept.join("\n") + "\n").unwrap();
    let out = with_config("calibrate", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scc_tables_have_documented_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = with_config("scc", &toy_config_path(), tmp.path(), &["--deterministic-only"]);
    assert!(out.status.success());
    assert_eq!(
        header(&tmp.path().join("nscc_2025.csv")),
        "iso,name,region,prtp0.01_rra1_deterministic,prtp0.03_rra1_deterministic,prtp0.03_rra2_deterministic"
    );
    assert_eq!(
        header(&tmp.path().join("global_sums.csv")),
        "eval_year,prtp,rra,global_sum_deterministic,single_region_scc,clamp_count"
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "scc");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3 + 10);
}

#[test]
fn overrides_narrow_the_preference_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = with_config(
        "montecarlo",
        &toy_config_path(),
        tmp.path(),
        &["--draws", "20", "--prtp", "0.02", "--rra", "1.5", "--epsilon", "-0.36"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        header(&tmp.path().join("nscc_2100.csv")),
        "iso,name,region,prtp0.02_rra1.5_uncertainty,prtp0.02_rra1.5_deterministic"
    );
    let draws = std::fs::read_to_string(tmp.path().join("montecarlo_2025.csv")).unwrap();
    assert_eq!(draws.lines().next().unwrap(), "draw,status,ecs,iso,prtp,rra,nscc");
    assert_eq!(draws.lines().count(), 1 + 20 * 4);
}

#[test]
fn run_and_diagnostics_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config_path();
    assert!(with_config("run", &cfg, tmp.path(), &["--draw", "3"]).status.success());
    assert!(header(&tmp.path().join("states.csv")).starts_with("year,iso,population,capital"));
    assert!(header(&tmp.path().join("climate.csv")).starts_with("year,co2_emissions_gtc,co2_ppm"));

    let out = with_config("diagnostics", &cfg, tmp.path(), &["--relative-change"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(tmp.path().join("elasticity_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 4);
    let corr = std::fs::read_to_string(tmp.path().join("correlations.csv")).unwrap();
    assert!(corr.contains("gdp_per_capita,"));
    assert!(tmp.path().join("nscc_relative_change.csv").exists());
}

#[test]
fn damage_comparison_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = with_config(
        "compare-damage-functions",
        &toy_config_path(),
        tmp.path(),
        &["--forms", "nordhaus,hope"],
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("damage_comparison.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("nordhaus,"));
    assert!(lines[2].starts_with("hope,"));

    let out = with_config("compare-damage-functions", &toy_config_path(), tmp.path(), &[]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("damage_comparison.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 14);
}

#[test]
fn config_hash_tracks_inputs_and_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let path = toy_copy(tmp.path());
    let cfg = RunConfig::load(&path).unwrap();
    let h0 = cfg.hash().unwrap();
    assert_eq!(RunConfig::load(&path).unwrap().hash().unwrap(), h0);

    let mut other = cfg.clone();
    other.workers = Some(3);
    other.output_dir = PathBuf::from("elsewhere");
    assert_eq!(other.hash().unwrap(), h0);

    let mut other = cfg.clone();
    other.pulse_size_gtc = 0.002;
    assert_ne!(other.hash().unwrap(), h0);

    let em = tmp.path().join("emissions.csv");
    let text = std::fs::read_to_string(&em).unwrap();
    std::fs::write(&em, text.replacen("4.0", "4.01", 1)).unwrap();
    assert_ne!(cfg.hash().unwrap(), h0);
}

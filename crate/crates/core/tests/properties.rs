mod common;

use nscc_core::climate::{step_temperature, ClimateParams};
use nscc_core::economy::{step_economy, CountryState, EconomyParams, YearInputs};
use nscc_core::emissions::PulseSpec;
use nscc_core::engine::{
    deterministic_scc, monte_carlo_scc, run_world, DiscountMode, DrawParams, ModelSettings, PreferenceParams,
    SccRequest, UncertaintyConfig, World,
};
use nscc_core::impacts::{DamageForm, DamageFunctionSpec, DamageMode};
use nscc_core::parallel::Execution;
use nscc_core::scenario::{
    extrapolate_series, load_country_table, write_country_table, CountryTable, ExtrapolationMode, TimeSeries,
};
use proptest::prelude::*;

use common::*;

fn world(tfp: f64, patterns: &[f64], form: DamageForm) -> World {
    let records = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let pop = 1e8 * (1.0 + i as f64);
            record(
                &format!("C{i:02}"),
                if i % 2 == 0 { "R1" } else { "R2" },
                pop,
                pop * (5e3 + 4e3 * i as f64),
                *p,
            )
        })
        .collect();
    let table = CountryTable::new(records).unwrap();
    let scenario = uniform_scenario(&table, 2019, 2080, tfp, 0.003);
    let settings = ModelSettings {
        horizon: 2150,
        damage: DamageMode::Aggregate(DamageFunctionSpec::default_for(form)),
        ..ModelSettings::default()
    };
    synthetic_world(table, &scenario, settings)
}

fn request(prefs: &[(f64, f64)], year: i32) -> SccRequest {
    SccRequest {
        preferences: prefs.iter().map(|(p, r)| PreferenceParams::new(*p, *r)).collect(),
        discounting: DiscountMode::National,
        pulse_size: 0.001,
        eval_years: vec![year],
    }
}

proptest! {
    #[test]
    fn country_table_round_trip(rows in proptest::collection::vec((1e3f64..1e10, 1e2f64..1e5, 0.3f64..2.5, 0.0f64..1.0), 1..8)) {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (pop, inc, pattern, urban))| {
                let mut r = record(&format!("X{i}"), "R", *pop, pop * inc, *pattern);
                r.urban_share = *urban;
                r
            })
            .collect();
        let table = CountryTable::new(records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("countries.csv");
        write_country_table(&table, std::fs::File::create(&path).unwrap()).unwrap();
        prop_assert_eq!(load_country_table(&path).unwrap(), table);
    }

    #[test]
    fn extrapolation_is_idempotent(values in proptest::collection::vec(0.1f64..10.0, 12..40), extra in 0i32..100, rate in any::<bool>()) {
        let mode = if rate { ExtrapolationMode::ConstantRate } else { ExtrapolationMode::ConstantLevel };
        let s = TimeSeries::new(2000, values);
        let target = s.end_year() + extra;
        let once = extrapolate_series(&s, target, mode).unwrap();
        prop_assert_eq!(extrapolate_series(&once, target, mode).unwrap(), once.clone());
        prop_assert_eq!(extrapolate_series(&s, s.end_year() - 3, mode).unwrap(), s);
    }

    #[test]
    fn bounded_forcing_bounds_temperature(
        t0 in -2.0f64..6.0,
        forcing in proptest::collection::vec(-8.0f64..8.0, 1..300),
        tau in 0.6f64..200.0,
        ecs in 1.0f64..6.0,
    ) {
        let params = ClimateParams { ecs, response_time: tau, ..ClimateParams::default() };
        // fixed point of |T'| <= |1 - 1/tau|·|T| + M/tau
        let m = ecs * 8.0 / params.f2x;
        let bound = t0.abs().max(m / (tau * (1.0 - (1.0 - 1.0 / tau).abs()))) + 1e-9;
        let mut t = t0;
        for f in forcing {
            t = step_temperature(t, &params, f);
            prop_assert!(t.abs() <= bound, "{t} exceeds {bound}");
        }
    }

    #[test]
    fn income_rises_after_convergence(g in 0.001f64..0.04, s in 0.1f64..0.4) {
        let params = EconomyParams::default();
        let rec = record("E", "R", 1e7, 1e11, 1.0);
        let inputs = YearInputs { population: 1e7, tfp_growth: g, savings_rate: s };
        let mut st = CountryState::initial(&rec, &params, 2000, &inputs);
        for _ in 0..200 {
            st = step_economy(&st, &params, &inputs, 0.0, "E").unwrap();
        }
        for _ in 0..200 {
            let next = step_economy(&st, &params, &inputs, 0.0, "E").unwrap();
            prop_assert!(next.per_capita_income >= st.per_capita_income);
            st = next;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pulse_only_changes_its_cell(year in 2019i32..2100, size in 0.0005f64..1.0, tfp in 0.0f64..0.03) {
        let w = world(tfp, &[1.0, 1.4, 0.8], DamageForm::Hope);
        let draw = DrawParams::central(&w);
        let b = run_world(&w, &draw, None).unwrap();
        let p = run_world(&w, &draw, Some(&PulseSpec::co2(year, size))).unwrap();
        for k in 0..b.years() {
            let total: f64 = b.countries.iter().map(|c| c.emissions[k].co2).sum();
            let g = b.global_emissions[k].co2;
            prop_assert!((g - total).abs() <= 1e-12 * g.abs());
            for (cb, cp) in b.countries.iter().zip(&p.countries) {
                prop_assert_eq!(cb.emissions[k], cp.emissions[k]);
            }
            prop_assert_eq!(p.global_emissions[k], b.global_emissions[k]);
            let y = b.start_year + k as i32;
            if y < year {
                prop_assert_eq!(p.climate[k].co2_ppm, b.climate[k].co2_ppm);
            } else {
                prop_assert!(p.climate[k].co2_ppm > b.climate[k].co2_ppm);
            }
            prop_assert!(p.climate[k].t_global >= b.climate[k].t_global);
        }
    }

    #[test]
    fn global_sum_matches_entries_and_preferences_order(
        tfp in 0.005f64..0.03,
        patterns in proptest::collection::vec(0.5f64..2.0, 1..5),
        form in prop_oneof![Just(DamageForm::Nordhaus), Just(DamageForm::Hope), Just(DamageForm::TolParabolic)],
    ) {
        let w = world(tfp, &patterns, form);
        let req = request(&[(0.01, 1.0), (0.03, 1.0), (0.03, 2.0)], 2030);
        let rs = deterministic_scc(&w, &req, Execution::Sequential).unwrap();
        for r in &rs {
            let s: f64 = r.countries.iter().map(|c| c.nscc).sum();
            prop_assert!((r.global_sum - s).abs() <= 1e-9 * s.abs().max(1.0));
        }
        for c in 0..w.len() {
            let v: Vec<f64> = rs.iter().map(|r| r.countries[c].unclamped).collect();
            if v[1] > 0.0 {
                prop_assert!(v[0] > v[1], "prtp: {:?}", v);
                prop_assert!(v[1] > v[2], "rra: {:?}", v);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn seed_and_config_fix_every_number(seed in any::<u64>(), workers in 2usize..6) {
        let w = world(0.015, &[1.0, 1.3], DamageForm::Nordhaus);
        let unc = UncertaintyConfig { draws: 6, seed, ..UncertaintyConfig::default() };
        let req = request(&[(0.03, 1.0)], 2025);
        let a = monte_carlo_scc(&w, &unc, &req, Execution::Sequential).unwrap();
        let b = monte_carlo_scc(&w, &unc, &req, Execution::Parallel { workers: Some(workers) }).unwrap();
        prop_assert_eq!(&a, &b);
        for d in &a.draws {
            for v in d.outcome.as_ref().unwrap().iter().flatten() {
                prop_assert!(v.abs() <= 200.0);
            }
        }
    }
}

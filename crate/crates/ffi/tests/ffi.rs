use std::ffi::{CStr, CString};
use std::ptr;

use airshock::forecast::{forecast_corpus, ForecastConfig};
use airshock::impact::{assess, EconomyProfile, RegionFilter};
use airshock::ingest::{generate_synthetic_corpus, SyntheticProfile};
use airshock::scenario::{apply_scenario, builtin_curve, BuiltinScenario};
use airshock_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = airshock_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pipeline_matches_library() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(airshock_corpus_synthetic(11, 300, &mut corpus), AirshockStatus::Ok);
        assert_eq!(airshock_corpus_route_count(corpus), 300);

        let mut base = ptr::null_mut();
        assert_eq!(airshock_forecast_corpus(corpus, 23, &mut base), AirshockStatus::Ok);
        assert_eq!(airshock_forecasts_len(base), 300);

        let mut curve = ptr::null_mut();
        assert_eq!(airshock_curve_builtin(c("COVID-12").as_ptr(), &mut curve), AirshockStatus::Ok);
        let mut m4 = 0.0;
        assert_eq!(airshock_curve_multiplier(curve, 4, &mut m4), AirshockStatus::Ok);
        assert_eq!(m4, 0.5);

        let mut scen = ptr::null_mut();
        assert_eq!(airshock_forecasts_apply_curve(base, curve, &mut scen), AirshockStatus::Ok);

        let mut profile = ptr::null_mut();
        assert_eq!(airshock_profile_resolve(c("world").as_ptr(), &mut profile), AirshockStatus::Ok);

        let mut table = ptr::null_mut();
        let status = airshock_assess(base, scen, c("global").as_ptr(), profile, 1.0, &mut table);
        assert_eq!(status, AirshockStatus::Ok);
        let mut yearly = AirshockLossRow::default();
        assert_eq!(airshock_loss_table_row(table, 4, &mut yearly), AirshockStatus::Ok);

        // Same computation straight through the library.
        let lib_corpus = generate_synthetic_corpus(11, 300, &SyntheticProfile::default()).unwrap();
        let lib_base = forecast_corpus(&lib_corpus, &ForecastConfig::default()).unwrap();
        let covid = builtin_curve(BuiltinScenario::Covid12);
        let lib_scen: Vec<_> = lib_base.iter().map(|f| apply_scenario(f, &covid)).collect();
        let lib_table = assess(
            &lib_base,
            &lib_scen,
            &RegionFilter::global(),
            lib_corpus.airports(),
            &EconomyProfile::world(),
            1.0,
        )
        .unwrap();
        let y = lib_table.yearly();
        assert_eq!(yearly.revenue_loss_musd, y.revenue_loss_musd);
        assert_eq!(yearly.loss_share, y.loss_share);
        assert_eq!(yearly.jobs_lost_m, y.jobs_lost_m);
        assert_eq!(yearly.gdp_lost_busd, y.gdp_lost_busd);
        assert_eq!(yearly.economy_gdp_share, y.economy_gdp_share);

        let mut pax = 0.0;
        assert_eq!(airshock_forecasts_total_passengers(base, 2020, &mut pax), AirshockStatus::Ok);
        let lib_pax: f64 = lib_base.iter().map(|f| f.passengers_in_year(2020)).sum();
        assert_eq!(pax, lib_pax);

        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("forecast.csv");
        let out_c = c(out.to_str().unwrap());
        assert_eq!(airshock_forecasts_write_csv(base, out_c.as_ptr()), AirshockStatus::Ok);
        assert!(std::fs::read_to_string(&out).unwrap().starts_with("origin,"));

        airshock_loss_table_free(table);
        airshock_profile_free(profile);
        airshock_forecasts_free(scen);
        airshock_curve_free(curve);
        airshock_forecasts_free(base);
        airshock_corpus_free(corpus);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut corpus = ptr::null_mut();
        let status = airshock_corpus_load(c("/no/such/series.csv").as_ptr(), c("/no/such/a.csv").as_ptr(), &mut corpus);
        assert_eq!(status, AirshockStatus::Io);
        assert!(corpus.is_null());
        assert!(last_error().contains("/no/such/"));

        assert_eq!(airshock_corpus_load(ptr::null(), ptr::null(), &mut corpus), AirshockStatus::InvalidArgument);
        assert!(last_error().contains("series_path"));

        let mut curve = ptr::null_mut();
        assert_eq!(airshock_curve_builtin(c("FLU").as_ptr(), &mut curve), AirshockStatus::Validation);
        assert_eq!(airshock_corpus_synthetic(1, 0, &mut corpus), AirshockStatus::Validation);

        assert_eq!(airshock_curve_builtin(c("SARS").as_ptr(), &mut curve), AirshockStatus::Ok);
        let mut v = 0.0;
        assert_eq!(airshock_curve_multiplier(curve, 13, &mut v), AirshockStatus::Validation);
        assert_eq!(airshock_curve_multiplier(curve, 1, ptr::null_mut()), AirshockStatus::InvalidArgument);
        airshock_curve_free(curve);

        let bad = [0xffu8, 0xfe, 0];
        let mut profile = ptr::null_mut();
        assert_eq!(
            airshock_profile_resolve(bad.as_ptr().cast(), &mut profile),
            AirshockStatus::InvalidArgument
        );

        // Null handles are tolerated by the accessors and destructors.
        assert_eq!(airshock_corpus_route_count(ptr::null()), 0);
        airshock_corpus_free(ptr::null_mut());
        airshock_forecasts_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/airshock.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("AIRSHOCK_STATUS_PANIC = 7"));
    let version = unsafe { CStr::from_ptr(airshock_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

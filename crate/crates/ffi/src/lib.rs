//! C ABI over the `airshock` library.
//!
//! Objects cross the boundary as opaque handles created by `*_load`/`*_new`
//! style functions and released with the matching `*_free`. Every fallible
//! call returns an [`AirshockStatus`]; on failure a message is available from
//! [`airshock_last_error_message`] on the same thread. Panics never unwind
//! into the caller; they are reported as `AIRSHOCK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use airshock::forecast::{forecast_corpus, write_forecast_csv, ForecastConfig, RouteForecast};
use airshock::impact::{assess, EconomyProfile, LossTable, RegionFilter};
use airshock::ingest::{filter_frequent, generate_synthetic_corpus, parse_route_corpus, AirportTable, RouteCorpus, SyntheticProfile};
use airshock::output::write_atomic;
use airshock::scenario::{builtin_curve_by_name, load_curve, ScenarioCurve};
use airshock::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AirshockStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    AirportCode = 4,
    Validation = 5,
    Internal = 6,
    Panic = 7,
}

/// Route corpus with its airport table.
pub struct AirshockCorpus(RouteCorpus);

/// Baseline or scenario forecasts, carrying the airport table used for region filters.
pub struct AirshockForecasts {
    forecasts: Vec<RouteForecast>,
    airports: AirportTable,
}

pub struct AirshockCurve(ScenarioCurve);

pub struct AirshockProfile(EconomyProfile);

pub struct AirshockLossTable(LossTable);

/// One period of a loss table. Periods are indexed 0..=3 for Q1..Q4 and 4 for the year.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AirshockLossRow {
    pub revenue_loss_musd: f64,
    pub loss_share: f64,
    pub jobs_lost_m: f64,
    pub gdp_lost_busd: f64,
    pub economy_gdp_share: f64,
}

enum FfiError {
    Core(Error),
    Argument(String),
}

impl From<Error> for FfiError {
    fn from(e: Error) -> Self {
        FfiError::Core(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> AirshockStatus
where
    F: FnOnce() -> Result<(), FfiError>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AirshockStatus::Ok,
        Ok(Err(FfiError::Argument(m))) => {
            set_last_error(m);
            AirshockStatus::InvalidArgument
        }
        Ok(Err(FfiError::Core(e))) => {
            set_last_error(e.to_string());
            match e {
                Error::Io { .. } => AirshockStatus::Io,
                Error::Parse { .. } => AirshockStatus::Parse,
                Error::AirportCode(_) => AirshockStatus::AirportCode,
                Error::Validation(_) => AirshockStatus::Validation,
                Error::Internal(_) => AirshockStatus::Internal,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AirshockStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Argument(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| FfiError::Argument(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or_else(|| FfiError::Argument(format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Argument("output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Argument("output pointer is null".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn airshock_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn airshock_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a route-series CSV and its airport table.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_corpus_load(
    series_path: *const c_char,
    airports_path: *const c_char,
    out: *mut *mut AirshockCorpus,
) -> AirshockStatus {
    guard(|| {
        let s = str_arg(series_path, "series_path")?;
        let a = str_arg(airports_path, "airports_path")?;
        put(out, AirshockCorpus(parse_route_corpus(Path::new(s), Path::new(a))?))
    })
}

/// Synthetic corpus from the default synthetic profile.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_corpus_synthetic(
    seed: u64,
    n_routes: usize,
    out: *mut *mut AirshockCorpus,
) -> AirshockStatus {
    guard(|| {
        let corpus = generate_synthetic_corpus(seed, n_routes, &SyntheticProfile::default())?;
        put(out, AirshockCorpus(corpus))
    })
}

/// Routes whose peak monthly passengers reach `threshold`, as a new corpus.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_corpus_filter(
    corpus: *const AirshockCorpus,
    threshold: u32,
    out: *mut *mut AirshockCorpus,
) -> AirshockStatus {
    guard(|| {
        let c = ref_arg(corpus, "corpus")?;
        put(out, AirshockCorpus(filter_frequent(&c.0, threshold)))
    })
}

/// Number of routes, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn airshock_corpus_route_count(corpus: *const AirshockCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn airshock_corpus_free(corpus: *mut AirshockCorpus) {
    free(corpus)
}

/// Baseline forecasts for every route of `corpus`, with the default Wuhan
/// origin and the given January cut-off day (23 reproduces the default).
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecast_corpus(
    corpus: *const AirshockCorpus,
    wuhan_cutoff_day: u32,
    out: *mut *mut AirshockForecasts,
) -> AirshockStatus {
    guard(|| {
        let c = ref_arg(corpus, "corpus")?;
        let config = ForecastConfig { wuhan_cutoff_day, ..ForecastConfig::default() };
        let forecasts = forecast_corpus(&c.0, &config)?;
        put(out, AirshockForecasts { forecasts, airports: c.0.airports().clone() })
    })
}

/// # Safety
/// `forecasts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_len(forecasts: *const AirshockForecasts) -> usize {
    forecasts.as_ref().map_or(0, |f| f.forecasts.len())
}

/// Sum of expected passengers over all routes for `year` (2019 covers Nov-Dec only).
///
/// # Safety
/// `forecasts` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_total_passengers(
    forecasts: *const AirshockForecasts,
    year: i32,
    out: *mut f64,
) -> AirshockStatus {
    guard(|| {
        let f = ref_arg(forecasts, "forecasts")?;
        put_value(out, f.forecasts.iter().map(|r| r.passengers_in_year(year)).sum())
    })
}

/// Sum of expected revenue (US$) over all routes for `year`.
///
/// # Safety
/// `forecasts` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_total_revenue(
    forecasts: *const AirshockForecasts,
    year: i32,
    out: *mut f64,
) -> AirshockStatus {
    guard(|| {
        let f = ref_arg(forecasts, "forecasts")?;
        put_value(out, f.forecasts.iter().map(|r| r.revenue_in_year(year)).sum())
    })
}

/// Writes the forecasts as CSV, atomically.
///
/// # Safety
/// `forecasts` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_write_csv(
    forecasts: *const AirshockForecasts,
    path: *const c_char,
) -> AirshockStatus {
    guard(|| {
        let f = ref_arg(forecasts, "forecasts")?;
        let p = str_arg(path, "path")?;
        write_atomic(Path::new(p), |w| write_forecast_csv(&f.forecasts, w))?;
        Ok(())
    })
}

/// Scales 2020 passenger volumes by `curve`, producing new forecasts.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_apply_curve(
    forecasts: *const AirshockForecasts,
    curve: *const AirshockCurve,
    out: *mut *mut AirshockForecasts,
) -> AirshockStatus {
    guard(|| {
        let f = ref_arg(forecasts, "forecasts")?;
        let c = ref_arg(curve, "curve")?;
        let adjusted = f.forecasts.iter().map(|r| airshock::scenario::apply_scenario(r, &c.0)).collect();
        put(out, AirshockForecasts { forecasts: adjusted, airports: f.airports.clone() })
    })
}

/// # Safety
/// `forecasts` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn airshock_forecasts_free(forecasts: *mut AirshockForecasts) {
    free(forecasts)
}

/// A bundled scenario curve by name (SARS, MERS, COVID-12, COVID-L, EUROC, EUROC-12, EUROC-L).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_curve_builtin(name: *const c_char, out: *mut *mut AirshockCurve) -> AirshockStatus {
    guard(|| {
        let n = str_arg(name, "name")?;
        put(out, AirshockCurve(builtin_curve_by_name(n)?))
    })
}

/// Loads a `name=` / `m1=`..`m12=` curve file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_curve_load(path: *const c_char, out: *mut *mut AirshockCurve) -> AirshockStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, AirshockCurve(load_curve(Path::new(p))?))
    })
}

/// Multiplier of 2020 month `month` (1..=12).
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_curve_multiplier(
    curve: *const AirshockCurve,
    month: u8,
    out: *mut f64,
) -> AirshockStatus {
    guard(|| {
        let c = ref_arg(curve, "curve")?;
        if !(1..=12).contains(&month) {
            return Err(Error::validation(format!("month {month} outside 1..=12")).into());
        }
        put_value(out, c.0.multipliers()[month as usize - 1])
    })
}

/// # Safety
/// `curve` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn airshock_curve_free(curve: *mut AirshockCurve) {
    free(curve)
}

/// `world`, `eu27`, or a path to a profile file.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_profile_resolve(
    name_or_path: *const c_char,
    out: *mut *mut AirshockProfile,
) -> AirshockStatus {
    guard(|| {
        let n = str_arg(name_or_path, "name_or_path")?;
        let profile = EconomyProfile::resolve(n)?;
        profile.validate()?;
        put(out, AirshockProfile(profile))
    })
}

/// # Safety
/// `profile` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn airshock_profile_free(profile: *mut AirshockProfile) {
    free(profile)
}

/// Loss table of `scenario` against `baseline` for a region spec such as
/// `global` or `origin_in:EU27`. The baseline's airport table resolves countries.
///
/// # Safety
/// Handles must be live; `region` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_assess(
    baseline: *const AirshockForecasts,
    scenario: *const AirshockForecasts,
    region: *const c_char,
    profile: *const AirshockProfile,
    pass_through: f64,
    out: *mut *mut AirshockLossTable,
) -> AirshockStatus {
    guard(|| {
        let b = ref_arg(baseline, "baseline")?;
        let s = ref_arg(scenario, "scenario")?;
        let p = ref_arg(profile, "profile")?;
        let filter: RegionFilter = str_arg(region, "region")?.parse()?;
        filter.check_countries(&b.airports)?;
        let table = assess(&b.forecasts, &s.forecasts, &filter, &b.airports, &p.0, pass_through)?;
        put(out, AirshockLossTable(table.labelled(filter.label(), "")))
    })
}

/// Row `period` (0..=3 quarters, 4 for the year) of a loss table.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airshock_loss_table_row(
    table: *const AirshockLossTable,
    period: usize,
    out: *mut AirshockLossRow,
) -> AirshockStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        let r = t
            .0
            .rows
            .get(period)
            .ok_or_else(|| Error::validation(format!("period {period} outside 0..=4")))?;
        put_value(
            out,
            AirshockLossRow {
                revenue_loss_musd: r.revenue_loss_musd,
                loss_share: r.loss_share,
                jobs_lost_m: r.jobs_lost_m,
                gdp_lost_busd: r.gdp_lost_busd,
                economy_gdp_share: r.economy_gdp_share,
            },
        )
    })
}

/// # Safety
/// `table` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn airshock_loss_table_free(table: *mut AirshockLossTable) {
    free(table)
}

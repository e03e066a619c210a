//! Baseline forecast: a periodic-intensity Poisson model realised as twelve
//! calendar-month quadratic trends per route.
//!
//! For each route and calendar month the yearly values are regressed on
//! `(1, t, t^2)` with `t = year - 2010`. The fitted polynomial evaluated at the
//! target year is the Poisson mean for that month. Fares go through the same
//! machinery with a route-level mean as fallback.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::calendar::{self, YearMonth, HORIZON_LEN};
use crate::error::{csv_error, Error, Result};
use crate::ingest::{AirportCode, RouteCorpus, RouteKey, RouteSeries};

pub const FORECAST_HEADER: [&str; 6] = [
    "origin",
    "dest",
    "year",
    "month",
    "expected_passengers",
    "expected_fare",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fallback {
    Quadratic,
    /// One or two points: the model is their mean.
    Mean,
    /// No history: the model is identically zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonthModel {
    pub month: u8,
    /// `value(t) = coeffs[0] + coeffs[1] * t + coeffs[2] * t^2`.
    pub coeffs: [f64; 3],
    pub n_points: usize,
    pub fallback: Fallback,
}

impl MonthModel {
    pub fn zero(month: u8) -> Self {
        MonthModel {
            month,
            coeffs: [0.0; 3],
            n_points: 0,
            fallback: Fallback::Zero,
        }
    }

    /// Raw polynomial value, without clamping.
    pub fn evaluate(&self, year_index: i32) -> f64 {
        let t = year_index as f64;
        let [a, b, c] = self.coeffs;
        a + t * (b + t * c)
    }
}

/// Least-squares fit of `value` on `(1, t, t^2)`.
///
/// Uses a modified Gram-Schmidt QR factorisation of the design matrix; with
/// fewer than three points the model degrades to the sample mean (or zero).
pub fn fit_month_model(month: u8, points: &[(i32, f64)]) -> Result<MonthModel> {
    let mut seen: Vec<i32> = points.iter().map(|p| p.0).collect();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::validation(format!(
            "month {month}: duplicate year index {}",
            w[0]
        )));
    }
    if let Some((t, v)) = points.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
        return Err(Error::validation(format!(
            "month {month}: value {v} at year index {t} must be finite and non-negative"
        )));
    }
    let n = points.len();
    if n == 0 {
        return Ok(MonthModel::zero(month));
    }
    if n < 3 {
        let mean = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
        return Ok(MonthModel {
            month,
            coeffs: [mean, 0.0, 0.0],
            n_points: n,
            fallback: Fallback::Mean,
        });
    }
    Ok(MonthModel {
        month,
        coeffs: quadratic_least_squares(points),
        n_points: n,
        fallback: Fallback::Quadratic,
    })
}

fn quadratic_least_squares(points: &[(i32, f64)]) -> [f64; 3] {
    let n = points.len();
    let mut q: [Vec<f64>; 3] = [
        vec![1.0; n],
        points.iter().map(|p| p.0 as f64).collect(),
        points.iter().map(|p| (p.0 as f64).powi(2)).collect(),
    ];
    let mut r = [[0.0f64; 3]; 3];
    for j in 0..3 {
        for i in 0..j {
            let proj: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = proj;
            let (head, tail) = q.split_at_mut(j);
            for (x, qi) in tail[0].iter_mut().zip(&head[i]) {
                *x -= proj * qi;
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        r[j][j] = norm;
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut qty = [0.0f64; 3];
    for (j, slot) in qty.iter_mut().enumerate() {
        *slot = q[j].iter().zip(points).map(|(qv, p)| qv * p.1).sum();
    }
    let mut coeffs = [0.0f64; 3];
    for j in (0..3).rev() {
        let tail: f64 = (j + 1..3).map(|k| r[j][k] * coeffs[k]).sum();
        coeffs[j] = (qty[j] - tail) / r[j][j];
    }
    coeffs
}

/// Model value at `year_index`, clamped at zero.
pub fn predict_month(model: &MonthModel, year_index: i32) -> f64 {
    match model.fallback {
        Fallback::Zero => 0.0,
        Fallback::Mean => model.coeffs[0].max(0.0),
        Fallback::Quadratic => {
            let v = model.evaluate(year_index);
            if v.is_finite() {
                v.max(0.0)
            } else {
                0.0
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForecastMonth {
    pub year: i32,
    pub month: u8,
    pub expected_passengers: f64,
    pub expected_fare: f64,
}

impl ForecastMonth {
    pub fn period(&self) -> YearMonth {
        YearMonth::new(self.year, self.month).expect("valid forecast month")
    }

    pub fn revenue(&self) -> f64 {
        self.expected_passengers * self.expected_fare
    }
}

/// Monthly expectations for Nov 2019 through Dec 2020.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteForecast {
    pub key: RouteKey,
    pub months: [ForecastMonth; HORIZON_LEN],
}

impl RouteForecast {
    /// A forecast with the given per-month values, in horizon order.
    pub fn from_values(key: RouteKey, passengers: [f64; HORIZON_LEN], fares: [f64; HORIZON_LEN]) -> Self {
        let mut months = [ForecastMonth {
            year: 0,
            month: 1,
            expected_passengers: 0.0,
            expected_fare: 0.0,
        }; HORIZON_LEN];
        for (i, ym) in calendar::horizon().enumerate() {
            months[i] = ForecastMonth {
                year: ym.year(),
                month: ym.month(),
                expected_passengers: passengers[i].max(0.0),
                expected_fare: fares[i].max(0.0),
            };
        }
        RouteForecast { key, months }
    }

    pub fn zero(key: RouteKey) -> Self {
        Self::from_values(key, [0.0; HORIZON_LEN], [0.0; HORIZON_LEN])
    }

    pub fn month(&self, ym: YearMonth) -> Option<&ForecastMonth> {
        calendar::horizon_index(ym).map(|i| &self.months[i])
    }

    pub fn passengers_in_year(&self, year: i32) -> f64 {
        self.months
            .iter()
            .filter(|m| m.year == year)
            .map(|m| m.expected_passengers)
            .sum()
    }

    pub fn revenue_in_year(&self, year: i32) -> f64 {
        self.months.iter().filter(|m| m.year == year).map(ForecastMonth::revenue).sum()
    }
}

/// Fits the twelve calendar-month models of a series for passengers and fares.
pub struct RouteModels {
    pub passengers: [MonthModel; 12],
    /// Quadratic fare model per month; `None` when the month has fewer than three fare points.
    pub fares: [Option<MonthModel>; 12],
    /// Route-level mean fare (0 without fare data), used for months without a fare model.
    pub fare_fallback: f64,
}

impl RouteModels {
    pub fn predict_fare(&self, ym: YearMonth) -> f64 {
        match &self.fares[ym.month() as usize - 1] {
            Some(model) => predict_month(model, ym.year_index()),
            None => self.fare_fallback,
        }
    }
}

pub fn fit_route_models(series: &RouteSeries) -> RouteModels {
    let mut pax: [Vec<(i32, f64)>; 12] = Default::default();
    let mut fares: [Vec<(i32, f64)>; 12] = Default::default();
    let (mut fare_sum, mut fare_count) = (0.0f64, 0usize);
    for obs in series.observations() {
        let idx = obs.month as usize - 1;
        let t = obs.period().year_index();
        pax[idx].push((t, obs.passengers as f64));
        if let Some(f) = obs.avg_fare {
            fares[idx].push((t, f));
            fare_sum += f;
            fare_count += 1;
        }
    }
    let fare_fallback = if fare_count > 0 {
        fare_sum / fare_count as f64
    } else {
        0.0
    };
    // A validated RouteSeries has unique periods and non-negative values, so fitting cannot fail.
    let fit = |m: usize, pts: &[(i32, f64)]| {
        fit_month_model(m as u8 + 1, pts).expect("validated route series")
    };
    let passengers = std::array::from_fn(|m| fit(m, &pax[m]));
    let fares = std::array::from_fn(|m| (fares[m].len() >= 3).then(|| fit(m, &fares[m])));
    RouteModels {
        passengers,
        fares,
        fare_fallback,
    }
}

/// Baseline forecast of one route over the 14-month horizon.
pub fn forecast_route(series: &RouteSeries) -> RouteForecast {
    let models = fit_route_models(series);
    let mut pax = [0.0; HORIZON_LEN];
    let mut fare = [0.0; HORIZON_LEN];
    for (i, ym) in calendar::horizon().enumerate() {
        let m = ym.month() as usize - 1;
        pax[i] = predict_month(&models.passengers[m], ym.year_index());
        fare[i] = models.predict_fare(ym);
    }
    RouteForecast::from_values(series.key(), pax, fare)
}

/// Scales the January 2020 expectation by `(cutoff_day - 1) / days_in_month`.
pub fn apply_wuhan_adjustment(
    forecast: &RouteForecast,
    cutoff_day: u32,
    days_in_month: u32,
) -> Result<RouteForecast> {
    if cutoff_day < 1 || cutoff_day > days_in_month {
        return Err(Error::validation(format!(
            "cutoff day {cutoff_day} outside 1..={days_in_month}"
        )));
    }
    let factor = (cutoff_day - 1) as f64 / days_in_month as f64;
    let mut out = forecast.clone();
    let jan = YearMonth::new(calendar::SCENARIO_YEAR, 1).unwrap();
    if let Some(i) = calendar::horizon_index(jan) {
        out.months[i].expected_passengers *= factor;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastConfig {
    pub wuhan_origin_code: AirportCode,
    pub wuhan_cutoff_day: u32,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            wuhan_origin_code: "WUH".parse().unwrap(),
            wuhan_cutoff_day: 23,
        }
    }
}

/// Forecasts every route of the corpus, in route-key order.
///
/// Routes are fitted in parallel; each fit is a pure function of its series so
/// the result does not depend on the thread count. Routes originating at the
/// configured Wuhan airport get the January cut-off adjustment.
pub fn forecast_corpus(corpus: &RouteCorpus, config: &ForecastConfig) -> Result<Vec<RouteForecast>> {
    if !(1..=31).contains(&config.wuhan_cutoff_day) {
        return Err(Error::validation(format!(
            "wuhan_cutoff_day {} outside 1..=31",
            config.wuhan_cutoff_day
        )));
    }
    corpus
        .routes()
        .par_iter()
        .map(|series| {
            let f = forecast_route(series);
            if series.key().origin == config.wuhan_origin_code {
                apply_wuhan_adjustment(&f, config.wuhan_cutoff_day, 31)
            } else {
                Ok(f)
            }
        })
        .collect()
}

/// Poisson count paths drawn around a forecast's monthly means.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoissonSample {
    pub key: RouteKey,
    pub seed: u64,
    n_paths: usize,
    draws: Vec<u64>,
}

impl PoissonSample {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn path(&self, i: usize) -> &[u64] {
        &self.draws[i * HORIZON_LEN..(i + 1) * HORIZON_LEN]
    }

    pub fn month_draws(&self, month_index: usize) -> impl Iterator<Item = u64> + '_ {
        self.draws.iter().skip(month_index).step_by(HORIZON_LEN).copied()
    }

    pub fn month_mean(&self, month_index: usize) -> f64 {
        self.month_draws(month_index).map(|d| d as f64).sum::<f64>() / self.n_paths as f64
    }
}

/// Draws `n_paths` independent monthly Poisson paths with means given by the forecast.
pub fn sample_poisson_paths(forecast: &RouteForecast, n_paths: usize, seed: u64) -> Result<PoissonSample> {
    if n_paths < 1 {
        return Err(Error::validation("n_paths must be at least 1"));
    }
    let dists: Vec<Option<Poisson<f64>>> = forecast
        .months
        .iter()
        .map(|m| {
            let mean = m.expected_passengers;
            if mean > 0.0 {
                Poisson::new(mean)
                    .map(Some)
                    .map_err(|e| Error::validation(format!("Poisson mean {mean}: {e}")))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(n_paths * HORIZON_LEN);
    for _ in 0..n_paths {
        for d in &dists {
            draws.push(d.as_ref().map_or(0, |d| d.sample(&mut rng) as u64));
        }
    }
    Ok(PoissonSample {
        key: forecast.key,
        seed,
        n_paths,
        draws,
    })
}

pub fn write_forecast_csv<W: Write>(forecasts: &[RouteForecast], writer: W) -> Result<()> {
    let werr = |e: csv::Error| Error::Internal(format!("writing forecast csv: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FORECAST_HEADER).map_err(werr)?;
    for f in forecasts {
        let (o, d) = (f.key.origin.to_string(), f.key.destination.to_string());
        for m in &f.months {
            w.write_record([
                o.as_str(),
                d.as_str(),
                &m.year.to_string(),
                &m.month.to_string(),
                &m.expected_passengers.to_string(),
                &m.expected_fare.to_string(),
            ])
            .map_err(werr)?;
        }
    }
    w.flush().map_err(|e| Error::Internal(format!("writing forecast csv: {e}")))?;
    Ok(())
}

pub fn load_forecast_csv(path: &Path) -> Result<Vec<RouteForecast>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_forecast_csv(std::io::BufReader::new(f), &path.display().to_string())
}

/// Reads a forecast CSV written by [`write_forecast_csv`]. Every route must
/// list the 14 horizon months in order.
pub fn read_forecast_csv<R: Read>(input: R, source: &str) -> Result<Vec<RouteForecast>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if header.iter().collect::<Vec<_>>() != FORECAST_HEADER {
        return Err(Error::parse(source, 1, format!("expected header {}", FORECAST_HEADER.join(","))));
    }
    let mut out: Vec<RouteForecast> = Vec::new();
    let mut current: Option<(RouteKey, usize, [f64; HORIZON_LEN], [f64; HORIZON_LEN])> = None;
    let expected: Vec<YearMonth> = calendar::horizon().collect();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: String| Error::parse(source, line, m);
        let key = RouteKey::parse(&rec[0], &rec[1]).map_err(|e| bad(e.to_string()))?;
        let year: i32 = rec[2].parse().map_err(|_| bad("bad year".into()))?;
        let month: u8 = rec[3].parse().map_err(|_| bad("bad month".into()))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
                _ => Err(bad(format!("{what} {s:?} must be a non-negative number"))),
            }
        };
        let pax = num(&rec[4], "expected_passengers")?;
        let fare = num(&rec[5], "expected_fare")?;
        if current.as_ref().is_some_and(|c| c.0 != key) {
            let (k, n, p, f) = current.take().unwrap();
            if n != HORIZON_LEN {
                return Err(bad(format!("route {k} has {n} months, expected {HORIZON_LEN}")));
            }
            out.push(RouteForecast::from_values(k, p, f));
        }
        let entry = current.get_or_insert((key, 0, [0.0; HORIZON_LEN], [0.0; HORIZON_LEN]));
        if entry.1 >= HORIZON_LEN || YearMonth::new(year, month) != Some(expected[entry.1]) {
            return Err(bad(format!("route {key}: unexpected month {year}-{month:02}")));
        }
        entry.2[entry.1] = pax;
        entry.3[entry.1] = fare;
        entry.1 += 1;
    }
    if let Some((k, n, p, f)) = current {
        if n != HORIZON_LEN {
            return Err(Error::parse(source, 0, format!("route {k} has {n} months, expected {HORIZON_LEN}")));
        }
        out.push(RouteForecast::from_values(k, p, f));
    }
    out.sort_by_key(|f| f.key);
    if let Some(w) = out.windows(2).find(|w| w[0].key == w[1].key) {
        return Err(Error::parse(source, 0, format!("route {} listed twice", w[0].key)));
    }
    Ok(out)
}

//! Historical route corpus: parsing, validation, frequency filtering and synthetic generation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::calendar::{YearMonth, BASE_YEAR, HISTORY_END, HISTORY_START};
use crate::error::{csv_error, Error, Result};
use crate::kv::KeyValues;

pub const SERIES_HEADER: [&str; 6] = ["origin", "dest", "year", "month", "passengers", "avg_fare"];
pub const AIRPORTS_HEADER: [&str; 3] = ["code", "country", "name"];

/// IATA-style three-letter airport code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AirportCode([u8; 3]);

impl AirportCode {
    pub fn as_str(&self) -> &str {
        // Only ASCII uppercase bytes are ever stored.
        std::str::from_utf8(&self.0).unwrap_or("???")
    }

    /// Deterministic code for the `index`-th synthetic airport (AAA, AAB, ...).
    pub fn synthetic(index: usize) -> Self {
        let i = index % (26 * 26 * 26);
        AirportCode([
            b'A' + (i / 676) as u8,
            b'A' + ((i / 26) % 26) as u8,
            b'A' + (i % 26) as u8,
        ])
    }
}

impl FromStr for AirportCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.as_bytes() {
            [a, b, c] if [a, b, c].iter().all(|ch| ch.is_ascii_uppercase()) => {
                Ok(AirportCode([*a, *b, *c]))
            }
            _ => Err(Error::AirportCode(s.to_string())),
        }
    }
}

impl fmt::Display for AirportCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for AirportCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Origin to final-destination itinerary. Direct and multi-stop journeys are not distinguished.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RouteKey {
    pub origin: AirportCode,
    pub destination: AirportCode,
}

impl RouteKey {
    pub fn new(origin: AirportCode, destination: AirportCode) -> Result<Self> {
        if origin == destination {
            return Err(Error::validation(format!(
                "route origin and destination are both {origin}"
            )));
        }
        Ok(RouteKey {
            origin,
            destination,
        })
    }

    pub fn parse(origin: &str, destination: &str) -> Result<Self> {
        Self::new(origin.parse()?, destination.parse()?)
    }
}

impl fmt::Display for RouteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.origin, self.destination)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonthlyObservation {
    pub year: u16,
    pub month: u8,
    pub passengers: u32,
    /// Average ticket price in US$ per passenger.
    pub avg_fare: Option<f64>,
}

impl MonthlyObservation {
    pub fn period(&self) -> YearMonth {
        YearMonth::new(self.year as i32, self.month).expect("validated month")
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let Some(ym) = YearMonth::new(self.year as i32, self.month) else {
            return Err(format!("month {} out of range 1-12", self.month));
        };
        if !ym.in_history() {
            return Err(format!(
                "{ym} outside the historical window {HISTORY_START}..{HISTORY_END}"
            ));
        }
        if let Some(fare) = self.avg_fare {
            if !(fare.is_finite() && fare >= 0.0) {
                return Err(format!("avg_fare {fare} must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Monthly history of one route, sorted by period, with its cached maximum monthly volume.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteSeries {
    key: RouteKey,
    observations: Vec<MonthlyObservation>,
    max_monthly_passengers: u32,
}

impl RouteSeries {
    pub fn new(key: RouteKey, mut observations: Vec<MonthlyObservation>) -> Result<Self> {
        for obs in &observations {
            obs.validate()
                .map_err(|m| Error::validation(format!("{key}: {m}")))?;
        }
        observations.sort_by_key(|o| (o.year, o.month));
        if let Some(w) = observations
            .windows(2)
            .find(|w| (w[0].year, w[0].month) == (w[1].year, w[1].month))
        {
            return Err(Error::validation(format!(
                "{key}: duplicate observation for {}",
                w[0].period()
            )));
        }
        let max_monthly_passengers = observations.iter().map(|o| o.passengers).max().unwrap_or(0);
        Ok(RouteSeries {
            key,
            observations,
            max_monthly_passengers,
        })
    }

    pub fn key(&self) -> RouteKey {
        self.key
    }

    pub fn observations(&self) -> &[MonthlyObservation] {
        &self.observations
    }

    /// The route's `maxP` statistic.
    pub fn max_monthly_passengers(&self) -> u32 {
        self.max_monthly_passengers
    }

    pub fn passengers_in_year(&self, year: i32) -> u64 {
        self.observations
            .iter()
            .filter(|o| o.year as i32 == year)
            .map(|o| o.passengers as u64)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AirportRef {
    pub code: AirportCode,
    /// ISO 3166-1 alpha-2.
    pub country: String,
    pub name: String,
}

/// Airport reference table keyed by code.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AirportTable {
    by_code: BTreeMap<AirportCode, AirportRef>,
}

impl AirportTable {
    pub fn new(airports: impl IntoIterator<Item = AirportRef>) -> Result<Self> {
        let mut by_code = BTreeMap::new();
        for a in airports {
            validate_country(&a.country)?;
            let code = a.code;
            if by_code.insert(code, a).is_some() {
                return Err(Error::validation(format!("duplicate airport code {code}")));
            }
        }
        Ok(AirportTable { by_code })
    }

    pub fn get(&self, code: AirportCode) -> Option<&AirportRef> {
        self.by_code.get(&code)
    }

    pub fn country_of(&self, code: AirportCode) -> Option<&str> {
        self.by_code.get(&code).map(|a| a.country.as_str())
    }

    pub fn has_country(&self, country: &str) -> bool {
        self.by_code.values().any(|a| a.country == country)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AirportRef> {
        self.by_code.values()
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }
}

pub fn validate_country(country: &str) -> Result<()> {
    let ok = country.len() == 2 && country.bytes().all(|b| b.is_ascii_uppercase());
    if ok {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "invalid country code {country:?}: expected ISO 3166-1 alpha-2"
        )))
    }
}

/// Immutable corpus of route series (sorted by key) plus the airport table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RouteCorpus {
    routes: Vec<RouteSeries>,
    airports: AirportTable,
}

impl RouteCorpus {
    pub fn new(routes: Vec<RouteSeries>, airports: AirportTable) -> Result<Self> {
        let mut routes = routes;
        routes.sort_by_key(|r| r.key);
        if let Some(w) = routes.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(Error::validation(format!("duplicate route {}", w[0].key)));
        }
        Ok(RouteCorpus { routes, airports })
    }

    pub fn routes(&self) -> &[RouteSeries] {
        &self.routes
    }

    pub fn airports(&self) -> &AirportTable {
        &self.airports
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn get(&self, key: &RouteKey) -> Option<&RouteSeries> {
        self.routes
            .binary_search_by(|r| r.key.cmp(key))
            .ok()
            .map(|i| &self.routes[i])
    }

    /// Whether both airports of `key` resolve to a country.
    pub fn is_resolved(&self, key: &RouteKey) -> bool {
        self.airports.get(key.origin).is_some() && self.airports.get(key.destination).is_some()
    }

    /// Routes with at least one airport missing from the reference table.
    /// They stay in global totals and drop out of region-filtered ones.
    pub fn unresolved_routes(&self) -> impl Iterator<Item = RouteKey> + '_ {
        self.routes
            .iter()
            .map(|r| r.key)
            .filter(|k| !self.is_resolved(k))
    }

    pub fn total_passengers(&self, year: i32) -> u64 {
        self.routes.iter().map(|r| r.passengers_in_year(year)).sum()
    }

    pub fn write_series_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let werr = |e: csv::Error| Error::Internal(format!("writing series csv: {e}"));
        w.write_record(SERIES_HEADER).map_err(werr)?;
        for route in &self.routes {
            let (o, d) = (route.key.origin.to_string(), route.key.destination.to_string());
            for obs in &route.observations {
                let fare = obs.avg_fare.map(|f| f.to_string()).unwrap_or_default();
                w.write_record([
                    o.as_str(),
                    d.as_str(),
                    &obs.year.to_string(),
                    &obs.month.to_string(),
                    &obs.passengers.to_string(),
                    &fare,
                ])
                .map_err(werr)?;
            }
        }
        w.flush().map_err(|e| Error::Internal(format!("writing series csv: {e}")))?;
        Ok(())
    }

    pub fn write_airports_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let werr = |e: csv::Error| Error::Internal(format!("writing airports csv: {e}"));
        w.write_record(AIRPORTS_HEADER).map_err(werr)?;
        for a in self.airports.iter() {
            w.write_record([a.code.as_str(), &a.country, &a.name]).map_err(werr)?;
        }
        w.flush().map_err(|e| Error::Internal(format!("writing airports csv: {e}")))?;
        Ok(())
    }
}

fn check_header(source: &str, got: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::parse(
            source,
            1,
            format!("expected header {:?}, got {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(r)
}

pub fn read_airports<R: Read>(input: R, source: &str) -> Result<AirportTable> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    check_header(source, &header, &AIRPORTS_HEADER)?;
    let mut seen: HashMap<AirportCode, u64> = HashMap::new();
    let mut airports = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let code: AirportCode = rec[0]
            .parse()
            .map_err(|e: Error| Error::parse(source, line, e.to_string()))?;
        validate_country(&rec[1]).map_err(|e| Error::parse(source, line, e.to_string()))?;
        if let Some(first) = seen.insert(code, line) {
            return Err(Error::parse(
                source,
                line,
                format!("duplicate airport code {code} (first seen on line {first})"),
            ));
        }
        airports.push(AirportRef {
            code,
            country: rec[1].to_string(),
            name: rec[2].to_string(),
        });
    }
    AirportTable::new(airports)
}

pub fn read_route_series<R: Read>(input: R, source: &str) -> Result<Vec<RouteSeries>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    check_header(source, &header, &SERIES_HEADER)?;

    let mut grouped: HashMap<RouteKey, Vec<(MonthlyObservation, u64)>> = HashMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(source, e)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::parse(source, line, msg);
        let key = RouteKey::parse(&record[0], &record[1]).map_err(|e| bad(e.to_string()))?;
        let year: u16 = record[2]
            .parse()
            .map_err(|_| bad(format!("year {:?} is not an integer", &record[2])))?;
        let month: u8 = record[3]
            .parse()
            .map_err(|_| bad(format!("month {:?} is not an integer", &record[3])))?;
        if record[4].is_empty() {
            return Err(bad("passengers is missing".into()));
        }
        let passengers: u32 = record[4]
            .parse()
            .map_err(|_| bad(format!("passengers {:?} is not a non-negative integer", &record[4])))?;
        let avg_fare = match &record[5] {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| bad(format!("avg_fare {s:?} is not a number")))?,
            ),
        };
        let obs = MonthlyObservation {
            year,
            month,
            passengers,
            avg_fare,
        };
        obs.validate().map_err(bad)?;
        grouped.entry(key).or_default().push((obs, line));
    }

    let mut routes = Vec::with_capacity(grouped.len());
    for (key, mut rows) in grouped {
        rows.sort_by_key(|(o, line)| (o.year, o.month, *line));
        if let Some(w) = rows
            .windows(2)
            .find(|w| (w[0].0.year, w[0].0.month) == (w[1].0.year, w[1].0.month))
        {
            return Err(Error::parse(
                source,
                w[1].1,
                format!(
                    "duplicate observation for {key} {} (first on line {})",
                    w[1].0.period(),
                    w[0].1
                ),
            ));
        }
        routes.push(RouteSeries::new(key, rows.into_iter().map(|(o, _)| o).collect())?);
    }
    Ok(routes)
}

/// Loads the route series CSV and the airport reference CSV.
pub fn parse_route_corpus(series_file: &Path, airports_file: &Path) -> Result<RouteCorpus> {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| Error::io(p, e));
    let airports = read_airports(
        std::io::BufReader::new(open(airports_file)?),
        &airports_file.display().to_string(),
    )?;
    let routes = read_route_series(
        std::io::BufReader::new(open(series_file)?),
        &series_file.display().to_string(),
    )?;
    RouteCorpus::new(routes, airports)
}

/// Keeps the routes whose `maxP` is at least `threshold`.
pub fn filter_frequent(corpus: &RouteCorpus, threshold: u32) -> RouteCorpus {
    RouteCorpus {
        routes: corpus
            .routes
            .iter()
            .filter(|r| r.max_monthly_passengers >= threshold)
            .cloned()
            .collect(),
        airports: corpus.airports.clone(),
    }
}

/// Fraction of the corpus' passengers in `year` carried by `subset`.
pub fn passenger_share(corpus: &RouteCorpus, subset: &RouteCorpus, year: i32) -> Result<f64> {
    let mut sub_total = 0u64;
    for r in subset.routes() {
        let Some(full) = corpus.get(&r.key) else {
            return Err(Error::validation(format!(
                "route {} is not part of the corpus",
                r.key
            )));
        };
        sub_total += full.passengers_in_year(year);
    }
    let total = corpus.total_passengers(year);
    if total == 0 {
        return Ok(1.0);
    }
    Ok(sub_total as f64 / total as f64)
}

/// Parameters of the synthetic corpus generator.
///
/// The monthly mean of every route is `base * (1 + growth * (year - 2010))^2 * season[month]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticProfile {
    pub base: f64,
    pub growth: f64,
    pub season: [f64; 12],
    pub fare_base: f64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        SyntheticProfile {
            base: 1000.0,
            growth: 0.05,
            season: [
                0.85, 0.80, 0.95, 1.00, 1.00, 1.10, 1.25, 1.30, 1.05, 0.95, 0.85, 0.90,
            ],
            fare_base: 150.0,
        }
    }
}

impl SyntheticProfile {
    pub fn mean(&self, year: i32, month: u8) -> f64 {
        let t = (year - BASE_YEAR) as f64;
        let trend = 1.0 + self.growth * t;
        self.base * trend * trend * self.season[month as usize - 1]
    }

    /// Reads `base`, `growth`, `season_1`..`season_12` and `fare_base`;
    /// missing keys keep their defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut p = SyntheticProfile::default();
        if let Some(v) = kv.f64("base")? {
            p.base = v;
        }
        if let Some(v) = kv.f64("growth")? {
            p.growth = v;
        }
        for m in 0..12 {
            if let Some(v) = kv.f64(&format!("season_{}", m + 1))? {
                p.season[m] = v;
            }
        }
        if let Some(v) = kv.f64("fare_base")? {
            p.fare_base = v;
        }
        for key in kv.keys() {
            let known = matches!(key, "base" | "growth" | "fare_base")
                || key
                    .strip_prefix("season_")
                    .and_then(|m| m.parse::<u8>().ok())
                    .is_some_and(|m| (1..=12).contains(&m));
            if !known {
                return Err(Error::parse(kv.source_name(), kv.line_of(key), format!("unknown key {key:?}")));
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("synthetic profile: {name} must be >= 0")))
            }
        };
        nonneg("base", self.base)?;
        nonneg("fare_base", self.fare_base)?;
        for (i, s) in self.season.iter().enumerate() {
            nonneg(&format!("season_{}", i + 1), *s)?;
        }
        if !self.growth.is_finite() {
            return Err(Error::validation("synthetic profile: growth must be finite"));
        }
        Ok(())
    }
}

const SYNTHETIC_COUNTRIES: [&str; 12] = [
    "IT", "FR", "DE", "ES", "NL", "US", "CN", "GB", "JP", "BR", "IN", "AU",
];
const CODE_SPACE: usize = 26 * 26 * 26;

fn synthetic_route_key(index: usize) -> RouteKey {
    let origin = index % CODE_SPACE;
    let dest = (origin + 1 + index / CODE_SPACE) % CODE_SPACE;
    RouteKey {
        origin: AirportCode::synthetic(origin),
        destination: AirportCode::synthetic(dest),
    }
}

fn synthetic_route(seed: u64, index: usize, profile: &SyntheticProfile) -> RouteSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let key = synthetic_route_key(index);
    let mut observations = Vec::with_capacity(118);
    let mut ym = HISTORY_START;
    while ym <= HISTORY_END {
        let mean = profile.mean(ym.year(), ym.month());
        let passengers = if mean > 0.0 {
            Poisson::new(mean).map(|d| d.sample(&mut rng)).unwrap_or(0.0) as u32
        } else {
            0
        };
        let jitter: f64 = rng.random_range(-0.05..=0.05);
        let avg_fare = (passengers > 0)
            .then(|| (profile.fare_base * (1.0 + jitter) * 100.0).round() / 100.0);
        observations.push(MonthlyObservation {
            year: ym.year() as u16,
            month: ym.month(),
            passengers,
            avg_fare,
        });
        ym = ym.succ();
    }
    let max_monthly_passengers = observations.iter().map(|o| o.passengers).max().unwrap_or(0);
    RouteSeries {
        key,
        observations,
        max_monthly_passengers,
    }
}

/// Deterministic synthetic corpus with Poisson monthly counts around `profile`'s means.
///
/// Route `i` draws from its own ChaCha stream, so the output does not depend on thread count.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_routes: usize,
    profile: &SyntheticProfile,
) -> Result<RouteCorpus> {
    if n_routes == 0 {
        return Err(Error::validation("n_routes must be at least 1"));
    }
    if n_routes > CODE_SPACE * (CODE_SPACE - 1) {
        return Err(Error::validation("n_routes exceeds the synthetic code space"));
    }
    profile.validate()?;
    let routes: Vec<RouteSeries> = (0..n_routes)
        .into_par_iter()
        .map(|i| synthetic_route(seed, i, profile))
        .collect();
    let used = n_routes.min(CODE_SPACE);
    let airports = AirportTable::new((0..used).map(|i| AirportRef {
        code: AirportCode::synthetic(i),
        country: SYNTHETIC_COUNTRIES[i % SYNTHETIC_COUNTRIES.len()].to_string(),
        name: format!("Synthetic {}", AirportCode::synthetic(i)),
    }))?;
    RouteCorpus::new(routes, airports)
}

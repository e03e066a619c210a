//! Departure-log analytics: daily counts, normalised trends, two-window
//! ratios by country or airline, and origin/destination country matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use crate::error::{csv_error, Error, Result};
use crate::ingest::{validate_country, AirportCode};

pub const DEPARTURES_HEADER: [&str; 6] = [
    "departure_time",
    "origin_airport",
    "origin_country",
    "dest_airport",
    "dest_country",
    "airline_code",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepartureEvent {
    pub departure_time: DateTime<Utc>,
    pub origin_airport: AirportCode,
    pub origin_country: String,
    pub destination_airport: Option<AirportCode>,
    pub destination_country: Option<String>,
    pub airline_code: Option<String>,
}

impl DepartureEvent {
    pub fn date(&self) -> NaiveDate {
        self.departure_time.date_naive()
    }
}

/// RFC 3339, `YYYY-MM-DD HH:MM:SS` (UTC) or integer Unix seconds.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        return s.parse::<i64>().ok().and_then(|secs| DateTime::from_timestamp(secs, 0));
    }
    None
}

/// Reads a departures CSV; trailing optional fields may be empty. Events are returned in time order.
pub fn read_departures<R: Read>(input: R, source: &str) -> Result<Vec<DepartureEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if header.iter().collect::<Vec<_>>() != DEPARTURES_HEADER {
        return Err(Error::parse(source, 1, format!("expected header {}", DEPARTURES_HEADER.join(","))));
    }
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: String| Error::parse(source, line, m);
        if rec.len() > DEPARTURES_HEADER.len() {
            return Err(bad(format!("expected at most {} fields", DEPARTURES_HEADER.len())));
        }
        let field = |i: usize| rec.get(i).filter(|s| !s.is_empty());
        let ts = field(0).ok_or_else(|| bad("departure_time is missing".into()))?;
        let departure_time =
            parse_timestamp(ts).ok_or_else(|| bad(format!("unparseable timestamp {ts:?}")))?;
        let origin_airport: AirportCode = field(1)
            .ok_or_else(|| bad("origin_airport is missing".into()))?
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        let origin_country = field(2).ok_or_else(|| bad("origin_country is missing".into()))?;
        validate_country(origin_country).map_err(|e| bad(e.to_string()))?;
        let destination_airport = field(3)
            .map(|s| s.parse::<AirportCode>().map_err(|e| bad(e.to_string())))
            .transpose()?;
        let destination_country = field(4)
            .map(|s| validate_country(s).map(|_| s.to_string()).map_err(|e| bad(e.to_string())))
            .transpose()?;
        events.push(DepartureEvent {
            departure_time,
            origin_airport,
            origin_country: origin_country.to_string(),
            destination_airport,
            destination_country,
            airline_code: field(5).map(str::to_string),
        });
    }
    events.sort_by(|a, b| {
        a.departure_time
            .cmp(&b.departure_time)
            .then_with(|| a.origin_airport.cmp(&b.origin_airport))
    });
    Ok(events)
}

pub fn load_departures(path: &Path) -> Result<Vec<DepartureEvent>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_departures(std::io::BufReader::new(f), &path.display().to_string())
}

/// Inclusive range of calendar days.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::validation(format!("inverted window {start}..{end}")));
        }
        Ok(DateWindow { start, end })
    }

    pub fn parse(start: &str, end: &str) -> Result<Self> {
        let d = |s: &str| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|_| Error::validation(format!("{s:?} is not a YYYY-MM-DD date")))
        };
        Self::new(d(start)?, d(end)?)
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }

    pub fn len_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    /// 19-25 March 2020.
    pub fn preset_late_march_2020() -> Self {
        Self::parse("2020-03-19", "2020-03-25").unwrap()
    }

    /// 30 January - 5 February 2020, the six-weeks-earlier reference.
    pub fn preset_early_february_2020() -> Self {
        Self::parse("2020-01-30", "2020-02-05").unwrap()
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "late_march_2020" => Ok(Self::preset_late_march_2020()),
            "early_february_2020" => Ok(Self::preset_early_february_2020()),
            _ => Err(Error::validation(format!(
                "unknown window preset {name:?}; expected late_march_2020 or early_february_2020"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupBy {
    Airport,
    Country,
    Airline,
}

impl GroupBy {
    pub fn key_of(self, e: &DepartureEvent) -> Option<String> {
        match self {
            GroupBy::Airport => Some(e.origin_airport.to_string()),
            GroupBy::Country => Some(e.origin_country.clone()),
            GroupBy::Airline => e.airline_code.clone(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Airport => "airport",
            GroupBy::Country => "country",
            GroupBy::Airline => "airline",
        }
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "airport" => Ok(GroupBy::Airport),
            "country" => Ok(GroupBy::Country),
            "airline" => Ok(GroupBy::Airline),
            _ => Err(Error::validation(format!(
                "unknown grouping {s:?}; expected airport, country or airline"
            ))),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DailySeries<T> {
    pub key: String,
    pub points: Vec<(NaiveDate, T)>,
}

/// Zero-filled daily departure counts per group inside `window`.
///
/// Every group seen anywhere in `events` gets a series, plus any group listed
/// in `groups`; events outside the window are ignored, events without the
/// grouping field are dropped.
pub fn daily_counts(
    events: &[DepartureEvent],
    group_by: GroupBy,
    window: DateWindow,
    groups: &[String],
) -> Vec<DailySeries<u64>> {
    let days = window.len_days();
    let mut counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for g in groups {
        counts.entry(g.clone()).or_insert_with(|| vec![0; days]);
    }
    for e in events {
        let Some(key) = group_by.key_of(e) else { continue };
        let slot = counts.entry(key).or_insert_with(|| vec![0; days]);
        let d = e.date();
        if window.contains(d) {
            slot[(d - window.start).num_days() as usize] += 1;
        }
    }
    counts
        .into_iter()
        .map(|(key, c)| DailySeries {
            key,
            points: window.days().zip(c).collect(),
        })
        .collect()
}

/// Divides every point by the series maximum; an all-zero series stays zero.
pub fn normalize_to_max(series: &DailySeries<u64>) -> DailySeries<f64> {
    let max = series.points.iter().map(|p| p.1).max().unwrap_or(0);
    DailySeries {
        key: series.key.clone(),
        points: series
            .points
            .iter()
            .map(|&(d, c)| (d, if max == 0 { 0.0 } else { c as f64 / max as f64 }))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowRatio {
    pub key: String,
    pub count_a: u64,
    pub count_b: u64,
    /// `count_a / count_b`, absent when `count_b` is zero.
    pub ratio: Option<f64>,
}

impl WindowRatio {
    fn new(key: String, count_a: u64, count_b: u64) -> Self {
        WindowRatio {
            key,
            count_a,
            count_b,
            ratio: (count_b > 0).then(|| count_a as f64 / count_b as f64),
        }
    }
}

fn ratios_by<K, F>(events: &[DepartureEvent], a: DateWindow, b: DateWindow, key: F) -> BTreeMap<K, (u64, u64)>
where
    K: Ord,
    F: Fn(&DepartureEvent) -> Option<K>,
{
    let mut counts: BTreeMap<K, (u64, u64)> = BTreeMap::new();
    for e in events {
        let d = e.date();
        let (in_a, in_b) = (a.contains(d), b.contains(d));
        if !(in_a || in_b) {
            continue;
        }
        let Some(k) = key(e) else { continue };
        let c = counts.entry(k).or_default();
        c.0 += in_a as u64;
        c.1 += in_b as u64;
    }
    counts
}

/// Departures in window A over departures in window B, per group.
pub fn window_ratio(events: &[DepartureEvent], group_by: GroupBy, a: DateWindow, b: DateWindow) -> Vec<WindowRatio> {
    ratios_by(events, a, b, |e| group_by.key_of(e))
        .into_iter()
        .map(|(k, (ca, cb))| WindowRatio::new(k, ca, cb))
        .collect()
}

/// Window ratio over all events whose origin country is in `countries`
/// (every event when `countries` is `None`).
pub fn aggregate_ratio(
    events: &[DepartureEvent],
    label: &str,
    countries: Option<&BTreeSet<String>>,
    a: DateWindow,
    b: DateWindow,
) -> WindowRatio {
    let selected = |e: &DepartureEvent| countries.is_none_or(|set| set.contains(&e.origin_country));
    let (mut ca, mut cb) = (0u64, 0u64);
    for e in events.iter().filter(|e| selected(e)) {
        let d = e.date();
        ca += a.contains(d) as u64;
        cb += b.contains(d) as u64;
    }
    WindowRatio::new(label.to_string(), ca, cb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRatio {
    pub origin_country: String,
    pub destination_country: String,
    pub ratio: WindowRatio,
}

/// Window ratios per ordered (origin country, destination country) pair.
/// Events without a destination country are ignored.
pub fn pair_ratio_matrix(events: &[DepartureEvent], a: DateWindow, b: DateWindow) -> Vec<PairRatio> {
    ratios_by(events, a, b, |e| {
        e.destination_country
            .as_ref()
            .map(|d| (e.origin_country.clone(), d.clone()))
    })
    .into_iter()
    .map(|((o, d), (ca, cb))| PairRatio {
        ratio: WindowRatio::new(format!("{o}-{d}"), ca, cb),
        origin_country: o,
        destination_country: d,
    })
    .collect()
}

/// A run of consecutive zero days inside a series, a hint of missing coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageGap {
    pub key: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
}

pub fn coverage_gaps(series: &[DailySeries<u64>], min_days: usize) -> Vec<CoverageGap> {
    let mut gaps = Vec::new();
    for s in series {
        let mut run: Option<(NaiveDate, NaiveDate, usize)> = None;
        let flush = |run: &mut Option<(NaiveDate, NaiveDate, usize)>, gaps: &mut Vec<CoverageGap>| {
            if let Some((start, end, days)) = run.take() {
                if days >= min_days {
                    gaps.push(CoverageGap { key: s.key.clone(), start, end, days });
                }
            }
        };
        for &(d, c) in &s.points {
            if c == 0 {
                run = Some(match run {
                    Some((start, _, n)) => (start, d, n + 1),
                    None => (d, d, 1),
                });
            } else {
                flush(&mut run, &mut gaps);
            }
        }
        flush(&mut run, &mut gaps);
    }
    gaps
}

fn opt_ratio(r: Option<f64>) -> String {
    r.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn werr(e: impl fmt::Display) -> Error {
    Error::Internal(format!("writing tracking csv: {e}"))
}

pub fn write_ratios_csv<W: Write>(group_by: &str, ratios: &[WindowRatio], w: W) -> Result<()> {
    let mut w = csv_writer(w);
    w.write_record([group_by, "count_a", "count_b", "ratio"]).map_err(werr)?;
    for r in ratios {
        w.write_record([r.key.as_str(), &r.count_a.to_string(), &r.count_b.to_string(), &opt_ratio(r.ratio)])
            .map_err(werr)?;
    }
    w.flush().map_err(werr)
}

/// Long-form pair matrix: `origin_country,dest_country,ratio` plus the window counts.
pub fn write_pair_matrix_csv<W: Write>(pairs: &[PairRatio], w: W) -> Result<()> {
    let mut w = csv_writer(w);
    w.write_record(["origin_country", "dest_country", "ratio", "count_a", "count_b"]).map_err(werr)?;
    for p in pairs {
        w.write_record([
            p.origin_country.as_str(),
            p.destination_country.as_str(),
            &opt_ratio(p.ratio.ratio),
            &p.ratio.count_a.to_string(),
            &p.ratio.count_b.to_string(),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(werr)
}

pub fn write_series_csv<W: Write, T: fmt::Display>(group_by: &str, value: &str, series: &[DailySeries<T>], w: W) -> Result<()> {
    let mut w = csv_writer(w);
    w.write_record([group_by, "date", value]).map_err(werr)?;
    for s in series {
        for (d, v) in &s.points {
            w.write_record([s.key.as_str(), &d.to_string(), &v.to_string()]).map_err(werr)?;
        }
    }
    w.flush().map_err(werr)
}

pub fn write_gaps_csv<W: Write>(group_by: &str, gaps: &[CoverageGap], w: W) -> Result<()> {
    let mut w = csv_writer(w);
    w.write_record([group_by, "start", "end", "days"]).map_err(werr)?;
    for g in gaps {
        w.write_record([g.key.as_str(), &g.start.to_string(), &g.end.to_string(), &g.days.to_string()])
            .map_err(werr)?;
    }
    w.flush().map_err(werr)
}

//! Travel-ban scenarios: monthly multiplier curves for 2020 and the
//! booking-availability mask of observed route suppressions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::calendar::{self, SCENARIO_YEAR};
use crate::error::{csv_error, Error, Result};
use crate::forecast::RouteForecast;
use crate::ingest::{AirportTable, RouteKey};
use crate::kv::KeyValues;

pub const SNAPSHOT_HEADER: [&str; 7] = [
    "origin",
    "dest",
    "snapshot_date",
    "horizon_days",
    "n_direct",
    "n_one_stop",
    "n_two_stop",
];
pub const MASK_HEADER: [&str; 5] = ["origin", "dest", "year", "month", "factor"];

/// Volume retained in each month of 2020 as a fraction of the baseline.
/// Months before 2020 are always left at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioCurve {
    name: String,
    multipliers: [f64; 12],
}

/// Upper bound accepted for user-supplied multipliers.
pub const MAX_CUSTOM_MULTIPLIER: f64 = 2.0;

impl ScenarioCurve {
    pub fn new(name: impl Into<String>, multipliers: [f64; 12]) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::validation("curve name must not be empty"));
        }
        for (i, m) in multipliers.iter().enumerate() {
            if !(m.is_finite() && (0.0..=MAX_CUSTOM_MULTIPLIER).contains(m)) {
                return Err(Error::validation(format!(
                    "curve {name}: m{} = {m} outside [0, {MAX_CUSTOM_MULTIPLIER}]",
                    i + 1
                )));
            }
            if *m > 1.0 {
                log::warn!("curve {name}: m{} = {m} is above the baseline volume", i + 1);
            }
        }
        Ok(ScenarioCurve { name, multipliers })
    }

    /// The no-ban scenario: every multiplier is 1.
    pub fn null() -> Self {
        ScenarioCurve {
            name: "Baseline".into(),
            multipliers: [1.0; 12],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn multipliers(&self) -> &[f64; 12] {
        &self.multipliers
    }

    pub fn multiplier(&self, year: i32, month: u8) -> f64 {
        if year == SCENARIO_YEAR {
            self.multipliers[month as usize - 1]
        } else {
            1.0
        }
    }

    pub fn pre2020_multiplier(&self) -> f64 {
        1.0
    }

    pub fn trough(&self) -> (u8, f64) {
        let (i, v) = self
            .multipliers
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        (i as u8 + 1, v)
    }

    pub fn is_null(&self) -> bool {
        self.multipliers.iter().all(|&m| m == 1.0)
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = format!("name={}\n", self.name);
        for (i, m) in self.multipliers.iter().enumerate() {
            s.push_str(&format!("m{}={m}\n", i + 1));
        }
        s
    }
}

/// Parses a curve file: `name=<text>` and `m1=` .. `m12=`.
pub fn parse_curve(text: &str, source: &str) -> Result<ScenarioCurve> {
    let kv = KeyValues::parse(text, source)?;
    let name = kv.require("name")?.to_string();
    let mut multipliers = [0.0; 12];
    for (i, slot) in multipliers.iter_mut().enumerate() {
        let key = format!("m{}", i + 1);
        *slot = kv
            .f64(&key)?
            .ok_or_else(|| Error::parse(source, 0, format!("curve {name}: missing {key}")))?;
    }
    if let Some(extra) = kv
        .keys()
        .find(|k| *k != "name" && !(1..=12).any(|i| *k == format!("m{i}")))
    {
        return Err(Error::parse(source, kv.line_of(extra), format!("unknown key {extra:?}")));
    }
    ScenarioCurve::new(name, multipliers).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{source}: {m}")),
        other => other,
    })
}

pub fn load_curve(path: &Path) -> Result<ScenarioCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text, &path.display().to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinScenario {
    Sars,
    Mers,
    Covid12,
    CovidL,
    Euroc,
    Euroc12,
    EurocL,
}

impl BuiltinScenario {
    pub const ALL: [BuiltinScenario; 7] = [
        BuiltinScenario::Sars,
        BuiltinScenario::Mers,
        BuiltinScenario::Covid12,
        BuiltinScenario::CovidL,
        BuiltinScenario::Euroc,
        BuiltinScenario::Euroc12,
        BuiltinScenario::EurocL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScenario::Sars => "SARS",
            BuiltinScenario::Mers => "MERS",
            BuiltinScenario::Covid12 => "COVID-12",
            BuiltinScenario::CovidL => "COVID-L",
            BuiltinScenario::Euroc => "EUROC",
            BuiltinScenario::Euroc12 => "EUROC-12",
            BuiltinScenario::EurocL => "EUROC-L",
        }
    }

    /// L-shaped curves never return to the baseline within 2020.
    pub fn is_l_shaped(self) -> bool {
        matches!(self, BuiltinScenario::CovidL | BuiltinScenario::EurocL)
    }

    /// Shipped default curve file contents.
    pub fn default_config(self) -> &'static str {
        match self {
            BuiltinScenario::Sars => include_str!("../data/curves/sars.curve"),
            BuiltinScenario::Mers => include_str!("../data/curves/mers.curve"),
            BuiltinScenario::Covid12 => include_str!("../data/curves/covid-12.curve"),
            BuiltinScenario::CovidL => include_str!("../data/curves/covid-l.curve"),
            BuiltinScenario::Euroc => include_str!("../data/curves/euroc.curve"),
            BuiltinScenario::Euroc12 => include_str!("../data/curves/euroc-12.curve"),
            BuiltinScenario::EurocL => include_str!("../data/curves/euroc-l.curve"),
        }
    }
}

impl FromStr for BuiltinScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinScenario::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown scenario {s:?}; built-ins are {}",
                    BuiltinScenario::ALL.map(|b| b.name()).join(", ")
                ))
            })
    }
}

impl fmt::Display for BuiltinScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn builtin_curve(which: BuiltinScenario) -> ScenarioCurve {
    let curve = parse_curve(which.default_config(), which.name())
        .expect("shipped curve defaults are valid");
    debug_assert!(curve.multipliers.iter().all(|m| (0.0..=1.0).contains(m)));
    curve
}

/// Built-in curve by its display name (`SARS`, `COVID-12`, ...).
pub fn builtin_curve_by_name(name: &str) -> Result<ScenarioCurve> {
    Ok(builtin_curve(name.parse()?))
}

/// Scales each 2020 month by the curve; Nov/Dec 2019 and fares are untouched.
pub fn apply_scenario(forecast: &RouteForecast, curve: &ScenarioCurve) -> RouteForecast {
    let mut out = forecast.clone();
    for m in out.months.iter_mut() {
        m.expected_passengers *= curve.multiplier(m.year, m.month);
    }
    out
}

/// Assigns curves to routes by origin country, falling back to a default curve.
#[derive(Clone, Debug)]
pub struct CurveAssignment {
    pub default: ScenarioCurve,
    pub by_origin_country: BTreeMap<String, ScenarioCurve>,
}

impl CurveAssignment {
    pub fn global(curve: ScenarioCurve) -> Self {
        CurveAssignment {
            default: curve,
            by_origin_country: BTreeMap::new(),
        }
    }

    pub fn curve_for(&self, key: &RouteKey, airports: &AirportTable) -> &ScenarioCurve {
        airports
            .country_of(key.origin)
            .and_then(|c| self.by_origin_country.get(c))
            .unwrap_or(&self.default)
    }

    pub fn apply(&self, forecasts: &[RouteForecast], airports: &AirportTable) -> Vec<RouteForecast> {
        forecasts
            .iter()
            .map(|f| apply_scenario(f, self.curve_for(&f.key, airports)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailabilitySnapshot {
    pub key: RouteKey,
    pub snapshot_date: NaiveDate,
    pub horizon_days: u32,
    pub n_direct: u32,
    pub n_one_stop: u32,
    pub n_two_stop: u32,
}

pub fn read_snapshots<R: Read>(input: R, source: &str) -> Result<Vec<AvailabilitySnapshot>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SNAPSHOT_HEADER {
        return Err(Error::parse(source, 1, format!("expected header {}", SNAPSHOT_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: String| Error::parse(source, line, m);
        let key = RouteKey::parse(&rec[0], &rec[1]).map_err(|e| bad(e.to_string()))?;
        let snapshot_date = NaiveDate::parse_from_str(&rec[2], "%Y-%m-%d")
            .map_err(|_| bad(format!("snapshot_date {:?} is not an ISO-8601 date", &rec[2])))?;
        let count = |i: usize| -> Result<u32> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("{} {:?} is not a non-negative integer", SNAPSHOT_HEADER[i], &rec[i])))
        };
        let horizon_days = count(3)?;
        if horizon_days < 1 {
            return Err(bad("horizon_days must be at least 1".into()));
        }
        out.push(AvailabilitySnapshot {
            key,
            snapshot_date,
            horizon_days,
            n_direct: count(4)?,
            n_one_stop: count(5)?,
            n_two_stop: count(6)?,
        });
    }
    Ok(out)
}

pub fn load_snapshots(path: &Path) -> Result<Vec<AvailabilitySnapshot>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshots(std::io::BufReader::new(f), &path.display().to_string())
}

/// When a snapshot counts as "no service".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SuppressionRule {
    /// Neither direct nor one-stop itineraries are on sale.
    #[default]
    NoDirectAndNoOneStop,
    /// Direct or one-stop itineraries are missing.
    NoDirectOrNoOneStop,
}

impl SuppressionRule {
    pub fn is_suppressed(self, s: &AvailabilitySnapshot) -> bool {
        match self {
            SuppressionRule::NoDirectAndNoOneStop => s.n_direct == 0 && s.n_one_stop == 0,
            SuppressionRule::NoDirectOrNoOneStop => s.n_direct == 0 || s.n_one_stop == 0,
        }
    }
}

impl FromStr for SuppressionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both_zero" => Ok(SuppressionRule::NoDirectAndNoOneStop),
            "either_zero" => Ok(SuppressionRule::NoDirectOrNoOneStop),
            _ => Err(Error::validation(format!(
                "unknown mask rule {s:?}; expected both_zero or either_zero"
            ))),
        }
    }
}

/// Binary route-month suppression factors derived from availability snapshots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservedMask {
    entries: BTreeMap<(RouteKey, i32, u8), f64>,
}

impl ObservedMask {
    pub fn factor(&self, key: &RouteKey, year: i32, month: u8) -> Option<f64> {
        self.entries.get(&(*key, year, month)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(RouteKey, i32, u8), &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn suppressed_count(&self, year: i32, month: u8) -> usize {
        self.entries
            .iter()
            .filter(|((_, y, m), f)| *y == year && *m == month && **f == 0.0)
            .count()
    }

    pub fn routes(&self) -> BTreeSet<RouteKey> {
        self.entries.keys().map(|(k, _, _)| *k).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let werr = |e: csv::Error| Error::Internal(format!("writing mask csv: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MASK_HEADER).map_err(werr)?;
        for ((key, year, month), factor) in &self.entries {
            w.write_record([
                key.origin.as_str(),
                key.destination.as_str(),
                &year.to_string(),
                &month.to_string(),
                &factor.to_string(),
            ])
            .map_err(werr)?;
        }
        w.flush().map_err(|e| Error::Internal(format!("writing mask csv: {e}")))?;
        Ok(())
    }
}

/// A route-month is suppressed (factor 0) when every snapshot taken in that
/// month is suppressed under `rule`; otherwise its factor is 1. Route-months
/// without snapshots get no entry.
pub fn build_observed_mask(snapshots: &[AvailabilitySnapshot], rule: SuppressionRule) -> ObservedMask {
    let mut all_suppressed: BTreeMap<(RouteKey, i32, u8), bool> = BTreeMap::new();
    for s in snapshots {
        let slot = (s.key, s.snapshot_date.year(), s.snapshot_date.month() as u8);
        let suppressed = rule.is_suppressed(s);
        all_suppressed
            .entry(slot)
            .and_modify(|v| *v &= suppressed)
            .or_insert(suppressed);
    }
    ObservedMask {
        entries: all_suppressed
            .into_iter()
            .map(|(k, s)| (k, if s { 0.0 } else { 1.0 }))
            .collect(),
    }
}

/// Multiplies each 2020 month by its mask factor, where one exists.
pub fn apply_mask(forecast: &RouteForecast, mask: &ObservedMask) -> RouteForecast {
    let mut out = forecast.clone();
    for m in out.months.iter_mut() {
        if m.year != SCENARIO_YEAR {
            continue;
        }
        if let Some(f) = mask.factor(&forecast.key, m.year, m.month) {
            m.expected_passengers *= f;
        }
    }
    out
}

/// A named scenario that can be applied to a set of baseline forecasts.
#[derive(Clone, Debug)]
pub enum Scenario {
    Curve(ScenarioCurve),
    Assigned { name: String, assignment: CurveAssignment },
    Observed(ObservedMask),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::Curve(c) => c.name(),
            Scenario::Assigned { name, .. } => name,
            Scenario::Observed(_) => "Observed",
        }
    }

    pub fn apply(&self, forecasts: &[RouteForecast], airports: &AirportTable) -> Vec<RouteForecast> {
        match self {
            Scenario::Curve(c) => forecasts.iter().map(|f| apply_scenario(f, c)).collect(),
            Scenario::Assigned { assignment, .. } => assignment.apply(forecasts, airports),
            Scenario::Observed(mask) => forecasts.iter().map(|f| apply_mask(f, mask)).collect(),
        }
    }
}

/// Horizon months touched by a scenario year, for reporting.
pub fn scenario_months() -> impl Iterator<Item = calendar::YearMonth> {
    calendar::horizon().filter(|ym| ym.year() == SCENARIO_YEAR)
}

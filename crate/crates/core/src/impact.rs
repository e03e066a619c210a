//! Ticketing-revenue losses and their proportional job and GDP impact.
//!
//! Revenue is `expected_passengers * expected_fare` summed over the routes of a
//! region. Quarterly losses are expressed as shares of the *annual* 2020
//! baseline revenue, and each share is applied proportionally to an
//! [`EconomyProfile`]'s job and aviation-GDP totals.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::calendar::{self, YearMonth, HORIZON_LEN, SCENARIO_YEAR};
use crate::error::{Error, Result};
use crate::forecast::RouteForecast;
use crate::ingest::{validate_country, AirportTable, RouteKey};
use crate::kv::KeyValues;

pub const LOSS_TABLE_HEADER: [&str; 8] = [
    "region",
    "scenario",
    "period",
    "revenue_loss_musd",
    "loss_share",
    "jobs_lost_m",
    "gdp_lost_busd",
    "economy_gdp_share",
];
pub const PERIODS: [&str; 5] = ["Q1", "Q2", "Q3", "Q4", "Yearly"];

/// EU member states after February 2020.
pub const EU27: [&str; 27] = [
    "AT", "BE", "BG", "CY", "CZ", "DE", "DK", "EE", "ES", "FI", "FR", "GR", "HR", "HU", "IE",
    "IT", "LT", "LU", "LV", "MT", "NL", "PL", "PT", "RO", "SE", "SI", "SK",
];

/// Split-sum tolerance of an economy profile.
pub const SPLIT_TOLERANCE: f64 = 0.005;

/// Jobs or GDP broken down by the four aviation impact channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpactSplit {
    pub tourism_catalytic: f64,
    pub induced: f64,
    pub indirect: f64,
    pub direct: f64,
}

impl ImpactSplit {
    pub fn sum(&self) -> f64 {
        self.tourism_catalytic + self.induced + self.indirect + self.direct
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EconomyProfile {
    pub name: String,
    /// Millions of jobs supported by aviation.
    pub jobs_total: f64,
    pub jobs_split: ImpactSplit,
    /// US$ billions of GDP supported by aviation.
    pub aviation_gdp_total: f64,
    pub gdp_split: ImpactSplit,
    /// US$ billions of GDP of the whole economy.
    pub economy_gdp: f64,
    /// Tourism shares as recorded in the source tables, when they differ from the ratios.
    pub jobs_tourism_share_printed: Option<f64>,
    pub gdp_tourism_share_printed: Option<f64>,
    pub aviation_gdp_total_printed: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TourismFractions {
    pub jobs: f64,
    pub gdp: f64,
    pub jobs_printed: Option<f64>,
    pub gdp_printed: Option<f64>,
}

impl EconomyProfile {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let split = |prefix: &str| -> Result<ImpactSplit> {
            Ok(ImpactSplit {
                tourism_catalytic: kv.require_f64(&format!("{prefix}_tourism_catalytic"))?,
                induced: kv.require_f64(&format!("{prefix}_induced"))?,
                indirect: kv.require_f64(&format!("{prefix}_indirect"))?,
                direct: kv.require_f64(&format!("{prefix}_direct"))?,
            })
        };
        let profile = EconomyProfile {
            name: kv.require("name")?.to_string(),
            jobs_total: kv.require_f64("jobs_total")?,
            jobs_split: split("jobs")?,
            aviation_gdp_total: kv.require_f64("aviation_gdp_total")?,
            gdp_split: split("gdp")?,
            economy_gdp: kv.require_f64("economy_gdp")?,
            jobs_tourism_share_printed: kv.f64("jobs_tourism_share_printed")?,
            gdp_tourism_share_printed: kv.f64("gdp_tourism_share_printed")?,
            aviation_gdp_total_printed: kv.f64("aviation_gdp_total_printed")?,
        };
        profile.validate()?;
        for d in profile.split_discrepancies() {
            log::warn!("profile {}: {d}", profile.name);
        }
        Ok(profile)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text, source)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn world() -> Self {
        Self::parse(include_str!("../data/profiles/world.profile"), "world")
            .expect("bundled world profile is valid")
    }

    pub fn eu27() -> Self {
        Self::parse(include_str!("../data/profiles/eu27.profile"), "eu27")
            .expect("bundled eu27 profile is valid")
    }

    /// `world`, `eu27`, or a path to a profile file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path.to_ascii_lowercase().as_str() {
            "world" => Ok(Self::world()),
            "eu27" => Ok(Self::eu27()),
            _ => {
                let p = Path::new(name_or_path);
                if p.exists() {
                    Self::load(p)
                } else {
                    Err(Error::validation(format!(
                        "unknown profile {name_or_path:?}; expected world, eu27 or a profile file"
                    )))
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            ("jobs_total", self.jobs_total),
            ("aviation_gdp_total", self.aviation_gdp_total),
            ("economy_gdp", self.economy_gdp),
        ];
        for (k, v) in values {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("profile {}: {k} must be positive", self.name)));
            }
        }
        for s in [self.jobs_split, self.gdp_split] {
            let parts = [s.tourism_catalytic, s.induced, s.indirect, s.direct];
            if parts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation(format!(
                    "profile {}: split components must be non-negative",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Splits that do not add up to their totals within [`SPLIT_TOLERANCE`].
    pub fn split_discrepancies(&self) -> Vec<String> {
        let mut out = Vec::new();
        let checks = [
            ("jobs", self.jobs_split.sum(), self.jobs_total),
            ("gdp", self.gdp_split.sum(), self.aviation_gdp_total),
        ];
        for (what, sum, total) in checks {
            let rel = (sum - total).abs() / total;
            if rel > SPLIT_TOLERANCE {
                out.push(format!(
                    "{what} split sums to {sum:.1}, {:.1}% away from the total {total}",
                    rel * 100.0
                ));
            }
        }
        out
    }

    pub fn tourism_fractions(&self) -> TourismFractions {
        TourismFractions {
            jobs: self.jobs_split.tourism_catalytic / self.jobs_total,
            gdp: self.gdp_split.tourism_catalytic / self.aviation_gdp_total,
            jobs_printed: self.jobs_tourism_share_printed,
            gdp_printed: self.gdp_tourism_share_printed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionMode {
    Global,
    /// Origin airport in one of the countries.
    OriginIn,
    /// Both airports in the set (e.g. intra-EU27 flights).
    OriginAndDestIn,
    /// Origin and destination in the same country, which is in the set.
    DomesticOf,
}

/// Selects the routes that count towards a region's totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionFilter {
    pub mode: RegionMode,
    pub countries: BTreeSet<String>,
    /// Countries spelled out explicitly rather than through a named group.
    explicit: BTreeSet<String>,
    label: String,
}

impl RegionFilter {
    pub fn global() -> Self {
        RegionFilter {
            mode: RegionMode::Global,
            countries: BTreeSet::new(),
            explicit: BTreeSet::new(),
            label: "global".into(),
        }
    }

    pub fn new(mode: RegionMode, countries: impl IntoIterator<Item = String>) -> Result<Self> {
        let countries: BTreeSet<String> = countries.into_iter().collect();
        if (mode == RegionMode::Global) != countries.is_empty() {
            return Err(Error::validation(
                "a region filter needs countries exactly when it is not global",
            ));
        }
        for c in &countries {
            validate_country(c)?;
        }
        let label = match mode {
            RegionMode::Global => "global".to_string(),
            _ => format!(
                "{}:{}",
                mode_name(mode),
                countries.iter().cloned().collect::<Vec<_>>().join(",")
            ),
        };
        Ok(RegionFilter {
            mode,
            explicit: countries.clone(),
            countries,
            label,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether `key` counts towards this region. Routes with an unresolved
    /// airport only count towards the global region.
    pub fn includes(&self, key: &RouteKey, airports: &AirportTable) -> bool {
        if self.mode == RegionMode::Global {
            return true;
        }
        let (Some(o), Some(d)) = (airports.country_of(key.origin), airports.country_of(key.destination)) else {
            return false;
        };
        match self.mode {
            RegionMode::Global => true,
            RegionMode::OriginIn => self.countries.contains(o),
            RegionMode::OriginAndDestIn => self.countries.contains(o) && self.countries.contains(d),
            RegionMode::DomesticOf => o == d && self.countries.contains(o),
        }
    }

    /// Explicitly listed countries must occur in the airport table.
    pub fn check_countries(&self, airports: &AirportTable) -> Result<()> {
        match self.explicit.iter().find(|c| !airports.has_country(c)) {
            Some(c) => Err(Error::validation(format!(
                "region {}: unknown country code {c} (no airport in the reference table)",
                self.label
            ))),
            None => Ok(()),
        }
    }
}

fn mode_name(mode: RegionMode) -> &'static str {
    match mode {
        RegionMode::Global => "global",
        RegionMode::OriginIn => "origin_in",
        RegionMode::OriginAndDestIn => "origin_and_dest_in",
        RegionMode::DomesticOf => "domestic_of",
    }
}

impl FromStr for RegionFilter {
    type Err = Error;

    /// `global`, or `<mode>:<countries>` where countries are comma-separated
    /// ISO codes or the group name `EU27`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("global") {
            return Ok(RegionFilter::global());
        }
        let Some((mode, list)) = s.split_once(':') else {
            return Err(Error::validation(format!(
                "region {s:?}: expected global or <mode>:<countries>"
            )));
        };
        let mode = match mode.trim() {
            "origin_in" => RegionMode::OriginIn,
            "origin_and_dest_in" => RegionMode::OriginAndDestIn,
            "domestic_of" => RegionMode::DomesticOf,
            other => {
                return Err(Error::validation(format!("region {s:?}: unknown mode {other:?}")))
            }
        };
        let mut countries = BTreeSet::new();
        let mut explicit = BTreeSet::new();
        for item in list.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            if item.eq_ignore_ascii_case("EU27") {
                countries.extend(EU27.iter().map(|c| c.to_string()));
            } else {
                validate_country(item)?;
                countries.insert(item.to_string());
                explicit.insert(item.to_string());
            }
        }
        let mut filter = RegionFilter::new(mode, countries)?;
        filter.explicit = explicit;
        filter.label = format!("{}:{}", mode_name(mode), list.trim());
        Ok(filter)
    }
}

/// Monthly US$ amounts over a contiguous run of months.
#[derive(Clone, Debug, PartialEq)]
pub struct RevenueSeries {
    pub start: YearMonth,
    pub values: Vec<f64>,
}

impl RevenueSeries {
    pub fn months(&self) -> impl Iterator<Item = (YearMonth, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (YearMonth::from_ordinal(self.start.ordinal() + i as i64), *v))
    }

    pub fn total_in_year(&self, year: i32) -> f64 {
        self.months().filter(|(ym, _)| ym.year() == year).map(|(_, v)| v).sum()
    }
}

const REDUCTION_CHUNK: usize = 4096;

/// Revenue per horizon month over the routes selected by `filter`.
///
/// Partial sums are taken over fixed-size chunks and combined in order, so
/// the result is bit-identical for any thread count.
pub fn monthly_revenue(
    forecasts: &[RouteForecast],
    filter: &RegionFilter,
    airports: &AirportTable,
) -> Result<RevenueSeries> {
    filter.check_countries(airports)?;
    let partials: Vec<[f64; HORIZON_LEN]> = forecasts
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut acc = [0.0; HORIZON_LEN];
            for f in chunk.iter().filter(|f| filter.includes(&f.key, airports)) {
                for (slot, m) in acc.iter_mut().zip(&f.months) {
                    *slot += m.revenue();
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; HORIZON_LEN];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(RevenueSeries {
        start: calendar::HORIZON_START,
        values: total.to_vec(),
    })
}

/// Per-month `max(0, baseline - scenario)`.
pub fn revenue_loss(baseline: &RevenueSeries, scenario: &RevenueSeries) -> Result<RevenueSeries> {
    if baseline.start != scenario.start || baseline.values.len() != scenario.values.len() {
        return Err(Error::validation(format!(
            "horizon mismatch: baseline {} x{} vs scenario {} x{}",
            baseline.start,
            baseline.values.len(),
            scenario.start,
            scenario.values.len()
        )));
    }
    Ok(RevenueSeries {
        start: baseline.start,
        values: baseline
            .values
            .iter()
            .zip(&scenario.values)
            .map(|(b, s)| (b - s).max(0.0))
            .collect(),
    })
}

/// 2020 losses per quarter and for the year, with shares of the annual baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarterlyLosses {
    /// Q1..Q4 then Yearly, in the unit of the input series.
    pub losses: [f64; 5],
    pub shares: [f64; 5],
    pub annual_baseline_revenue: f64,
}

pub fn quarterly_loss_table(losses: &RevenueSeries, annual_baseline_revenue: f64) -> Result<QuarterlyLosses> {
    if !(annual_baseline_revenue.is_finite() && annual_baseline_revenue > 0.0) {
        return Err(Error::validation(format!(
            "annual baseline revenue must be positive, got {annual_baseline_revenue}"
        )));
    }
    let mut q = [0.0; 5];
    for (ym, v) in losses.months().filter(|(ym, _)| ym.year() == SCENARIO_YEAR) {
        q[ym.quarter() as usize - 1] += v;
    }
    q[4] = q[..4].iter().sum();
    Ok(QuarterlyLosses {
        losses: q,
        shares: q.map(|l| l / annual_baseline_revenue),
        annual_baseline_revenue,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossRow {
    pub period: &'static str,
    pub revenue_loss_musd: f64,
    pub loss_share: f64,
    pub jobs_lost_m: f64,
    pub gdp_lost_busd: f64,
    pub economy_gdp_share: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossTable {
    pub region: String,
    pub scenario: String,
    pub profile: String,
    /// Q1..Q4 then Yearly.
    pub rows: [LossRow; 5],
}

impl LossTable {
    pub fn labelled(mut self, region: &str, scenario: &str) -> Self {
        self.region = region.to_string();
        self.scenario = scenario.to_string();
        self
    }

    pub fn yearly(&self) -> &LossRow {
        &self.rows[4]
    }
}

/// Proportional job and GDP impact of quarterly loss shares.
///
/// `losses` must be in US$; `pass_through` scales how much of the revenue
/// reduction propagates (1.0 = all of it).
pub fn socio_impact(losses: &QuarterlyLosses, profile: &EconomyProfile, pass_through: f64) -> LossTable {
    let rows = std::array::from_fn(|i| {
        let share = losses.shares[i];
        let effective = share * pass_through;
        let gdp = effective * profile.aviation_gdp_total;
        LossRow {
            period: PERIODS[i],
            revenue_loss_musd: losses.losses[i] / 1e6,
            loss_share: share,
            jobs_lost_m: effective * profile.jobs_total,
            gdp_lost_busd: gdp,
            economy_gdp_share: gdp / profile.economy_gdp,
        }
    });
    LossTable {
        region: String::new(),
        scenario: String::new(),
        profile: profile.name.clone(),
        rows,
    }
}

/// The tourism-catalytic part of the job and GDP losses.
pub fn tourism_component(table: &LossTable, profile: &EconomyProfile) -> LossTable {
    let fr = profile.tourism_fractions();
    let mut out = table.clone();
    out.scenario = format!("{} (tourism)", table.scenario);
    for row in out.rows.iter_mut() {
        row.jobs_lost_m *= fr.jobs;
        row.gdp_lost_busd *= fr.gdp;
        row.economy_gdp_share = row.gdp_lost_busd / profile.economy_gdp;
    }
    out
}

/// Baseline-versus-scenario loss table for one region and profile.
pub fn assess(
    baseline: &[RouteForecast],
    scenario: &[RouteForecast],
    filter: &RegionFilter,
    airports: &AirportTable,
    profile: &EconomyProfile,
    pass_through: f64,
) -> Result<LossTable> {
    if !(pass_through.is_finite() && pass_through >= 0.0) {
        return Err(Error::validation("pass_through must be a non-negative number"));
    }
    let base = monthly_revenue(baseline, filter, airports)?;
    let scen = monthly_revenue(scenario, filter, airports)?;
    let loss = revenue_loss(&base, &scen)?;
    let quarterly = quarterly_loss_table(&loss, base.total_in_year(SCENARIO_YEAR))
        .map_err(|e| Error::validation(format!("region {}: {e}", filter.label())))?;
    Ok(socio_impact(&quarterly, profile, pass_through))
}

pub fn write_loss_tables_csv<W: Write>(tables: &[LossTable], writer: W) -> Result<()> {
    let werr = |e: csv::Error| Error::Internal(format!("writing loss table csv: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LOSS_TABLE_HEADER).map_err(werr)?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.region.as_str(),
                t.scenario.as_str(),
                r.period,
                &r.revenue_loss_musd.to_string(),
                &r.loss_share.to_string(),
                &r.jobs_lost_m.to_string(),
                &r.gdp_lost_busd.to_string(),
                &r.economy_gdp_share.to_string(),
            ])
            .map_err(werr)?;
        }
    }
    w.flush().map_err(|e| Error::Internal(format!("writing loss table csv: {e}")))?;
    Ok(())
}

/// `1234567.891` -> `1,234,567.9` with `decimals` fractional digits.
pub fn format_thousands(value: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, value.abs());
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (s.clone(), None),
    };
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    let sign = if value < 0.0 && s.chars().any(|c| c.is_ascii_digit() && c != '0') { "-" } else { "" };
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

/// Side-by-side text rendering, one column per table: revenue loss with its
/// share, then jobs, GDP and economy-GDP share blocks.
pub fn render_loss_tables(tables: &[LossTable]) -> String {
    let mut out = String::new();
    if tables.is_empty() {
        return out;
    }
    let header: Vec<String> = tables.iter().map(|t| t.scenario.clone()).collect();
    let mut regions: Vec<&str> = tables.iter().map(|t| t.region.as_str()).collect();
    regions.dedup();
    let mut profiles: Vec<&str> = tables.iter().map(|t| t.profile.as_str()).collect();
    profiles.dedup();
    let _ = writeln!(out, "Region: {}   Profile: {}", regions.join(", "), profiles.join(", "));

    let blank = |v: f64| v == 0.0;
    type Cell = fn(&LossRow) -> String;
    let blocks: [(&str, &str, Cell); 4] = [
        ("Ticketing revenue loss, US$ million (share of annual baseline)", "", |r| {
            format!("{} ({:.1}%)", format_thousands(r.revenue_loss_musd, 1), r.loss_share * 100.0)
        }),
        ("Jobs lost, million", " (jobs ml)", |r| format!("{:.2}", r.jobs_lost_m)),
        ("Aviation GDP lost, US$ billion", " (GDP bl)", |r| format_thousands(r.gdp_lost_busd, 2)),
        ("Share of economy GDP, %", " (GDP %)", |r| format!("{:.2}", r.economy_gdp_share * 100.0)),
    ];
    for (title, suffix, cell) in blocks {
        let _ = writeln!(out, "\n{title}");
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("2020".to_string()).chain(header.iter().cloned()).collect()];
        for (i, period) in PERIODS.iter().enumerate() {
            let mut row = vec![format!("{period}{suffix}")];
            for t in tables {
                let r = &t.rows[i];
                row.push(if blank(r.revenue_loss_musd) { String::new() } else { cell(r) });
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
    }
    out
}

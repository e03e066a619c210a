//! The `airshock` command line.
//!
//! Every subcommand reads a [`RunConfig`] (from `--config` or defaults),
//! applies flag overrides, calls the library and writes its outputs under
//! `output_dir` with atomic renames. Each returns a short text summary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calendar::SCENARIO_YEAR;
use crate::config::{looks_like_path, RunConfig};
use crate::error::{Error, Result};
use crate::forecast::{forecast_corpus, load_forecast_csv, write_forecast_csv, RouteForecast};
use crate::impact::{
    assess, render_loss_tables, tourism_component, write_loss_tables_csv, EconomyProfile, LossTable, RegionFilter,
    RegionMode,
};
use crate::ingest::{
    filter_frequent, generate_synthetic_corpus, parse_route_corpus, passenger_share, read_airports, AirportTable,
    RouteCorpus, SyntheticProfile,
};
use crate::output::{write_atomic, write_string_atomic};
use crate::scenario::{
    build_observed_mask, builtin_curve, load_curve, load_snapshots, BuiltinScenario, CurveAssignment, Scenario,
    ScenarioCurve,
};
use crate::tracking::{
    aggregate_ratio, coverage_gaps, daily_counts, load_departures, normalize_to_max, pair_ratio_matrix,
    window_ratio, write_gaps_csv, write_pair_matrix_csv, write_ratios_csv, write_series_csv, DateWindow,
};

#[derive(Debug, Parser)]
#[command(name = "airshock", version, about = "Air-passenger forecasts, travel-ban scenarios and their economic impact")]
pub struct Cli {
    #[command(flatten)]
    pub options: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate the corpus and airport table, report filter coverage.
    IngestCheck,
    /// Fit per-route baselines and write the Nov 2019 - Dec 2020 forecast.
    Forecast,
    /// Apply each scenario to the baseline; write adjusted forecasts and loss tables per scenario.
    Scenario,
    /// Write combined loss tables for every scenario, region and profile.
    Impact,
    /// Departure-log trends, window ratios and the country pair matrix.
    Tracking,
    /// Generate a synthetic corpus and airport table.
    Synth,
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Minimum peak monthly passengers for a route to be modelled.
    #[arg(long, global = true)]
    pub threshold: Option<u32>,
    /// Comma-separated scenario names or curve files.
    #[arg(long, global = true, value_delimiter = ',')]
    pub scenarios: Option<Vec<String>>,
    /// Region spec, e.g. `global` or `origin_in:EU27`; repeatable.
    #[arg(long = "region", global = true)]
    pub regions: Vec<String>,
    /// Economy profile name or file; repeatable.
    #[arg(long = "profile", global = true)]
    pub profiles: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub airports: Option<PathBuf>,
    #[arg(long, global = true)]
    pub snapshots: Option<PathBuf>,
    #[arg(long, global = true)]
    pub departures: Option<PathBuf>,
    /// Precomputed baseline forecast CSV.
    #[arg(long, global = true)]
    pub forecast: Option<PathBuf>,
    /// Number of synthetic routes.
    #[arg(long, global = true)]
    pub routes: Option<usize>,
    /// Tracking grouping (airport, country, airline); repeatable.
    #[arg(long = "group-by", global = true)]
    pub group_by: Vec<String>,
    #[arg(long, global = true)]
    pub pass_through: Option<f64>,
    /// `both_zero` or `either_zero`.
    #[arg(long, global = true)]
    pub mask_rule: Option<String>,
}

impl Options {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = &self.scenarios {
            cfg.scenarios = v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if !self.regions.is_empty() {
            cfg.regions = self.regions.clone();
        }
        if !self.profiles.is_empty() {
            cfg.profiles = self.profiles.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        for (slot, flag) in [
            (&mut cfg.corpus, &self.corpus),
            (&mut cfg.airports, &self.airports),
            (&mut cfg.snapshots, &self.snapshots),
            (&mut cfg.departures, &self.departures),
            (&mut cfg.forecast, &self.forecast),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(v) = self.routes {
            cfg.synthetic.routes = v;
        }
        if !self.group_by.is_empty() {
            cfg.tracking.group_by = self.group_by.clone();
        }
        if let Some(v) = self.pass_through {
            cfg.pass_through = v;
        }
        if let Some(v) = &self.mask_rule {
            cfg.mask_rule = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (including the program name), runs the command and prints
/// its summary. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            let _ = std::io::stdout().flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    let cfg = cli.options.resolve()?;
    match cli.command {
        Command::IngestCheck => cmd_ingest_check(&cfg),
        Command::Forecast => cmd_forecast(&cfg),
        Command::Scenario => cmd_scenario(&cfg),
        Command::Impact => cmd_impact(&cfg),
        Command::Tracking => cmd_tracking(&cfg),
        Command::Synth => cmd_synth(&cfg),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::validation(format!("no {what} file given (set `{what}` in the config or pass --{what})")))
}

pub fn load_corpus(cfg: &RunConfig) -> Result<RouteCorpus> {
    let series = required(&cfg.corpus, "corpus")?;
    let airports = required(&cfg.airports, "airports")?;
    parse_route_corpus(series, airports)
}

fn load_airports(path: &Path) -> Result<AirportTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_airports(std::io::BufReader::new(f), &path.display().to_string())
}

pub fn cmd_ingest_check(cfg: &RunConfig) -> Result<String> {
    let corpus = load_corpus(cfg)?;
    let frequent = filter_frequent(&corpus, cfg.threshold);
    let mut s = String::new();
    let _ = writeln!(s, "routes,{}", corpus.len());
    let _ = writeln!(s, "unresolved_routes,{}", corpus.unresolved_routes().count());
    let _ = writeln!(s, "airports,{}", corpus.airports().len());
    let _ = writeln!(s, "threshold,{}", cfg.threshold);
    let _ = writeln!(s, "frequent_routes,{}", frequent.len());
    for year in [2018, 2019] {
        let _ = writeln!(s, "frequent_passenger_share_{year},{}", passenger_share(&corpus, &frequent, year)?);
    }
    Ok(s)
}

/// Baseline forecasts: read from `forecast` when configured, otherwise fitted
/// from the threshold-filtered corpus. Also returns the airport table.
pub fn baseline(cfg: &RunConfig) -> Result<(Vec<RouteForecast>, AirportTable)> {
    if let Some(path) = &cfg.forecast {
        let forecasts = load_forecast_csv(path)?;
        let airports = match &cfg.airports {
            Some(a) => load_airports(a)?,
            None => AirportTable::new([])?,
        };
        return Ok((forecasts, airports));
    }
    let corpus = filter_frequent(&load_corpus(cfg)?, cfg.threshold);
    let forecasts = forecast_corpus(&corpus, &cfg.forecast_config()?)?;
    Ok((forecasts, corpus.airports().clone()))
}

pub fn forecast_summary(forecasts: &[RouteForecast]) -> String {
    let passengers: f64 = forecasts.iter().map(|f| f.passengers_in_year(SCENARIO_YEAR)).sum();
    let revenue: f64 = forecasts.iter().map(|f| f.revenue_in_year(SCENARIO_YEAR)).sum();
    format!(
        "routes,{}\nbaseline_passengers_{SCENARIO_YEAR},{passengers}\nbaseline_revenue_usd_{SCENARIO_YEAR},{revenue}\n",
        forecasts.len()
    )
}

pub fn cmd_forecast(cfg: &RunConfig) -> Result<String> {
    let (forecasts, _) = baseline(cfg)?;
    let dir = cfg.output_dir.join("forecast");
    write_atomic(&dir.join("forecast.csv"), |w| write_forecast_csv(&forecasts, w))?;
    let summary = forecast_summary(&forecasts);
    write_string_atomic(&dir.join("summary.csv"), &summary)?;
    Ok(summary)
}

/// Resolves the configured scenario entries, in order.
pub fn resolve_scenarios(cfg: &RunConfig) -> Result<Vec<Scenario>> {
    let mut files: BTreeMap<String, ScenarioCurve> = BTreeMap::new();
    for p in &cfg.curves {
        let c = load_curve(p)?;
        files.insert(c.name().to_ascii_uppercase(), c);
    }
    let curve = |entry: &str| -> Result<ScenarioCurve> {
        if let Some(c) = files.get(&entry.to_ascii_uppercase()) {
            return Ok(c.clone());
        }
        if let Ok(b) = entry.parse::<BuiltinScenario>() {
            return Ok(builtin_curve(b));
        }
        if looks_like_path(entry) {
            return load_curve(Path::new(entry));
        }
        Err(Error::validation(format!(
            "unknown scenario {entry:?}; expected one of {}, Observed, an assigned scenario or a curve file",
            BuiltinScenario::ALL.map(|b| b.name()).join(", ")
        )))
    };

    let mut out: Vec<Scenario> = Vec::new();
    for entry in &cfg.scenarios {
        let s = if entry.eq_ignore_ascii_case("observed") {
            let path = required(&cfg.snapshots, "snapshots")?;
            Scenario::Observed(build_observed_mask(&load_snapshots(path)?, cfg.mask_rule()?))
        } else if let Some(a) = cfg.assigned.iter().find(|a| a.name == *entry) {
            let mut assignment = CurveAssignment::global(curve(&a.default)?);
            for (country, name) in &a.by_origin_country {
                crate::ingest::validate_country(country)?;
                assignment.by_origin_country.insert(country.clone(), curve(name)?);
            }
            Scenario::Assigned { name: a.name.clone(), assignment }
        } else {
            Scenario::Curve(curve(entry)?)
        };
        if out.iter().any(|o| o.name().eq_ignore_ascii_case(s.name())) {
            return Err(Error::validation(format!("scenario name {:?} used twice", s.name())));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn resolve_regions(cfg: &RunConfig, airports: &AirportTable) -> Result<Vec<RegionFilter>> {
    cfg.regions
        .iter()
        .map(|r| {
            let f: RegionFilter = r.parse()?;
            f.check_countries(airports)?;
            Ok(f)
        })
        .collect()
}

pub fn resolve_profiles(cfg: &RunConfig) -> Result<Vec<EconomyProfile>> {
    cfg.profiles
        .iter()
        .map(|p| {
            let profile = EconomyProfile::resolve(p)?;
            profile.validate()?;
            Ok(profile)
        })
        .collect()
}

/// Directory-safe form of a scenario name.
pub fn scenario_dir_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

struct ScenarioRun {
    scenario: Scenario,
    forecasts: Vec<RouteForecast>,
    /// Region-major, then profile.
    tables: Vec<LossTable>,
}

fn run_scenarios(cfg: &RunConfig) -> Result<(Vec<ScenarioRun>, Vec<RegionFilter>, Vec<EconomyProfile>)> {
    let (base, airports) = baseline(cfg)?;
    let scenarios = resolve_scenarios(cfg)?;
    let regions = resolve_regions(cfg, &airports)?;
    let profiles = resolve_profiles(cfg)?;
    let mut runs = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let forecasts = scenario.apply(&base, &airports);
        let mut tables = Vec::new();
        for region in &regions {
            for profile in &profiles {
                let t = assess(&base, &forecasts, region, &airports, profile, cfg.pass_through)?;
                tables.push(t.labelled(region.label(), scenario.name()));
            }
        }
        runs.push(ScenarioRun { scenario, forecasts, tables });
    }
    Ok((runs, regions, profiles))
}

pub fn cmd_scenario(cfg: &RunConfig) -> Result<String> {
    let (runs, ..) = run_scenarios(cfg)?;
    let mut s = String::new();
    for run in &runs {
        let dir = cfg.output_dir.join("scenarios").join(scenario_dir_name(run.scenario.name()));
        write_atomic(&dir.join("forecast.csv"), |w| write_forecast_csv(&run.forecasts, w))?;
        if let Scenario::Observed(mask) = &run.scenario {
            write_atomic(&dir.join("mask.csv"), |w| mask.write_csv(w))?;
        }
        write_atomic(&dir.join("loss_tables.csv"), |w| write_loss_tables_csv(&run.tables, w))?;
        write_string_atomic(&dir.join("loss_tables.txt"), &render_grouped(&run.tables))?;
        let scen_pax: f64 = run.forecasts.iter().map(|f| f.passengers_in_year(SCENARIO_YEAR)).sum();
        let _ = writeln!(s, "{},passengers_{SCENARIO_YEAR},{scen_pax}", run.scenario.name());
    }
    Ok(s)
}

pub fn cmd_impact(cfg: &RunConfig) -> Result<String> {
    let (runs, regions, profiles) = run_scenarios(cfg)?;
    // Reorder to region, profile, scenario so each rendered block has one column per scenario.
    let per_pair = profiles.len();
    let mut tables = Vec::new();
    for ri in 0..regions.len() {
        for pi in 0..per_pair {
            for run in &runs {
                tables.push(run.tables[ri * per_pair + pi].clone());
            }
        }
    }
    let tourism: Vec<LossTable> = tables
        .iter()
        .map(|t| {
            let profile = profiles.iter().find(|p| p.name == t.profile).expect("table profile is resolved");
            tourism_component(t, profile)
        })
        .collect();
    let dir = cfg.output_dir.join("impact");
    write_atomic(&dir.join("loss_tables.csv"), |w| write_loss_tables_csv(&tables, w))?;
    write_atomic(&dir.join("loss_tables_tourism.csv"), |w| write_loss_tables_csv(&tourism, w))?;
    let text = render_grouped(&tables);
    write_string_atomic(&dir.join("loss_tables.txt"), &text)?;
    Ok(text)
}

/// Renders tables in blocks of equal (region, profile), keeping input order.
fn render_grouped(tables: &[LossTable]) -> String {
    let mut out = String::new();
    let mut start = 0;
    while start < tables.len() {
        let same = |t: &LossTable| t.region == tables[start].region && t.profile == tables[start].profile;
        let end = start + tables[start..].iter().take_while(|t| same(t)).count();
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&render_loss_tables(&tables[start..end]));
        start = end;
    }
    out
}

pub fn cmd_tracking(cfg: &RunConfig) -> Result<String> {
    let path = required(&cfg.departures, "departures")?;
    let events = load_departures(path)?;
    let a = cfg.tracking.window_a.resolve()?;
    let b = cfg.tracking.window_b.resolve()?;
    let series_window = match &cfg.tracking.series {
        Some(spec) => Some(spec.resolve()?),
        None => match (events.first(), events.last()) {
            (Some(first), Some(last)) => Some(DateWindow::new(first.date(), last.date())?),
            _ => None,
        },
    };
    let dir = cfg.output_dir.join("tracking");
    let mut s = String::new();
    let _ = writeln!(s, "events,{}", events.len());

    for g in cfg.group_by()? {
        let name = g.name();
        let ratios = window_ratio(&events, g, a, b);
        write_atomic(&dir.join(format!("ratios_{name}.csv")), |w| write_ratios_csv(name, &ratios, w))?;
        let counts = match series_window {
            Some(win) => daily_counts(&events, g, win, &[]),
            None => Vec::new(),
        };
        let normalized: Vec<_> = counts.iter().map(normalize_to_max).collect();
        let gaps = coverage_gaps(&counts, cfg.tracking.min_gap_days);
        write_atomic(&dir.join(format!("series_{name}.csv")), |w| write_series_csv(name, "departures", &counts, w))?;
        write_atomic(&dir.join(format!("normalized_{name}.csv")), |w| {
            write_series_csv(name, "normalized", &normalized, w)
        })?;
        write_atomic(&dir.join(format!("coverage_{name}.csv")), |w| write_gaps_csv(name, &gaps, w))?;
        let _ = writeln!(s, "{name}_groups,{}", ratios.len());
    }

    let mut aggregates = Vec::new();
    for spec in &cfg.tracking.aggregates {
        let f: RegionFilter = spec.parse()?;
        let countries = match f.mode {
            RegionMode::Global => None,
            RegionMode::OriginIn => Some(&f.countries),
            _ => {
                return Err(Error::validation(format!(
                    "tracking aggregate {spec:?}: only global and origin_in regions apply to departures"
                )))
            }
        };
        let r = aggregate_ratio(&events, f.label(), countries, a, b);
        if let Some(ratio) = r.ratio {
            let _ = writeln!(s, "ratio {},{ratio}", r.key);
        }
        aggregates.push(r);
    }
    write_atomic(&dir.join("aggregates.csv"), |w| write_ratios_csv("region", &aggregates, w))?;
    let pairs = pair_ratio_matrix(&events, a, b);
    write_atomic(&dir.join("pair_matrix.csv"), |w| write_pair_matrix_csv(&pairs, w))?;
    Ok(s)
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<String> {
    let profile = match &cfg.synthetic.profile {
        Some(p) => SyntheticProfile::load(p)?,
        None => SyntheticProfile::default(),
    };
    let corpus = generate_synthetic_corpus(cfg.seed, cfg.synthetic.routes, &profile)?;
    let dir = cfg.output_dir.join("synth");
    write_atomic(&dir.join("series.csv"), |w| corpus.write_series_csv(w))?;
    write_atomic(&dir.join("airports.csv"), |w| corpus.write_airports_csv(w))?;
    Ok(format!("routes,{}\nairports,{}\nseed,{}\n", corpus.len(), corpus.airports().len(), cfg.seed))
}

//! Run configuration: one TOML file describing inputs, scenarios, regions and
//! profiles for a reproducible run. Relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forecast::ForecastConfig;
use crate::scenario::{BuiltinScenario, SuppressionRule};
use crate::tracking::{DateWindow, GroupBy};

pub const DEFAULT_THRESHOLD: u32 = 50;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub airports: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
    pub departures: Option<PathBuf>,
    /// Precomputed baseline forecast CSV; when absent the baseline is fitted from the corpus.
    pub forecast: Option<PathBuf>,
    /// Extra curve files; their `name=` makes them addressable from `scenarios`.
    pub curves: Vec<PathBuf>,
    /// Minimum peak monthly passengers for a route to be modelled.
    pub threshold: u32,
    /// Builtin curve names, names from `curves`, curve file paths, names of
    /// `assigned` scenarios, or `Observed`.
    pub scenarios: Vec<String>,
    pub assigned: Vec<AssignedScenario>,
    pub regions: Vec<String>,
    /// Bundled profile names (`world`, `eu27`) or profile file paths.
    pub profiles: Vec<String>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub pass_through: f64,
    pub wuhan_cutoff_day: u32,
    pub wuhan_origin_code: String,
    pub mask_rule: String,
    pub synthetic: SyntheticConfig,
    pub tracking: TrackingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            airports: None,
            snapshots: None,
            departures: None,
            forecast: None,
            curves: Vec::new(),
            threshold: DEFAULT_THRESHOLD,
            scenarios: BuiltinScenario::ALL.iter().map(|s| s.name().to_string()).collect(),
            assigned: Vec::new(),
            regions: vec!["global".into()],
            profiles: vec!["world".into()],
            seed: 0,
            output_dir: PathBuf::from("out"),
            pass_through: 1.0,
            wuhan_cutoff_day: 23,
            wuhan_origin_code: "WUH".into(),
            mask_rule: "both_zero".into(),
            synthetic: SyntheticConfig::default(),
            tracking: TrackingConfig::default(),
        }
    }
}

/// A scenario mixing curves by origin country.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AssignedScenario {
    pub name: String,
    pub default: String,
    #[serde(default)]
    pub by_origin_country: std::collections::BTreeMap<String, String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub routes: usize,
    /// Synthetic-profile key-value file; the built-in default profile when absent.
    pub profile: Option<PathBuf>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { routes: 1000, profile: None }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingConfig {
    /// Preset name or `[start, end]` dates.
    pub window_a: WindowSpec,
    pub window_b: WindowSpec,
    /// Range of the daily series; the span of the log when absent.
    pub series: Option<WindowSpec>,
    pub group_by: Vec<String>,
    /// Country-set aggregates reported next to the per-group ratios, as region specs.
    pub aggregates: Vec<String>,
    /// Shortest all-zero run reported as a coverage gap.
    pub min_gap_days: usize,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            window_a: WindowSpec::Preset("late_march_2020".into()),
            window_b: WindowSpec::Preset("early_february_2020".into()),
            series: None,
            group_by: vec!["airport".into(), "country".into(), "airline".into()],
            aggregates: vec!["global".into(), "origin_in:EU27".into()],
            min_gap_days: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum WindowSpec {
    Preset(String),
    Range([String; 2]),
}

impl WindowSpec {
    pub fn resolve(&self) -> Result<DateWindow> {
        match self {
            WindowSpec::Preset(name) => DateWindow::preset(name),
            WindowSpec::Range([a, b]) => DateWindow::parse(a, b),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::parse(source, line, e.message().to_string())
        })
    }

    /// Reads a config file and makes its relative paths absolute with respect to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.corpus,
            &mut self.airports,
            &mut self.snapshots,
            &mut self.departures,
            &mut self.forecast,
            &mut self.synthetic.profile,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.curves.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        // Profile and scenario entries may be names or paths; only rebase the ones that look like files.
        for s in self.profiles.iter_mut().chain(self.scenarios.iter_mut()) {
            if looks_like_path(s) && Path::new(s.as_str()).is_relative() {
                *s = base.join(s.as_str()).display().to_string();
            }
        }
    }

    pub fn forecast_config(&self) -> Result<ForecastConfig> {
        Ok(ForecastConfig {
            wuhan_origin_code: self.wuhan_origin_code.parse()?,
            wuhan_cutoff_day: self.wuhan_cutoff_day,
        })
    }

    pub fn mask_rule(&self) -> Result<SuppressionRule> {
        self.mask_rule.parse()
    }

    pub fn group_by(&self) -> Result<Vec<GroupBy>> {
        self.tracking.group_by.iter().map(|g| g.parse()).collect()
    }

    /// Checks settings that do not depend on which subcommand runs.
    pub fn validate(&self) -> Result<()> {
        if !(self.pass_through.is_finite() && self.pass_through >= 0.0) {
            return Err(Error::validation("pass_through must be a non-negative number"));
        }
        self.forecast_config()?;
        if !(1..=31).contains(&self.wuhan_cutoff_day) {
            return Err(Error::validation("wuhan_cutoff_day must be within 1..=31"));
        }
        self.mask_rule()?;
        self.group_by()?;
        self.tracking.window_a.resolve()?;
        self.tracking.window_b.resolve()?;
        if let Some(s) = &self.tracking.series {
            s.resolve()?;
        }
        let mut seen = BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(s.to_ascii_uppercase()) {
                return Err(Error::validation(format!("scenario {s:?} listed twice")));
            }
        }
        for p in self.curves.iter().chain(self.synthetic.profile.iter()) {
            require_file(p)?;
        }
        Ok(())
    }
}

pub fn looks_like_path(s: &str) -> bool {
    s.contains('/') || s.contains('\\') || s.ends_with(".curve") || s.ends_with(".profile")
}

/// Fails with an I/O error naming `path` when it is not a readable file.
pub fn require_file(path: &Path) -> Result<()> {
    std::fs::metadata(path).map(|_| ()).map_err(|e| Error::io(path, e))
}

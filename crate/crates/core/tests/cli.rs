use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use airshock::forecast::{forecast_corpus, ForecastConfig};
use airshock::impact::{assess, write_loss_tables_csv, EconomyProfile, RegionFilter};
use airshock::ingest::{filter_frequent, parse_route_corpus};
use airshock::scenario::{apply_scenario, builtin_curve, BuiltinScenario};

const ALL_SEVEN: &str = "SARS,MERS,COVID-12,COVID-L,EUROC,EUROC-12,EUROC-L";

fn airshock(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airshock"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("run airshock")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// A temp dir holding a small synthetic corpus under `in/`.
fn synth_dir(routes: usize) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let n = routes.to_string();
    ok(&airshock(&["synth", "--routes", &n, "--seed", "3", "--out", "in"], dir.path()));
    let series = dir.path().join("in/synth/series.csv");
    let airports = dir.path().join("in/synth/airports.csv");
    (dir, series, airports)
}

fn summary_value(summary: &str, key: &str) -> f64 {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing from {summary}"))
        .parse()
        .unwrap()
}

#[test]
fn missing_corpus_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("airports.csv"), "code,country,name\n").unwrap();
    let out = airshock(&["forecast", "--corpus", "nowhere/series.csv", "--airports", "airports.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/series.csv"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_corpus_gives_empty_forecast() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("series.csv"), "origin,dest,year,month,passengers,avg_fare\n").unwrap();
    fs::write(dir.path().join("airports.csv"), "code,country,name\n").unwrap();
    let out = airshock(&["forecast", "--corpus", "series.csv", "--airports", "airports.csv"], dir.path());
    let summary = ok(&out);
    assert_eq!(summary_value(&summary, "routes"), 0.0);
    assert_eq!(summary_value(&summary, "baseline_passengers_2020"), 0.0);
    assert_eq!(summary_value(&summary, "baseline_revenue_usd_2020"), 0.0);
    let csv = fs::read_to_string(dir.path().join("out/forecast/forecast.csv")).unwrap();
    assert_eq!(csv.trim(), "origin,dest,year,month,expected_passengers,expected_fare");
}

#[test]
fn forecast_summary_matches_output_csv() {
    let (dir, series, airports) = synth_dir(40);
    let out = airshock(
        &["forecast", "--corpus", series.to_str().unwrap(), "--airports", airports.to_str().unwrap()],
        dir.path(),
    );
    let summary = ok(&out);
    let mut rdr = csv::Reader::from_path(dir.path().join("out/forecast/forecast.csv")).unwrap();
    let (mut pax, mut revenue) = (0.0, 0.0);
    let mut routes = std::collections::BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        routes.insert((rec[0].to_string(), rec[1].to_string()));
        if &rec[2] == "2020" {
            let p: f64 = rec[4].parse().unwrap();
            let f: f64 = rec[5].parse().unwrap();
            pax += p;
            revenue += p * f;
        }
    }
    assert_eq!(summary_value(&summary, "routes"), routes.len() as f64);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    assert!(rel(summary_value(&summary, "baseline_passengers_2020"), pax) < 1e-9);
    assert!(rel(summary_value(&summary, "baseline_revenue_usd_2020"), revenue) < 1e-9);
}

#[test]
fn impact_matches_library_and_is_deterministic() {
    let (dir, series, airports) = synth_dir(60);
    let args = |out: &str| {
        vec![
            "impact".to_string(),
            "--corpus".into(),
            series.display().to_string(),
            "--airports".into(),
            airports.display().to_string(),
            "--scenarios".into(),
            "COVID-12".into(),
            "--region".into(),
            "global".into(),
            "--profile".into(),
            "world".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |out: &str| {
        let a = args(out);
        ok(&airshock(&a.iter().map(String::as_str).collect::<Vec<_>>(), dir.path()))
    };
    run("a");
    run("b");
    for f in ["loss_tables.csv", "loss_tables_tourism.csv", "loss_tables.txt"] {
        let a = fs::read(dir.path().join("a/impact").join(f)).unwrap();
        let b = fs::read(dir.path().join("b/impact").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }

    let corpus = filter_frequent(&parse_route_corpus(&series, &airports).unwrap(), 50);
    let base = forecast_corpus(&corpus, &ForecastConfig::default()).unwrap();
    let curve = builtin_curve(BuiltinScenario::Covid12);
    let scen: Vec<_> = base.iter().map(|f| apply_scenario(f, &curve)).collect();
    let table = assess(&base, &scen, &RegionFilter::global(), corpus.airports(), &EconomyProfile::world(), 1.0)
        .unwrap()
        .labelled("global", "COVID-12");
    let mut expected = Vec::new();
    write_loss_tables_csv(&[table], &mut expected).unwrap();
    assert_eq!(fs::read(dir.path().join("a/impact/loss_tables.csv")).unwrap(), expected);
}

#[test]
fn seven_scenarios_side_by_side() {
    let (dir, series, airports) = synth_dir(30);
    let out = airshock(
        &[
            "impact",
            "--corpus",
            series.to_str().unwrap(),
            "--airports",
            airports.to_str().unwrap(),
            "--scenarios",
            ALL_SEVEN,
            "--region",
            "global",
        ],
        dir.path(),
    );
    let text = ok(&out);
    let header = text.lines().find(|l| l.starts_with("2020")).unwrap();
    let columns: Vec<&str> = header.split_whitespace().skip(1).collect();
    assert_eq!(columns, ALL_SEVEN.split(',').collect::<Vec<_>>());
    let csv = fs::read_to_string(dir.path().join("out/impact/loss_tables.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 5);
}

#[test]
fn scenario_outputs_per_name_and_null_curve() {
    let (dir, series, airports) = synth_dir(20);
    let flat: String = std::iter::once("name=Flat\n".to_string()).chain((1..=12).map(|m| format!("m{m}=1\n"))).collect();
    fs::write(dir.path().join("flat.curve"), flat).unwrap();
    let out = airshock(
        &[
            "scenario",
            "--corpus",
            series.to_str().unwrap(),
            "--airports",
            airports.to_str().unwrap(),
            "--scenarios",
            "flat.curve,SARS",
        ],
        dir.path(),
    );
    ok(&out);
    for name in ["Flat", "SARS"] {
        let d = dir.path().join("out/scenarios").join(name);
        assert!(d.join("forecast.csv").exists() && d.join("loss_tables.csv").exists(), "{name}");
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("out/scenarios/Flat/loss_tables.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for v in rec.iter().skip(3) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn bad_scenario_inputs_are_validation_errors() {
    let (dir, series, airports) = synth_dir(5);
    let base = ["impact", "--corpus", series.to_str().unwrap(), "--airports", airports.to_str().unwrap()];
    let run = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        airshock(&a, dir.path())
    };
    assert_eq!(run(&["--scenarios", "FLU"]).status.code(), Some(2));
    assert_eq!(run(&["--scenarios", "Observed"]).status.code(), Some(2));
    assert_eq!(run(&["--scenarios", "SARS,sars"]).status.code(), Some(2));
    assert_eq!(run(&["--region", "origin_in:ZZ"]).status.code(), Some(2));
    assert_eq!(run(&["--profile", "mars"]).status.code(), Some(2));
    assert_eq!(airshock(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn observed_scenario_from_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("airports.csv"), "code,country,name\nFCO,IT,Rome\nJFK,US,New York\n").unwrap();
    let mut series = String::from("origin,dest,year,month,passengers,avg_fare\n");
    for y in 2010..=2018 {
        for m in 1..=12 {
            series.push_str(&format!("FCO,JFK,{y},{m},1000,100\nJFK,FCO,{y},{m},2000,100\n"));
        }
    }
    fs::write(p.join("series.csv"), series).unwrap();
    fs::write(
        p.join("snapshots.csv"),
        "origin,dest,snapshot_date,horizon_days,n_direct,n_one_stop,n_two_stop\n\
         FCO,JFK,2020-02-10,7,0,0,4\nFCO,JFK,2020-03-10,7,0,0,1\nJFK,FCO,2020-02-10,7,0,3,0\n",
    )
    .unwrap();
    fs::write(
        p.join("run.toml"),
        "corpus = \"series.csv\"\nairports = \"airports.csv\"\nsnapshots = \"snapshots.csv\"\n\
         scenarios = [\"Observed\"]\noutput_dir = \"result\"\n",
    )
    .unwrap();
    let sub = p.join("elsewhere");
    fs::create_dir(&sub).unwrap();
    ok(&airshock(&["scenario", "--config", "../run.toml"], &sub));
    let mask = fs::read_to_string(p.join("result/scenarios/Observed/mask.csv")).unwrap();
    assert!(mask.contains("FCO,JFK,2020,2,0"));
    assert!(mask.contains("JFK,FCO,2020,2,1"));
    let mut rdr = csv::Reader::from_path(p.join("result/scenarios/Observed/loss_tables.csv")).unwrap();
    let q1: Vec<String> = rdr.records().next().unwrap().unwrap().iter().map(str::to_string).collect();
    // Two suppressed months of 1000 passengers at 100 US$ out of a 3.6 M US$ year.
    assert_eq!(q1[2], "Q1");
    assert!((q1[3].parse::<f64>().unwrap() - 0.2).abs() < 1e-9);
    assert!((q1[4].parse::<f64>().unwrap() - 0.2 / 3.6).abs() < 1e-9);
}

#[test]
fn ingest_check_reports_coverage() {
    let (dir, series, airports) = synth_dir(10);
    let out = ok(&airshock(
        &["ingest-check", "--corpus", series.to_str().unwrap(), "--airports", airports.to_str().unwrap(), "--threshold", "0"],
        dir.path(),
    ));
    assert_eq!(summary_value(&out, "routes"), 10.0);
    assert_eq!(summary_value(&out, "frequent_routes"), 10.0);
    assert_eq!(summary_value(&out, "frequent_passenger_share_2018"), 1.0);
}

const DEPARTURES: &str = "departure_time,origin_airport,origin_country,dest_airport,dest_country,airline_code\n";

#[test]
fn tracking_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut log = String::from(DEPARTURES);
    // Reference week: 10 FCO->JFK by AZA; late week: 5, plus one CDG flight by AFR.
    for d in 0..10 {
        log.push_str(&format!("2020-01-3{}T08:00:00Z,FCO,IT,JFK,US,AZA\n", d % 2));
    }
    for d in 0..5 {
        log.push_str(&format!("2020-03-2{}T08:00:00Z,FCO,IT,JFK,US,AZA\n", d));
    }
    log.push_str("2020-03-20 09:00:00,CDG,FR,FCO,IT,AFR\n");
    log.push_str("1584694800,CDG,FR,,,\n");
    fs::write(p.join("dep.csv"), log).unwrap();
    ok(&airshock(&["tracking", "--departures", "dep.csv"], p));
    let ratios = fs::read_to_string(p.join("out/tracking/ratios_country.csv")).unwrap();
    assert_eq!(ratios, "country,count_a,count_b,ratio\nFR,2,0,\nIT,5,10,0.5\n");
    let pairs = fs::read_to_string(p.join("out/tracking/pair_matrix.csv")).unwrap();
    assert!(pairs.contains("IT,US,0.5,5,10"));
    assert!(pairs.contains("FR,IT,,1,0"));

    ok(&airshock(&["tracking", "--departures", "dep.csv", "--group-by", "airline", "--out", "air"], p));
    let mut rdr = csv::Reader::from_path(p.join("air/tracking/series_airline.csv")).unwrap();
    let airlines: std::collections::BTreeSet<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(airlines.into_iter().collect::<Vec<_>>(), vec!["AFR", "AZA"]);
    assert!(!p.join("air/tracking/series_country.csv").exists());
}

#[test]
fn tracking_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("dep.csv"), DEPARTURES).unwrap();
    ok(&airshock(&["tracking", "--departures", "dep.csv"], dir.path()));
    let ratios = fs::read_to_string(dir.path().join("out/tracking/ratios_airport.csv")).unwrap();
    assert_eq!(ratios, "airport,count_a,count_b,ratio\n");
    let series = fs::read_to_string(dir.path().join("out/tracking/series_airport.csv")).unwrap();
    assert_eq!(series.lines().count(), 1);
}

#[test]
fn tracking_bad_timestamp_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = format!("{DEPARTURES}2020-03-20T08:00:00Z,FCO,IT,,,\nlast tuesday,FCO,IT,,,\n");
    fs::write(dir.path().join("dep.csv"), log).unwrap();
    let out = airshock(&["tracking", "--departures", "dep.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dep.csv:3"));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(&airshock(&["synth", "--routes", "25", "--seed", "42", "--out", "a"], dir.path()));
    ok(&airshock(&["synth", "--routes", "25", "--seed", "42", "--out", "b"], dir.path()));
    ok(&airshock(&["synth", "--routes", "25", "--seed", "43", "--out", "c"], dir.path()));
    let read = |d: &str| fs::read(dir.path().join(d).join("synth/series.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

use airshock::calendar::{HISTORY_END, HISTORY_START};
use airshock::ingest::{generate_synthetic_corpus, SyntheticProfile};
use airshock::kv::KeyValues;

#[test]
fn same_seed_same_corpus() {
    let p = SyntheticProfile::default();
    let a = generate_synthetic_corpus(42, 50, &p).unwrap();
    let b = generate_synthetic_corpus(42, 50, &p).unwrap();
    let bytes = |c: &airshock::ingest::RouteCorpus| {
        let mut v = Vec::new();
        c.write_series_csv(&mut v).unwrap();
        v
    };
    assert_eq!(bytes(&a), bytes(&b));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| generate_synthetic_corpus(42, 50, &p)).unwrap();
    assert_eq!(bytes(&a), bytes(&c));
    assert!(generate_synthetic_corpus(42, 0, &p).is_err());
}

#[test]
fn flat_profile_has_constant_means() {
    let p = SyntheticProfile { base: 300.0, growth: 0.0, season: [1.0; 12], fare_base: 10.0 };
    for y in 2010..2020 {
        for m in 1..=12 {
            assert_eq!(p.mean(y, m), 300.0);
        }
    }
}

#[test]
fn monthly_averages_converge_to_profile_means() {
    let p = SyntheticProfile::default();
    let n = 1000;
    let corpus = generate_synthetic_corpus(7, n, &p).unwrap();
    // Independent accumulation per calendar month of the history window.
    let months = (HISTORY_END.ordinal() - HISTORY_START.ordinal() + 1) as usize;
    let mut sums = vec![0u64; months];
    for r in corpus.routes() {
        assert_eq!(r.observations().len(), months);
        for (i, o) in r.observations().iter().enumerate() {
            sums[i] += o.passengers as u64;
            if o.passengers == 0 {
                assert_eq!(o.avg_fare, None);
            } else {
                let f = o.avg_fare.unwrap();
                assert!((f - p.fare_base).abs() <= 0.05 * p.fare_base + 0.005);
            }
        }
    }
    let mut ym = HISTORY_START;
    for (i, sum) in sums.iter().enumerate() {
        let expected = p.base * (1.0 + p.growth * (ym.year() - 2010) as f64).powi(2) * p.season[ym.month() as usize - 1];
        let sample = *sum as f64 / n as f64;
        let sigma = (expected / n as f64).sqrt();
        // 118 months at 4 sigma with a fixed seed.
        assert!((sample - expected).abs() <= 4.0 * sigma, "month {i}: {sample} vs {expected}");
        ym = ym.succ();
    }
}

#[test]
fn profile_file_keys() {
    let kv = KeyValues::parse("base=50\ngrowth=0\nseason_7=2\n", "p").unwrap();
    let p = SyntheticProfile::from_key_values(&kv).unwrap();
    assert_eq!(p.mean(2015, 7), 100.0);
    assert_eq!(p.mean(2015, 1), 50.0 * 0.85);
    let bad = KeyValues::parse("base=50\nseason_13=1\n", "p").unwrap();
    assert!(SyntheticProfile::from_key_values(&bad).is_err());
    let neg = KeyValues::parse("base=-5\n", "p").unwrap();
    assert!(SyntheticProfile::from_key_values(&neg).is_err());
}

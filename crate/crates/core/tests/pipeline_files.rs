use std::io::Write;

use cmm_core::mining::{ConsistentSets, TransactionDB};
use cmm_core::models::Registry;
use cmm_core::pipeline::{self, recompute_metrics, run_cmm, CmmConfig, ForecastReport, MiningOutcome};
use cmm_core::series::{generate, load_csv, write_csv, Stamp, SynthSpec};

fn small_registry() -> Registry {
    Registry::builtin(12)
        .subset(&[1, 2, 13, 20, 44], &[1, 3, 21, 33], &[1, 2, 11, 34])
        .unwrap()
}

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        id: "file".into(),
        start: Stamp::new(1995, 1),
        n: 132,
        period: 12,
        base_level: 800.0,
        trend_slope: 2.0,
        seasonal_amplitudes: SynthSpec::sinusoidal_factors(12, 0.25, 0.3),
        noise_sd: 0.03,
        seed,
    }
}

#[test]
fn file_round_trip_preserves_the_pipeline() {
    let ts = generate(&spec(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("file.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    write_csv(&ts, &mut f).unwrap();
    f.flush().unwrap();
    let back = load_csv(&path, 12).unwrap();
    assert_eq!(back, ts);

    let reg = small_registry();
    let cfg = CmmConfig::default();
    let (_, a) = run_cmm(&ts, &reg, &cfg).unwrap();
    let (_, b) = run_cmm(&back, &reg, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn report_json_round_trips_and_metrics_recompute() {
    let ts = generate(&spec(6)).unwrap();
    let (outcome, report) = run_cmm(&ts, &small_registry(), &CmmConfig::default()).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: ForecastReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(recompute_metrics(&back).unwrap(), report.metrics);

    // MAPE over the window is the mean of per-point |APE|.
    let mean_ape = report
        .rows
        .iter()
        .map(|r| 100.0 * ((r.actual - r.forecast) / r.actual).abs())
        .sum::<f64>()
        / report.rows.len() as f64;
    assert!((mean_ape - report.metrics.mape).abs() < 1e-12);

    // The transaction databases survive their text format.
    for db in [&outcome.good_db, &outcome.bad_db] {
        let parsed = TransactionDB::parse_text(&db.to_text()).unwrap();
        assert_eq!(parsed.transactions, db.transactions);
    }
    let sets: ConsistentSets = serde_json::from_str(&serde_json::to_string(&outcome.sets).unwrap()).unwrap();
    assert_eq!(sets, outcome.sets);
    let _: &MiningOutcome = &outcome;
}

#[test]
fn comparison_table_shape() {
    let reg = small_registry();
    let cfg = CmmConfig::default();
    let reports: Vec<ForecastReport> = (0..3)
        .map(|s| {
            let ts = generate(&SynthSpec {
                id: format!("s{s}"),
                ..spec(10 + s)
            })
            .unwrap();
            run_cmm(&ts, &reg, &cfg).unwrap().1
        })
        .collect();
    let csv = pipeline::comparison_csv(&reports);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "series,hw_mape,cmm_mape,improvement_pct");
    let avg = reports.iter().map(|r| r.improvement_pct).sum::<f64>() / 3.0;
    assert_eq!(lines[4], format!("{},,,{avg:.2}", pipeline::AVERAGE_ROW));
}

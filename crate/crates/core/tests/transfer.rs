use cmm_core::models::Registry;
use cmm_core::pipeline::{run_cmm, CmmConfig};
use cmm_core::series::{generate, Stamp, SynthSpec, TimeSeries};
use cmm_core::similarity::{group, normalized_sfd, transfer, SfdConfig};

const CYCLE: [f64; 12] = [
    3733.5521905100436,
    3775.4746990995823,
    5981.096240947652,
    6073.490204744978,
    5557.411045298307,
    4562.555163220908,
    3426.17822584846,
    6577.5036604958495,
    4583.529248126651,
    7156.0981870605365,
    3908.104180368253,
    4665.006954278766,
];

fn rig(id: &str, scale: f64) -> TimeSeries {
    TimeSeries::new(id, 12, Stamp::new(1990, 1), (0..120).map(|t| scale * CYCLE[t % 12]).collect()).unwrap()
}

fn rig_registry() -> Registry {
    let ids = |v: &[&'static str]| v.iter().enumerate().map(|(i, n)| (i as u32 + 1, *n)).collect::<Vec<_>>();
    Registry::from_names(
        12,
        &ids(&[
            "ARIMA (0,1,0) NOINT",
            "ARIMA (0,0,2) NOINT",
            "ARIMA (0,0,3) NOINT",
            "ARIMA (0,0,1)(0,0,1)_s NOINT",
            "ARIMA (0,0,2)(0,0,1)_s NOINT",
            "Log ARIMA (0,0,1) NOINT",
            "Log ARIMA (0,0,2) NOINT",
            "Log ARIMA (0,0,1)_s NOINT",
            "Log ARIMA (0,0,2)(0,0,1)_s NOINT",
            "Log ARIMA (0,0,3)(0,0,1)_s NOINT",
        ]),
        &ids(&[
            "ARIMA (0,1,0)_s NOINT",
            "ARIMA (0,0,3) NOINT",
            "Log ARIMA (0,0,2) NOINT",
            "ARIMA (0,1,1) NOINT",
            "Linear Exponential",
            "ARIMA (1,1,0) NOINT",
        ]),
        &ids(&[
            "ARIMA (0,0,0)",
            "ARIMA (0,0,1) NOINT",
            "ARIMA (0,0,2) NOINT",
            "ARIMA (0,0,3) NOINT",
            "ARIMA (0,0,2)(0,0,1)_s NOINT",
            "ARIMA (0,0,3)(0,0,1)_s NOINT",
        ]),
    )
    .unwrap()
}

#[test]
fn rigged_pair_transfers_exactly() {
    let reg = rig_registry();
    let cfg = CmmConfig {
        k_ratio: 0.0084,
        warmup: Some(48),
        ..CmmConfig::default()
    };
    let source = rig("source", 1.0);
    let target = rig("target", 2.0);
    let (mined, _) = run_cmm(&source, &reg, &cfg).unwrap();
    let (_, own) = run_cmm(&target, &reg, &cfg).unwrap();
    let moved = transfer("source", &mined.sets, &target, &reg, &cfg).unwrap();
    assert_eq!(moved.source_series.as_deref(), Some("source"));
    // Both forecasts are exact up to round-off.
    assert!(own.metrics.mape < 1e-9, "own {}", own.metrics.mape);
    assert!(moved.metrics.mape < 1e-9, "transferred {}", moved.metrics.mape);
    if own.consistent.good == mined.sets.good {
        assert_eq!(own.metrics, moved.metrics);
    }
}

fn pair_spec(pair: u64, seed: u64, id: &str) -> SynthSpec {
    SynthSpec {
        id: id.into(),
        start: Stamp::new(1990, 1),
        n: 120,
        period: 12,
        base_level: 200.0 + 50.0 * pair as f64,
        trend_slope: 0.5 + 0.2 * pair as f64,
        seasonal_amplitudes: SynthSpec::sinusoidal_factors(12, 0.2 + 0.01 * pair as f64, 0.1 * pair as f64),
        noise_sd: 0.01,
        seed,
    }
}

#[test]
fn same_group_transfer_within_twice_own_mape() {
    // Ten same-spec pairs with different noise seeds; the largest measured
    // ratio of transferred to own-mined MAPE was 1.245.
    let reg = Registry::builtin(12);
    let cfg = CmmConfig::default();
    let sfd_cfg = SfdConfig::default();
    for pair in 0..10 {
        let a = generate(&pair_spec(pair, 100 + pair, "source")).unwrap();
        let b = generate(&pair_spec(pair, 200 + pair, "target")).unwrap();
        let n = normalized_sfd(a.values(), b.values(), &sfd_cfg).unwrap();
        assert!(n <= sfd_cfg.similarity_ratio, "pair {pair}: normalised SFD {n}");
        assert_eq!(group(&[a.clone(), b.clone()], &sfd_cfg, Some("source")).unwrap().len(), 1);

        let (mined, _) = run_cmm(&a, &reg, &cfg).unwrap();
        let (_, own) = run_cmm(&b, &reg, &cfg).unwrap();
        let moved = transfer("source", &mined.sets, &b, &reg, &cfg).unwrap();
        let ratio = moved.metrics.mape / own.metrics.mape;
        assert!(ratio <= 2.0, "pair {pair}: ratio {ratio}");
    }
}

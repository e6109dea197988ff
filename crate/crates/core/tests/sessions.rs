use ltcoop::channel::{LinkParams, SimLink, Transport};
use ltcoop::coop::loopback::{loopback_transfer, LoopbackOptions};
use ltcoop::coop::{run, ChurnAction, ChurnEvent, Mode, SessionConfig, SessionError};
use ltcoop::exec::Exec;
use ltcoop::harness::{self, codec::synthetic_bytes, Experiment, ExperimentSpec};
use ltcoop::lt::CodingParams;
use proptest::prelude::*;

fn small(aus: usize, loss: f64, seed: u64) -> SessionConfig {
    let mut cfg = SessionConfig::equal_paths(aus, 150_000.0, loss, 5.0, 120_000, seed);
    cfg.coding = CodingParams::new(32, 512);
    cfg.max_time = 300.0;
    cfg
}

#[test]
fn config_survives_toml() {
    let mut cfg = small(2, 0.1, 3);
    cfg.churn.push(ChurnEvent { at: 1.5, au: 1, action: ChurnAction::Leave });
    let text = cfg.to_toml_string();
    assert_eq!(SessionConfig::from_toml_str(&text).unwrap(), cfg);
}

#[test]
fn handwritten_config_parses() {
    let cfg = SessionConfig::from_toml_str(
        r#"
        mode = "arq"
        file_size = 50000
        session_seed = 4
        [coding]
        n = 32
        symbol_size = 512
        [direct]
        loss_rate = 0.05
        rate_limit = 100000.0
        latency_ms = 10.0
        seed = 1
        [[assistants]]
        id = 7
        uplink = { loss_rate = 0.05, rate_limit = 100000.0, latency_ms = 10.0, seed = 2 }
        relay = { loss_rate = 0.0, rate_limit = 400000.0, latency_ms = 2.0, seed = 3 }
        [[churn]]
        at = 0.5
        au = 7
        action = "leave"
        "#,
    )
    .unwrap();
    assert_eq!(cfg.mode, Mode::Arq);
    assert_eq!(cfg.block_window, 4);
    let r = run(&cfg).unwrap();
    assert!(r.exact);
    assert_eq!(r.per_path[1].path, "au-7");
}

#[test]
fn bad_configs_rejected() {
    let mut cfg = small(1, 0.0, 1);
    cfg.churn.push(ChurnEvent { at: 0.1, au: 9, action: ChurnAction::Leave });
    assert!(matches!(run(&cfg), Err(SessionError::Config(_))));
    let mut cfg = small(1, 0.0, 1);
    cfg.coding.symbol_size = 1426;
    assert!(cfg.validate().is_err());
    let mut cfg = small(1, 0.0, 1);
    cfg.direct.loss_rate = 1.5;
    assert!(run(&cfg).is_err());
}

#[test]
fn sessions_are_reproducible() {
    let a = run(&small(2, 0.1, 8)).unwrap();
    let b = run(&small(2, 0.1, 8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn parallel_and_sequential_reports_agree() {
    for name in [Experiment::Churn, Experiment::OverheadMatrix, Experiment::IncentiveTables] {
        let mut spec = ExperimentSpec::new(name);
        spec.trials = Some(4);
        spec.grid.file_size = Some(150_000);
        spec.grid.n = Some(vec![32, 64]);
        spec.grid.symbol_size = Some(vec![64]);
        let seq = harness::run(&spec, Exec::Sequential).unwrap();
        let par = harness::run(&spec, Exec::default()).unwrap();
        assert_eq!(seq.csv, par.csv, "{}", name.name());
    }
}

#[test]
fn link_counters_balance() {
    let mut link = SimLink::new(LinkParams::new(0.3, 10_000.0, 50.0, 5)).unwrap();
    let mut now = 0.0;
    for _ in 0..500 {
        link.send(&[0u8; 100], now).unwrap();
        now += 0.004;
        link.poll(now);
        let s = link.stats();
        assert_eq!(s.sent, s.delivered + s.dropped + link.in_flight() as u64);
    }
    let s = link.stats();
    let rate = s.dropped as f64 / s.sent as f64;
    assert!((rate - 0.3).abs() < 0.07, "{rate}");
}

#[test]
fn arq_reassigns_chunks_of_departed_path() {
    let mut cfg = small(2, 0.0, 2);
    cfg.mode = Mode::Arq;
    cfg.churn.push(ChurnEvent { at: 0.2, au: 1, action: ChurnAction::Leave });
    let r = run(&cfg).unwrap();
    assert!(r.exact);
    assert!(r.reassigned > 0);
}

#[test]
fn lt_session_over_loss_beats_arq() {
    let mut lt = small(3, 0.2, 6);
    lt.file_size = 400_000;
    lt.direct.latency_ms = 20.0;
    let mut arq = lt.clone();
    arq.mode = Mode::Arq;
    let (l, a) = (run(&lt).unwrap(), run(&arq).unwrap());
    assert!(l.exact && a.exact);
    assert!(l.goodput > a.goodput, "{} vs {}", l.goodput, a.goodput);
}

#[test]
fn real_udp_transfer() {
    let data = synthetic_bytes(700_000, 12);
    let opts = LoopbackOptions { paths: 3, ..LoopbackOptions::default() };
    let r = loopback_transfer(&data, CodingParams::new(64, 1024), opts).unwrap();
    assert!(r.exact);
    assert_eq!(r.sent_per_path.len(), 3);
    assert!(r.received as f64 >= data.len() as f64 / 1024.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Whatever the churn schedule, the output is either exact or the session
    /// reports that it could not finish.
    #[test]
    fn churn_never_corrupts(
        seed: u64,
        events in prop::collection::vec((0.0f64..3.0, 1u32..=3, prop::bool::ANY), 0..6),
        loss in 0.0f64..0.3,
    ) {
        let mut cfg = small(3, loss, seed);
        cfg.churn = events
            .into_iter()
            .map(|(at, au, leave)| ChurnEvent { at, au, action: if leave { ChurnAction::Leave } else { ChurnAction::Join } })
            .collect();
        let r = run(&cfg).unwrap();
        prop_assert!(r.exact);
        prop_assert_eq!(r.terminate_signals, 1);
        let credited: f64 = r.timeline.iter().sum::<f64>() * r.monitor_window;
        prop_assert!((credited - r.file_len as f64).abs() < 1e-6 * r.file_len as f64);
    }
}

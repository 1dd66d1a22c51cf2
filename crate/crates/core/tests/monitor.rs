use flowdim_core::capture::read_capture;
use flowdim_core::monitor::{run_monitor, FnnSettings, MonitorConfig, MonitorError, Speed, WindowSpec};
use flowdim_core::params::{extract_params, ParamId};
use flowdim_core::rules::{ack_scan_rule, builtin_catalog};
use flowdim_core::series::{boxcar_average, Aggregation};
use flowdim_core::synth::traffic::{crafted_capture, pcap_bytes, Attack, PacketSpec};
use flowdim_core::{decode_packet, CaptureRecord};

fn capture(attack: Option<Attack>) -> Vec<u8> {
    pcap_bytes(&crafted_capture(attack, 5))
}

fn run(bytes: &[u8], cfg: &MonitorConfig) -> flowdim_core::monitor::MonitorReport {
    run_monitor(bytes, builtin_catalog(), cfg, Speed::Unlimited).unwrap()
}

#[test]
fn chained_window_is_downsampled_boxcar() {
    let mut a = WindowSpec::new("fine", 1.0, &[3, 18]);
    a.boxcar = 12;
    let mut b = WindowSpec::new("coarse", 12.0, &[]);
    b.source = Some("fine".into());
    let cfg = MonitorConfig { windows: vec![a, b] };
    let r = run(&capture(None), &cfg);
    for id in [ParamId::IP_LENGTH, ParamId::PROTOCOL] {
        let fine = r.window("fine").unwrap().param(id).unwrap();
        let raw = fine.series_data.as_ref().unwrap();
        let expected = boxcar_average(raw, 12).unwrap();
        let coarse = r.window("coarse").unwrap().param(id).unwrap().series_data.as_ref().unwrap();
        let want: Vec<f64> = expected.values.iter().step_by(12).copied().collect();
        assert_eq!(coarse.values, want);
        assert_eq!(coarse.tau, 12.0);
        assert_eq!(coarse.start_time, expected.start_time);
    }
}

#[test]
fn alerts_do_not_depend_on_windows() {
    let bytes = capture(Some(Attack::Land));
    let one = MonitorConfig {
        windows: vec![WindowSpec::new("a", 1.0, &[1])],
    };
    let mut w = WindowSpec::new("b", 0.5, &[3, 7, 8, 18]);
    w.aggregation = Aggregation::Count;
    w.fnn = Some(FnnSettings::default());
    let many = MonitorConfig {
        windows: vec![w, WindowSpec::new("c", 30.0, &[2])],
    };
    let ra = run(&bytes, &one);
    let rb = run(&bytes, &many);
    assert_eq!(ra.alerts, rb.alerts);
    let names: Vec<&str> = ra.alerts.iter().map(|a| a.rule.as_str()).collect();
    assert_eq!(names, vec!["land"]);
}

#[test]
fn counters_add_up() {
    let mut recs = crafted_capture(None, 8);
    let t = recs[10].timestamp;
    recs.insert(11, PacketSpec::arp().record(t.as_secs_f64()));
    recs.insert(12, CaptureRecord::new(t, 6, vec![1, 2, 3, 4, 5, 6]));
    let bytes = pcap_bytes(&recs);
    let cfg = MonitorConfig {
        windows: vec![WindowSpec::new("a", 1.0, &[3])],
    };
    let r = run(&bytes, &cfg);
    let c = r.counters;
    assert_eq!(c.packets_in, recs.len() as u64);
    assert_eq!(c.packets_in, c.decoded + c.decode_errors + c.non_ip_skipped);
    assert_eq!((c.decode_errors, c.non_ip_skipped), (1, 1));
    assert_eq!(c.bytes_in, recs.iter().map(|r| r.data.len() as u64).sum::<u64>());
    let (back, link) = read_capture(&bytes).unwrap();
    let samples: usize = back
        .iter()
        .filter_map(|r| decode_packet(r, link).ok())
        .map(|p| extract_params(&p).len())
        .sum();
    assert_eq!(c.samples, samples as u64);
    assert_eq!(c.alerts, r.alerts.len() as u64);
}

#[test]
fn failing_window_leaves_others_alone() {
    let bytes = capture(None);
    let alone = MonitorConfig {
        windows: vec![WindowSpec::new("good", 1.0, &[3])],
    };
    let mut bad = WindowSpec::new("bad", 100.0, &[3]);
    bad.boxcar = 50;
    bad.fnn = Some(FnnSettings::default());
    let both = MonitorConfig {
        windows: vec![WindowSpec::new("good", 1.0, &[3]), bad],
    };
    let ra = run(&bytes, &alone);
    let rb = run(&bytes, &both);
    assert_eq!(ra.windows[0], rb.windows[0]);
    assert!(!rb.windows[1].params[0].errors.is_empty());
}

#[test]
fn windowed_rules_run_in_monitor() {
    let bytes = capture(Some(Attack::AckScan));
    let cfg = MonitorConfig {
        windows: vec![WindowSpec::new("a", 1.0, &[11])],
    };
    let mut rules = builtin_catalog();
    rules.push(ack_scan_rule());
    let r = run_monitor(bytes.as_slice(), rules, &cfg, Speed::Unlimited).unwrap();
    let names: Vec<&str> = r.alerts.iter().map(|a| a.rule.as_str()).collect();
    assert_eq!(names, vec!["ack-scan"]);
}

#[test]
fn late_packets_beyond_tolerance_fail() {
    let mut recs = crafted_capture(None, 2);
    let last = recs.last().unwrap().timestamp;
    recs.push(PacketSpec::tcp([10, 0, 0, 1], [10, 0, 0, 2], 4000, 80).record(last.as_secs_f64() - 5.0));
    let cfg = MonitorConfig {
        windows: vec![WindowSpec::new("a", 1.0, &[3])],
    };
    match run_monitor(pcap_bytes(&recs).as_slice(), builtin_catalog(), &cfg, Speed::Unlimited) {
        Err(MonitorError::Ordering(e)) => assert!(e.behind_micros >= 4_000_000),
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_speed_is_rejected() {
    assert!("0".parse::<Speed>().is_err());
    assert!(Speed::factor(0.0).is_err());
    assert!(Speed::factor(f64::NAN).is_err());
    assert_eq!("0.5".parse::<Speed>().unwrap(), Speed::Factor(0.5));
}

#[test]
fn config_round_trips_through_toml() {
    let text = r#"
[[window]]
name = "fine"
tau = 1.0
params = [3, 18]
aggregation = "count"
boxcar = 4

[[window]]
name = "coarse"
tau = 60.0
source = "fine"

[window.fnn]
d_max = 6
"#;
    let cfg = MonitorConfig::from_toml(text).unwrap();
    assert_eq!(cfg.windows[1].fnn.as_ref().unwrap().d_max, 6);
    assert_eq!(MonitorConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(MonitorConfig::from_toml("[[window]]\nname = \"a\"\ntau = 1.0\nparams = [3]\ncolour = 1").is_err());
    assert!(MonitorConfig::from_toml("[[window]]\nname = \"a\"\ntau = 5.0\nparams = [3]\n[[window]]\nname = \"b\"\ntau = 1.0\nparams = [3]").is_err());
}

#[test]
fn empty_capture_is_not_an_error() {
    let bytes = pcap_bytes(&[]);
    let cfg = MonitorConfig {
        windows: vec![WindowSpec::new("a", 1.0, &[3])],
    };
    let r = run(&bytes, &cfg);
    assert_eq!(r.counters.packets_in, 0);
    assert!(r.windows[0].params[0].series.is_none());
}

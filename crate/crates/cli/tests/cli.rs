use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flowdim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowdim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&flowdim(&["synth", "capture", "-o", "clean.pcap", "--seed", "3"], d)), 0);
    assert_eq!(code(&flowdim(&["synth", "capture", "--attack", "land", "-o", "land.pcap"], d)), 0);
    assert_eq!(code(&flowdim(&["scan", "clean.pcap"], d)), 0);
    assert_eq!(code(&flowdim(&["scan", "land.pcap"], d)), 1);
    assert_eq!(code(&flowdim(&["scan", "--frobnicate"], d)), 2);
    assert_eq!(code(&flowdim(&["scan", "missing.pcap"], d)), 3);
    fs::write(d.join("junk.pcap"), b"not a capture at all").unwrap();
    assert_eq!(code(&flowdim(&["scan", "junk.pcap"], d)), 3);
    fs::write(d.join("bad.rules"), "rule \"x\" when ip.src > 3\n").unwrap();
    let o = flowdim(&["scan", "clean.pcap", "--rules", "bad.rules"], d);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:24"));
    assert_eq!(code(&flowdim(&["monitor", "clean.pcap", "-c", "nope.toml", "-o", "out"], d)), 3);
    let o = flowdim(&["monitor", "clean.pcap", "-c", "x.toml", "-o", "out", "--speed", "0"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn scan_prints_tab_separated_alerts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    flowdim(&["synth", "capture", "--attack", "smurf", "-o", "s.pcap"], d);
    let o = flowdim(&["scan", "s.pcap"], d);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let cols: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(cols.len(), 6);
    assert!(cols[0].ends_with('Z') && cols[0].contains('T'));
    assert_eq!(cols[1], "smurf");
}

#[test]
fn extract_bin_fnn_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&flowdim(&["synth", "lorenz-traffic", "--seconds", "400", "-o", "l.pcap"], d)), 0);
    assert_eq!(code(&flowdim(&["extract", "l.pcap", "-o", "samples.csv"], d)), 0);
    let samples = fs::read_to_string(d.join("samples.csv")).unwrap();
    assert!(samples.starts_with("time,param_id,value"));
    let o = flowdim(&["bin", "samples.csv", "--param", "18", "--tau", "1", "--agg", "count", "-o", "s.csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(d.join("s.csv")).unwrap();
    let rows = series.lines().count() - 1;
    assert!((399..=401).contains(&rows), "{rows}");
    let o = flowdim(&["fnn", "s.csv", "--d-max", "5", "-o", "f.csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("delay "));
    let curve = fs::read_to_string(d.join("f.csv")).unwrap();
    assert!(curve.starts_with("d,fraction,neighbors"));
    assert_eq!(curve.lines().count(), 6);
    let o = flowdim(&["embed", "s.csv", "--dim", "3", "--delay", "2", "-o", "v.csv"], d);
    assert_eq!(code(&o), 0);
    let o = flowdim(&["project", "v.csv", "--axes", "0,2"], d);
    assert_eq!(code(&o), 0);
    let first = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(first.split(',').count(), 2);
}

#[test]
fn baseline_fit_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    flowdim(&["synth", "series", "sine", "--n", "2000", "-o", "sine.csv"], d);
    flowdim(&["synth", "series", "noise", "--n", "500", "-o", "noise.csv"], d);
    let o = flowdim(
        &["baseline", "fit", "sine.csv", "--dim", "2", "--delay", "14", "--resolution", "16", "-o", "m.bin"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let on = stdout(&flowdim(&["baseline", "score", "m.bin", "sine.csv"], d));
    let off = stdout(&flowdim(&["baseline", "score", "m.bin", "noise.csv"], d));
    let max = |s: &str| s.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u32>().unwrap()).max().unwrap();
    assert_eq!(max(&on), 0);
    assert!(max(&off) > 0);
}

#[test]
fn monitor_writes_report_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    flowdim(&["synth", "capture", "--attack", "syn-flood", "-o", "c.pcap"], d);
    fs::write(
        d.join("m.toml"),
        "[[window]]\nname = \"fine\"\ntau = 1.0\nparams = [3, 12]\nboxcar = 4\n\n[[window]]\nname = \"minute\"\ntau = 4.0\nsource = \"fine\"\n",
    )
    .unwrap();
    let o = flowdim(&["monitor", "c.pcap", "-c", "m.toml", "-o", "rep"], d);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let alerts = fs::read_to_string(d.join("rep/alerts.tsv")).unwrap();
    assert!(alerts.lines().all(|l| l.split('\t').nth(1) == Some("syn-flood")));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(json["windows"].as_array().unwrap().len(), 2);
    assert_eq!(json["counters"]["alerts"].as_u64().unwrap() as usize, alerts.lines().count());
    for f in ["fine_p3_series.csv", "fine_p3_averaged.csv", "minute_p12_series.csv"] {
        assert!(d.join("rep").join(f).exists(), "{f}");
    }
}

#[test]
fn rules_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let list = stdout(&flowdim(&["rules", "list"], d));
    assert_eq!(list.lines().count(), 14);
    fs::write(d.join("catalog.rules"), &list).unwrap();
    assert_eq!(stdout(&flowdim(&["rules", "check", "catalog.rules"], d)).trim(), "14 rules ok");
    let hist = stdout(&flowdim(&["rules", "histogram"], d));
    assert_eq!(hist.lines().count(), 18);
    assert!(hist.lines().next().unwrap().starts_with("1\t"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use timebin::tagstream::{post_select, read_stream, write_stream, TagRecord, TagStream};
use timebin::ExperimentConfig;

fn timebin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "seed = 5\n[phase_scan]\nduration_s = 0.02\n[angle_scan]\nduration_s = 0.01\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn phase_scan_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(timebin(&["phase-scan", "-c", &cfg, "-o", s(&a)]).status.code(), Some(0));
    assert_eq!(timebin(&["phase-scan", "-c", &cfg, "-o", s(&b)]).status.code(), Some(0));
    for f in ["histogram.csv", "scans.csv", "fits.csv", "visibility_map.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    timebin(&["phase-scan", "-c", &cfg, "-o", s(&c), "--seed", "6"]);
    assert_ne!(fs::read(a.join("scans.csv")).unwrap(), fs::read(c.join("scans.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[sensor]\nno_such_key = 1\n").unwrap();
    let out = timebin(&["qkd", "-c", s(&bad), "-o", s(&dir.path().join("q"))]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&bad, "[channel]\nv_mode = 2.0\n").unwrap();
    let out = timebin(&["qkd", "-c", s(&bad), "-o", s(&dir.path().join("q"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn angle_scan_rows_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let one = dir.path().join("one");
    let out = timebin(&["angle-scan", "-c", &cfg, "-o", s(&one), "--angles", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(one.join("angle_scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));

    let far = dir.path().join("far");
    let out = timebin(&["angle-scan", "-c", &cfg, "-o", s(&far), "--angles", "-60,60"]);
    assert_eq!(out.status.code(), Some(3));
    let csv = fs::read_to_string(far.join("angle_scan.csv")).unwrap();
    assert_eq!(csv.matches("insufficient").count(), 2);
}

#[test]
fn qkd_report_and_insufficient_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let q = dir.path().join("q");
    assert_eq!(timebin(&["qkd", "-c", &cfg, "-o", s(&q), "--pulses", "2000000"]).status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(q.join("qkd_report.json")).unwrap()).unwrap();
    assert!(report["qber"].as_f64().unwrap() < 0.05);
    let out = timebin(&["qkd", "-c", &cfg, "-o", s(&dir.path().join("few")), "--pulses", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn image_high_snr_recovers_mask() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mask = dir.path().join("mask.csv");
    let mut rows = ["0,0,0,0,0,0,0,0"; 8];
    rows[3] = "0,0,1,1,1,1,0,0";
    rows[4] = "0,0,1,1,1,1,0,0";
    fs::write(&mask, rows.join("\n") + "\n").unwrap();
    let out_dir = dir.path().join("img");
    let out = timebin(&["image", "-c", &cfg, "-o", s(&out_dir), "--mask", s(&mask), "--snr", "high"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = fs::read_to_string(out_dir.join("reconstruction.csv")).unwrap();
    assert_eq!(rec.trim(), fs::read_to_string(&mask).unwrap().trim());
}

#[test]
fn inspect_empty_file_prints_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.tbl");
    write_stream(&f, &TagStream::default()).unwrap();
    let out = timebin(&["tags", "inspect", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "channel,count\n");
}

#[test]
fn tag_tools_agree_with_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let ps = dir.path().join("ps");
    timebin(&["phase-scan", "-c", &cfg, "-o", s(&ps), "--save-tags"]);
    let tags = ps.join("tags.tbl");
    let stream = read_stream(&tags).unwrap();

    let out = timebin(&["tags", "select", s(&tags), "--center-ps", "2570", "--half-width-ps", "285", "--channel", "28"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let expect = post_select(stream.iter(), 28, 2570, 285).unwrap();
    assert_eq!(text, format!("channel,count\n28,{expect}\n"));

    // three peaks 570 ps apart
    let out = timebin(&["tags", "hist", s(&tags), "--bin-ps", "10"]);
    let hist: Vec<(u64, u64)> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let peak_in = |lo: u64, hi: u64| {
        hist.iter().filter(|(d, _)| (lo..hi).contains(d)).max_by_key(|(_, n)| *n).unwrap().0
    };
    let peaks = [peak_in(1700, 2285), peak_in(2285, 2855), peak_in(2855, 3500)];
    assert!(peaks[0].abs_diff(2000) <= 10 && peaks[1].abs_diff(2570) <= 10 && peaks[2].abs_diff(3140) <= 10, "{peaks:?}");
}

#[test]
fn unordered_file_is_an_invariant_violation() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.tbl");
    let recs = vec![
        TagRecord::new(0, 100).unwrap(),
        TagRecord::new(3, 500).unwrap(),
        TagRecord::new(3, 200).unwrap(),
    ];
    write_stream(&f, &TagStream::from_records(recs)).unwrap();
    assert_eq!(timebin(&["tags", "hist", s(&f)]).status.code(), Some(4));
}

#[test]
fn config_dump_round_trips() {
    let out = timebin(&["config", "dump"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::default());
}

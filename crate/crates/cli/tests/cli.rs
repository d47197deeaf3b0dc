use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quantbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantbd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"{
  "scenario_id": "cli",
  "nb": 16, "users": 4, "antennas_per_user": 2,
  "snr_db": [-5, 5], "bits": [3, "FR"],
  "precoders": ["BD", "ZF", "RBD"], "power_alloc": ["EQUAL", "MAAS"],
  "trials": 4, "seed": 3
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_csv_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let oa = quantbd(&["simulate", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()]);
    let ob = quantbd(&["--threads", "3", "simulate", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,snr_db,precoder,bits,power_alloc,trials,mean_rate_bpcu,stderr_bpcu,failed_cells"
    );
    assert_eq!(lines.count(), 2 * 2 * 2 * 2 + 2 * 2);

    let reseeded = quantbd(&["simulate", "--config", &cfg, "--seed", "99"]);
    assert_eq!(reseeded.status.code(), Some(0));
    assert_ne!(stdout(&reseeded), text);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace(r#""seed": 3"#, r#""seed": 3, "typo": 1"#),
        SMALL.replace(r#""BD", "ZF", "RBD""#, r#""THP""#),
        SMALL.replace(r#""nb": 16"#, r#""nb": 4"#),
        SMALL.replace(r#""power_alloc": ["EQUAL", "MAAS"]"#, r#""power_alloc": ["GREEDY"]"#),
        "not json".to_string(),
    ];
    for text in cases {
        let cfg = write_config(dir.path(), &text);
        let o = quantbd(&["simulate", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    assert_eq!(quantbd(&["simulate", "--config", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(quantbd(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(quantbd(&["alloc", "--phi2", "1,x", "--bits", "4", "--snr-db", "0"]).status.code(), Some(2));
}

#[test]
fn dumped_channels_round_trip_through_the_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let chans = dir.path().join("chans");
    let c = chans.to_str().unwrap();
    assert_eq!(quantbd(&["simulate", "--config", &cfg, "--dump-channels", c]).status.code(), Some(0));
    let first = fs::read_to_string(chans.join("trial_000000.txt")).unwrap();
    assert_eq!(first.lines().next().unwrap(), "8 16");
    assert_eq!(first.lines().count(), 1 + 8 * 16);
    let generated = quantbd(&["simulate", "--config", &cfg]);
    let loaded = quantbd(&["simulate", "--config", &cfg, "--load-channels", c]);
    assert_eq!(loaded.status.code(), Some(0));
    assert_eq!(stdout(&generated), stdout(&loaded));
}

#[test]
fn widespread_numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let chans = dir.path().join("zeros");
    fs::create_dir(&chans).unwrap();
    let mut zero = String::from("8 16\n");
    zero.push_str(&"0 0\n".repeat(8 * 16));
    for t in 0..4 {
        fs::write(chans.join(format!("trial_{t:06}.txt")), &zero).unwrap();
    }
    let o = quantbd(&["simulate", "--config", &cfg, "--load-channels", chans.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",4")));
}

#[test]
fn delta_table_lists_quantizer_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("delta.csv");
    let o = quantbd(&["delta-table", "--bits", "2..6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for d in ["0.9387", "0.9811", "0.9942", "0.9983", "0.9995"] {
        assert!(text.contains(d), "{d} missing from\n{text}");
    }
    let csv = fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("bits,levels,"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn alloc_prints_per_stream_power() {
    let o = quantbd(&[
        "alloc",
        "--phi2",
        "4,1",
        "--bits",
        "FR",
        "--snr-db",
        "0",
        "--allocator",
        "WF",
        "--nu",
        "1",
        "--p-total",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.875") && text.contains("0.125"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let gains = dir.path().join("g.csv");
    fs::write(&gains, "30\n20\n10\n5\n").unwrap();
    let o = quantbd(&["alloc", "--phi2", gains.to_str().unwrap(), "--bits", "4", "--snr-db", "0", "--nu", "16"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("active 4/4"));
}

#[test]
fn cost_reports_flops_and_converter_power() {
    let o = quantbd(&["cost", "--nb", "64", "--nu", "16", "--nj", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("854016"));
    assert!(text.contains("10880"));
    assert_eq!(quantbd(&["cost", "--nb", "8", "--nu", "16", "--nj", "2"]).status.code(), Some(2));
}

#[test]
fn verify_bussgang_reports_statistics() {
    let o = quantbd(&["verify-bussgang", "--samples", "8192", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cross_corr_relative"));
}

use std::fs;
use std::io::Write;
use std::net::UdpSocket;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::thread;
use std::time::Duration;

const CAM_HEX: &str = "0202000030390000000d693a403ad274803b7743ffffffc22708ffff7fded07ff7ffe8";
const DENM_HEX: &str =
    "020100003039400006072000e4979cb9e00125e72e7be94f45dc39bba89960724207d04b0e1004b00a6bc000";

fn itskit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_itskit"));
    c.env_remove("ITSKIT_CONFIG").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    itskit().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn free_port() -> u16 {
    UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn decode_golden_cam() {
    let o = run(&["decode", CAM_HEX]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("CAM from station 12345"));
    assert!(text.contains("high_frequency.speed: 16383  (unavailable)"));
    assert!(text.contains("validation: ok"));
}

#[test]
fn decode_truncated_is_a_data_error() {
    let o = run(&["decode", &CAM_HEX[..20]]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Truncated"), "{}", stderr(&o));
    let o = run(&["decode", "zz"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_decode_feeds_encode() {
    let o = run(&["decode", "--json", DENM_HEX]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["type"], "DENM");
    assert_eq!(v["decoded"]["situation"]["event_type"]["cause_code"], 94);

    let mut child = itskit()
        .arg("encode")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&o.stdout).unwrap();
    let enc = child.wait_with_output().unwrap();
    assert_eq!(enc.status.code(), Some(0));
    assert_eq!(stdout(&enc).trim(), DENM_HEX);
}

#[test]
fn encode_reports_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let o = run(&["decode", "--json", CAM_HEX]);
    let text = stdout(&o).replace("\"speed\": 16383", "\"speed\": \"fast\"");
    fs::write(&path, text).unwrap();
    let o = run(&["encode", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("decoded.high_frequency.speed"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["decode"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "everything", "."]).status.code(), Some(1));
    assert_eq!(run(&["record", "--out", "x", "--mode", "boat"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("itskit.toml");
    fs::write(&cfg, "[recorder]\ndt_z_s = 1\n").unwrap();
    let o = itskit().env("ITSKIT_CONFIG", &cfg).args(["decode", CAM_HEX]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dt_z_s"), "{}", stderr(&o));

    fs::write(&cfg, "[analyze]\nformat = \"csv\"\n").unwrap();
    let o = itskit().env("ITSKIT_CONFIG", &cfg).args(["decode", CAM_HEX]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

fn write_sim_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("sim.json");
    fs::write(
        &path,
        r#"{
            "seed": 5,
            "duration_s": 40,
            "fleet": {"n_stations": 4, "radius_m": 300},
            "rsus": [{"station_id": 9, "position": [50.7753, 6.0839], "intersection_id": 3}],
            "denm_events": [{"station_id": 77, "cause_code": 94, "sub_cause_code": 0,
                             "start_s": 5, "repetitions": 10, "position": [50.7753, 6.0839]}]
        }"#,
    )
    .unwrap();
    path
}

fn csv_total(dir: &Path) -> Vec<String> {
    let o = run(&["analyze", "stats", dir.to_str().unwrap(), "--format", "csv", "--category", "single"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let last = text.lines().last().unwrap().to_string();
    last.split(',').map(str::to_string).collect()
}

#[test]
fn simulate_trim_join_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write_sim_config(dir.path());
    let out = dir.path().join("raw");
    let gt = dir.path().join("gt.json");
    let o = run(&[
        "simulate",
        "--config",
        sim.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--ground-truth",
        gt.to_str().unwrap(),
        "--ego",
        "static:50.7753,6.0839",
        "--mode",
        "infrastructure",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let truth: serde_json::Value = serde_json::from_slice(&fs::read(&gt).unwrap()).unwrap();

    let total = csv_total(&out);
    assert_eq!(total[1], truth["n_cam"].to_string());
    assert_eq!(total[2], "10");
    assert_eq!(total[5], truth["unique_stations"].to_string());

    let trimmed = dir.path().join("trimmed");
    let o = run(&["trim", out.to_str().unwrap(), "--out", trimmed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_total(&trimmed)[1], truth["n_cam"].to_string());

    let joined = dir.path().join("joined.v2x.json");
    let o = run(&["join", trimmed.to_str().unwrap(), "--out", joined.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = run(&["analyze", "denm", out.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().starts_with("causeCode"));
    assert!(text.contains("Stationary vehicle (94)"));

    let o = run(&["analyze", "traj", out.to_str().unwrap()]);
    let fc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fc["type"], "FeatureCollection");

    let o = run(&["analyze", "traj", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn join_overlap_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write_sim_config(dir.path());
    let out = dir.path().join("raw");
    let o = run(&["simulate", "--config", sim.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let file = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let o = run(&["join", file.to_str().unwrap(), file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("OverlapError"), "{}", stderr(&o));
}

#[test]
fn simulate_over_udp_into_record() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write_sim_config(dir.path());
    let gt = dir.path().join("gt.json");
    let out = dir.path().join("live");
    let addr = format!("127.0.0.1:{}", free_port());
    let recorder = itskit()
        .env("RUST_LOG", "info")
        .args(["record", "--listen", &addr, "--out", out.to_str().unwrap(), "--duration", "6"])
        .args(["--mode", "infrastructure", "--static-ego", "50.7753,6.0839"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_millis(1500));
    let o = run(&[
        "simulate",
        "--config",
        sim.to_str().unwrap(),
        "--udp",
        &addr,
        "--speedup",
        "40",
        "--ground-truth",
        gt.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec = recorder.wait_with_output().unwrap();
    assert_eq!(rec.status.code(), Some(0), "{}", stderr(&rec));

    let truth: serde_json::Value = serde_json::from_slice(&fs::read(&gt).unwrap()).unwrap();
    let total = csv_total(&out);
    let sent = ["n_cam", "n_denm", "n_mapem", "n_spatem"]
        .map(|k| truth[k].as_u64().unwrap())
        .iter()
        .sum::<u64>();
    let got: u64 = total[1..5].iter().map(|c| c.parse::<u64>().unwrap()).sum();
    assert_eq!(got, sent);
}

#[test]
fn gateway_prints_json_lines() {
    let addr = format!("127.0.0.1:{}", free_port());
    let child = itskit()
        .args(["gateway", "--listen", &addr, "--duration", "2"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_millis(700));
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    tx.send_to(&hex::decode(CAM_HEX).unwrap(), &addr).unwrap();
    tx.send_to(&[0x02, 0x02], &addr).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["type"], "CAM");
    assert_eq!(lines[0]["payload_hex"], CAM_HEX);
    assert!(lines[1]["decode_error"].as_str().unwrap().starts_with("Truncated"));
}

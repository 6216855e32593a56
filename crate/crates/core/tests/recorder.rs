use std::sync::atomic::Ordering;
use std::thread;
use std::time::Duration;

use itskit::dataset_io::{self, GnssFix, NS_PER_S};
use itskit::gateway::{handle_datagram, Gateway, GatewayConfig, UdpSender};
use itskit::geo::{destination, LatLon};
use itskit::its_types::{Cam, ReferencePosition};
use itskit::recorder::*;
use itskit::encode_message;

const S: i64 = NS_PER_S;
const EGO: LatLon = LatLon::new(50.7753, 6.0839);

fn cam_at(distance_m: f64) -> Vec<u8> {
    let p = destination(EGO, 10.0, distance_m);
    let mut cam = Cam::minimal(42);
    cam.basic.reference_position = ReferencePosition::from_degrees(p.lat, p.lon, 0.0);
    encode_message(&cam.into()).unwrap()
}

fn v2x(ts: i64, distance_m: f64) -> Input {
    Input::V2x(handle_datagram(&cam_at(distance_m), ts, "127.0.0.1:1".parse().unwrap(), 0))
}

fn gnss(ts: i64) -> Input {
    Input::Gnss(GnssFix { ts, lat: EGO.lat, lon: EGO.lon, alt: 0.0 })
}

#[test]
fn distance_threshold_is_inclusive_and_mode_dependent() {
    let fix = GnssFix { ts: 0, lat: EGO.lat, lon: EGO.lon, alt: 0.0 };
    let msg = |d: f64| {
        let p = destination(EGO, 10.0, d);
        let mut cam = Cam::minimal(1);
        cam.basic.reference_position = ReferencePosition::from_degrees(p.lat, p.lon, 0.0);
        cam.into()
    };
    assert!(in_range(&msg(120.0), Some(&fix), 125.0));
    assert!(!in_range(&msg(130.0), Some(&fix), 125.0));
    assert!(in_range(&msg(290.0), Some(&fix), 300.0));
    assert!(!in_range(&msg(10.0), None, 125.0));
    assert_eq!(RecorderConfig::vehicle().d_min_m, 125.0);
    assert_eq!(RecorderConfig::infrastructure().d_min_m, 300.0);
}

#[test]
fn rejects_time_travel() {
    let mut rec = Recorder::new(RecorderConfig::vehicle(), None, Vec::new()).unwrap();
    rec.push(gnss(5 * S)).unwrap();
    assert!(matches!(
        rec.push(gnss(4 * S)),
        Err(RecorderError::NonMonotonicTime { .. })
    ));
}

#[test]
fn invalid_config_rejected() {
    let cfg = RecorderConfig {
        dt_b: Duration::ZERO,
        ..RecorderConfig::vehicle()
    };
    assert!(matches!(cfg.validate(), Err(RecorderError::InvalidConfig(_))));
}

#[test]
fn silence_splits_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = DirectoryOutput::new(dir.path()).unwrap();
    let mut rec = Recorder::new(RecorderConfig::vehicle(), Some("city".into()), out).unwrap();
    rec.push(gnss(0)).unwrap();
    rec.push(v2x(S, 50.0)).unwrap();
    rec.push(gnss(20 * S)).unwrap();
    rec.push(v2x(21 * S, 50.0)).unwrap();
    rec.push(gnss(23 * S)).unwrap();
    rec.finish().unwrap();
    let written = rec.output().written().to_vec();
    assert_eq!(written.len(), 2);

    let files: Vec<_> = dataset_io::load_dir(dir.path()).unwrap().into_iter().map(|(_, r)| r).collect();
    assert_eq!((files[0].meta.start_ts, files[0].meta.end_ts), (0, 11 * S));
    assert_eq!((files[1].meta.start_ts, files[1].meta.end_ts), (11 * S, 23 * S));
    assert_eq!(files[0].context_windows[0].end_ts, 6 * S);
    assert_eq!(files[1].context_windows[0].end_ts, 23 * S);
    for f in &files {
        f.check_invariants().unwrap();
        assert_eq!(f.meta.label.as_deref(), Some("city"));
    }
}

#[test]
fn gateway_feeds_recorder_sink() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Gateway::bind(GatewayConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        ..GatewayConfig::default()
    })
    .unwrap();
    let dest = gw.local_addr().unwrap();
    let shutdown = gw.shutdown_handle();
    let received = gw.received_counter();
    let recorder = Recorder::new(
        RecorderConfig::infrastructure(),
        None,
        DirectoryOutput::new(dir.path()).unwrap(),
    )
    .unwrap();
    let ego = StaticEgo {
        lat: EGO.lat,
        lon: EGO.lon,
        alt: 0.0,
        interval: Duration::from_millis(100),
    };
    let runner = thread::spawn(move || gw.run(RecorderSink::new(recorder, Some(ego))));
    let mut tx = UdpSender::new();
    for d in [50.0, 1000.0, 250.0] {
        tx.send_raw(&cam_at(d), dest).unwrap();
    }
    while received.load(Ordering::Acquire) < 3 {
        thread::sleep(Duration::from_millis(1));
    }
    shutdown.shutdown();
    runner.join().unwrap().unwrap();

    let files = dataset_io::load_dir(dir.path()).unwrap();
    assert_eq!(files.len(), 1);
    let rec = &files[0].1;
    assert_eq!(rec.messages.len(), 3);
    assert!(!rec.gnss.is_empty());
    assert_eq!(rec.context_windows.len(), 1);
}

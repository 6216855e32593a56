mod common;

use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::Ordering;
use std::thread;
use std::time::{Duration, Instant};

use itskit::gateway::{Gateway, GatewayConfig, GatewayError, UdpSender};
use itskit::its_types::MessageType;
use itskit::encode_message;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loopback(config: GatewayConfig) -> Gateway {
    Gateway::bind(GatewayConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        ..config
    })
    .unwrap()
}

fn payloads(n: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..n)
        .map(|i| encode_message(&common::message(&mut rng, MessageType::ALL[i % 4])).unwrap())
        .collect()
}

#[test]
fn conserves_and_orders_under_load() {
    let data = payloads(5000);
    let gw = loopback(GatewayConfig::default());
    let shutdown = gw.shutdown_handle();
    let received = gw.received_counter();
    let dest = gw.local_addr().unwrap();
    let runner = thread::spawn(move || gw.run(Vec::new()));

    let mut tx = UdpSender::new();
    let start = Instant::now();
    for (i, p) in data.iter().enumerate() {
        while i as u64 - received.load(Ordering::Acquire) >= 64 {
            thread::yield_now();
        }
        tx.send_raw(p, dest).unwrap();
    }
    let rate = data.len() as f64 / start.elapsed().as_secs_f64();
    let t = Instant::now();
    while received.load(Ordering::Acquire) < data.len() as u64 && t.elapsed() < Duration::from_secs(5) {
        thread::sleep(Duration::from_millis(1));
    }
    shutdown.shutdown();
    let events = runner.join().unwrap().unwrap();

    assert!(rate >= 1000.0, "offered only {rate:.0} msg/s");
    assert_eq!(events.len(), data.len());
    for (ev, p) in events.iter().zip(&data) {
        assert_eq!(&ev.payload, p);
        assert!(ev.decoded.is_ok());
    }
    assert!(events.windows(2).all(|w| w[0].recv_ts <= w[1].recv_ts));
}

#[test]
fn undecodable_datagrams_are_delivered_with_error() {
    let gw = loopback(GatewayConfig::default());
    let shutdown = gw.shutdown_handle();
    let dest = gw.local_addr().unwrap();
    let received = gw.received_counter();
    let runner = thread::spawn(move || gw.run(Vec::new()));
    let mut tx = UdpSender::new();
    tx.send_raw(&[0x02, 0x0e, 0, 0, 0, 1], dest).unwrap();
    tx.send_raw(&[0x02], dest).unwrap();
    while received.load(Ordering::Acquire) < 2 {
        thread::sleep(Duration::from_millis(1));
    }
    shutdown.shutdown();
    let events = runner.join().unwrap().unwrap();
    assert_eq!(events.len(), 2);
    assert!(events.iter().all(|e| e.decoded.is_err()));
}

#[test]
fn skip_prefix_and_forwarding() {
    let mirror = UdpSocket::bind("127.0.0.1:0").unwrap();
    mirror.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let gw = loopback(GatewayConfig {
        skip: 4,
        forward: Some(mirror.local_addr().unwrap()),
        ..GatewayConfig::default()
    });
    let shutdown = gw.shutdown_handle();
    let dest = gw.local_addr().unwrap();
    let received = gw.received_counter();
    let runner = thread::spawn(move || gw.run(Vec::new()));

    let pdu = payloads(1).remove(0);
    let mut framed = vec![0xde, 0xad, 0xbe, 0xef];
    framed.extend(&pdu);
    UdpSender::new().send_raw(&framed, dest).unwrap();
    let mut buf = [0u8; 2048];
    let (n, _) = mirror.recv_from(&mut buf).unwrap();
    assert_eq!(&buf[..n], &framed[..]);
    while received.load(Ordering::Acquire) < 1 {
        thread::sleep(Duration::from_millis(1));
    }
    shutdown.shutdown();
    let events = runner.join().unwrap().unwrap();
    assert_eq!(events[0].pdu(), &pdu[..]);
    assert!(events[0].decoded.is_ok());
}

#[test]
fn bind_conflict_is_reported() {
    let taken = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap();
    let err = Gateway::bind(GatewayConfig {
        listen: addr,
        ..GatewayConfig::default()
    })
    .err()
    .expect("port is taken");
    assert!(matches!(err, GatewayError::BindFailure { addr: a, .. } if a == addr));
    assert!(err.to_string().starts_with("BindFailure"));
}

#[test]
fn broadcast_without_permission_fails() {
    let dest: SocketAddr = "255.255.255.255:17755".parse().unwrap();
    let err = UdpSender::new().send_raw(&[0u8; 8], dest).unwrap_err();
    assert!(matches!(err, GatewayError::SendFailure(_)), "{err}");
}

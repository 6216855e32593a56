//! UDP gateway: raw ITS payloads in, decoded events out.
//!
//! One thread reads the socket and stamps each datagram; a single worker
//! decodes and hands events to the sink in arrival order. The queue between
//! them is bounded and blocks the reader when full, so no datagram that
//! reached the socket is dropped.

use std::io;
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::{debug, warn};
use thiserror::Error;

use crate::bitcodec::CodecError;
use crate::its_codec::{decode_message, encode_message};
use crate::its_types::ItsMessage;

pub const DEFAULT_PORT: u16 = 17755;
pub const DEFAULT_QUEUE_CAPACITY: usize = 4096;
const MAX_DATAGRAM: usize = 65_536;

/// One received datagram and its decode outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RxEvent {
    /// Nanoseconds since the Unix epoch, stamped at socket read.
    pub recv_ts: i64,
    pub source: SocketAddr,
    /// The datagram exactly as received, skipped prefix included.
    pub payload: Vec<u8>,
    /// Length of the non-ITS prefix in `payload`.
    pub skip: usize,
    pub decoded: Result<ItsMessage, CodecError>,
}

impl RxEvent {
    pub fn message(&self) -> Option<&ItsMessage> {
        self.decoded.as_ref().ok()
    }

    /// The ITS PDU: `payload` without the skipped prefix.
    pub fn pdu(&self) -> &[u8] {
        &self.payload[self.skip.min(self.payload.len())..]
    }
}

/// Strips `skip` octets and decodes the rest. Never fails: decode errors are
/// carried in the event.
pub fn handle_datagram(payload: &[u8], recv_ts: i64, source: SocketAddr, skip: usize) -> RxEvent {
    let decoded = match payload.get(skip..) {
        Some(body) => decode_message(body),
        None => Err(CodecError::Truncated {
            needed: skip * 8,
            available: payload.len() * 8,
        }),
    };
    RxEvent {
        recv_ts,
        source,
        payload: payload.to_vec(),
        skip,
        decoded,
    }
}

pub type SinkError = Box<dyn std::error::Error + Send + Sync>;

/// Consumer of gateway events. Called from exactly one thread.
pub trait EventSink {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError>;

    /// Periodic clock signal, also sent while the socket is idle.
    fn tick(&mut self, _now_ns: i64) -> Result<(), SinkError> {
        Ok(())
    }

    fn flush(&mut self) -> Result<(), SinkError> {
        Ok(())
    }
}

impl EventSink for Vec<RxEvent> {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError> {
        self.push(event);
        Ok(())
    }
}

impl EventSink for mpsc::Sender<RxEvent> {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError> {
        self.send(event).map_err(|e| e.to_string().into())
    }
}

impl<S: EventSink + ?Sized> EventSink for &mut S {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError> {
        (**self).deliver(event)
    }

    fn tick(&mut self, now_ns: i64) -> Result<(), SinkError> {
        (**self).tick(now_ns)
    }

    fn flush(&mut self) -> Result<(), SinkError> {
        (**self).flush()
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("BindFailure: cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: io::Error },
    #[error("InvalidMessage: {0}")]
    InvalidMessage(CodecError),
    #[error("SendFailure: {0}")]
    SendFailure(io::Error),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
    #[error("sink error: {0}")]
    Sink(String),
}

/// Wall clock that never runs backwards: the system time at construction
/// advanced by a monotonic instant.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    base_ns: i64,
    start: Instant,
}

impl Clock {
    pub fn new() -> Self {
        let base = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        Clock {
            base_ns: base.as_nanos() as i64,
            start: Instant::now(),
        }
    }

    pub fn now_ns(&self) -> i64 {
        self.base_ns + self.start.elapsed().as_nanos() as i64
    }
}

impl Default for Clock {
    fn default() -> Self {
        Clock::new()
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub listen: SocketAddr,
    /// Octets stripped from each datagram before decoding.
    pub skip: usize,
    pub queue_capacity: usize,
    pub tick_interval: Duration,
    /// Re-emit every raw datagram to this address.
    pub forward: Option<SocketAddr>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            listen: SocketAddr::from((Ipv4Addr::UNSPECIFIED, DEFAULT_PORT)),
            skip: 0,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            tick_interval: Duration::from_millis(200),
            forward: None,
        }
    }
}

/// Requests a running gateway to stop.
#[derive(Debug, Clone, Default)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_shutdown(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

enum Item {
    Datagram {
        recv_ts: i64,
        source: SocketAddr,
        payload: Vec<u8>,
    },
    Tick(i64),
}

pub struct Gateway {
    socket: UdpSocket,
    config: GatewayConfig,
    shutdown: ShutdownHandle,
    clock: Clock,
    received: Arc<AtomicU64>,
}

impl Gateway {
    pub fn bind(config: GatewayConfig) -> Result<Self, GatewayError> {
        let socket = UdpSocket::bind(config.listen).map_err(|source| GatewayError::BindFailure {
            addr: config.listen,
            source,
        })?;
        socket.set_read_timeout(Some(config.tick_interval))?;
        Ok(Gateway {
            socket,
            config,
            shutdown: ShutdownHandle::default(),
            clock: Clock::new(),
            received: Arc::default(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.shutdown.clone()
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Number of datagrams read from the socket so far.
    pub fn received_counter(&self) -> Arc<AtomicU64> {
        self.received.clone()
    }

    /// Runs until shutdown is requested, then drains the socket, flushes the
    /// sink and returns it.
    pub fn run<S: EventSink>(self, mut sink: S) -> Result<S, GatewayError> {
        let (tx, rx) = mpsc::sync_channel(self.config.queue_capacity.max(1));
        let Gateway {
            socket,
            config,
            shutdown,
            clock,
            received,
        } = self;
        let worker_result = thread::scope(|scope| {
            let reader =
                scope.spawn(|| receive_loop(&socket, tx, &shutdown, clock, &config, &received));
            let result = dispatch_loop(rx, &mut sink, &config);
            if result.is_err() {
                shutdown.shutdown();
            }
            let read_result = reader.join().expect("receiver thread panicked");
            result.and(read_result)
        });
        worker_result?;
        sink.flush().map_err(|e| GatewayError::Sink(e.to_string()))?;
        Ok(sink)
    }
}

fn receive_loop(
    socket: &UdpSocket,
    tx: SyncSender<Item>,
    shutdown: &ShutdownHandle,
    clock: Clock,
    config: &GatewayConfig,
    received: &AtomicU64,
) -> Result<(), GatewayError> {
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let tick_ns = config.tick_interval.as_nanos() as i64;
    let mut last_tick = clock.now_ns();
    loop {
        if shutdown.is_shutdown() {
            break;
        }
        match socket.recv_from(&mut buf) {
            Ok((n, source)) => {
                let recv_ts = clock.now_ns();
                received.fetch_add(1, Ordering::Release);
                let item = Item::Datagram {
                    recv_ts,
                    source,
                    payload: buf[..n].to_vec(),
                };
                if tx.send(item).is_err() {
                    return Ok(());
                }
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => {
                // ICMP feedback from an earlier forward; not a receive failure
                debug!("ignoring {e}");
            }
            Err(e) => return Err(e.into()),
        }
        let now = clock.now_ns();
        if now - last_tick >= tick_ns {
            last_tick = now;
            if tx.send(Item::Tick(now)).is_err() {
                return Ok(());
            }
        }
    }

    socket.set_nonblocking(true)?;
    loop {
        match socket.recv_from(&mut buf) {
            Ok((n, source)) => {
                received.fetch_add(1, Ordering::Release);
                let item = Item::Datagram {
                    recv_ts: clock.now_ns(),
                    source,
                    payload: buf[..n].to_vec(),
                };
                if tx.send(item).is_err() {
                    break;
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => break,
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let _ = tx.send(Item::Tick(clock.now_ns()));
    Ok(())
}

fn dispatch_loop<S: EventSink>(
    rx: Receiver<Item>,
    sink: &mut S,
    config: &GatewayConfig,
) -> Result<(), GatewayError> {
    let forward = match config.forward {
        Some(dest) => Some((bind_for(dest).map_err(GatewayError::Io)?, dest)),
        None => None,
    };
    for item in rx {
        match item {
            Item::Datagram {
                recv_ts,
                source,
                payload,
            } => {
                if let Some((sock, dest)) = &forward {
                    if let Err(e) = sock.send_to(&payload, dest) {
                        warn!("forward to {dest} failed: {e}");
                    }
                }
                let event = handle_datagram(&payload, recv_ts, source, config.skip);
                sink.deliver(event)
                    .map_err(|e| GatewayError::Sink(e.to_string()))?;
            }
            Item::Tick(now) => sink.tick(now).map_err(|e| GatewayError::Sink(e.to_string()))?,
        }
    }
    Ok(())
}

fn bind_for(dest: SocketAddr) -> io::Result<UdpSocket> {
    match dest {
        SocketAddr::V4(_) => UdpSocket::bind((Ipv4Addr::UNSPECIFIED, 0)),
        SocketAddr::V6(_) => UdpSocket::bind((Ipv6Addr::UNSPECIFIED, 0)),
    }
}

/// Reusable transmitter for encoded messages.
pub struct UdpSender {
    v4: Option<UdpSocket>,
    v6: Option<UdpSocket>,
}

impl UdpSender {
    pub fn new() -> Self {
        UdpSender { v4: None, v6: None }
    }

    fn socket(&mut self, dest: SocketAddr) -> Result<&UdpSocket, GatewayError> {
        let slot = match dest {
            SocketAddr::V4(_) => &mut self.v4,
            SocketAddr::V6(_) => &mut self.v6,
        };
        if slot.is_none() {
            *slot = Some(bind_for(dest).map_err(GatewayError::SendFailure)?);
        }
        Ok(slot.as_ref().expect("socket bound above"))
    }

    pub fn send_raw(&mut self, payload: &[u8], dest: SocketAddr) -> Result<(), GatewayError> {
        let n = self
            .socket(dest)?
            .send_to(payload, dest)
            .map_err(GatewayError::SendFailure)?;
        if n != payload.len() {
            return Err(GatewayError::SendFailure(io::Error::new(
                io::ErrorKind::WriteZero,
                format!("sent {n} of {} octets", payload.len()),
            )));
        }
        Ok(())
    }

    pub fn send(&mut self, msg: &ItsMessage, dest: SocketAddr) -> Result<(), GatewayError> {
        let payload = encode_message(msg).map_err(GatewayError::InvalidMessage)?;
        self.send_raw(&payload, dest)
    }
}

impl Default for UdpSender {
    fn default() -> Self {
        UdpSender::new()
    }
}

/// Encodes `msg` and transmits it as one datagram.
pub fn send(msg: &ItsMessage, dest: SocketAddr) -> Result<(), GatewayError> {
    UdpSender::new().send(msg, dest)
}

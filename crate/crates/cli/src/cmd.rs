use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use itskit::analyzer::{self, CategoryRule, TrajectoryFilter};
use itskit::dataset_io::{self, MessageRecord, RecorderMode, ScenarioRecording, FILE_EXTENSION, NS_PER_S};
use itskit::gateway::{EventSink, Gateway, GatewayConfig, RxEvent, SinkError};
use itskit::recorder::{DirectoryOutput, Recorder, RecorderConfig, RecorderSink, StaticEgo};
use itskit::trafficgen::{self, RecordOptions, ReplayOptions, SimConfig};
use itskit::{decode_message, encode_message, ItsMessage, MessageType};
use serde_json::{json, Value};

use crate::config::{Category, CliConfig, Format};
use crate::error::CliError;
use crate::show;
use crate::{
    AnalyzeArgs, DecodeArgs, EncodeArgs, GatewayArgs, JoinArgs, NetArgs, RecordArgs, RecorderArgs, Report,
    SimulateArgs, TrimArgs,
};

const DEFAULT_GNSS_HZ: f64 = 6.0;

fn seconds(name: &str, s: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(s).map_err(|_| CliError::Usage(format!("{name}: {s} is not a valid duration")))
}

fn seconds_ns(name: &str, s: f64) -> Result<i64, CliError> {
    Ok(seconds(name, s)?.as_nanos() as i64)
}

struct RecorderSetup {
    config: RecorderConfig,
    label: Option<String>,
    ego: Option<StaticEgo>,
    gnss_interval: Duration,
}

fn recorder_setup(cfg: &CliConfig, a: &RecorderArgs) -> Result<RecorderSetup, CliError> {
    let d = &cfg.recorder;
    let mode = a.mode.or(d.mode).unwrap_or(RecorderMode::Vehicle);
    let mut config = RecorderConfig::for_mode(mode);
    if let Some(s) = a.dt_a.or(d.dt_a_s) {
        config.dt_a = seconds("dt_a", s)?;
    }
    if let Some(s) = a.dt_b.or(d.dt_b_s) {
        config.dt_b = seconds("dt_b", s)?;
    }
    if let Some(m) = a.d_min.or(d.d_min_m) {
        config.d_min_m = m;
    }
    config.validate()?;
    let hz = d.gnss_hz.unwrap_or(DEFAULT_GNSS_HZ);
    if !(hz > 0.0) {
        return Err(CliError::Usage(format!("gnss_hz: {hz} must be positive")));
    }
    let gnss_interval = seconds("gnss_hz", 1.0 / hz)?;
    let ego = match a.static_ego.as_ref().map(|c| &c.0).or(d.static_ego.as_ref()) {
        None => None,
        Some(v) if (2..=3).contains(&v.len()) => Some(StaticEgo {
            lat: v[0],
            lon: v[1],
            alt: v.get(2).copied().unwrap_or(0.0),
            interval: gnss_interval,
        }),
        Some(v) => return Err(CliError::Usage(format!("static_ego: expected 2 or 3 numbers, got {}", v.len()))),
    };
    Ok(RecorderSetup {
        config,
        label: a.label.clone().or_else(|| d.label.clone()),
        ego,
        gnss_interval,
    })
}

fn gateway_config(cfg: &CliConfig, a: &NetArgs) -> GatewayConfig {
    let d = &cfg.gateway;
    let mut g = GatewayConfig::default();
    if let Some(l) = a.listen.or(d.listen) {
        g.listen = l;
    }
    g.skip = a.skip_octets.or(d.skip_octets).unwrap_or(0);
    g.forward = a.forward.or(d.forward);
    if let Some(q) = d.queue_capacity {
        g.queue_capacity = q;
    }
    if let Some(ms) = d.tick_ms {
        g.tick_interval = Duration::from_millis(ms.max(1));
    }
    g
}

/// Runs the gateway until Ctrl-C or the optional duration elapses.
fn serve<S: EventSink>(config: GatewayConfig, duration: Option<f64>, sink: S) -> Result<S, CliError> {
    let gateway = Gateway::bind(config)?;
    log::info!("listening on {}", gateway.local_addr()?);
    let shutdown = gateway.shutdown_handle();
    let on_signal = shutdown.clone();
    if let Err(e) = ctrlc::set_handler(move || on_signal.shutdown()) {
        log::warn!("no Ctrl-C handler: {e}");
    }
    if let Some(s) = duration {
        let d = seconds("duration", s)?;
        thread::spawn(move || {
            thread::sleep(d);
            shutdown.shutdown();
        });
    }
    Ok(gateway.run(sink)?)
}

fn event_json(ev: &RxEvent) -> Value {
    let rec = MessageRecord::from_event(ev);
    let mut v = json!({
        "recv_ts": rec.recv_ts,
        "source": rec.source.map(|s| s.to_string()),
        "type": rec.message().map(|m| m.message_type().name()),
        "payload_hex": hex::encode(&rec.payload),
    });
    match &rec.decoded {
        Ok(m) => v["decoded"] = m.to_json_value(),
        Err(e) => v["decode_error"] = e.as_str().into(),
    }
    v
}

/// Prints each event as one JSON line.
struct JsonLines<W: Write>(W);

impl<W: Write> EventSink for JsonLines<W> {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError> {
        serde_json::to_writer(&mut self.0, &event_json(&event))?;
        self.0.write_all(b"\n")?;
        self.0.flush()?;
        Ok(())
    }
}

fn record_into(cfg: &CliConfig, net: &NetArgs, rec: &RecorderArgs, out: &Path) -> Result<(), CliError> {
    let setup = recorder_setup(cfg, rec)?;
    let output = DirectoryOutput::new(out)?;
    let recorder = Recorder::new(setup.config, setup.label, output)?;
    let sink = serve(gateway_config(cfg, net), net.duration, RecorderSink::new(recorder, setup.ego))?;
    let written = sink.into_recorder().into_output().written().len();
    log::info!("wrote {written} scenario files to {}", out.display());
    Ok(())
}

pub fn gateway(cfg: &CliConfig, a: GatewayArgs) -> Result<(), CliError> {
    match &a.out {
        Some(out) => record_into(cfg, &a.net, &a.recorder, out),
        None => {
            serve(gateway_config(cfg, &a.net), a.net.duration, JsonLines(io::stdout().lock()))?;
            Ok(())
        }
    }
}

pub fn record(cfg: &CliConfig, a: RecordArgs) -> Result<(), CliError> {
    record_into(cfg, &a.net, &a.recorder, &a.out)
}

fn parse_hex(text: &str) -> Result<Vec<u8>, CliError> {
    let compact: String = text.split_whitespace().collect();
    let compact = compact.strip_prefix("0x").unwrap_or(&compact);
    hex::decode(compact).map_err(|e| CliError::Data(format!("invalid hex: {e}")))
}

fn looks_like_hex(bytes: &[u8]) -> bool {
    std::str::from_utf8(bytes).is_ok_and(|s| {
        let s = s.trim();
        !s.is_empty() && s.chars().all(|c| c.is_ascii_hexdigit() || c.is_whitespace() || c == 'x')
    })
}

pub fn decode(a: DecodeArgs) -> Result<(), CliError> {
    let bytes = match (&a.hex, &a.file) {
        (Some(h), _) => parse_hex(h)?,
        (None, Some(path)) => {
            let raw = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if looks_like_hex(&raw) {
                parse_hex(std::str::from_utf8(&raw).expect("checked UTF-8"))?
            } else {
                raw
            }
        }
        (None, None) => return Err(CliError::Usage("give a hex string or --file".into())),
    };
    if a.skip_octets > bytes.len() {
        return Err(CliError::Data(format!(
            "Truncated: {} framing octets requested, payload has {}",
            a.skip_octets,
            bytes.len()
        )));
    }
    let msg = decode_message(&bytes[a.skip_octets..])?;
    let mut out = io::stdout().lock();
    if a.json {
        let v = json!({"type": msg.message_type().name(), "decoded": msg.to_json_value()});
        serde_json::to_writer_pretty(&mut out, &v)?;
        writeln!(out)?;
    } else {
        out.write_all(show::render(&msg).as_bytes())?;
    }
    Ok(())
}

fn message_from_json(v: Value) -> Result<ItsMessage, String> {
    let Value::Object(mut obj) = v else {
        return Err("expected an object with \"type\" and \"decoded\"".into());
    };
    let name = obj.get("type").and_then(Value::as_str).ok_or("type: missing or not a string")?;
    let t = MessageType::from_name(name).ok_or_else(|| format!("type: unknown message type {name:?}"))?;
    let decoded = obj.remove("decoded").ok_or("decoded: missing")?;
    ItsMessage::from_json_value(t, decoded).map_err(|e| format!("decoded.{}: {}", e.path(), e.inner()))
}

pub fn encode(a: EncodeArgs) -> Result<(), CliError> {
    let mut text = String::new();
    match &a.input {
        Some(p) => text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    let mut out = io::stdout().lock();
    for (i, v) in serde_json::Deserializer::from_str(&text).into_iter::<Value>().enumerate() {
        let v = v.map_err(|e| CliError::Data(format!("message {i}: malformed JSON: {e}")))?;
        let msg = message_from_json(v).map_err(|e| CliError::Data(format!("message {i}: SchemaViolation at {e}")))?;
        let bytes = encode_message(&msg).map_err(|e| CliError::Data(format!("message {i}: {e}")))?;
        writeln!(out, "{}", hex::encode(bytes))?;
    }
    Ok(())
}

pub fn analyze(cfg: &CliConfig, a: AnalyzeArgs) -> Result<(), CliError> {
    let scenarios = analyzer::load(&a.dir)?;
    let format = a.format.or(cfg.analyze.format);
    let text = if a.report == Report::Traj {
        if !matches!(format, None | Some(Format::Geojson)) {
            return Err(CliError::Usage("traj only supports --format geojson".into()));
        }
        let fc = analyzer::trajectories(&scenarios, TrajectoryFilter { station_id: a.station });
        serde_json::to_string_pretty(&fc)? + "\n"
    } else {
        let table = match a.report {
            Report::Stats => {
                let rule = match a.category.or(cfg.analyze.category).unwrap_or(Category::Label) {
                    Category::Label => CategoryRule::Label,
                    Category::Mode => CategoryRule::Mode,
                    Category::Single => CategoryRule::Single,
                };
                analyzer::stats_table(&analyzer::stats(&scenarios, rule)?)
            }
            Report::Denm => analyzer::denm_table(&analyzer::denm_events(&scenarios)),
            Report::Dims => analyzer::dims_table(&analyzer::vehicle_dims(&scenarios)),
            Report::Traj => unreachable!("handled above"),
        };
        match format.unwrap_or(Format::Table) {
            Format::Table => table.to_text(),
            Format::Csv => table.to_csv(),
            Format::Geojson => return Err(CliError::Usage("geojson output is only for traj".into())),
        }
    };
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

pub fn simulate(cfg: &CliConfig, a: SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.sim_config)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.sim_config.display())))?;
    let sim_cfg: SimConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.sim_config.display())))?;
    let sim = trafficgen::simulate(&sim_cfg)?;
    log::info!(
        "simulated {} messages from {} stations",
        sim.messages.len(),
        sim.truth.unique_stations
    );
    if let Some(path) = &a.ground_truth {
        let mut f = fs::File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::to_writer_pretty(&mut f, &sim.truth)?;
        writeln!(f)?;
    }
    if let Some(dest) = a.udp {
        let speedup = if a.realtime { Some(1.0) } else { a.speedup };
        if speedup.is_some_and(|f| !(f > 0.0)) {
            return Err(CliError::Usage("--speedup must be positive".into()));
        }
        let opts = ReplayOptions {
            speedup,
            ..ReplayOptions::default()
        };
        let sent = trafficgen::send_udp(&sim, dest, &opts, None)?;
        log::info!("sent {sent} datagrams to {dest}");
    } else if let Some(out) = &a.out {
        let setup = recorder_setup(cfg, &a.recorder)?;
        let opts = RecordOptions {
            recorder: setup.config,
            label: setup.label,
            ego: a.ego,
            gnss_interval: setup.gnss_interval,
            ..RecordOptions::default()
        };
        let output = trafficgen::record(&sim, &opts, DirectoryOutput::new(out)?)?;
        log::info!("wrote {} scenario files to {}", output.written().len(), out.display());
    }
    Ok(())
}

fn scenario_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(dataset_io::scenario_paths(p)?);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn read_all(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, ScenarioRecording)>, CliError> {
    scenario_files(inputs)?
        .into_iter()
        .map(|p| {
            let rec = dataset_io::read_scenario_file(&p)?;
            Ok((p, rec))
        })
        .collect()
}

pub fn trim(cfg: &CliConfig, a: TrimArgs) -> Result<(), CliError> {
    let d = &cfg.trim;
    let lead = seconds_ns("lead", a.lead.or(d.lead_s).unwrap_or(1.0))?;
    let trail = seconds_ns("trail", a.trail.or(d.trail_s).unwrap_or(1.0))?;
    let gap = a.gap.or(d.gap_s).map(|s| seconds_ns("gap", s)).transpose()?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    let mut written = 0;
    for (path, rec) in read_all(&a.inputs)? {
        let gap = gap.unwrap_or_else(|| dataset_io::default_trim_gap_ns(&rec));
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = name.strip_suffix(FILE_EXTENSION).unwrap_or(&name).to_string();
        for (i, part) in dataset_io::trim(&rec, lead, trail, gap).iter().enumerate() {
            let target = a.out.join(format!("{stem}_{i:03}{FILE_EXTENSION}"));
            dataset_io::write_scenario_file(part, &target)?;
            log::debug!(
                "{}: {:.1} s kept",
                target.display(),
                part.span_ns() as f64 / NS_PER_S as f64
            );
            written += 1;
        }
    }
    log::info!("wrote {written} trimmed scenarios to {}", a.out.display());
    Ok(())
}

pub fn join(a: JoinArgs) -> Result<(), CliError> {
    let recs: Vec<ScenarioRecording> = read_all(&a.inputs)?.into_iter().map(|(_, r)| r).collect();
    let joined = dataset_io::join(&recs)?;
    match &a.out {
        Some(path) => dataset_io::write_scenario_file(&joined, path)?,
        None => dataset_io::write_scenario(&joined, io::stdout().lock())?,
    }
    Ok(())
}

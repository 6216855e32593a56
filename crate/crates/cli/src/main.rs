//! `itskit` command-line tool.

mod cmd;
mod config;
mod error;
mod show;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use itskit::dataset_io::RecorderMode;

use config::{Category, CliConfig, Format};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "itskit", version, about = "ETSI ITS V2X capture and dataset toolkit")]
struct Cli {
    /// Shared defaults file (TOML).
    #[arg(long, env = "ITSKIT_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Receive datagrams; print events as JSON lines or record them.
    Gateway(GatewayArgs),
    /// Receive datagrams into scenario files.
    Record(RecordArgs),
    /// Decode one PDU given as hex or a file.
    Decode(DecodeArgs),
    /// Encode JSON messages ({"type", "decoded"}) to hex, one per line.
    Encode(EncodeArgs),
    /// Reports over a scenario directory.
    Analyze(AnalyzeArgs),
    /// Run the traffic simulator.
    Simulate(SimulateArgs),
    /// Cut scenarios down to their V2X activity.
    Trim(TrimArgs),
    /// Merge time-disjoint scenarios.
    Join(JoinArgs),
}

#[derive(Debug, Args)]
struct NetArgs {
    /// Listen address [default: 0.0.0.0:17755]
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Octets of modem framing before each PDU.
    #[arg(long)]
    skip_octets: Option<usize>,
    /// Re-emit every raw datagram to this address.
    #[arg(long)]
    forward: Option<SocketAddr>,
    /// Stop after this many seconds instead of waiting for Ctrl-C.
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct RecorderArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RecorderMode>,
    /// Silence timeout before a new file, seconds [default: 10]
    #[arg(long, value_name = "SECONDS")]
    dt_a: Option<f64>,
    /// Context trailing window, seconds [default: 5]
    #[arg(long, value_name = "SECONDS")]
    dt_b: Option<f64>,
    /// In-range distance, meters [default: 125 vehicle, 300 infrastructure]
    #[arg(long, value_name = "METERS")]
    d_min: Option<f64>,
    /// Category label stored in each file.
    #[arg(long)]
    label: Option<String>,
    /// Fixed ego position "lat,lon[,alt]" for stations without GNSS.
    #[arg(long, value_name = "LAT,LON[,ALT]", value_parser = parse_coords)]
    static_ego: Option<Coords>,
}

/// "lat,lon[,alt]" in degrees and meters.
#[derive(Debug, Clone, PartialEq)]
struct Coords(Vec<f64>);

#[derive(Debug, Args)]
struct GatewayArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Route events into the recorder, writing scenario files here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    recorder: RecorderArgs,
}

#[derive(Debug, Args)]
struct RecordArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    recorder: RecorderArgs,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// PDU as hex.
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    hex: Option<String>,
    /// Read the PDU from a file, as hex text or raw octets.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    skip_octets: usize,
    /// Print the decoded form of scenario files instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// JSON input [default: stdin]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Report {
    Stats,
    Denm,
    Dims,
    Traj,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    report: Report,
    dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Row grouping for stats.
    #[arg(long, value_enum)]
    category: Option<Category>,
    /// Only this station's trajectory.
    #[arg(long)]
    station: Option<u32>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long = "config", value_name = "FILE")]
    sim_config: PathBuf,
    /// Send every message as a datagram to this address.
    #[arg(long, conflicts_with = "out", required_unless_present = "out")]
    udp: Option<SocketAddr>,
    /// Record straight into scenario files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the ground truth here (JSON).
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Pace UDP output on the simulated clock.
    #[arg(long)]
    realtime: bool,
    /// Pace UDP output this many times faster than real time.
    #[arg(long, conflicts_with = "realtime")]
    speedup: Option<f64>,
    /// Ego GNSS for --out: "none", "static:LAT,LON" or "follow:STATION".
    #[arg(long, default_value = "none", value_parser = parse_ego)]
    ego: itskit::trafficgen::EgoSource,
    #[command(flatten)]
    recorder: RecorderArgs,
}

#[derive(Debug, Args)]
struct TrimArgs {
    /// Scenario files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Seconds kept before the first message [default: 1]
    #[arg(long)]
    lead: Option<f64>,
    /// Seconds kept after the last message [default: 1]
    #[arg(long)]
    trail: Option<f64>,
    /// Largest gap inside one cluster, seconds [default: the file's dt_a]
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Debug, Args)]
struct JoinArgs {
    /// Scenario files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<RecorderMode, String> {
    s.parse().map_err(|_| format!("expected vehicle or infrastructure, got {s:?}"))
}

fn parse_coords(s: &str) -> Result<Coords, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if !(2..=3).contains(&v.len()) {
        return Err("expected LAT,LON or LAT,LON,ALT".into());
    }
    Ok(Coords(v))
}

fn parse_ego(s: &str) -> Result<itskit::trafficgen::EgoSource, String> {
    use itskit::trafficgen::EgoSource;
    match s.split_once(':') {
        None if s == "none" => Ok(EgoSource::None),
        Some(("static", c)) => {
            let Coords(v) = parse_coords(c)?;
            Ok(EgoSource::Static([v[0], v[1]]))
        }
        Some(("follow", id)) => id.parse().map(EgoSource::Follow).map_err(|e| format!("{id:?}: {e}")),
        _ => Err(format!("expected none, static:LAT,LON or follow:STATION, got {s:?}")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = CliConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gateway(a) => cmd::gateway(&cfg, a),
        Command::Record(a) => cmd::record(&cfg, a),
        Command::Decode(a) => cmd::decode(a),
        Command::Encode(a) => cmd::encode(a),
        Command::Analyze(a) => cmd::analyze(&cfg, a),
        Command::Simulate(a) => cmd::simulate(&cfg, a),
        Command::Trim(a) => cmd::trim(&cfg, a),
        Command::Join(a) => cmd::join(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

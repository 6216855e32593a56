//! Deterministic ITS-station simulator.
//!
//! Vehicles drive waypoint routes at piecewise-constant speed and emit CAMs
//! by the cooperative-awareness triggering rules; DENM events repeat with a
//! shared action id; roadside units emit SPATEM and MAPEM. Every run also
//! produces the [`GroundTruth`] the analyzer is expected to reproduce.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset_io::{GnssFix, NS_PER_S};
use crate::gateway::{handle_datagram, GatewayError, UdpSender};
use crate::geo::{destination, haversine, haversine_unchecked, initial_bearing, interpolate, LatLon};
use crate::its_codec::encode_message;
use crate::its_types::*;
use crate::recorder::{Input, Recorder, RecorderConfig, RecorderError, ScenarioOutput};

pub const CAM_MIN_INTERVAL_MS: i64 = 100;
pub const CAM_MAX_INTERVAL_MS: i64 = 1000;
pub const CAM_TRIGGER_DISTANCE_M: f64 = 4.0;
pub const CAM_TRIGGER_HEADING_DEG: f64 = 4.0;
pub const CAM_TRIGGER_SPEED_MPS: f64 = 0.5;
pub const LOW_FREQUENCY_INTERVAL_MS: i64 = 500;
const PATH_HISTORY_POINTS: usize = 3;
/// Float slack on the distance trigger.
pub const DISTANCE_EPS_M: f64 = 1e-6;

pub const STATION_TYPE_PASSENGER_CAR: u8 = 5;
pub const STATION_TYPE_ROADSIDE_UNIT: u8 = 15;
const ALTITUDE_M: f64 = 200.0;

/// Aachen city center.
pub const DEFAULT_CENTER: [f64; 2] = [50.7753, 6.0839];
/// 2024-01-01T00:00:00Z.
pub const DEFAULT_START_UNIX_MS: i64 = 1_704_067_200_000;

/// Wire (length, width) pairs with relative frequencies, used for random
/// fleets; the mix of a real urban and highway campaign.
pub const FLEET_DIMENSIONS: [((u16, u8), u32); 7] = [
    ((42, 18), 1164),
    ((45, 18), 344),
    ((46, 18), 230),
    ((47, 19), 26),
    ((49, 18), 11),
    ((49, 19), 47),
    ((51, 19), 16),
];

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Recorder(#[from] RecorderError),
}

fn config_err(msg: impl Into<String>) -> TrafficError {
    TrafficError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_start")]
    pub start_unix_ms: i64,
    #[serde(default)]
    pub stations: Vec<StationConfig>,
    #[serde(default)]
    pub fleet: Option<FleetConfig>,
    #[serde(default)]
    pub rsus: Vec<RsuConfig>,
    #[serde(default)]
    pub denm_events: Vec<DenmEventConfig>,
}

fn default_start() -> i64 {
    DEFAULT_START_UNIX_MS
}

impl SimConfig {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        SimConfig {
            seed,
            duration_s,
            start_unix_ms: DEFAULT_START_UNIX_MS,
            stations: Vec::new(),
            fleet: None,
            rsus: Vec::new(),
            denm_events: Vec::new(),
        }
    }
}

/// A vehicle on an explicit route. A single waypoint is a parked vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub station_id: u32,
    #[serde(default = "default_station_type")]
    pub station_type: u8,
    /// Waypoints as [lat, lon] degrees.
    pub route: Vec<[f64; 2]>,
    /// One speed for the whole route, or one per segment, m/s.
    #[serde(default)]
    pub speeds_mps: Vec<f64>,
    #[serde(default)]
    pub start_s: f64,
    /// Wire units of 0.1 m.
    #[serde(default = "default_length")]
    pub vehicle_length: u16,
    #[serde(default = "default_width")]
    pub vehicle_width: u8,
}

fn default_station_type() -> u8 {
    STATION_TYPE_PASSENGER_CAR
}

fn default_length() -> u16 {
    42
}

fn default_width() -> u8 {
    18
}

/// Randomly routed vehicles around a center point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetConfig {
    pub n_stations: u32,
    #[serde(default = "default_first_id")]
    pub first_station_id: u32,
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default = "default_radius")]
    pub radius_m: f64,
    #[serde(default = "default_waypoints")]
    pub waypoints: usize,
    #[serde(default = "default_min_speed")]
    pub min_speed_mps: f64,
    #[serde(default = "default_max_speed")]
    pub max_speed_mps: f64,
    /// Start times are drawn from [0, max_start_s].
    #[serde(default)]
    pub max_start_s: f64,
}

fn default_first_id() -> u32 {
    1000
}
fn default_center() -> [f64; 2] {
    DEFAULT_CENTER
}
fn default_radius() -> f64 {
    2000.0
}
fn default_waypoints() -> usize {
    8
}
fn default_min_speed() -> f64 {
    8.0
}
fn default_max_speed() -> f64 {
    25.0
}

impl FleetConfig {
    pub fn new(n_stations: u32) -> Self {
        FleetConfig {
            n_stations,
            first_station_id: default_first_id(),
            center: DEFAULT_CENTER,
            radius_m: default_radius(),
            waypoints: default_waypoints(),
            min_speed_mps: default_min_speed(),
            max_speed_mps: default_max_speed(),
            max_start_s: 0.0,
        }
    }
}

/// A signalized intersection's roadside unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsuConfig {
    pub station_id: u32,
    pub position: [f64; 2],
    pub intersection_id: u16,
    #[serde(default = "default_signal_groups")]
    pub signal_groups: u8,
    #[serde(default = "default_interval_ms")]
    pub spatem_interval_ms: u64,
    #[serde(default = "default_interval_ms")]
    pub mapem_interval_ms: u64,
    #[serde(default = "default_cycle")]
    pub cycle_s: u64,
}

fn default_signal_groups() -> u8 {
    4
}
fn default_interval_ms() -> u64 {
    1000
}
fn default_cycle() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenmEventConfig {
    pub station_id: u32,
    pub cause_code: u8,
    pub sub_cause_code: u8,
    pub start_s: f64,
    pub repetitions: u32,
    #[serde(default = "default_repeat_interval")]
    pub interval_s: f64,
    #[serde(default = "default_validity")]
    pub validity_s: u32,
    /// Event position; defaults to the station's position at each repetition.
    #[serde(default)]
    pub position: Option<[f64; 2]>,
}

fn default_repeat_interval() -> f64 {
    1.0
}
fn default_validity() -> u32 {
    600
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub pos: LatLon,
    pub heading_deg: f64,
    pub speed_mps: f64,
    /// Distance traveled along the route.
    pub path_m: f64,
}

/// Great-circle segments driven at constant speed each; after the last
/// waypoint the vehicle stays parked.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    points: Vec<LatLon>,
    speeds: Vec<f64>,
    headings: Vec<f64>,
    lengths: Vec<f64>,
    /// Segment start times in ms, plus the arrival time.
    t0: Vec<f64>,
    /// Cumulative distance at each waypoint.
    s0: Vec<f64>,
}

impl Route {
    pub fn new(points: Vec<LatLon>, speeds: &[f64]) -> Result<Self, TrafficError> {
        if points.is_empty() {
            return Err(config_err("route needs at least one waypoint"));
        }
        for p in &points {
            haversine(*p, *p).map_err(|e| config_err(e.to_string()))?;
        }
        let n = points.len() - 1;
        let speeds: Vec<f64> = match speeds.len() {
            0 if n == 0 => Vec::new(),
            1 => vec![speeds[0]; n],
            k if k == n => speeds.to_vec(),
            k => return Err(config_err(format!("{k} speeds for {n} route segments"))),
        };
        if let Some(v) = speeds.iter().find(|v| !(**v > 0.0 && **v <= 163.0)) {
            return Err(config_err(format!("speed {v} m/s outside (0, 163]")));
        }
        let mut r = Route {
            headings: Vec::with_capacity(n),
            lengths: Vec::with_capacity(n),
            t0: vec![0.0],
            s0: vec![0.0],
            points,
            speeds,
        };
        for i in 0..n {
            let (a, b) = (r.points[i], r.points[i + 1]);
            let len = haversine_unchecked(a, b);
            if len < 1.0 {
                return Err(config_err(format!("waypoints {i} and {} are less than 1 m apart", i + 1)));
            }
            r.headings.push(initial_bearing(a, b));
            r.lengths.push(len);
            r.t0.push(r.t0[i] + len / r.speeds[i] * 1000.0);
            r.s0.push(r.s0[i] + len);
        }
        Ok(r)
    }

    pub fn length_m(&self) -> f64 {
        *self.s0.last().expect("at least one waypoint")
    }

    /// Travel time in ms.
    pub fn duration_ms(&self) -> f64 {
        *self.t0.last().expect("at least one waypoint")
    }

    fn segments(&self) -> usize {
        self.lengths.len()
    }

    /// State `t_ms` after departure.
    pub fn at(&self, t_ms: f64) -> Kinematics {
        let n = self.segments();
        if n == 0 {
            return Kinematics {
                pos: self.points[0],
                heading_deg: 0.0,
                speed_mps: 0.0,
                path_m: 0.0,
            };
        }
        if t_ms >= self.duration_ms() {
            return Kinematics {
                pos: self.points[n],
                heading_deg: self.headings[n - 1],
                speed_mps: 0.0,
                path_m: self.length_m(),
            };
        }
        let t = t_ms.max(0.0);
        let i = self.t0.partition_point(|&s| s <= t) - 1;
        let f = (t - self.t0[i]) / (self.t0[i + 1] - self.t0[i]);
        Kinematics {
            pos: interpolate(self.points[i], self.points[i + 1], f),
            heading_deg: self.headings[i],
            speed_mps: self.speeds[i],
            path_m: self.s0[i] + f * self.lengths[i],
        }
    }

    /// Heading and speed once waypoint `k` (1-based, arrival included) is passed.
    fn after_waypoint(&self, k: usize) -> (f64, f64) {
        if k < self.segments() {
            (self.headings[k], self.speeds[k])
        } else {
            (self.headings[k - 1], 0.0)
        }
    }
}

pub fn heading_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Whether a CAM is due at state `now` given the last CAM's state.
pub fn cam_triggered(last: &Kinematics, now: &Kinematics) -> bool {
    haversine_unchecked(last.pos, now.pos) >= CAM_TRIGGER_DISTANCE_M - DISTANCE_EPS_M
        || heading_difference(last.heading_deg, now.heading_deg) > CAM_TRIGGER_HEADING_DEG
        || (last.speed_mps - now.speed_mps).abs() > CAM_TRIGGER_SPEED_MPS
}

/// Next CAM time in ms after a CAM at `last_ms`, for a route departing at
/// `depart_ms`.
pub fn next_cam_ms(route: &Route, depart_ms: i64, last_ms: i64) -> i64 {
    let rel = |t: i64| (t - depart_ms) as f64;
    let last = route.at(rel(last_ms));
    let mut due = last_ms + CAM_MAX_INTERVAL_MS;

    for k in 1..=route.segments() {
        let c = route.t0[k];
        if c <= rel(last_ms) {
            continue;
        }
        let c_ms = depart_ms + c.ceil() as i64;
        if c_ms >= due {
            break;
        }
        let (h, v) = route.after_waypoint(k);
        if heading_difference(h, last.heading_deg) > CAM_TRIGGER_HEADING_DEG
            || (v - last.speed_mps).abs() > CAM_TRIGGER_SPEED_MPS
        {
            due = c_ms;
            break;
        }
    }

    let moved = |t: i64| {
        haversine_unchecked(route.at(rel(t)).pos, last.pos) >= CAM_TRIGGER_DISTANCE_M - DISTANCE_EPS_M
    };
    if moved(due) {
        let (mut lo, mut hi) = (last_ms + 1, due);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if moved(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        due = lo;
    }
    due.max(last_ms + CAM_MIN_INTERVAL_MS)
}

/// CAM times in ms for a station departing at `depart_ms`, up to `end_ms`
/// exclusive.
pub fn cam_schedule(route: &Route, depart_ms: i64, end_ms: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut t = depart_ms;
    while t < end_ms {
        out.push(t);
        t = next_cam_ms(route, depart_ms, t);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct StationPlan {
    station_id: u32,
    station_type: u8,
    route: Route,
    depart_ms: i64,
    length: u16,
    width: u8,
}

impl StationPlan {
    fn at(&self, t_ms: i64) -> Kinematics {
        self.route.at((t_ms - self.depart_ms) as f64)
    }
}

/// A simulated message and its emission time (Unix ns).
#[derive(Debug, Clone, PartialEq)]
pub struct TimedMessage {
    pub ts: i64,
    pub message: ItsMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTruth {
    pub station_id: u32,
    pub sequence_number: u16,
    pub cause_code: u8,
    pub sub_cause_code: u8,
    pub n_msgs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n_cam: u64,
    pub n_denm: u64,
    pub n_mapem: u64,
    pub n_spatem: u64,
    pub unique_stations: u64,
    /// Route distance each vehicle covered between its first and last CAM.
    pub station_distance_m: BTreeMap<u32, f64>,
    pub events: Vec<EventTruth>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: SimConfig,
    /// Sorted by time; ties keep generation order.
    pub messages: Vec<TimedMessage>,
    pub truth: GroundTruth,
    plans: Vec<StationPlan>,
}

fn to_latlon(p: [f64; 2]) -> LatLon {
    LatLon::new(p[0], p[1])
}

fn s_to_ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

fn validate_config(config: &SimConfig) -> Result<(), TrafficError> {
    if !(config.duration_s > 0.0 && config.duration_s.is_finite()) {
        return Err(config_err("duration_s must be positive"));
    }
    let mut ids = BTreeSet::new();
    let fleet_ids = config
        .fleet
        .iter()
        .flat_map(|f| (0..f.n_stations).map(move |i| f.first_station_id.wrapping_add(i)));
    let all_ids = config
        .stations
        .iter()
        .map(|s| s.station_id)
        .chain(fleet_ids)
        .chain(config.rsus.iter().map(|r| r.station_id));
    for id in all_ids {
        if !ids.insert(id) {
            return Err(config_err(format!("station id {id} is used twice")));
        }
    }
    for s in &config.stations {
        if !(s.start_s >= 0.0) {
            return Err(config_err(format!("station {}: start_s must be >= 0", s.station_id)));
        }
        if !ranges::VEHICLE_LENGTH.contains(s.vehicle_length as i64)
            || !ranges::VEHICLE_WIDTH.contains(s.vehicle_width as i64)
        {
            return Err(config_err(format!("station {}: vehicle dimensions out of range", s.station_id)));
        }
    }
    if let Some(f) = &config.fleet {
        if f.waypoints < 2
            || !(f.radius_m >= 0.0)
            || !(f.min_speed_mps > 0.0 && f.min_speed_mps <= f.max_speed_mps && f.max_speed_mps <= 163.0)
            || !(f.max_start_s >= 0.0)
        {
            return Err(config_err("fleet: need >= 2 waypoints and 0 < min_speed <= max_speed <= 163"));
        }
        haversine(to_latlon(f.center), to_latlon(f.center)).map_err(|e| config_err(e.to_string()))?;
    }
    for r in &config.rsus {
        if !(1..=32).contains(&r.signal_groups) {
            return Err(config_err(format!("rsu {}: signal_groups must be 1..=32", r.station_id)));
        }
        if r.spatem_interval_ms == 0 || r.mapem_interval_ms == 0 || r.cycle_s < 10 {
            return Err(config_err(format!("rsu {}: intervals must be positive, cycle >= 10 s", r.station_id)));
        }
        haversine(to_latlon(r.position), to_latlon(r.position)).map_err(|e| config_err(e.to_string()))?;
    }
    for e in &config.denm_events {
        if e.repetitions == 0 || !(e.interval_s > 0.0) || !(e.start_s >= 0.0) {
            return Err(config_err(format!(
                "event of station {}: need repetitions >= 1, interval_s > 0, start_s >= 0",
                e.station_id
            )));
        }
        if !ranges::VALIDITY_DURATION.contains(e.validity_s as i64) {
            return Err(config_err(format!("event of station {}: validity_s out of range", e.station_id)));
        }
        if let Some(p) = e.position {
            haversine(to_latlon(p), to_latlon(p)).map_err(|err| config_err(err.to_string()))?;
        }
    }
    Ok(())
}

fn fleet_plans(f: &FleetConfig, rng: &mut ChaCha8Rng) -> Result<Vec<StationPlan>, TrafficError> {
    let weights = WeightedIndex::new(FLEET_DIMENSIONS.iter().map(|(_, w)| *w)).expect("positive weights");
    let center = to_latlon(f.center);
    let mut plans = Vec::with_capacity(f.n_stations as usize);
    for i in 0..f.n_stations {
        let r = f.radius_m * rng.gen::<f64>().sqrt();
        let start = destination(center, rng.gen_range(0.0..360.0), r);
        let mut heading: f64 = rng.gen_range(0.0..360.0);
        let mut points = vec![start];
        for _ in 1..f.waypoints {
            heading = (heading + rng.gen_range(-60.0..60.0)).rem_euclid(360.0);
            let len = rng.gen_range(150.0..600.0);
            points.push(destination(*points.last().expect("non-empty"), heading, len));
        }
        let speeds: Vec<f64> = (1..f.waypoints)
            .map(|_| rng.gen_range(f.min_speed_mps..=f.max_speed_mps))
            .collect();
        let (length, width) = FLEET_DIMENSIONS[weights.sample(rng)].0;
        let start_s = if f.max_start_s > 0.0 {
            rng.gen_range(0.0..=f.max_start_s)
        } else {
            0.0
        };
        plans.push(StationPlan {
            station_id: f.first_station_id + i,
            station_type: STATION_TYPE_PASSENGER_CAR,
            route: Route::new(points, &speeds)?,
            depart_ms: s_to_ms(start_s),
            length,
            width,
        });
    }
    Ok(plans)
}

struct Emitter {
    start_unix_ms: i64,
    out: Vec<(i64, usize, ItsMessage)>,
}

impl Emitter {
    fn its_ms(&self, t_ms: i64) -> u64 {
        (self.start_unix_ms + t_ms - ITS_EPOCH_UNIX_MS) as u64
    }

    fn push(&mut self, t_ms: i64, msg: ItsMessage) {
        let n = self.out.len();
        self.out.push((t_ms, n, msg));
    }
}

fn station_cams(plan: &StationPlan, end_ms: i64, em: &mut Emitter) -> Option<f64> {
    let times = cam_schedule(&plan.route, plan.depart_ms, end_ms);
    let mut history: Vec<ReferencePosition> = Vec::new();
    let mut last_lf: Option<i64> = None;
    for &t in &times {
        let k = plan.at(t);
        let pos = ReferencePosition::from_degrees(k.pos.lat, k.pos.lon, ALTITUDE_M);
        let low_frequency = if last_lf.is_none_or(|l| t - l >= LOW_FREQUENCY_INTERVAL_MS) {
            last_lf = Some(t);
            let path_history = history
                .iter()
                .rev()
                .take(PATH_HISTORY_POINTS)
                .map(|h| DeltaPosition {
                    delta_latitude: h.latitude - pos.latitude,
                    delta_longitude: h.longitude - pos.longitude,
                    delta_altitude: (h.altitude_value - pos.altitude_value) as i16,
                })
                .collect();
            Some(LowFrequencyContainer {
                vehicle_role: 0,
                exterior_lights: 0,
                path_history,
            })
        } else {
            None
        };
        history.push(pos);
        let cam = Cam {
            header: ItsPduHeader::new(MessageType::Cam, plan.station_id),
            generation_delta_time: generation_delta_time(em.its_ms(t)),
            basic: BasicContainer {
                station_type: plan.station_type,
                reference_position: pos,
            },
            high_frequency: HighFrequencyContainer {
                heading: ((k.heading_deg * 10.0).round() as u16) % 3600,
                speed: (k.speed_mps * 100.0).round() as u16,
                drive_direction: DriveDirection::Forward,
                vehicle_length: plan.length,
                vehicle_width: plan.width,
                longitudinal_acceleration: 0,
                curvature: 0,
                yaw_rate: 0,
                vertical_acceleration: None,
            },
            low_frequency,
            special_vehicle: false,
        };
        em.push(t, cam.into());
    }
    let (first, last) = (times.first()?, times.last()?);
    Some(plan.at(*last).path_m - plan.at(*first).path_m)
}

fn rsu_messages(r: &RsuConfig, end_ms: i64, em: &mut Emitter) {
    let n = r.signal_groups as i64;
    let cycle = r.cycle_s as i64 * 1000;
    let green = cycle * 2 / 5;
    let amber = 3000;
    let position = ReferencePosition::from_degrees(r.position[0], r.position[1], ALTITUDE_M);
    let mut spat_t = 0;
    let mut map_t = 0;
    while spat_t < end_ms || map_t < end_ms {
        if spat_t < end_ms && (spat_t <= map_t || map_t >= end_ms) {
            let movements = (0..n)
                .map(|g| {
                    let local = (spat_t - g * cycle / n).rem_euclid(cycle);
                    let (state, ends) = if local < green {
                        (MovementPhaseState::ProtectedMovementAllowed, green)
                    } else if local < green + amber {
                        (MovementPhaseState::ProtectedClearance, green + amber)
                    } else {
                        (MovementPhaseState::StopAndRemain, cycle)
                    };
                    let end_unix_ms = em.start_unix_ms + spat_t - local + ends;
                    MovementState {
                        signal_group: g as u8 + 1,
                        event_state: state,
                        min_end_time: Some((end_unix_ms.rem_euclid(3_600_000) / 100) as u16),
                    }
                })
                .collect();
            let msg = Spatem {
                header: ItsPduHeader::new(MessageType::Spatem, r.station_id),
                intersections: vec![IntersectionState {
                    intersection_id: r.intersection_id,
                    revision: 0,
                    movements,
                }],
            };
            em.push(spat_t, msg.into());
            spat_t += r.spatem_interval_ms as i64;
        } else {
            em.push(map_t, intersection_map(r, position).into());
            map_t += r.mapem_interval_ms as i64;
        }
    }
}

/// One ingress and one egress lane per signal group, arranged around the
/// reference point. Offsets in centimeters.
fn intersection_map(r: &RsuConfig, ref_point: ReferencePosition) -> Mapem {
    let n = r.signal_groups as usize;
    let arm = |angle_deg: f64, near: f64, far: f64| {
        let (s, c) = angle_deg.to_radians().sin_cos();
        vec![
            NodeOffset { dx: (c * near) as i16, dy: (s * near) as i16 },
            NodeOffset { dx: (c * far) as i16, dy: (s * far) as i16 },
        ]
    };
    let mut lanes = Vec::with_capacity(2 * n);
    for g in 0..n {
        let angle = g as f64 * 360.0 / n as f64;
        lanes.push(Lane {
            lane_id: g as u8 + 1,
            ingress: true,
            node_offsets: arm(angle, 1000.0, 6000.0),
            connects_to: vec![Connection {
                lane_id: 101 + ((g + n / 2) % n) as u8,
                signal_group: Some(g as u8 + 1),
            }],
        });
    }
    for g in 0..n {
        let angle = g as f64 * 360.0 / n as f64 + 15.0;
        lanes.push(Lane {
            lane_id: 101 + g as u8,
            ingress: false,
            node_offsets: arm(angle, 1000.0, 6000.0),
            connects_to: Vec::new(),
        });
    }
    Mapem {
        header: ItsPduHeader::new(MessageType::Mapem, r.station_id),
        intersections: vec![IntersectionGeometry {
            intersection_id: r.intersection_id,
            ref_point,
            lanes,
        }],
    }
}

fn event_messages(config: &SimConfig, plans: &[StationPlan], end_ms: i64, em: &mut Emitter) -> Vec<EventTruth> {
    let mut seq: BTreeMap<u32, u16> = BTreeMap::new();
    let mut truth = Vec::new();
    for e in &config.denm_events {
        let counter = seq.entry(e.station_id).or_insert(0);
        *counter = counter.wrapping_add(1);
        let sequence_number = *counter;
        let plan = plans.iter().find(|p| p.station_id == e.station_id);
        let start_ms = s_to_ms(e.start_s);
        let mut n_msgs = 0;
        for k in 0..e.repetitions as i64 {
            let t = start_ms + s_to_ms(e.interval_s * k as f64);
            if t >= end_ms {
                break;
            }
            let event_position = match (e.position, plan) {
                (Some(p), _) => ReferencePosition::from_degrees(p[0], p[1], ALTITUDE_M),
                (None, Some(plan)) => {
                    let k = plan.at(t);
                    ReferencePosition::from_degrees(k.pos.lat, k.pos.lon, ALTITUDE_M)
                }
                (None, None) => ReferencePosition::UNAVAILABLE,
            };
            let denm = Denm {
                header: ItsPduHeader::new(MessageType::Denm, e.station_id),
                management: ManagementContainer {
                    action_id: ActionId {
                        originating_station_id: e.station_id,
                        sequence_number,
                    },
                    detection_time: em.its_ms(start_ms),
                    reference_time: em.its_ms(t),
                    event_position,
                    validity_duration: e.validity_s,
                    station_type: plan.map_or(STATION_TYPE_PASSENGER_CAR, |p| p.station_type),
                },
                situation: Some(SituationContainer {
                    information_quality: 3,
                    event_type: EventType {
                        cause_code: e.cause_code,
                        sub_cause_code: e.sub_cause_code,
                    },
                }),
            };
            em.push(t, denm.into());
            n_msgs += 1;
        }
        truth.push(EventTruth {
            station_id: e.station_id,
            sequence_number,
            cause_code: e.cause_code,
            sub_cause_code: e.sub_cause_code,
            n_msgs,
        });
    }
    truth
}

/// Runs the simulation. Identical configs give identical output.
pub fn simulate(config: &SimConfig) -> Result<Simulation, TrafficError> {
    validate_config(config)?;
    let end_ms = s_to_ms(config.duration_s);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut plans = Vec::new();
    for s in &config.stations {
        plans.push(StationPlan {
            station_id: s.station_id,
            station_type: s.station_type,
            route: Route::new(s.route.iter().copied().map(to_latlon).collect(), &s.speeds_mps)?,
            depart_ms: s_to_ms(s.start_s),
            length: s.vehicle_length,
            width: s.vehicle_width,
        });
    }
    if let Some(f) = &config.fleet {
        plans.extend(fleet_plans(f, &mut rng)?);
    }

    let mut em = Emitter {
        start_unix_ms: config.start_unix_ms,
        out: Vec::new(),
    };
    let mut truth = GroundTruth::default();
    for plan in &plans {
        if let Some(d) = station_cams(plan, end_ms, &mut em) {
            truth.station_distance_m.insert(plan.station_id, d);
        }
    }
    for r in &config.rsus {
        rsu_messages(r, end_ms, &mut em);
    }
    truth.events = event_messages(config, &plans, end_ms, &mut em);

    em.out.sort_by_key(|(t, n, _)| (*t, *n));
    let mut stations = BTreeSet::new();
    let messages: Vec<TimedMessage> = em
        .out
        .into_iter()
        .map(|(t, _, message)| {
            stations.insert(message.station_id());
            match message.message_type() {
                MessageType::Cam => truth.n_cam += 1,
                MessageType::Denm => truth.n_denm += 1,
                MessageType::Mapem => truth.n_mapem += 1,
                MessageType::Spatem => truth.n_spatem += 1,
            }
            TimedMessage {
                ts: (config.start_unix_ms + t) * 1_000_000,
                message,
            }
        })
        .collect();
    truth.unique_stations = stations.len() as u64;
    Ok(Simulation {
        config: config.clone(),
        messages,
        truth,
        plans,
    })
}

impl Simulation {
    pub fn start_ns(&self) -> i64 {
        self.config.start_unix_ms * 1_000_000
    }

    pub fn end_ns(&self) -> i64 {
        self.start_ns() + s_to_ms(self.config.duration_s) * 1_000_000
    }

    /// Position of a simulated vehicle at Unix time `ts` (ns).
    pub fn station_position(&self, station_id: u32, ts: i64) -> Option<LatLon> {
        let plan = self.plans.iter().find(|p| p.station_id == station_id)?;
        let t_ms = (ts - self.start_ns()) / 1_000_000;
        Some(plan.at(t_ms).pos)
    }

    /// Every message encoded, in emission order.
    pub fn encoded(&self) -> Result<Vec<(i64, Vec<u8>)>, TrafficError> {
        self.messages
            .iter()
            .map(|m| {
                encode_message(&m.message)
                    .map(|p| (m.ts, p))
                    .map_err(|e| TrafficError::Gateway(GatewayError::InvalidMessage(e)))
            })
            .collect()
    }
}

/// Where the recording station's own GNSS track comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgoSource {
    #[default]
    None,
    /// A fixed roadside position, [lat, lon].
    Static([f64; 2]),
    /// Ride along with a simulated vehicle.
    Follow(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordOptions {
    pub recorder: RecorderConfig,
    pub label: Option<String>,
    pub ego: EgoSource,
    pub gnss_interval: Duration,
    pub tick_interval: Duration,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions {
            recorder: RecorderConfig::vehicle(),
            label: None,
            ego: EgoSource::None,
            gnss_interval: Duration::from_nanos(NS_PER_S as u64 / 6),
            tick_interval: Duration::from_secs(1),
        }
    }
}

/// Source address stamped on directly recorded messages.
pub const SIMULATED_SOURCE: ([u8; 4], u16) = ([192, 0, 2, 1], crate::gateway::DEFAULT_PORT);

/// Feeds the simulation through a recorder on the simulated clock.
pub fn record<O: ScenarioOutput>(sim: &Simulation, opts: &RecordOptions, output: O) -> Result<O, TrafficError> {
    let mut inputs: Vec<(i64, u8, Input)> = Vec::new();
    let gnss_ns = opts.gnss_interval.as_nanos().max(1) as i64;
    let tick_ns = opts.tick_interval.as_nanos().max(1) as i64;
    let (start, end) = (sim.start_ns(), sim.end_ns());
    if opts.ego != EgoSource::None {
        let mut t = start;
        while t < end {
            let pos = match opts.ego {
                EgoSource::Static(p) => Some(to_latlon(p)),
                EgoSource::Follow(id) => sim.station_position(id, t),
                EgoSource::None => None,
            };
            let pos = pos.ok_or_else(|| config_err("ego station is not a simulated vehicle"))?;
            inputs.push((t, 0, Input::Gnss(GnssFix { ts: t, lat: pos.lat, lon: pos.lon, alt: ALTITUDE_M })));
            t += gnss_ns;
        }
    }
    let source = SocketAddr::from(SIMULATED_SOURCE);
    for (ts, payload) in sim.encoded()? {
        inputs.push((ts, 1, Input::V2x(handle_datagram(&payload, ts, source, 0))));
    }
    let mut t = start;
    while t <= end {
        inputs.push((t, 2, Input::Tick(t)));
        t += tick_ns;
    }
    inputs.sort_by_key(|(t, k, _)| (*t, *k));

    let mut rec = Recorder::new(opts.recorder, opts.label.clone(), output)?;
    for (_, _, input) in inputs {
        rec.push(input)?;
    }
    rec.finish()?;
    Ok(rec.into_output())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOptions {
    /// Pace on the simulated clock divided by this factor; `None` sends as
    /// fast as flow control allows.
    pub speedup: Option<f64>,
    /// Datagrams allowed in flight when a delivery counter is given.
    pub max_in_flight: u64,
    /// Give up when the receiver makes no progress for this long.
    pub stall_timeout: Duration,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            speedup: None,
            max_in_flight: 64,
            stall_timeout: Duration::from_secs(10),
        }
    }
}

/// Sends every message as one datagram to `dest`. With `delivered`, a
/// receiver-side datagram counter, at most `max_in_flight` datagrams are
/// outstanding so the socket buffer never overflows.
pub fn send_udp(
    sim: &Simulation,
    dest: SocketAddr,
    opts: &ReplayOptions,
    delivered: Option<&AtomicU64>,
) -> Result<u64, TrafficError> {
    let encoded = sim.encoded()?;
    let mut sender = UdpSender::new();
    let base = delivered.map(|d| d.load(Ordering::Acquire)).unwrap_or(0);
    let wall_start = Instant::now();
    let t0 = encoded.first().map_or(0, |(t, _)| *t);
    let mut sent = 0u64;
    for (ts, payload) in &encoded {
        if let Some(f) = opts.speedup {
            let target = wall_start + Duration::from_secs_f64((ts - t0) as f64 / NS_PER_S as f64 / f);
            if let Some(wait) = target.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
        if let Some(d) = delivered {
            let mut last_progress = Instant::now();
            let mut seen = d.load(Ordering::Acquire);
            while sent - (seen - base) >= opts.max_in_flight {
                thread::yield_now();
                let now = d.load(Ordering::Acquire);
                if now != seen {
                    seen = now;
                    last_progress = Instant::now();
                } else if last_progress.elapsed() > opts.stall_timeout {
                    return Err(GatewayError::SendFailure(std::io::Error::new(
                        std::io::ErrorKind::TimedOut,
                        format!("receiver stalled after {} of {sent} datagrams", seen - base),
                    ))
                    .into());
                }
            }
        }
        sender.send_raw(payload, dest)?;
        sent += 1;
    }
    Ok(sent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::its_types::validate;

    const AACHEN: LatLon = LatLon::new(50.7753, 6.0839);

    fn straight(speed: f64, len_m: f64) -> Route {
        Route::new(vec![AACHEN, destination(AACHEN, 90.0, len_m)], &[speed]).unwrap()
    }

    #[test]
    fn parked_station_one_hertz() {
        let r = Route::new(vec![AACHEN], &[]).unwrap();
        assert_eq!(cam_schedule(&r, 0, 10_000), (0..10).map(|i| i * 1000).collect::<Vec<_>>());
    }

    #[test]
    fn four_meter_rule_at_25_mps() {
        let r = straight(25.0, 2000.0);
        let times = cam_schedule(&r, 0, 10_000);
        assert!(times.windows(2).all(|w| w[1] - w[0] == 160), "{:?}", &times[..5]);
    }

    #[test]
    fn slow_vehicle_hits_ceiling_then_floor() {
        // 2 m/s: 4 m takes 2 s, so the 1 s cap applies
        let r = straight(2.0, 500.0);
        assert!(cam_schedule(&r, 0, 10_000).windows(2).all(|w| w[1] - w[0] == 1000));
        // 60 m/s: 4 m takes 67 ms, so the 100 ms floor applies
        let r = straight(60.0, 5000.0);
        assert!(cam_schedule(&r, 0, 10_000).windows(2).all(|w| w[1] - w[0] == 100));
    }

    #[test]
    fn arrival_triggers_on_speed_drop() {
        let r = straight(10.0, 1000.0);
        let times = cam_schedule(&r, 0, 110_000);
        assert!(times.contains(&100_000));
        assert_eq!(times[times.len() - 1] - times[times.len() - 2], 1000);
    }

    #[test]
    fn turn_triggers_at_waypoint() {
        let a = AACHEN;
        let b = destination(a, 0.0, 101.0);
        let c = destination(b, 90.0, 100.0);
        let r = Route::new(vec![a, b, c], &[2.0]).unwrap();
        let times = cam_schedule(&r, 0, 60_000);
        let corner = r.t0[1].ceil() as i64;
        assert!(times.contains(&corner), "{corner} {times:?}");
    }

    #[test]
    fn denm_event_shares_action_id() {
        let mut c = SimConfig::new(300.0, 1);
        c.denm_events.push(DenmEventConfig {
            station_id: 77,
            cause_code: 94,
            sub_cause_code: 0,
            start_s: 10.0,
            repetitions: 125,
            interval_s: 1.0,
            validity_s: 600,
            position: Some([50.78, 6.08]),
        });
        let sim = simulate(&c).unwrap();
        assert_eq!(sim.truth.n_denm, 125);
        let ids: BTreeSet<_> = sim
            .messages
            .iter()
            .filter_map(|m| m.message.as_denm())
            .map(|d| d.management.action_id)
            .collect();
        assert_eq!(ids.len(), 1);
    }

    #[test]
    fn deterministic_and_valid() {
        let mut c = SimConfig::new(60.0, 42);
        c.fleet = Some(FleetConfig::new(5));
        c.rsus.push(RsuConfig {
            station_id: 9,
            position: [50.776, 6.084],
            intersection_id: 3,
            signal_groups: 4,
            spatem_interval_ms: 500,
            mapem_interval_ms: 5000,
            cycle_s: 60,
        });
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.truth, b.truth);
        assert!(a.messages.iter().all(|m| validate(&m.message).is_empty()));
        assert_eq!(a.truth.n_spatem, 120);
        assert_eq!(a.truth.n_mapem, 12);
        assert_eq!(a.truth.unique_stations, 6);
        assert!(a.messages.windows(2).all(|w| w[0].ts <= w[1].ts));
        c.seed = 43;
        assert_ne!(simulate(&c).unwrap().messages, a.messages);
    }

    #[test]
    fn config_errors() {
        let mut c = SimConfig::new(10.0, 0);
        c.stations.push(StationConfig {
            station_id: 1,
            station_type: 5,
            route: vec![[50.0, 6.0], [50.0, 6.0]],
            speeds_mps: vec![10.0],
            start_s: 0.0,
            vehicle_length: 42,
            vehicle_width: 18,
        });
        assert!(matches!(simulate(&c), Err(TrafficError::Config(_))));
        c.stations[0].route[1] = [50.01, 6.0];
        c.stations[0].speeds_mps = vec![1.0, 2.0];
        assert!(matches!(simulate(&c), Err(TrafficError::Config(_))));
        c.stations[0].speeds_mps = vec![10.0];
        assert!(simulate(&c).is_ok());
        c.duration_s = 0.0;
        assert!(simulate(&c).is_err());
        let dup: Result<SimConfig, _> =
            serde_json::from_str(r#"{"duration_s": 1, "stations": [], "bogus": 1}"#);
        assert!(dup.is_err());
    }
}

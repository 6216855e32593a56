//! Trigger-based data collection.
//!
//! [`step`] is the pure state machine: GNSS fixes and V2X messages are always
//! appended; a file boundary is placed once the channel has been silent for
//! `dt_a`; a context window runs while a CAM from within `d_min` of the ego
//! position arrived in the trailing `dt_b`. [`Recorder`] applies the actions
//! and assembles [`ScenarioRecording`]s.
//!
//! Timeouts are evaluated on every input, not only on ticks, and each action
//! carries the instant it logically happened so the result does not depend
//! on tick cadence.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::info;
use thiserror::Error;

use crate::dataset_io::{
    self, push_window, ConfigEcho, DatasetError, GnssFix, MessageRecord, Meta, RecorderMode,
    ScenarioRecording, Window, FILE_EXTENSION, FORMAT_VERSION,
};
use crate::gateway::{EventSink, RxEvent, SinkError};
use crate::geo::{self, LatLon};
use crate::its_types::ItsMessage;

#[derive(Debug, Error)]
pub enum RecorderError {
    #[error("NonMonotonicTime: input at {ts} precedes {latest}")]
    NonMonotonicTime { ts: i64, latest: i64 },
    #[error("invalid recorder config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecorderConfig {
    pub dt_a: Duration,
    pub dt_b: Duration,
    pub d_min_m: f64,
    pub mode: RecorderMode,
}

impl RecorderConfig {
    pub const DEFAULT_DT_A: Duration = Duration::from_secs(10);
    pub const DEFAULT_DT_B: Duration = Duration::from_secs(5);

    pub fn for_mode(mode: RecorderMode) -> Self {
        RecorderConfig {
            dt_a: Self::DEFAULT_DT_A,
            dt_b: Self::DEFAULT_DT_B,
            d_min_m: Self::default_d_min(mode),
            mode,
        }
    }

    pub fn vehicle() -> Self {
        Self::for_mode(RecorderMode::Vehicle)
    }

    pub fn infrastructure() -> Self {
        Self::for_mode(RecorderMode::Infrastructure)
    }

    pub fn default_d_min(mode: RecorderMode) -> f64 {
        match mode {
            RecorderMode::Vehicle => 125.0,
            RecorderMode::Infrastructure => 300.0,
        }
    }

    pub fn validate(&self) -> Result<(), RecorderError> {
        if self.dt_a.is_zero() || self.dt_b.is_zero() {
            return Err(RecorderError::InvalidConfig("dt_a and dt_b must be positive".into()));
        }
        if !(self.d_min_m > 0.0 && self.d_min_m.is_finite()) {
            return Err(RecorderError::InvalidConfig(format!(
                "d_min must be a positive distance, got {}",
                self.d_min_m
            )));
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            dt_a_ms: self.dt_a.as_millis() as u64,
            dt_b_ms: self.dt_b.as_millis() as u64,
            d_min_m: self.d_min_m,
        }
    }

    fn dt_a_ns(&self) -> i64 {
        self.dt_a.as_nanos() as i64
    }

    fn dt_b_ns(&self) -> i64 {
        self.dt_b.as_nanos() as i64
    }
}

impl Default for RecorderConfig {
    fn default() -> Self {
        RecorderConfig::vehicle()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Gnss(GnssFix),
    V2x(RxEvent),
    Tick(i64),
}

impl Input {
    pub fn ts(&self) -> i64 {
        match self {
            Input::Gnss(f) => f.ts,
            Input::V2x(e) => e.recv_ts,
            Input::Tick(ts) => *ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Gnss(GnssFix),
    V2x(MessageRecord),
}

impl Record {
    pub fn ts(&self) -> i64 {
        match self {
            Record::Gnss(f) => f.ts,
            Record::V2x(m) => m.recv_ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Close the current file at `at` and continue in a new one.
    RotateFile { at: i64 },
    StartContext { at: i64 },
    StopContext { at: i64 },
    Append(Record),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecorderState {
    /// Index of the file currently written, starting at 0.
    pub current_file: u32,
    pub last_v2x_ts: Option<i64>,
    pub last_inrange_cam_ts: Option<i64>,
    pub context_active: bool,
    pub ego_position: Option<GnssFix>,
    /// Latest input timestamp.
    pub latest_ts: Option<i64>,
    /// Start of the current silence period: the last V2X message, or the
    /// first input when none has arrived yet.
    pub silence_since: Option<i64>,
    /// Whether the current silence period already caused a rotation.
    pub rotated: bool,
}

impl RecorderState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Advances the state machine by one input.
pub fn step(
    state: &RecorderState,
    config: &RecorderConfig,
    input: Input,
) -> Result<(RecorderState, Vec<Action>), RecorderError> {
    let ts = input.ts();
    if let Some(latest) = state.latest_ts {
        if ts < latest {
            return Err(RecorderError::NonMonotonicTime { ts, latest });
        }
    }
    let mut s = state.clone();
    s.latest_ts = Some(ts);
    s.silence_since.get_or_insert(ts);

    let mut actions = Vec::with_capacity(2);
    expire(&mut s, config, ts, &mut actions);

    match input {
        Input::Gnss(fix) => {
            s.ego_position = Some(fix);
            actions.push(Action::Append(Record::Gnss(fix)));
        }
        Input::V2x(ev) => {
            s.last_v2x_ts = Some(ts);
            s.silence_since = Some(ts);
            s.rotated = false;
            if ev.message().is_some_and(|m| in_range(m, s.ego_position.as_ref(), config.d_min_m)) {
                s.last_inrange_cam_ts = Some(ts);
                if !s.context_active {
                    s.context_active = true;
                    actions.push(Action::StartContext { at: ts });
                }
            }
            actions.push(Action::Append(Record::V2x(MessageRecord::from_event(&ev))));
        }
        Input::Tick(_) => {}
    }
    Ok((s, actions))
}

fn expire(s: &mut RecorderState, config: &RecorderConfig, ts: i64, actions: &mut Vec<Action>) {
    let stop_at = match (s.context_active, s.last_inrange_cam_ts) {
        (true, Some(last)) if ts - last >= config.dt_b_ns() => Some(last + config.dt_b_ns()),
        _ => None,
    };
    let rotate_at = match s.silence_since {
        Some(since) if !s.rotated && ts - since >= config.dt_a_ns() => Some(since + config.dt_a_ns()),
        _ => None,
    };
    let mut due: Vec<Action> = Vec::new();
    if let Some(at) = stop_at {
        s.context_active = false;
        due.push(Action::StopContext { at });
    }
    if let Some(at) = rotate_at {
        s.rotated = true;
        s.current_file += 1;
        due.push(Action::RotateFile { at });
    }
    due.sort_by_key(|a| match a {
        Action::StopContext { at } | Action::RotateFile { at } => *at,
        _ => unreachable!(),
    });
    actions.extend(due);
}

/// A CAM whose reference position lies within `d_min` of the ego position.
pub fn in_range(msg: &ItsMessage, ego: Option<&GnssFix>, d_min_m: f64) -> bool {
    let (Some(cam), Some(ego)) = (msg.as_cam(), ego) else {
        return false;
    };
    let Some((lat, lon)) = cam.basic.reference_position.lat_lon() else {
        return false;
    };
    geo::haversine(LatLon::new(lat, lon), LatLon::new(ego.lat, ego.lon))
        .is_ok_and(|d| d <= d_min_m)
}

/// Destination for finished scenario files.
pub trait ScenarioOutput {
    fn emit(&mut self, rec: ScenarioRecording) -> Result<(), RecorderError>;
}

impl ScenarioOutput for Vec<ScenarioRecording> {
    fn emit(&mut self, rec: ScenarioRecording) -> Result<(), RecorderError> {
        self.push(rec);
        Ok(())
    }
}

impl<O: ScenarioOutput + ?Sized> ScenarioOutput for &mut O {
    fn emit(&mut self, rec: ScenarioRecording) -> Result<(), RecorderError> {
        (**self).emit(rec)
    }
}

/// Writes each scenario to `<dir>/<index>_<start_ts>.v2x.json`.
#[derive(Debug)]
pub struct DirectoryOutput {
    dir: PathBuf,
    next_index: usize,
    written: Vec<PathBuf>,
}

impl DirectoryOutput {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, RecorderError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| DatasetError::Io {
            path: dir.clone(),
            source,
        })?;
        let next_index = dataset_io::scenario_paths(&dir)?.len();
        Ok(DirectoryOutput {
            dir,
            next_index,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

impl ScenarioOutput for DirectoryOutput {
    fn emit(&mut self, rec: ScenarioRecording) -> Result<(), RecorderError> {
        let name = format!("{:05}_{}{}", self.next_index, rec.meta.start_ts, FILE_EXTENSION);
        let path = self.dir.join(name);
        dataset_io::write_scenario_file(&rec, &path)?;
        info!(
            "wrote {} ({} messages, {} fixes)",
            path.display(),
            rec.messages.len(),
            rec.gnss.len()
        );
        self.next_index += 1;
        self.written.push(path);
        Ok(())
    }
}

/// Drives [`step`] and turns its actions into scenario files.
pub struct Recorder<O> {
    config: RecorderConfig,
    label: Option<String>,
    state: RecorderState,
    current: Option<ScenarioRecording>,
    context_start: Option<i64>,
    output: O,
}

impl<O: ScenarioOutput> Recorder<O> {
    pub fn new(config: RecorderConfig, label: Option<String>, output: O) -> Result<Self, RecorderError> {
        config.validate()?;
        Ok(Recorder {
            config,
            label,
            state: RecorderState::new(),
            current: None,
            context_start: None,
            output,
        })
    }

    pub fn config(&self) -> &RecorderConfig {
        &self.config
    }

    pub fn state(&self) -> &RecorderState {
        &self.state
    }

    pub fn output(&self) -> &O {
        &self.output
    }

    pub fn into_output(self) -> O {
        self.output
    }

    fn open(&mut self, start_ts: i64) {
        self.current = Some(ScenarioRecording::empty(Meta {
            format_version: FORMAT_VERSION,
            recorder_mode: self.config.mode,
            label: self.label.clone(),
            config: self.config.echo(),
            start_ts,
            end_ts: start_ts,
        }));
    }

    fn close(&mut self, end_ts: i64) -> Result<(), RecorderError> {
        let Some(mut rec) = self.current.take() else {
            return Ok(());
        };
        rec.meta.end_ts = end_ts.max(rec.meta.start_ts);
        if let Some(start) = self.context_start.take() {
            push_window(&mut rec.context_windows, Window { start_ts: start, end_ts });
        }
        if rec.messages.is_empty() && rec.gnss.is_empty() && rec.context_windows.is_empty() {
            return Ok(());
        }
        self.output.emit(rec)
    }

    /// Feeds one input and applies the resulting actions.
    pub fn push(&mut self, input: Input) -> Result<Vec<Action>, RecorderError> {
        let ts = input.ts();
        let (state, actions) = step(&self.state, &self.config, input)?;
        if self.current.is_none() {
            self.open(state.silence_since.unwrap_or(ts).min(ts));
        }
        for action in &actions {
            match action {
                Action::RotateFile { at } => {
                    // a window open across the boundary is split there
                    let carry = self.context_start.is_some();
                    self.close(*at)?;
                    self.open(*at);
                    if carry {
                        self.context_start = Some(*at);
                    }
                }
                Action::StartContext { at } => self.context_start = Some(*at),
                Action::StopContext { at } => {
                    if let (Some(start), Some(rec)) = (self.context_start.take(), self.current.as_mut()) {
                        push_window(&mut rec.context_windows, Window { start_ts: start, end_ts: *at });
                    }
                }
                Action::Append(record) => {
                    let rec = self.current.as_mut().expect("file opened above");
                    match record {
                        Record::Gnss(f) => rec.gnss.push(*f),
                        Record::V2x(m) => rec.messages.push(m.clone()),
                    }
                }
            }
        }
        self.state = state;
        Ok(actions)
    }

    /// Closes the current file at the latest input time. Context still
    /// active is cut there; a later input opens a new file.
    pub fn finish(&mut self) -> Result<(), RecorderError> {
        let end = self.state.latest_ts.unwrap_or_default();
        self.close(end)?;
        self.state.silence_since = None;
        self.state.rotated = false;
        Ok(())
    }
}

/// Position source for recorders without a GNSS receiver, such as a fixed
/// roadside unit: emits the same fix on ticks at `interval`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticEgo {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub interval: Duration,
}

/// Gateway sink that records every event.
pub struct RecorderSink<O> {
    recorder: Recorder<O>,
    ego: Option<StaticEgo>,
    last_fix: Option<i64>,
}

impl<O: ScenarioOutput> RecorderSink<O> {
    pub fn new(recorder: Recorder<O>, ego: Option<StaticEgo>) -> Self {
        RecorderSink {
            recorder,
            ego,
            last_fix: None,
        }
    }

    pub fn recorder(&self) -> &Recorder<O> {
        &self.recorder
    }

    pub fn into_recorder(self) -> Recorder<O> {
        self.recorder
    }

    fn maybe_fix(&mut self, now: i64) -> Result<(), RecorderError> {
        let Some(ego) = self.ego else {
            return Ok(());
        };
        let due = self
            .last_fix
            .is_none_or(|last| now - last >= ego.interval.as_nanos() as i64);
        if due {
            self.last_fix = Some(now);
            self.recorder.push(Input::Gnss(GnssFix {
                ts: now,
                lat: ego.lat,
                lon: ego.lon,
                alt: ego.alt,
            }))?;
        }
        Ok(())
    }
}

impl<O: ScenarioOutput> EventSink for RecorderSink<O> {
    fn deliver(&mut self, event: RxEvent) -> Result<(), SinkError> {
        if self.last_fix.is_none() {
            self.maybe_fix(event.recv_ts)?;
        }
        self.recorder.push(Input::V2x(event))?;
        Ok(())
    }

    fn tick(&mut self, now_ns: i64) -> Result<(), SinkError> {
        self.maybe_fix(now_ns)?;
        self.recorder.push(Input::Tick(now_ns))?;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), SinkError> {
        self.recorder.finish()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::handle_datagram;
    use crate::its_codec::encode_message;
    use crate::its_types::{Cam, ReferencePosition};

    const S: i64 = 1_000_000_000;

    fn fix(ts: i64) -> Input {
        Input::Gnss(GnssFix { ts, lat: 50.78, lon: 6.06, alt: 170.0 })
    }

    fn cam_at(ts: i64, lat: f64, lon: f64) -> Input {
        let mut cam = Cam::minimal(99);
        cam.basic.reference_position = ReferencePosition::from_degrees(lat, lon, 170.0);
        v2x(ts, cam.into())
    }

    fn v2x(ts: i64, msg: ItsMessage) -> Input {
        let payload = encode_message(&msg).unwrap();
        Input::V2x(handle_datagram(&payload, ts, "127.0.0.1:1".parse().unwrap(), 0))
    }

    fn control(actions: &[Action]) -> Vec<Action> {
        actions
            .iter()
            .filter(|a| !matches!(a, Action::Append(_)))
            .cloned()
            .collect()
    }

    fn run(inputs: Vec<Input>) -> (RecorderState, Vec<Action>) {
        let config = RecorderConfig::vehicle();
        let mut state = RecorderState::new();
        let mut all = Vec::new();
        for i in inputs {
            let (s, a) = step(&state, &config, i).unwrap();
            state = s;
            all.extend(a);
        }
        (state, all)
    }

    #[test]
    fn boundary_distance_is_inclusive() {
        let mut ego = GnssFix { ts: 0, lat: 50.78, lon: 6.06, alt: 0.0 };
        let target = geo::destination(LatLon::new(ego.lat, ego.lon), 0.0, 125.0);
        let mut cam = Cam::minimal(1);
        cam.basic.reference_position = ReferencePosition::from_degrees(target.lat, target.lon, 0.0);
        let msg: ItsMessage = cam.into();
        let (lat, lon) = msg.as_cam().unwrap().basic.reference_position.lat_lon().unwrap();
        let d = geo::haversine(LatLon::new(lat, lon), LatLon::new(ego.lat, ego.lon)).unwrap();
        // move the ego so that the quantized CAM position sits exactly at d_min
        let exact = geo::destination(LatLon::new(lat, lon), 180.0, d);
        ego.lat = exact.lat;
        ego.lon = exact.lon;
        let measured = geo::haversine(LatLon::new(lat, lon), LatLon::new(ego.lat, ego.lon)).unwrap();
        assert!(in_range(&msg, Some(&ego), measured));
        assert!(!in_range(&msg, Some(&ego), measured - 1e-6));
    }

    #[test]
    fn unavailable_position_never_triggers() {
        let cam = Cam::minimal(1);
        let (_, actions) = run(vec![fix(0), v2x(S, cam.into())]);
        assert!(control(&actions).is_empty());
    }

    #[test]
    fn two_ticks_one_rotation() {
        let (state, actions) = run(vec![fix(0), Input::Tick(11 * S), Input::Tick(12 * S)]);
        assert_eq!(control(&actions), vec![Action::RotateFile { at: 10 * S }]);
        assert_eq!(state.current_file, 1);
    }

    #[test]
    fn non_monotonic_rejected() {
        let config = RecorderConfig::vehicle();
        let (s, _) = step(&RecorderState::new(), &config, Input::Tick(5)).unwrap();
        assert!(matches!(
            step(&s, &config, Input::Tick(4)),
            Err(RecorderError::NonMonotonicTime { ts: 4, latest: 5 })
        ));
    }

    #[test]
    fn context_start_and_stop() {
        let (state, actions) = run(vec![
            fix(0),
            cam_at(S, 50.7801, 6.06),
            cam_at(2 * S, 50.7801, 6.06),
            cam_at(3 * S, 50.80, 6.06),
            Input::Tick(7 * S),
        ]);
        assert_eq!(
            control(&actions),
            vec![Action::StartContext { at: S }, Action::StopContext { at: 7 * S }]
        );
        assert!(!state.context_active);
    }

    #[test]
    fn every_input_appended_once() {
        let inputs = vec![
            fix(0),
            cam_at(S, 50.7801, 6.06),
            Input::Tick(20 * S),
            fix(21 * S),
            cam_at(40 * S, 50.7801, 6.06),
            fix(41 * S),
        ];
        let n = inputs.iter().filter(|i| !matches!(i, Input::Tick(_))).count();
        let mut rec = Recorder::new(RecorderConfig::vehicle(), None, Vec::new()).unwrap();
        for i in inputs {
            rec.push(i).unwrap();
        }
        rec.finish().unwrap();
        let files = rec.into_output();
        assert_eq!(files.len(), 2);
        let total: usize = files.iter().map(|f| f.gnss.len() + f.messages.len()).sum();
        assert_eq!(total, n);
        assert_eq!((files[0].meta.start_ts, files[0].meta.end_ts), (0, 11 * S));
        assert_eq!((files[1].meta.start_ts, files[1].meta.end_ts), (11 * S, 41 * S));
        assert_eq!(files[0].context_windows, vec![Window { start_ts: S, end_ts: 6 * S }]);
        assert_eq!(files[1].context_windows, vec![Window { start_ts: 40 * S, end_ts: 41 * S }]);
    }

    #[test]
    fn config_validation() {
        let mut c = RecorderConfig::infrastructure();
        assert_eq!(c.d_min_m, 300.0);
        c.d_min_m = 0.0;
        assert!(c.validate().is_err());
        let c = RecorderConfig { dt_a: Duration::ZERO, ..RecorderConfig::vehicle() };
        assert!(c.validate().is_err());
    }
}

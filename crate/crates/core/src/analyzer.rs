//! Dataset statistics, the DENM event table, vehicle dimension histograms and
//! trajectory export.
//!
//! Float totals are summed in a canonical order so every report is
//! independent of file order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use geojson::{Feature, FeatureCollection, Geometry, JsonObject};
use serde::Serialize;
use thiserror::Error;

use crate::dataset_io::{self, DatasetError, RecorderMode, ScenarioRecording, NS_PER_S};
use crate::geo::{haversine_unchecked, LatLon};
use crate::its_types::{ranges, ItsMessage, MessageType};

/// Consecutive CAMs further apart in time start a new segment.
pub const SEGMENT_MAX_GAP_NS: i64 = 2 * NS_PER_S;
/// Consecutive CAMs further apart in space start a new segment.
pub const SEGMENT_MAX_JUMP_M: f64 = 200.0;
/// Lead and trail added around message clusters for the V2X duration.
pub const TRIM_MARGIN_NS: i64 = NS_PER_S;

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("EmptyDataset: no scenario files found")]
    EmptyDataset,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Loads all scenarios under `dir`; fails on an empty directory.
pub fn load(dir: &std::path::Path) -> Result<Vec<ScenarioRecording>, AnalyzerError> {
    let found = dataset_io::load_dir(dir)?;
    if found.is_empty() {
        return Err(AnalyzerError::EmptyDataset);
    }
    Ok(found.into_iter().map(|(_, r)| r).collect())
}

/// How scenarios are grouped into report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CategoryRule {
    /// By `meta.label`, falling back to the recorder mode.
    #[default]
    Label,
    Mode,
    /// Everything in one row.
    Single,
}

impl CategoryRule {
    fn key(self, rec: &ScenarioRecording) -> String {
        match self {
            CategoryRule::Label => rec
                .meta
                .label
                .clone()
                .unwrap_or_else(|| rec.meta.recorder_mode.as_str().to_string()),
            CategoryRule::Mode => rec.meta.recorder_mode.as_str().to_string(),
            CategoryRule::Single => "all".to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryStats {
    pub name: String,
    pub n_cam: u64,
    pub n_denm: u64,
    pub n_mapem: u64,
    pub n_spatem: u64,
    pub n_unique_stations: u64,
    /// None when the category has no vehicle-mode recordings.
    pub ego_distance_km: Option<f64>,
    pub cam_distance_km: f64,
    pub total_duration_h: f64,
    pub v2x_duration_h: f64,
    pub context_duration_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub categories: Vec<CategoryStats>,
    pub total: CategoryStats,
}

fn ordered_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

fn ns_to_h(ns: i64) -> f64 {
    ns as f64 / 3600.0 / NS_PER_S as f64
}

fn ego_distance_m(rec: &ScenarioRecording) -> f64 {
    rec.gnss
        .windows(2)
        .map(|w| haversine_unchecked(LatLon::new(w[0].lat, w[0].lon), LatLon::new(w[1].lat, w[1].lon)))
        .sum()
}

fn v2x_duration_ns(rec: &ScenarioRecording) -> i64 {
    dataset_io::trim(rec, TRIM_MARGIN_NS, TRIM_MARGIN_NS, dataset_io::default_trim_gap_ns(rec))
        .iter()
        .map(ScenarioRecording::span_ns)
        .sum()
}

fn category_stats(name: String, recs: &[&ScenarioRecording]) -> CategoryStats {
    let mut s = CategoryStats {
        name,
        ..Default::default()
    };
    let mut stations = BTreeSet::new();
    for rec in recs {
        for msg in rec.messages.iter().filter_map(|m| m.message()) {
            stations.insert(msg.station_id());
            match msg.message_type() {
                MessageType::Cam => s.n_cam += 1,
                MessageType::Denm => s.n_denm += 1,
                MessageType::Mapem => s.n_mapem += 1,
                MessageType::Spatem => s.n_spatem += 1,
            }
        }
    }
    s.n_unique_stations = stations.len() as u64;
    let vehicle: Vec<f64> = recs
        .iter()
        .filter(|r| r.meta.recorder_mode == RecorderMode::Vehicle)
        .map(|r| ego_distance_m(r))
        .collect();
    if !vehicle.is_empty() {
        s.ego_distance_km = Some(ordered_sum(vehicle) / 1000.0);
    }
    s.cam_distance_km = station_cam_distances(recs).values().sum::<f64>() / 1000.0;
    s.total_duration_h = ns_to_h(recs.iter().map(|r| r.span_ns()).sum());
    s.v2x_duration_h = ns_to_h(recs.iter().map(|r| v2x_duration_ns(r)).sum());
    s.context_duration_h = ns_to_h(
        recs.iter()
            .flat_map(|r| r.context_windows.iter())
            .map(|w| w.duration_ns())
            .sum(),
    );
    s
}

/// Table I style report: one row per category plus the column sums.
pub fn stats(scenarios: &[ScenarioRecording], rule: CategoryRule) -> Result<StatsReport, AnalyzerError> {
    if scenarios.is_empty() {
        return Err(AnalyzerError::EmptyDataset);
    }
    let mut groups: BTreeMap<String, Vec<&ScenarioRecording>> = BTreeMap::new();
    for rec in scenarios {
        groups.entry(rule.key(rec)).or_default().push(rec);
    }
    let categories: Vec<CategoryStats> = groups
        .into_iter()
        .map(|(name, recs)| category_stats(name, &recs))
        .collect();

    let sum = |f: fn(&CategoryStats) -> f64| ordered_sum(categories.iter().map(f).collect());
    let egos: Vec<f64> = categories.iter().filter_map(|c| c.ego_distance_km).collect();
    let total = CategoryStats {
        name: "total".into(),
        n_cam: categories.iter().map(|c| c.n_cam).sum(),
        n_denm: categories.iter().map(|c| c.n_denm).sum(),
        n_mapem: categories.iter().map(|c| c.n_mapem).sum(),
        n_spatem: categories.iter().map(|c| c.n_spatem).sum(),
        n_unique_stations: categories.iter().map(|c| c.n_unique_stations).sum(),
        ego_distance_km: (!egos.is_empty()).then(|| ordered_sum(egos)),
        cam_distance_km: sum(|c| c.cam_distance_km),
        total_duration_h: sum(|c| c.total_duration_h),
        v2x_duration_h: sum(|c| c.v2x_duration_h),
        context_duration_h: sum(|c| c.context_duration_h),
    };
    Ok(StatsReport { categories, total })
}

struct CamPoint {
    ts: i64,
    pos: LatLon,
}

/// Time-ordered CAM positions per station; unavailable positions dropped.
fn cam_tracks(recs: &[&ScenarioRecording]) -> BTreeMap<u32, Vec<CamPoint>> {
    let mut tracks: BTreeMap<u32, Vec<CamPoint>> = BTreeMap::new();
    for rec in recs {
        for m in &rec.messages {
            let Some(cam) = m.message().and_then(ItsMessage::as_cam) else {
                continue;
            };
            if let Some((lat, lon)) = cam.basic.reference_position.lat_lon() {
                tracks.entry(cam.header.station_id).or_default().push(CamPoint {
                    ts: m.recv_ts,
                    pos: LatLon::new(lat, lon),
                });
            }
        }
    }
    for t in tracks.values_mut() {
        t.sort_by(|a, b| {
            a.ts.cmp(&b.ts)
                .then(a.pos.lat.total_cmp(&b.pos.lat))
                .then(a.pos.lon.total_cmp(&b.pos.lon))
        });
    }
    tracks
}

/// Splits a track into contiguous segments by the gap and jump rule.
fn segments(track: &[CamPoint]) -> Vec<&[CamPoint]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..track.len() {
        let (a, b) = (&track[i - 1], &track[i]);
        if b.ts - a.ts > SEGMENT_MAX_GAP_NS || haversine_unchecked(a.pos, b.pos) > SEGMENT_MAX_JUMP_M {
            out.push(&track[start..i]);
            start = i;
        }
    }
    if start < track.len() {
        out.push(&track[start..]);
    }
    out
}

fn polyline_m(seg: &[CamPoint]) -> f64 {
    seg.windows(2).map(|w| haversine_unchecked(w[0].pos, w[1].pos)).sum()
}

/// CAM polyline length per station in meters.
pub fn station_cam_distances(recs: &[&ScenarioRecording]) -> BTreeMap<u32, f64> {
    cam_tracks(recs)
        .into_iter()
        .map(|(id, track)| (id, segments(&track).into_iter().map(polyline_m).sum()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DenmEventRow {
    pub cause_code: u8,
    pub cause_name: String,
    pub sub_cause_code: u8,
    pub sub_cause_name: String,
    pub n_msgs: u64,
    pub n_stations: u64,
    pub n_events: u64,
}

impl DenmEventRow {
    pub fn name(&self) -> String {
        format!("{} / {}", self.cause_name, self.sub_cause_name)
    }
}

pub fn cause_name(cause: u8) -> String {
    match cause {
        1 => "Traffic Condition".into(),
        94 => "Stationary vehicle".into(),
        99 => "Dangerous situation".into(),
        other => other.to_string(),
    }
}

pub fn sub_cause_name(cause: u8, sub: u8) -> String {
    match (cause, sub) {
        (_, 0) => "Unavailable".into(),
        (99, 1) => "Emergency brake".into(),
        (99, 5) => "AEB activated".into(),
        (_, other) => other.to_string(),
    }
}

/// DENMs grouped by (cause, sub cause). DENMs without a situation
/// container are not listed.
pub fn denm_events(scenarios: &[ScenarioRecording]) -> Vec<DenmEventRow> {
    #[derive(Default)]
    struct Acc {
        n: u64,
        stations: BTreeSet<u32>,
        events: BTreeSet<(u32, u16)>,
    }
    let mut groups: BTreeMap<(u8, u8), Acc> = BTreeMap::new();
    for denm in scenarios
        .iter()
        .flat_map(|r| &r.messages)
        .filter_map(|m| m.message().and_then(ItsMessage::as_denm))
    {
        let Some(sit) = &denm.situation else { continue };
        let acc = groups
            .entry((sit.event_type.cause_code, sit.event_type.sub_cause_code))
            .or_default();
        acc.n += 1;
        acc.stations.insert(denm.header.station_id);
        let id = &denm.management.action_id;
        acc.events.insert((id.originating_station_id, id.sequence_number));
    }
    groups
        .into_iter()
        .map(|((cause, sub), acc)| DenmEventRow {
            cause_code: cause,
            cause_name: cause_name(cause),
            sub_cause_code: sub,
            sub_cause_name: sub_cause_name(cause, sub),
            n_msgs: acc.n,
            n_stations: acc.stations.len() as u64,
            n_events: acc.events.len() as u64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DimensionBin {
    /// Wire units of 0.1 m.
    pub length: u16,
    pub width: u8,
}

impl DimensionBin {
    pub fn length_m(&self) -> f64 {
        self.length as f64 / 10.0
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 / 10.0
    }

    pub fn label(&self) -> String {
        format!("{:.1}, {:.1}", self.length_m(), self.width_m())
    }
}

/// Unique stations per modal (length, width); ascending bins.
pub fn vehicle_dims(scenarios: &[ScenarioRecording]) -> Vec<(DimensionBin, u64)> {
    let mut per_station: HashMap<u32, HashMap<DimensionBin, u64>> = HashMap::new();
    for cam in scenarios
        .iter()
        .flat_map(|r| &r.messages)
        .filter_map(|m| m.message().and_then(ItsMessage::as_cam))
    {
        let hf = &cam.high_frequency;
        if hf.vehicle_length == ranges::VEHICLE_LENGTH.hi as u16
            || hf.vehicle_width == ranges::VEHICLE_WIDTH.hi as u8
        {
            continue;
        }
        let bin = DimensionBin {
            length: hf.vehicle_length,
            width: hf.vehicle_width,
        };
        *per_station
            .entry(cam.header.station_id)
            .or_default()
            .entry(bin)
            .or_default() += 1;
    }
    let mut hist: BTreeMap<DimensionBin, u64> = BTreeMap::new();
    for counts in per_station.values() {
        // most frequent; ties go to the smaller bin
        let modal = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(bin, _)| *bin)
            .expect("station has at least one CAM");
        *hist.entry(modal).or_default() += 1;
    }
    hist.into_iter().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryFilter {
    pub station_id: Option<u32>,
}

/// One GeoJSON feature per (station, segment): a LineString, or a Point for
/// single-CAM segments.
pub fn trajectories(scenarios: &[ScenarioRecording], filter: TrajectoryFilter) -> FeatureCollection {
    let recs: Vec<&ScenarioRecording> = scenarios.iter().collect();
    let mut features = Vec::new();
    for (station, track) in cam_tracks(&recs) {
        if filter.station_id.is_some_and(|id| id != station) {
            continue;
        }
        for seg in segments(&track) {
            let coords = seg.iter().map(|p| [p.pos.lon, p.pos.lat]);
            let geometry = if seg.len() == 1 {
                Geometry::new_point([seg[0].pos.lon, seg[0].pos.lat])
            } else {
                Geometry::new_line_string(coords)
            };
            let mut props = JsonObject::new();
            props.insert("station_id".into(), station.into());
            props.insert("t_start".into(), seg[0].ts.into());
            props.insert("t_end".into(), seg[seg.len() - 1].ts.into());
            props.insert("n_points".into(), seg.len().into());
            features.push(Feature {
                bbox: None,
                geometry: Some(geometry),
                id: None,
                properties: Some(props),
                foreign_members: None,
            });
        }
    }
    FeatureCollection {
        bbox: None,
        features,
        foreign_members: None,
    }
}

/// A rendered report, printable as aligned text or CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                let sep = if i == 0 { "" } else { "  " };
                // first column left-aligned, numbers right-aligned
                if i == 0 {
                    let _ = write!(out, "{sep}{cell:<w$}");
                } else {
                    let _ = write!(out, "{sep}{cell:>w$}");
                }
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        };
        line(&mut out, &self.headers);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&mut out, &rule);
        for row in &self.rows {
            line(&mut out, row);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

fn km(v: f64) -> String {
    format!("{v:.2}")
}

pub fn stats_table(report: &StatsReport) -> Table {
    let headers = [
        "Type of Measurement",
        "# CAM",
        "# DENM",
        "# MAPEM",
        "# SPATEM",
        "# Unique ITS Stations",
        "Distance Ego [km]",
        "Distance CAM [km]",
        "Duration Total [h]",
        "Duration V2X [h]",
        "Duration Context [h]",
    ];
    let row = |c: &CategoryStats| {
        vec![
            c.name.clone(),
            c.n_cam.to_string(),
            c.n_denm.to_string(),
            c.n_mapem.to_string(),
            c.n_spatem.to_string(),
            c.n_unique_stations.to_string(),
            c.ego_distance_km.map_or_else(|| "-".into(), km),
            km(c.cam_distance_km),
            km(c.total_duration_h),
            km(c.v2x_duration_h),
            km(c.context_duration_h),
        ]
    };
    let mut rows: Vec<Vec<String>> = report.categories.iter().map(row).collect();
    rows.push(row(&report.total));
    Table {
        headers: headers.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub fn denm_table(rows: &[DenmEventRow]) -> Table {
    Table {
        headers: ["causeCode", "subCauseCode", "# Msgs", "# ITS Stat."]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    format!("{} ({})", r.cause_name, r.cause_code),
                    format!("{} ({})", r.sub_cause_name, r.sub_cause_code),
                    r.n_msgs.to_string(),
                    r.n_stations.to_string(),
                ]
            })
            .collect(),
    }
}

pub fn dims_table(bins: &[(DimensionBin, u64)]) -> Table {
    Table {
        headers: vec!["Length, Width [m]".into(), "# Unique Vehicles".into()],
        rows: bins.iter().map(|(b, n)| vec![b.label(), n.to_string()]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{ConfigEcho, GnssFix, MessageRecord, Meta, Window, FORMAT_VERSION};
    use crate::geo::destination;
    use crate::its_types::*;

    fn meta(label: &str, mode: RecorderMode) -> Meta {
        Meta {
            format_version: FORMAT_VERSION,
            recorder_mode: mode,
            label: Some(label.into()),
            config: ConfigEcho {
                dt_a_ms: 10_000,
                dt_b_ms: 5_000,
                d_min_m: 125.0,
            },
            start_ts: 0,
            end_ts: 3600 * NS_PER_S,
        }
    }

    fn rec_of(ts: i64, msg: ItsMessage) -> MessageRecord {
        MessageRecord {
            recv_ts: ts,
            source: None,
            payload: Vec::new(),
            decoded: Ok(msg),
        }
    }

    fn cam(station: u32, pos: LatLon, len: u16, width: u8) -> ItsMessage {
        let mut c = Cam::minimal(station);
        c.basic.reference_position = ReferencePosition::from_degrees(pos.lat, pos.lon, 0.0);
        c.high_frequency.vehicle_length = len;
        c.high_frequency.vehicle_width = width;
        c.into()
    }

    fn denm(station: u32, seq: u16, cause: u8, sub: u8) -> ItsMessage {
        Denm {
            header: ItsPduHeader::new(MessageType::Denm, station),
            management: ManagementContainer {
                action_id: ActionId {
                    originating_station_id: station,
                    sequence_number: seq,
                },
                detection_time: 0,
                reference_time: 0,
                event_position: ReferencePosition::UNAVAILABLE,
                validity_duration: 600,
                station_type: 5,
            },
            situation: Some(SituationContainer {
                information_quality: 1,
                event_type: EventType {
                    cause_code: cause,
                    sub_cause_code: sub,
                },
            }),
        }
        .into()
    }

    const ORIGIN: LatLon = LatLon::new(50.78, 6.06);

    #[test]
    fn counting() {
        let mut r = ScenarioRecording::empty(meta("urban", RecorderMode::Vehicle));
        r.messages.push(rec_of(0, cam(7, ORIGIN, 42, 18)));
        r.messages.push(rec_of(1, cam(7, ORIGIN, 42, 18)));
        r.messages.push(rec_of(2, denm(7, 1, 94, 0)));
        let s = stats(&[r], CategoryRule::Label).unwrap();
        assert_eq!(s.categories.len(), 1);
        assert_eq!((s.total.n_cam, s.total.n_denm, s.total.n_unique_stations), (2, 1, 1));
        assert!(stats(&[], CategoryRule::Label).is_err());
    }

    #[test]
    fn straight_track_distance() {
        // 1 km northbound at 10 Hz and 10 m/s
        let mut r = ScenarioRecording::empty(meta("highway", RecorderMode::Infrastructure));
        for i in 0..=1000 {
            let p = destination(ORIGIN, 0.0, i as f64);
            r.messages.push(rec_of(i * NS_PER_S / 10, cam(3, p, 45, 18)));
        }
        let s = stats(&[r], CategoryRule::Label).unwrap();
        assert!((s.total.cam_distance_km - 1.0).abs() < 0.001, "{}", s.total.cam_distance_km);
        assert_eq!(s.total.ego_distance_km, None);
    }

    #[test]
    fn gap_splits_trajectory() {
        let mut r = ScenarioRecording::empty(meta("x", RecorderMode::Vehicle));
        for i in 0..20 {
            let ts = if i < 10 { i } else { i + 10 } * NS_PER_S / 2;
            r.messages.push(rec_of(ts, cam(5, destination(ORIGIN, 90.0, i as f64), 42, 18)));
        }
        let fc = trajectories(std::slice::from_ref(&r), TrajectoryFilter::default());
        assert_eq!(fc.features.len(), 2);
        let props = fc.features[0].properties.as_ref().unwrap();
        assert_eq!(props["n_points"], 10);
        assert!(trajectories(&[], TrajectoryFilter::default()).features.is_empty());
        let only = TrajectoryFilter { station_id: Some(6) };
        assert!(trajectories(&[r], only).features.is_empty());
    }

    #[test]
    fn denm_grouping_and_names() {
        let mut r = ScenarioRecording::empty(meta("x", RecorderMode::Vehicle));
        for seq in 0..3 {
            r.messages.push(rec_of(seq, denm(9, 1, 94, 0)));
        }
        r.messages.push(rec_of(5, denm(9, 2, 200, 7)));
        let rows = denm_events(std::slice::from_ref(&r));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name(), "Stationary vehicle / Unavailable");
        assert_eq!((rows[0].n_msgs, rows[0].n_events, rows[0].n_stations), (3, 1, 1));
        assert_eq!(rows[1].cause_name, "200");
        let t = denm_table(&rows);
        assert_eq!(t.rows[0][0], "Stationary vehicle (94)");
        assert!(t.to_csv().starts_with("causeCode,subCauseCode,# Msgs,# ITS Stat.\n"));
    }

    #[test]
    fn dims_modal_and_sentinel() {
        let mut r = ScenarioRecording::empty(meta("x", RecorderMode::Vehicle));
        for (i, len) in [42u16, 43, 42].iter().enumerate() {
            r.messages.push(rec_of(i as i64, cam(1, ORIGIN, *len, 18)));
        }
        r.messages.push(rec_of(9, cam(2, ORIGIN, 1023, 18)));
        let bins = vehicle_dims(&[r]);
        assert_eq!(bins, vec![(DimensionBin { length: 42, width: 18 }, 1)]);
        assert_eq!(bins[0].0.label(), "4.2, 1.8");
    }

    #[test]
    fn permutation_invariant_with_context_and_ego() {
        let mut recs = Vec::new();
        for k in 0..4 {
            let mut r = ScenarioRecording::empty(meta(if k % 2 == 0 { "a" } else { "b" }, RecorderMode::Vehicle));
            r.meta.start_ts = k * 100 * NS_PER_S;
            r.meta.end_ts = r.meta.start_ts + 90 * NS_PER_S;
            for i in 0..30 {
                let p = destination(ORIGIN, 13.0 * k as f64, 7.3 * i as f64);
                r.gnss.push(GnssFix { ts: r.meta.start_ts + i * NS_PER_S, lat: p.lat, lon: p.lon, alt: 0.0 });
                r.messages.push(rec_of(r.meta.start_ts + i * NS_PER_S, cam(k as u32, p, 42, 18)));
            }
            r.context_windows.push(Window { start_ts: r.meta.start_ts, end_ts: r.meta.start_ts + NS_PER_S });
            recs.push(r);
        }
        let a = stats(&recs, CategoryRule::Label).unwrap();
        recs.reverse();
        let b = stats(&recs, CategoryRule::Label).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total.n_unique_stations, 4);
        assert!((a.total.context_duration_h - 4.0 / 3600.0).abs() < 1e-12);
        let text = stats_table(&a).to_text();
        assert!(text.lines().next().unwrap().starts_with("Type of Measurement"));
    }
}

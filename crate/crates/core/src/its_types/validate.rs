use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ranges::{self, Bounds};
use super::*;

/// A field that breaks its range or a message-level rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn range(&mut self, path: impl FnOnce() -> String, value: i64, b: Bounds) {
        if !b.contains(value) {
            self.out.push(Violation {
                path: path(),
                reason: format!("{value} outside [{}, {}]", b.lo, b.hi),
            });
        }
    }

    fn rule(&mut self, path: String, reason: String) {
        self.out.push(Violation { path, reason });
    }
}

/// Checks every field against its wire range and the message-level rules.
///
/// Violations are reported in field-declaration order; an empty result
/// means the message can be encoded.
pub fn validate(msg: &ItsMessage) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let header = msg.header();
    let expected = msg.message_type().message_id();
    if header.message_id != expected {
        c.rule(
            "header.message_id".into(),
            format!("{} does not match {} (id {expected})", header.message_id, msg.message_type()),
        );
    }
    match msg {
        ItsMessage::Cam(m) => cam(&mut c, m),
        ItsMessage::Denm(m) => denm(&mut c, m),
        ItsMessage::Spatem(m) => spatem(&mut c, m),
        ItsMessage::Mapem(m) => mapem(&mut c, m),
    }
    c.out
}

fn reference_position(c: &mut Checker, prefix: &str, p: &ReferencePosition) {
    c.range(|| format!("{prefix}.latitude"), p.latitude as i64, ranges::LATITUDE);
    c.range(|| format!("{prefix}.longitude"), p.longitude as i64, ranges::LONGITUDE);
    c.range(|| format!("{prefix}.altitude_value"), p.altitude_value as i64, ranges::ALTITUDE);
    c.range(
        || format!("{prefix}.semi_major_confidence"),
        p.semi_major_confidence as i64,
        ranges::SEMI_AXIS_CONFIDENCE,
    );
    c.range(
        || format!("{prefix}.semi_minor_confidence"),
        p.semi_minor_confidence as i64,
        ranges::SEMI_AXIS_CONFIDENCE,
    );
    c.range(
        || format!("{prefix}.semi_major_orientation"),
        p.semi_major_orientation as i64,
        ranges::SEMI_MAJOR_ORIENTATION,
    );
}

fn cam(c: &mut Checker, m: &Cam) {
    reference_position(c, "basic.reference_position", &m.basic.reference_position);
    let hf = &m.high_frequency;
    c.range(|| "high_frequency.heading".into(), hf.heading as i64, ranges::HEADING);
    c.range(|| "high_frequency.speed".into(), hf.speed as i64, ranges::SPEED);
    c.range(
        || "high_frequency.vehicle_length".into(),
        hf.vehicle_length as i64,
        ranges::VEHICLE_LENGTH,
    );
    c.range(
        || "high_frequency.vehicle_width".into(),
        hf.vehicle_width as i64,
        ranges::VEHICLE_WIDTH,
    );
    c.range(
        || "high_frequency.longitudinal_acceleration".into(),
        hf.longitudinal_acceleration as i64,
        ranges::ACCELERATION,
    );
    c.range(|| "high_frequency.curvature".into(), hf.curvature as i64, ranges::CURVATURE);
    c.range(|| "high_frequency.yaw_rate".into(), hf.yaw_rate as i64, ranges::YAW_RATE);
    if let Some(v) = hf.vertical_acceleration {
        c.range(
            || "high_frequency.vertical_acceleration".into(),
            v as i64,
            ranges::ACCELERATION,
        );
    }
    if let Some(lf) = &m.low_frequency {
        c.range(|| "low_frequency.vehicle_role".into(), lf.vehicle_role as i64, ranges::VEHICLE_ROLE);
        c.range(
            || "low_frequency.path_history".into(),
            lf.path_history.len() as i64,
            ranges::PATH_HISTORY_LEN,
        );
        for (i, p) in lf.path_history.iter().enumerate() {
            c.range(
                || format!("low_frequency.path_history[{i}].delta_latitude"),
                p.delta_latitude as i64,
                ranges::DELTA_LATITUDE,
            );
            c.range(
                || format!("low_frequency.path_history[{i}].delta_longitude"),
                p.delta_longitude as i64,
                ranges::DELTA_LONGITUDE,
            );
            c.range(
                || format!("low_frequency.path_history[{i}].delta_altitude"),
                p.delta_altitude as i64,
                ranges::DELTA_ALTITUDE,
            );
        }
    }
}

fn denm(c: &mut Checker, m: &Denm) {
    let mg = &m.management;
    c.range(
        || "management.detection_time".into(),
        mg.detection_time.min(i64::MAX as u64) as i64,
        ranges::TIMESTAMP_ITS,
    );
    c.range(
        || "management.reference_time".into(),
        mg.reference_time.min(i64::MAX as u64) as i64,
        ranges::TIMESTAMP_ITS,
    );
    if mg.reference_time < mg.detection_time {
        c.rule(
            "management.reference_time".into(),
            format!(
                "reference_time {} precedes detection_time {}",
                mg.reference_time, mg.detection_time
            ),
        );
    }
    reference_position(c, "management.event_position", &mg.event_position);
    c.range(
        || "management.validity_duration".into(),
        mg.validity_duration as i64,
        ranges::VALIDITY_DURATION,
    );
    if let Some(s) = &m.situation {
        c.range(
            || "situation.information_quality".into(),
            s.information_quality as i64,
            ranges::INFORMATION_QUALITY,
        );
    }
}

fn spatem(c: &mut Checker, m: &Spatem) {
    c.range(|| "intersections".into(), m.intersections.len() as i64, ranges::INTERSECTIONS_LEN);
    for (i, x) in m.intersections.iter().enumerate() {
        c.range(|| format!("intersections[{i}].revision"), x.revision as i64, ranges::REVISION);
        c.range(
            || format!("intersections[{i}].movements"),
            x.movements.len() as i64,
            ranges::MOVEMENTS_LEN,
        );
        let mut seen = HashSet::new();
        for (j, mv) in x.movements.iter().enumerate() {
            if !seen.insert(mv.signal_group) {
                c.rule(
                    format!("intersections[{i}].movements[{j}].signal_group"),
                    format!("signal group {} repeated within intersection", mv.signal_group),
                );
            }
            if let Some(t) = mv.min_end_time {
                c.range(
                    || format!("intersections[{i}].movements[{j}].min_end_time"),
                    t as i64,
                    ranges::MIN_END_TIME,
                );
            }
        }
    }
}

fn mapem(c: &mut Checker, m: &Mapem) {
    c.range(|| "intersections".into(), m.intersections.len() as i64, ranges::INTERSECTIONS_LEN);
    for (i, x) in m.intersections.iter().enumerate() {
        reference_position(c, &format!("intersections[{i}].ref_point"), &x.ref_point);
        c.range(|| format!("intersections[{i}].lanes"), x.lanes.len() as i64, ranges::LANES_LEN);
        for (j, lane) in x.lanes.iter().enumerate() {
            c.range(
                || format!("intersections[{i}].lanes[{j}].node_offsets"),
                lane.node_offsets.len() as i64,
                ranges::NODE_OFFSETS_LEN,
            );
            c.range(
                || format!("intersections[{i}].lanes[{j}].connects_to"),
                lane.connects_to.len() as i64,
                ranges::CONNECTIONS_LEN,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn denm() -> Denm {
        Denm {
            header: ItsPduHeader::new(MessageType::Denm, 3),
            management: ManagementContainer {
                action_id: ActionId {
                    originating_station_id: 3,
                    sequence_number: 1,
                },
                detection_time: 1000,
                reference_time: 1000,
                event_position: ReferencePosition::UNAVAILABLE,
                validity_duration: 600,
                station_type: 5,
            },
            situation: None,
        }
    }

    #[test]
    fn unavailable_heading_is_legal() {
        let cam = Cam::minimal(1);
        assert_eq!(cam.high_frequency.heading, 3601);
        assert!(validate(&cam.into()).is_empty());
    }

    #[test]
    fn heading_out_of_range() {
        let mut cam = Cam::minimal(1);
        cam.high_frequency.heading = 4000;
        let v = validate(&cam.into());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "high_frequency.heading");
    }

    #[test]
    fn reference_before_detection() {
        let mut d = denm();
        d.management.reference_time = 999;
        let v = validate(&d.into());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "management.reference_time");
    }

    #[test]
    fn declaration_order() {
        let mut cam = Cam::minimal(1);
        cam.header.message_id = 1;
        cam.basic.reference_position.latitude = i32::MAX;
        cam.high_frequency.vehicle_width = 0;
        cam.high_frequency.speed = 20000;
        let paths: Vec<_> = validate(&cam.into()).into_iter().map(|v| v.path).collect();
        assert_eq!(
            paths,
            [
                "header.message_id",
                "basic.reference_position.latitude",
                "high_frequency.speed",
                "high_frequency.vehicle_width"
            ]
        );
    }

    #[test]
    fn spatem_duplicate_signal_group() {
        let mv = MovementState {
            signal_group: 4,
            event_state: MovementPhaseState::StopAndRemain,
            min_end_time: Some(40_000),
        };
        let s = Spatem {
            header: ItsPduHeader::new(MessageType::Spatem, 9),
            intersections: vec![IntersectionState {
                intersection_id: 1,
                revision: 0,
                movements: vec![mv, mv],
            }],
        };
        let paths: Vec<_> = validate(&s.into()).into_iter().map(|v| v.path).collect();
        assert_eq!(
            paths,
            [
                "intersections[0].movements[0].min_end_time",
                "intersections[0].movements[1].signal_group",
                "intersections[0].movements[1].min_end_time"
            ]
        );
    }

    #[test]
    fn mapem_lane_needs_two_nodes() {
        let m = Mapem {
            header: ItsPduHeader::new(MessageType::Mapem, 9),
            intersections: vec![IntersectionGeometry {
                intersection_id: 1,
                ref_point: ReferencePosition::from_degrees(50.78, 6.06, 170.0),
                lanes: vec![Lane {
                    lane_id: 1,
                    ingress: true,
                    node_offsets: vec![NodeOffset { dx: 0, dy: 0 }],
                    connects_to: vec![],
                }],
            }],
        };
        let v = validate(&m.into());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "intersections[0].lanes[0].node_offsets");
        let empty = Mapem {
            header: ItsPduHeader::new(MessageType::Mapem, 9),
            intersections: vec![],
        };
        assert_eq!(validate(&empty.into())[0].path, "intersections");
    }
}

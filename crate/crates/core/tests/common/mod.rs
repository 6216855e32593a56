//! Random valid-message generators shared by the integration tests.
#![allow(dead_code)]

use itskit::its_types::ranges::{self, Bounds};
use itskit::its_types::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn int<R: Rng>(rng: &mut R, b: Bounds) -> i64 {
    // lean on the range ends, where off-by-one bugs live
    match rng.gen_range(0..10) {
        0 => b.lo,
        1 => b.hi,
        _ => rng.gen_range(b.lo..=b.hi),
    }
}

/// A length in `b`, usually small, occasionally the maximum.
fn count<R: Rng>(rng: &mut R, b: Bounds, typical: i64) -> usize {
    match rng.gen_range(0..40) {
        0 => b.hi as usize,
        1 => b.lo as usize,
        _ => rng.gen_range(b.lo..=b.hi.min(b.lo + typical)) as usize,
    }
}

pub fn header<R: Rng>(rng: &mut R, t: MessageType) -> ItsPduHeader {
    ItsPduHeader {
        protocol_version: int(rng, ranges::PROTOCOL_VERSION) as u8,
        message_id: t.message_id(),
        station_id: int(rng, ranges::STATION_ID) as u32,
    }
}

pub fn position<R: Rng>(rng: &mut R) -> ReferencePosition {
    ReferencePosition {
        latitude: int(rng, ranges::LATITUDE) as i32,
        longitude: int(rng, ranges::LONGITUDE) as i32,
        altitude_value: int(rng, ranges::ALTITUDE) as i32,
        semi_major_confidence: int(rng, ranges::SEMI_AXIS_CONFIDENCE) as u16,
        semi_minor_confidence: int(rng, ranges::SEMI_AXIS_CONFIDENCE) as u16,
        semi_major_orientation: int(rng, ranges::SEMI_MAJOR_ORIENTATION) as u16,
    }
}

pub fn cam<R: Rng>(rng: &mut R) -> Cam {
    let low_frequency = rng.gen_bool(0.5).then(|| LowFrequencyContainer {
        vehicle_role: int(rng, ranges::VEHICLE_ROLE) as u8,
        exterior_lights: rng.gen(),
        path_history: (0..count(rng, ranges::PATH_HISTORY_LEN, 10))
            .map(|_| DeltaPosition {
                delta_latitude: int(rng, ranges::DELTA_LATITUDE) as i32,
                delta_longitude: int(rng, ranges::DELTA_LONGITUDE) as i32,
                delta_altitude: int(rng, ranges::DELTA_ALTITUDE) as i16,
            })
            .collect(),
    });
    Cam {
        header: header(rng, MessageType::Cam),
        generation_delta_time: rng.gen(),
        basic: BasicContainer {
            station_type: rng.gen(),
            reference_position: position(rng),
        },
        high_frequency: HighFrequencyContainer {
            heading: int(rng, ranges::HEADING) as u16,
            speed: int(rng, ranges::SPEED) as u16,
            drive_direction: *DriveDirection::ALL.choose(rng).unwrap(),
            vehicle_length: int(rng, ranges::VEHICLE_LENGTH) as u16,
            vehicle_width: int(rng, ranges::VEHICLE_WIDTH) as u8,
            longitudinal_acceleration: int(rng, ranges::ACCELERATION) as i16,
            curvature: int(rng, ranges::CURVATURE) as i16,
            yaw_rate: int(rng, ranges::YAW_RATE) as i32,
            vertical_acceleration: rng.gen_bool(0.5).then(|| int(rng, ranges::ACCELERATION) as i16),
        },
        low_frequency,
        special_vehicle: rng.gen(),
    }
}

pub fn denm<R: Rng>(rng: &mut R) -> Denm {
    let detection_time = int(rng, ranges::TIMESTAMP_ITS) as u64;
    let reference_time = rng.gen_range(detection_time..=ranges::TIMESTAMP_ITS.hi as u64);
    Denm {
        header: header(rng, MessageType::Denm),
        management: ManagementContainer {
            action_id: ActionId {
                originating_station_id: rng.gen(),
                sequence_number: rng.gen(),
            },
            detection_time,
            reference_time,
            event_position: position(rng),
            validity_duration: int(rng, ranges::VALIDITY_DURATION) as u32,
            station_type: rng.gen(),
        },
        situation: rng.gen_bool(0.7).then(|| SituationContainer {
            information_quality: int(rng, ranges::INFORMATION_QUALITY) as u8,
            event_type: EventType {
                cause_code: rng.gen(),
                sub_cause_code: rng.gen(),
            },
        }),
    }
}

pub fn spatem<R: Rng>(rng: &mut R) -> Spatem {
    let intersections = (0..count(rng, ranges::INTERSECTIONS_LEN, 3))
        .map(|_| {
            let mut groups: Vec<u8> = (0..=255).collect();
            groups.shuffle(rng);
            let n = count(rng, ranges::MOVEMENTS_LEN, 8);
            IntersectionState {
                intersection_id: rng.gen(),
                revision: int(rng, ranges::REVISION) as u8,
                movements: groups[..n]
                    .iter()
                    .map(|&signal_group| MovementState {
                        signal_group,
                        event_state: *MovementPhaseState::ALL.choose(rng).unwrap(),
                        min_end_time: rng.gen_bool(0.8).then(|| int(rng, ranges::MIN_END_TIME) as u16),
                    })
                    .collect(),
            }
        })
        .collect();
    Spatem {
        header: header(rng, MessageType::Spatem),
        intersections,
    }
}

pub fn mapem<R: Rng>(rng: &mut R) -> Mapem {
    let intersections = (0..count(rng, ranges::INTERSECTIONS_LEN, 2))
        .map(|_| IntersectionGeometry {
            intersection_id: rng.gen(),
            ref_point: position(rng),
            lanes: (0..count(rng, ranges::LANES_LEN, 6))
                .map(|_| Lane {
                    lane_id: rng.gen(),
                    ingress: rng.gen(),
                    node_offsets: (0..count(rng, ranges::NODE_OFFSETS_LEN, 4))
                        .map(|_| NodeOffset {
                            dx: rng.gen(),
                            dy: rng.gen(),
                        })
                        .collect(),
                    connects_to: (0..count(rng, ranges::CONNECTIONS_LEN, 3))
                        .map(|_| Connection {
                            lane_id: rng.gen(),
                            signal_group: rng.gen_bool(0.5).then(|| rng.gen()),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Mapem {
        header: header(rng, MessageType::Mapem),
        intersections,
    }
}

pub fn message<R: Rng>(rng: &mut R, t: MessageType) -> ItsMessage {
    match t {
        MessageType::Cam => cam(rng).into(),
        MessageType::Denm => denm(rng).into(),
        MessageType::Spatem => spatem(rng).into(),
        MessageType::Mapem => mapem(rng).into(),
    }
}

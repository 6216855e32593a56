//! Domain model of the profiled ETSI ITS message types.
//!
//! All numeric fields hold wire-scale integers; [`wire_to_si`] converts to
//! physical units. Value ranges live in [`ranges`] and are shared with the
//! codec.

pub mod ranges;
mod units;
mod validate;

use serde::{Deserialize, Serialize};

pub use units::{si_to_wire, wire_to_si, FieldKind, SiValue};
pub use validate::{validate, Violation};

/// Milliseconds between the Unix epoch and the ITS epoch (2004-01-01T00:00:00Z).
pub const ITS_EPOCH_UNIX_MS: i64 = 1_072_915_200_000;

/// ITS timestamp (ms since 2004-01-01) for a Unix timestamp in nanoseconds.
///
/// Leap seconds are not applied.
pub fn unix_ns_to_its_ms(unix_ns: i64) -> i64 {
    unix_ns.div_euclid(1_000_000) - ITS_EPOCH_UNIX_MS
}

/// The CAM generationDeltaTime for an ITS timestamp.
pub fn generation_delta_time(timestamp_its: u64) -> u16 {
    (timestamp_its % 65536) as u16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MessageType {
    Denm,
    Cam,
    Spatem,
    Mapem,
}

impl MessageType {
    pub const ALL: [MessageType; 4] = [
        MessageType::Cam,
        MessageType::Denm,
        MessageType::Mapem,
        MessageType::Spatem,
    ];

    pub fn message_id(self) -> u8 {
        match self {
            MessageType::Denm => 1,
            MessageType::Cam => 2,
            MessageType::Spatem => 4,
            MessageType::Mapem => 5,
        }
    }

    pub fn from_message_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(MessageType::Denm),
            2 => Some(MessageType::Cam),
            4 => Some(MessageType::Spatem),
            5 => Some(MessageType::Mapem),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageType::Denm => "DENM",
            MessageType::Cam => "CAM",
            MessageType::Spatem => "SPATEM",
            MessageType::Mapem => "MAPEM",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        MessageType::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl std::fmt::Display for MessageType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItsPduHeader {
    pub protocol_version: u8,
    pub message_id: u8,
    pub station_id: u32,
}

impl ItsPduHeader {
    pub fn new(message_type: MessageType, station_id: u32) -> Self {
        ItsPduHeader {
            protocol_version: 2,
            message_id: message_type.message_id(),
            station_id,
        }
    }
}

/// Position with confidence ellipse. Latitude/longitude in 0.1 microdegree,
/// altitude in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePosition {
    pub latitude: i32,
    pub longitude: i32,
    pub altitude_value: i32,
    pub semi_major_confidence: u16,
    pub semi_minor_confidence: u16,
    pub semi_major_orientation: u16,
}

impl ReferencePosition {
    pub const UNAVAILABLE: ReferencePosition = ReferencePosition {
        latitude: ranges::LATITUDE_UNAVAILABLE as i32,
        longitude: ranges::LONGITUDE_UNAVAILABLE as i32,
        altitude_value: ranges::ALTITUDE_UNAVAILABLE as i32,
        semi_major_confidence: ranges::SEMI_AXIS_CONFIDENCE_UNAVAILABLE as u16,
        semi_minor_confidence: ranges::SEMI_AXIS_CONFIDENCE_UNAVAILABLE as u16,
        semi_major_orientation: ranges::SEMI_MAJOR_ORIENTATION_UNAVAILABLE as u16,
    };

    /// Position from degrees and meters, confidences unavailable.
    pub fn from_degrees(lat: f64, lon: f64, alt_m: f64) -> Self {
        ReferencePosition {
            latitude: (lat * 1e7).round() as i32,
            longitude: (lon * 1e7).round() as i32,
            altitude_value: (alt_m * 100.0).round() as i32,
            ..ReferencePosition::UNAVAILABLE
        }
    }

    /// Latitude and longitude in degrees, `None` when either is unavailable.
    pub fn lat_lon(&self) -> Option<(f64, f64)> {
        if self.latitude as i64 == ranges::LATITUDE_UNAVAILABLE
            || self.longitude as i64 == ranges::LONGITUDE_UNAVAILABLE
        {
            return None;
        }
        Some((self.latitude as f64 / 1e7, self.longitude as f64 / 1e7))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cam {
    pub header: ItsPduHeader,
    pub generation_delta_time: u16,
    pub basic: BasicContainer,
    pub high_frequency: HighFrequencyContainer,
    pub low_frequency: Option<LowFrequencyContainer>,
    /// The special vehicle container is modeled by its presence only.
    pub special_vehicle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasicContainer {
    pub station_type: u8,
    pub reference_position: ReferencePosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveDirection {
    Forward,
    Backward,
    Unavailable,
}

impl DriveDirection {
    pub const ALL: [DriveDirection; 3] = [
        DriveDirection::Forward,
        DriveDirection::Backward,
        DriveDirection::Unavailable,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighFrequencyContainer {
    pub heading: u16,
    pub speed: u16,
    pub drive_direction: DriveDirection,
    pub vehicle_length: u16,
    pub vehicle_width: u8,
    pub longitudinal_acceleration: i16,
    pub curvature: i16,
    pub yaw_rate: i32,
    pub vertical_acceleration: Option<i16>,
}

impl HighFrequencyContainer {
    /// Every field set to its "unavailable" sentinel.
    pub const UNAVAILABLE: HighFrequencyContainer = HighFrequencyContainer {
        heading: ranges::HEADING_UNAVAILABLE as u16,
        speed: ranges::SPEED_UNAVAILABLE as u16,
        drive_direction: DriveDirection::Unavailable,
        vehicle_length: ranges::VEHICLE_LENGTH_UNAVAILABLE as u16,
        vehicle_width: ranges::VEHICLE_WIDTH_UNAVAILABLE as u8,
        longitudinal_acceleration: ranges::ACCELERATION_UNAVAILABLE as i16,
        curvature: ranges::CURVATURE_UNAVAILABLE as i16,
        yaw_rate: ranges::YAW_RATE_UNAVAILABLE as i32,
        vertical_acceleration: None,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowFrequencyContainer {
    pub vehicle_role: u8,
    /// Fixed 8-bit string, bit 7 is the first bit on the wire.
    pub exterior_lights: u8,
    pub path_history: Vec<DeltaPosition>,
}

/// Path history point relative to the current reference position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaPosition {
    pub delta_latitude: i32,
    pub delta_longitude: i32,
    pub delta_altitude: i16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Denm {
    pub header: ItsPduHeader,
    pub management: ManagementContainer,
    pub situation: Option<SituationContainer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionId {
    pub originating_station_id: u32,
    pub sequence_number: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManagementContainer {
    pub action_id: ActionId,
    pub detection_time: u64,
    pub reference_time: u64,
    pub event_position: ReferencePosition,
    pub validity_duration: u32,
    pub station_type: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SituationContainer {
    pub information_quality: u8,
    pub event_type: EventType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventType {
    pub cause_code: u8,
    pub sub_cause_code: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spatem {
    pub header: ItsPduHeader,
    pub intersections: Vec<IntersectionState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionState {
    pub intersection_id: u16,
    pub revision: u8,
    pub movements: Vec<MovementState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovementState {
    pub signal_group: u8,
    pub event_state: MovementPhaseState,
    /// Tenths of a second within the current hour.
    pub min_end_time: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementPhaseState {
    Unavailable,
    Dark,
    StopThenProceed,
    StopAndRemain,
    PreMovement,
    PermissiveMovementAllowed,
    ProtectedMovementAllowed,
    PermissiveClearance,
    ProtectedClearance,
    CautionConflictingTraffic,
}

impl MovementPhaseState {
    pub const ALL: [MovementPhaseState; 10] = [
        MovementPhaseState::Unavailable,
        MovementPhaseState::Dark,
        MovementPhaseState::StopThenProceed,
        MovementPhaseState::StopAndRemain,
        MovementPhaseState::PreMovement,
        MovementPhaseState::PermissiveMovementAllowed,
        MovementPhaseState::ProtectedMovementAllowed,
        MovementPhaseState::PermissiveClearance,
        MovementPhaseState::ProtectedClearance,
        MovementPhaseState::CautionConflictingTraffic,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mapem {
    pub header: ItsPduHeader,
    pub intersections: Vec<IntersectionGeometry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionGeometry {
    pub intersection_id: u16,
    pub ref_point: ReferencePosition,
    pub lanes: Vec<Lane>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub lane_id: u8,
    pub ingress: bool,
    pub node_offsets: Vec<NodeOffset>,
    pub connects_to: Vec<Connection>,
}

/// Offset from the previous node (the reference point for the first), in cm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeOffset {
    pub dx: i16,
    pub dy: i16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub lane_id: u8,
    pub signal_group: Option<u8>,
}

/// One decoded ITS PDU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItsMessage {
    Cam(Cam),
    Denm(Denm),
    Spatem(Spatem),
    Mapem(Mapem),
}

impl ItsMessage {
    pub fn header(&self) -> &ItsPduHeader {
        match self {
            ItsMessage::Cam(m) => &m.header,
            ItsMessage::Denm(m) => &m.header,
            ItsMessage::Spatem(m) => &m.header,
            ItsMessage::Mapem(m) => &m.header,
        }
    }

    pub fn message_type(&self) -> MessageType {
        match self {
            ItsMessage::Cam(_) => MessageType::Cam,
            ItsMessage::Denm(_) => MessageType::Denm,
            ItsMessage::Spatem(_) => MessageType::Spatem,
            ItsMessage::Mapem(_) => MessageType::Mapem,
        }
    }

    pub fn station_id(&self) -> u32 {
        self.header().station_id
    }

    pub fn as_cam(&self) -> Option<&Cam> {
        match self {
            ItsMessage::Cam(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_denm(&self) -> Option<&Denm> {
        match self {
            ItsMessage::Denm(d) => Some(d),
            _ => None,
        }
    }

    /// The message body as a JSON value (the `decoded` schema of scenario files).
    pub fn to_json_value(&self) -> serde_json::Value {
        let v = match self {
            ItsMessage::Cam(m) => serde_json::to_value(m),
            ItsMessage::Denm(m) => serde_json::to_value(m),
            ItsMessage::Spatem(m) => serde_json::to_value(m),
            ItsMessage::Mapem(m) => serde_json::to_value(m),
        };
        v.expect("message types serialize infallibly")
    }

    /// Inverse of [`to_json_value`](Self::to_json_value) for a known type.
    pub fn from_json_value(
        message_type: MessageType,
        value: serde_json::Value,
    ) -> Result<Self, serde_path_to_error::Error<serde_json::Error>> {
        Ok(match message_type {
            MessageType::Cam => ItsMessage::Cam(serde_path_to_error::deserialize(value)?),
            MessageType::Denm => ItsMessage::Denm(serde_path_to_error::deserialize(value)?),
            MessageType::Spatem => ItsMessage::Spatem(serde_path_to_error::deserialize(value)?),
            MessageType::Mapem => ItsMessage::Mapem(serde_path_to_error::deserialize(value)?),
        })
    }
}

impl From<Cam> for ItsMessage {
    fn from(m: Cam) -> Self {
        ItsMessage::Cam(m)
    }
}

impl From<Denm> for ItsMessage {
    fn from(m: Denm) -> Self {
        ItsMessage::Denm(m)
    }
}

impl From<Spatem> for ItsMessage {
    fn from(m: Spatem) -> Self {
        ItsMessage::Spatem(m)
    }
}

impl From<Mapem> for ItsMessage {
    fn from(m: Mapem) -> Self {
        ItsMessage::Mapem(m)
    }
}

impl Cam {
    /// CAM with no optional containers and every value unavailable.
    pub fn minimal(station_id: u32) -> Self {
        Cam {
            header: ItsPduHeader::new(MessageType::Cam, station_id),
            generation_delta_time: 0,
            basic: BasicContainer {
                station_type: 0,
                reference_position: ReferencePosition::UNAVAILABLE,
            },
            high_frequency: HighFrequencyContainer::UNAVAILABLE,
            low_frequency: None,
            special_vehicle: false,
        }
    }
}

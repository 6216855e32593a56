//! Wire ranges and sentinels shared by validation and the codec.

/// Inclusive wire range of an integer field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub lo: i64,
    pub hi: i64,
}

impl Bounds {
    pub const fn new(lo: i64, hi: i64) -> Self {
        Bounds { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub const PROTOCOL_VERSION: Bounds = Bounds::new(0, 255);
pub const MESSAGE_ID: Bounds = Bounds::new(0, 255);
pub const STATION_ID: Bounds = Bounds::new(0, u32::MAX as i64);
pub const STATION_TYPE: Bounds = Bounds::new(0, 255);

pub const LATITUDE: Bounds = Bounds::new(-900_000_000, 900_000_001);
pub const LATITUDE_UNAVAILABLE: i64 = 900_000_001;
pub const LONGITUDE: Bounds = Bounds::new(-1_800_000_000, 1_800_000_001);
pub const LONGITUDE_UNAVAILABLE: i64 = 1_800_000_001;
pub const ALTITUDE: Bounds = Bounds::new(-100_000, 800_001);
pub const ALTITUDE_UNAVAILABLE: i64 = 800_001;
pub const SEMI_AXIS_CONFIDENCE: Bounds = Bounds::new(0, 4095);
pub const SEMI_AXIS_CONFIDENCE_UNAVAILABLE: i64 = 4095;
pub const SEMI_MAJOR_ORIENTATION: Bounds = Bounds::new(0, 3601);
pub const SEMI_MAJOR_ORIENTATION_UNAVAILABLE: i64 = 3601;

pub const GENERATION_DELTA_TIME: Bounds = Bounds::new(0, 65535);
pub const HEADING: Bounds = Bounds::new(0, 3601);
pub const HEADING_UNAVAILABLE: i64 = 3601;
pub const SPEED: Bounds = Bounds::new(0, 16383);
pub const SPEED_UNAVAILABLE: i64 = 16383;
pub const VEHICLE_LENGTH: Bounds = Bounds::new(1, 1023);
pub const VEHICLE_LENGTH_UNAVAILABLE: i64 = 1023;
pub const VEHICLE_WIDTH: Bounds = Bounds::new(1, 62);
pub const VEHICLE_WIDTH_UNAVAILABLE: i64 = 62;
pub const ACCELERATION: Bounds = Bounds::new(-160, 161);
pub const ACCELERATION_UNAVAILABLE: i64 = 161;
pub const CURVATURE: Bounds = Bounds::new(-1023, 1023);
pub const CURVATURE_UNAVAILABLE: i64 = 1023;
pub const YAW_RATE: Bounds = Bounds::new(-32766, 32767);
pub const YAW_RATE_UNAVAILABLE: i64 = 32767;

pub const VEHICLE_ROLE: Bounds = Bounds::new(0, 15);
pub const PATH_HISTORY_LEN: Bounds = Bounds::new(0, 40);
pub const DELTA_LATITUDE: Bounds = Bounds::new(-131_071, 131_072);
pub const DELTA_LATITUDE_UNAVAILABLE: i64 = 131_072;
pub const DELTA_LONGITUDE: Bounds = Bounds::new(-131_071, 131_072);
pub const DELTA_LONGITUDE_UNAVAILABLE: i64 = 131_072;
pub const DELTA_ALTITUDE: Bounds = Bounds::new(-12_700, 12_800);
pub const DELTA_ALTITUDE_UNAVAILABLE: i64 = 12_800;

pub const SEQUENCE_NUMBER: Bounds = Bounds::new(0, 65535);
/// TimestampIts: milliseconds since 2004-01-01T00:00:00Z, 42 bits.
pub const TIMESTAMP_ITS: Bounds = Bounds::new(0, (1 << 42) - 1);
pub const VALIDITY_DURATION: Bounds = Bounds::new(0, 86_400);
pub const INFORMATION_QUALITY: Bounds = Bounds::new(0, 7);
pub const CAUSE_CODE: Bounds = Bounds::new(0, 255);
pub const SUB_CAUSE_CODE: Bounds = Bounds::new(0, 255);

pub const INTERSECTIONS_LEN: Bounds = Bounds::new(1, 32);
pub const INTERSECTION_ID: Bounds = Bounds::new(0, 65535);
pub const REVISION: Bounds = Bounds::new(0, 127);
pub const MOVEMENTS_LEN: Bounds = Bounds::new(1, 255);
pub const SIGNAL_GROUP: Bounds = Bounds::new(0, 255);
pub const MIN_END_TIME: Bounds = Bounds::new(0, 36_001);

pub const LANES_LEN: Bounds = Bounds::new(1, 255);
pub const LANE_ID: Bounds = Bounds::new(0, 255);
pub const NODE_OFFSETS_LEN: Bounds = Bounds::new(2, 63);
pub const NODE_OFFSET: Bounds = Bounds::new(-32768, 32767);
pub const CONNECTIONS_LEN: Bounds = Bounds::new(0, 16);

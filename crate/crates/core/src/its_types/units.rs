use super::ranges::{self, Bounds};
use crate::bitcodec::CodecError;

/// Field kinds with a physical interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Latitude,
    Longitude,
    Altitude,
    SemiAxisConfidence,
    SemiMajorOrientation,
    Heading,
    Speed,
    VehicleLength,
    VehicleWidth,
    LongitudinalAcceleration,
    VerticalAcceleration,
    Curvature,
    YawRate,
    DeltaLatitude,
    DeltaLongitude,
    DeltaAltitude,
    MinEndTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiValue {
    Value(f64),
    Unavailable,
}

impl SiValue {
    pub fn value(self) -> Option<f64> {
        match self {
            SiValue::Value(v) => Some(v),
            SiValue::Unavailable => None,
        }
    }
}

struct Scale {
    bounds: Bounds,
    /// wire units per SI unit
    per_unit: f64,
    sentinel: Option<i64>,
    unit: &'static str,
}

impl FieldKind {
    pub const ALL: [FieldKind; 17] = [
        FieldKind::Latitude,
        FieldKind::Longitude,
        FieldKind::Altitude,
        FieldKind::SemiAxisConfidence,
        FieldKind::SemiMajorOrientation,
        FieldKind::Heading,
        FieldKind::Speed,
        FieldKind::VehicleLength,
        FieldKind::VehicleWidth,
        FieldKind::LongitudinalAcceleration,
        FieldKind::VerticalAcceleration,
        FieldKind::Curvature,
        FieldKind::YawRate,
        FieldKind::DeltaLatitude,
        FieldKind::DeltaLongitude,
        FieldKind::DeltaAltitude,
        FieldKind::MinEndTime,
    ];

    fn scale(self) -> Scale {
        use FieldKind::*;
        let s = |bounds, per_unit, sentinel, unit| Scale {
            bounds,
            per_unit,
            sentinel,
            unit,
        };
        match self {
            Latitude => s(ranges::LATITUDE, 1e7, Some(ranges::LATITUDE_UNAVAILABLE), "deg"),
            Longitude => s(ranges::LONGITUDE, 1e7, Some(ranges::LONGITUDE_UNAVAILABLE), "deg"),
            Altitude => s(ranges::ALTITUDE, 100.0, Some(ranges::ALTITUDE_UNAVAILABLE), "m"),
            SemiAxisConfidence => s(
                ranges::SEMI_AXIS_CONFIDENCE,
                100.0,
                Some(ranges::SEMI_AXIS_CONFIDENCE_UNAVAILABLE),
                "m",
            ),
            SemiMajorOrientation => s(
                ranges::SEMI_MAJOR_ORIENTATION,
                10.0,
                Some(ranges::SEMI_MAJOR_ORIENTATION_UNAVAILABLE),
                "deg",
            ),
            Heading => s(ranges::HEADING, 10.0, Some(ranges::HEADING_UNAVAILABLE), "deg"),
            Speed => s(ranges::SPEED, 100.0, Some(ranges::SPEED_UNAVAILABLE), "m/s"),
            VehicleLength => s(
                ranges::VEHICLE_LENGTH,
                10.0,
                Some(ranges::VEHICLE_LENGTH_UNAVAILABLE),
                "m",
            ),
            VehicleWidth => s(
                ranges::VEHICLE_WIDTH,
                10.0,
                Some(ranges::VEHICLE_WIDTH_UNAVAILABLE),
                "m",
            ),
            LongitudinalAcceleration | VerticalAcceleration => s(
                ranges::ACCELERATION,
                10.0,
                Some(ranges::ACCELERATION_UNAVAILABLE),
                "m/s^2",
            ),
            Curvature => s(ranges::CURVATURE, 10_000.0, Some(ranges::CURVATURE_UNAVAILABLE), "1/m"),
            YawRate => s(ranges::YAW_RATE, 100.0, Some(ranges::YAW_RATE_UNAVAILABLE), "deg/s"),
            DeltaLatitude => s(
                ranges::DELTA_LATITUDE,
                1e7,
                Some(ranges::DELTA_LATITUDE_UNAVAILABLE),
                "deg",
            ),
            DeltaLongitude => s(
                ranges::DELTA_LONGITUDE,
                1e7,
                Some(ranges::DELTA_LONGITUDE_UNAVAILABLE),
                "deg",
            ),
            DeltaAltitude => s(
                ranges::DELTA_ALTITUDE,
                100.0,
                Some(ranges::DELTA_ALTITUDE_UNAVAILABLE),
                "m",
            ),
            MinEndTime => s(ranges::MIN_END_TIME, 10.0, Some(36_001), "s"),
        }
    }

    pub fn bounds(self) -> Bounds {
        self.scale().bounds
    }

    pub fn sentinel(self) -> Option<i64> {
        self.scale().sentinel
    }

    pub fn unit(self) -> &'static str {
        self.scale().unit
    }
}

fn range_error(value: i64, b: Bounds) -> CodecError {
    CodecError::RangeViolation {
        value: value as i128,
        lo: b.lo,
        hi: b.hi,
    }
}

/// Converts a wire value of `kind` to SI units (degrees for angles).
pub fn wire_to_si(kind: FieldKind, wire: i64) -> Result<SiValue, CodecError> {
    let s = kind.scale();
    if !s.bounds.contains(wire) {
        return Err(range_error(wire, s.bounds));
    }
    if s.sentinel == Some(wire) {
        return Ok(SiValue::Unavailable);
    }
    Ok(SiValue::Value(wire as f64 / s.per_unit))
}

/// Converts an SI value to the nearest wire step of `kind`.
pub fn si_to_wire(kind: FieldKind, value: SiValue) -> Result<i64, CodecError> {
    let s = kind.scale();
    match value {
        SiValue::Unavailable => s
            .sentinel
            .ok_or(CodecError::Unsupported("field kind has no unavailable value")),
        SiValue::Value(v) => {
            let wire = (v * s.per_unit).round();
            if !wire.is_finite() || wire < s.bounds.lo as f64 || wire > s.bounds.hi as f64 {
                return Err(range_error(wire as i64, s.bounds));
            }
            let wire = wire as i64;
            if s.sentinel == Some(wire) {
                return Err(range_error(wire, s.bounds));
            }
            Ok(wire)
        }
    }
}

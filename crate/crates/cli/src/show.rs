//! Human-readable message dump with SI annotations.

use std::fmt::Write;

use itskit::its_types::{validate, wire_to_si, FieldKind, ItsMessage, SiValue};
use serde_json::Value;

fn kind_of(field: &str) -> Option<FieldKind> {
    Some(match field {
        "latitude" => FieldKind::Latitude,
        "longitude" => FieldKind::Longitude,
        "altitude_value" => FieldKind::Altitude,
        "semi_major_confidence" | "semi_minor_confidence" => FieldKind::SemiAxisConfidence,
        "semi_major_orientation" => FieldKind::SemiMajorOrientation,
        "heading" => FieldKind::Heading,
        "speed" => FieldKind::Speed,
        "vehicle_length" => FieldKind::VehicleLength,
        "vehicle_width" => FieldKind::VehicleWidth,
        "longitudinal_acceleration" => FieldKind::LongitudinalAcceleration,
        "vertical_acceleration" => FieldKind::VerticalAcceleration,
        "curvature" => FieldKind::Curvature,
        "yaw_rate" => FieldKind::YawRate,
        "delta_latitude" => FieldKind::DeltaLatitude,
        "delta_longitude" => FieldKind::DeltaLongitude,
        "delta_altitude" => FieldKind::DeltaAltitude,
        "min_end_time" => FieldKind::MinEndTime,
        _ => return None,
    })
}

fn annotate(field: &str, v: &Value) -> String {
    let (Some(kind), Some(wire)) = (kind_of(field), v.as_i64()) else {
        return String::new();
    };
    match wire_to_si(kind, wire) {
        Ok(SiValue::Value(x)) => format!("  ({} {})", trim_float(x), kind.unit()),
        Ok(SiValue::Unavailable) => "  (unavailable)".into(),
        Err(_) => "  (out of range)".into(),
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.7}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

fn walk(out: &mut String, path: &str, field: &str, v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(out, &p, k, child);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                walk(out, &format!("{path}[{i}]"), field, child);
            }
        }
        leaf => {
            let _ = writeln!(out, "{path}: {leaf}{}", annotate(field, leaf));
        }
    }
}

/// One `path: value` line per field, followed by the validation report.
pub fn render(msg: &ItsMessage) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} from station {}", msg.message_type().name(), msg.station_id());
    walk(&mut out, "", "", &msg.to_json_value());
    let violations = validate(msg);
    if violations.is_empty() {
        out.push_str("validation: ok\n");
    } else {
        for v in violations {
            let _ = writeln!(out, "validation: {}: {}", v.path, v.reason);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use itskit::its_types::{Cam, ReferencePosition};

    #[test]
    fn si_annotations() {
        let mut cam = Cam::minimal(7);
        cam.basic.reference_position = ReferencePosition::from_degrees(50.5, 6.25, 120.0);
        cam.high_frequency.speed = 1389;
        let text = render(&cam.into());
        assert!(text.starts_with("CAM from station 7\n"));
        assert!(text.contains("basic.reference_position.latitude: 505000000  (50.5 deg)"), "{text}");
        assert!(text.contains("high_frequency.speed: 1389  (13.89 m/s)"));
        assert!(text.contains("high_frequency.heading: 3601  (unavailable)"));
        assert!(text.ends_with("validation: ok\n"));
    }
}

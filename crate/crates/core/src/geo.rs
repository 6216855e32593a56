//! Great-circle helpers on a spherical Earth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    fn check(&self) -> Result<(), GeoError> {
        if !(self.lat.abs() <= 90.0 && self.lon.abs() <= 180.0) {
            return Err(GeoError::DomainError {
                lat: self.lat,
                lon: self.lon,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("DomainError: ({lat}, {lon}) is not a valid coordinate")]
    DomainError { lat: f64, lon: f64 },
}

/// Haversine distance in meters.
pub fn haversine(a: LatLon, b: LatLon) -> Result<f64, GeoError> {
    a.check()?;
    b.check()?;
    Ok(haversine_unchecked(a, b))
}

pub(crate) fn haversine_unchecked(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial bearing from `a` to `b`, degrees clockwise from north in [0, 360).
pub fn initial_bearing(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point at `fraction` of the great-circle arc from `a` to `b`.
pub fn interpolate(a: LatLon, b: LatLon, fraction: f64) -> LatLon {
    let d = haversine_unchecked(a, b) / EARTH_RADIUS_M;
    if d < 1e-12 {
        return a;
    }
    let (p1, l1) = (a.lat.to_radians(), a.lon.to_radians());
    let (p2, l2) = (b.lat.to_radians(), b.lon.to_radians());
    let ka = ((1.0 - fraction) * d).sin() / d.sin();
    let kb = (fraction * d).sin() / d.sin();
    let x = ka * p1.cos() * l1.cos() + kb * p2.cos() * l2.cos();
    let y = ka * p1.cos() * l1.sin() + kb * p2.cos() * l2.sin();
    let z = ka * p1.sin() + kb * p2.sin();
    LatLon {
        lat: z.atan2((x * x + y * y).sqrt()).to_degrees(),
        lon: y.atan2(x).to_degrees(),
    }
}

/// Point reached from `start` after `distance_m` along `bearing_deg`.
pub fn destination(start: LatLon, bearing_deg: f64, distance_m: f64) -> LatLon {
    let d = distance_m / EARTH_RADIUS_M;
    let th = bearing_deg.to_radians();
    let p1 = start.lat.to_radians();
    let l1 = start.lon.to_radians();
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * th.cos()).asin();
    let l2 = l1 + (th.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    LatLon {
        lat: p2.to_degrees(),
        lon: (l2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0,
    }
}

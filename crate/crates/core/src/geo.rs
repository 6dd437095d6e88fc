//! Spherical-Earth geodesy: degree/radian conversion and great-circle
//! distance.
//!
//! Every distance in the crate is derived from [`EARTH_RADIUS_KM`]; there is
//! no second radius anywhere. Coordinates are assumed to be validated at
//! ingestion (see [`crate::io`]), so nothing here re-checks ranges.

use std::f64::consts::PI;
use std::fmt;

/// Mean Earth radius in kilometers, i.e. kilometers per radian of arc.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// A latitude/longitude pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadianPoint {
    pub lat_rad: f64,
    pub lon_rad: f64,
}

/// Which coordinate failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Latitude,
    Longitude,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Latitude => f.write_str("latitude"),
            Axis::Longitude => f.write_str("longitude"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoordinateError {
    #[error("{axis} {value} is not a finite number")]
    NotFinite { axis: Axis, value: f64 },
    #[error("{axis} {value} is out of range")]
    OutOfRange { axis: Axis, value: f64 },
}

impl GeoPoint {
    /// Builds a point, rejecting non-finite or out-of-range coordinates.
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, CoordinateError> {
        check(Axis::Latitude, lat_deg, 90.0)?;
        check(Axis::Longitude, lon_deg, 180.0)?;
        Ok(GeoPoint { lat_deg, lon_deg })
    }

    pub fn to_radians(self) -> RadianPoint {
        to_radians(self)
    }
}

fn check(axis: Axis, value: f64, limit: f64) -> Result<(), CoordinateError> {
    if !value.is_finite() {
        return Err(CoordinateError::NotFinite { axis, value });
    }
    if !(-limit..=limit).contains(&value) {
        return Err(CoordinateError::OutOfRange { axis, value });
    }
    Ok(())
}

impl RadianPoint {
    pub fn to_degrees(self) -> GeoPoint {
        from_radians(self)
    }
}

pub fn to_radians(p: GeoPoint) -> RadianPoint {
    RadianPoint {
        lat_rad: p.lat_deg * PI / 180.0,
        lon_rad: p.lon_deg * PI / 180.0,
    }
}

pub fn from_radians(p: RadianPoint) -> GeoPoint {
    GeoPoint {
        lat_deg: p.lat_rad * 180.0 / PI,
        lon_deg: p.lon_rad * 180.0 / PI,
    }
}

/// Central angle between two points in radians of arc, in `[0, π]`.
///
/// Uses the haversine form `2·asin(√h)` with
/// `h = sin²(Δφ/2) + cos φ₁·cos φ₂·sin²(Δλ/2)`, which stays accurate for the
/// near-zero separations that dominate clustered GPS data. Differences are
/// taken as absolute values so the result is bit-for-bit symmetric.
#[inline]
pub fn arc_distance(a: RadianPoint, b: RadianPoint) -> f64 {
    let sin_dlat = ((a.lat_rad - b.lat_rad).abs() * 0.5).sin();
    let sin_dlon = ((a.lon_rad - b.lon_rad).abs() * 0.5).sin();
    let h = sin_dlat * sin_dlat + a.lat_rad.cos() * b.lat_rad.cos() * sin_dlon * sin_dlon;
    2.0 * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Great-circle distance in kilometers.
#[inline]
pub fn haversine_km(a: RadianPoint, b: RadianPoint) -> f64 {
    arc_distance(a, b) * EARTH_RADIUS_KM
}

/// Great-circle distance in meters between two degree-space points.
#[inline]
pub fn great_circle_m(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_km(to_radians(a), to_radians(b)) * 1000.0
}

/// Converts a physical distance to radians of arc.
#[inline]
pub fn km_to_arc(km: f64) -> f64 {
    km / EARTH_RADIUS_KM
}

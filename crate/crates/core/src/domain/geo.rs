//! Planar geometry and the lon/lat ingestion projection.
//!
//! All internal coordinates are kilometres in a local planar frame.
//! Files may instead carry WGS84 lon/lat columns; those are projected
//! once at load time with an equirectangular projection about a fixed
//! reference point, which is accurate to well under a percent over a
//! metropolitan-scale study area.

use serde::{Deserialize, Serialize};

const EARTH_RADIUS_KM: f64 = 6371.0;

/// A point in the local planar frame, in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_km: f64,
    pub y_km: f64,
}

impl Point {
    pub fn new(x_km: f64, y_km: f64) -> Self {
        Point { x_km, y_km }
    }

    /// Euclidean distance in kilometres.
    pub fn distance_km(self, other: Point) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }

    pub fn is_finite(self) -> bool {
        self.x_km.is_finite() && self.y_km.is_finite()
    }
}

/// Equirectangular projection about a reference point.
///
/// The same projection instance must be used for every file of a
/// dataset so that zones, homes and origins land in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub ref_lon_deg: f64,
    pub ref_lat_deg: f64,
}

impl Projection {
    /// Projection centred on the mean lon/lat of `points`.
    pub fn from_centroid(points: &[(f64, f64)]) -> Option<Projection> {
        if points.is_empty() {
            return None;
        }
        let n = points.len() as f64;
        let (mut lon, mut lat) = (0.0, 0.0);
        for &(lo, la) in points {
            lon += lo;
            lat += la;
        }
        Some(Projection {
            ref_lon_deg: lon / n,
            ref_lat_deg: lat / n,
        })
    }

    /// Project a lon/lat pair (degrees) into the planar frame.
    pub fn project(&self, lon_deg: f64, lat_deg: f64) -> Point {
        let x = EARTH_RADIUS_KM
            * self.ref_lat_deg.to_radians().cos()
            * (lon_deg - self.ref_lon_deg).to_radians();
        let y = EARTH_RADIUS_KM * (lat_deg - self.ref_lat_deg).to_radians();
        Point::new(x, y)
    }
}

//! Earth-fixed geometry: WGS84 geodetic conversions, ground-site states in
//! the TEME frame, and great-circle distances.

use crate::sgp4::StateVector;
use crate::time::{gmst_rad, EARTH_ROTATION_RAD_S};
use crate::Vec3d;
use chrono::{DateTime, Utc};

/// WGS84 equatorial radius, km.
pub const WGS84_A_KM: f64 = 6378.137;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Mean Earth radius used for great-circle arcs, km.
pub const MEAN_RADIUS_KM: f64 = 6371.0;

const DEG2RAD: f64 = std::f64::consts::PI / 180.0;
const RAD2DEG: f64 = 180.0 / std::f64::consts::PI;

/// Geodetic coordinates (WGS84).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodetic {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_km: f64,
}

fn eccentricity_sq() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

/// Geodetic position to earth-fixed (ECEF) km.
pub fn geodetic_to_ecef(lat_deg: f64, lon_deg: f64, alt_km: f64) -> Vec3d {
    let lat = lat_deg * DEG2RAD;
    let lon = lon_deg * DEG2RAD;
    let e2 = eccentricity_sq();
    let n = WGS84_A_KM / (1.0 - e2 * lat.sin().powi(2)).sqrt();
    Vec3d::new(
        (n + alt_km) * lat.cos() * lon.cos(),
        (n + alt_km) * lat.cos() * lon.sin(),
        (n * (1.0 - e2) + alt_km) * lat.sin(),
    )
}

fn rotate_z(v: &Vec3d, angle_rad: f64) -> Vec3d {
    let (s, c) = angle_rad.sin_cos();
    Vec3d::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Inertial (TEME) state of a fixed ground site: the WGS84 position rotated
/// by Greenwich sidereal angle, with the Earth-rotation velocity.
pub fn ground_site_state(
    lat_deg: f64,
    lon_deg: f64,
    alt_km: f64,
    at: DateTime<Utc>,
) -> StateVector {
    debug_assert!(lat_deg.abs() <= 90.0, "latitude out of range");
    let ecef = geodetic_to_ecef(lat_deg, lon_deg, alt_km);
    let position_km = rotate_z(&ecef, gmst_rad(at));
    let omega = Vec3d::new(0.0, 0.0, EARTH_ROTATION_RAD_S);
    let velocity_kms = omega.cross(&position_km);
    StateVector {
        epoch: at,
        position_km,
        velocity_kms,
    }
}

/// Geodetic up direction of a site, expressed in TEME at `at`.
pub fn site_up_teme(lat_deg: f64, lon_deg: f64, at: DateTime<Utc>) -> Vec3d {
    let lat = lat_deg * DEG2RAD;
    let lon = lon_deg * DEG2RAD;
    let up = Vec3d::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin());
    rotate_z(&up, gmst_rad(at))
}

/// Subpoint of an inertial state: geodetic latitude/longitude/altitude of
/// the point directly below the satellite.
pub fn subpoint(state: &StateVector) -> Geodetic {
    let ecef = rotate_z(&state.position_km, -gmst_rad(state.epoch));
    ecef_to_geodetic(&ecef)
}

/// ECEF km to geodetic, iterative WGS84 solution.
pub fn ecef_to_geodetic(p: &Vec3d) -> Geodetic {
    let e2 = eccentricity_sq();
    let rxy = (p.x * p.x + p.y * p.y).sqrt();
    let mut lon = p.y.atan2(p.x) * RAD2DEG;
    if lon >= 180.0 {
        lon -= 360.0;
    }
    let mut lat = p.z.atan2(rxy);
    let mut n = WGS84_A_KM;
    for _ in 0..6 {
        n = WGS84_A_KM / (1.0 - e2 * lat.sin().powi(2)).sqrt();
        lat = (p.z + e2 * n * lat.sin()).atan2(rxy);
    }
    let alt = if rxy > 1e-6 {
        rxy / lat.cos() - n
    } else {
        p.z.abs() - n * (1.0 - e2)
    };
    Geodetic {
        lat_deg: lat * RAD2DEG,
        lon_deg: lon,
        alt_km: alt,
    }
}

/// Elevation angle of `target` above the geodetic horizon of a site.
pub fn elevation_deg(site: &StateVector, up: &Vec3d, target: &StateVector) -> f64 {
    let los = target.position_km.sub(&site.position_km).unit();
    los.dot(up).asin() * RAD2DEG
}

/// Great-circle distance along the mean sphere, km.
pub fn great_circle_km(lat1_deg: f64, lon1_deg: f64, lat2_deg: f64, lon2_deg: f64) -> f64 {
    let (p1, l1) = (lat1_deg * DEG2RAD, lon1_deg * DEG2RAD);
    let (p2, l2) = (lat2_deg * DEG2RAD, lon2_deg * DEG2RAD);
    let dp = p2 - p1;
    let dl = l2 - l1;
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * MEAN_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

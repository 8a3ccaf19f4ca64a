//! Pairwise orbital geometry, service-density-boundary classification,
//! satellite density grids, and candidate relay search.

use crate::earth::subpoint;
use crate::sgp4::StateVector;
use chrono::{DateTime, Utc};
use std::collections::BTreeMap;
use thiserror::Error;

/// Distance / velocity relation between an observer and a target at one
/// shared epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySample {
    pub epoch: DateTime<Utc>,
    pub distance_km: f64,
    /// |v_target - v_observer|.
    pub relative_speed_kms: f64,
    /// Signed range rate d(distance)/dt; zero for coincident points.
    pub range_rate_kms: f64,
    /// Geodetic subpoint latitude of the observer.
    pub subpoint_lat_deg: f64,
}

/// Region relative to the service density boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsdbRegion {
    Inside,
    Outside,
}

/// Latitude band inside which the relay constellation is dense.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsdbConfig {
    pub boundary_lat_deg: f64,
}

impl Default for SsdbConfig {
    fn default() -> Self {
        Self {
            boundary_lat_deg: 53.0,
        }
    }
}

/// Satellite counts over a lat/lon grid at one epoch.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub cell_size_deg: f64,
    /// (lat_bin, lon_bin) -> count; bins are 0-based from (-90, -180).
    pub counts: BTreeMap<(u32, u32), u32>,
    pub epoch: DateTime<Utc>,
}

impl DensityGrid {
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    /// Center coordinates of a bin.
    pub fn cell_center(&self, lat_bin: u32, lon_bin: u32) -> (f64, f64) {
        (
            -90.0 + (lat_bin as f64 + 0.5) * self.cell_size_deg,
            -180.0 + (lon_bin as f64 + 0.5) * self.cell_size_deg,
        )
    }

    /// Total count with subpoint |lat| <= `band_deg`.
    pub fn count_within_band(&self, band_deg: f64) -> u64 {
        self.counts
            .iter()
            .filter(|((lat_bin, _), _)| {
                let (lat, _) = self.cell_center(*lat_bin, 0);
                lat.abs() <= band_deg + self.cell_size_deg / 2.0 - 1e-9
            })
            .map(|(_, &c)| c as u64)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("epoch mismatch between state vectors")]
    EpochMismatch,
    #[error("cell size {0} does not divide 180 evenly")]
    BadCellSize(f64),
}

/// Relative geometry of two states sharing an epoch. The observer is `a`.
pub fn geometry(a: &StateVector, b: &StateVector) -> Result<GeometrySample, GeometryError> {
    if a.epoch != b.epoch {
        return Err(GeometryError::EpochMismatch);
    }
    Ok(geometry_with_observer_lat(a, b, subpoint(a).lat_deg))
}

/// Same as [`geometry`] with the observer subpoint latitude precomputed
/// (one observer is typically paired against many targets).
pub fn geometry_with_observer_lat(
    a: &StateVector,
    b: &StateVector,
    observer_lat_deg: f64,
) -> GeometrySample {
    let dp = b.position_km.sub(&a.position_km);
    let dv = b.velocity_kms.sub(&a.velocity_kms);
    let distance_km = dp.norm();
    let relative_speed_kms = dv.norm();
    let range_rate_kms = if distance_km > 0.0 {
        dp.dot(&dv) / distance_km
    } else {
        0.0
    };
    GeometrySample {
        epoch: a.epoch,
        distance_km,
        relative_speed_kms,
        range_rate_kms,
        subpoint_lat_deg: observer_lat_deg,
    }
}

/// Inside iff |lat| <= boundary (boundary inclusive).
pub fn classify_ssdb(subpoint_lat_deg: f64, cfg: &SsdbConfig) -> SsdbRegion {
    if subpoint_lat_deg.abs() <= cfg.boundary_lat_deg {
        SsdbRegion::Inside
    } else {
        SsdbRegion::Outside
    }
}

/// Bins every satellite subpoint into a lat/lon grid.
pub fn density_grid(
    sats: &[StateVector],
    cell_size_deg: f64,
) -> Result<DensityGrid, GeometryError> {
    let bins = 180.0 / cell_size_deg;
    if cell_size_deg <= 0.0 || (bins - bins.round()).abs() > 1e-9 {
        return Err(GeometryError::BadCellSize(cell_size_deg));
    }
    let lat_bins = bins.round() as u32;
    let lon_bins = lat_bins * 2;
    let epoch = sats.first().map(|s| s.epoch).unwrap_or_default();
    let mut counts: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for s in sats {
        if s.epoch != epoch {
            return Err(GeometryError::EpochMismatch);
        }
        let g = subpoint(s);
        let lat_bin = (((g.lat_deg + 90.0) / cell_size_deg) as u32).min(lat_bins - 1);
        let mut lon = g.lon_deg;
        if lon >= 180.0 {
            lon -= 360.0;
        }
        if lon < -180.0 {
            lon += 360.0;
        }
        let lon_bin = (((lon + 180.0) / cell_size_deg) as u32).min(lon_bins - 1);
        *counts.entry((lat_bin, lon_bin)).or_insert(0) += 1;
    }
    Ok(DensityGrid {
        cell_size_deg,
        counts,
        epoch,
    })
}

/// All relays within `radius_km` of the user, ordered by ascending distance
/// (ties by input index), each with its geometry sample.
pub fn candidates_within(
    user: &StateVector,
    relays: &[StateVector],
    radius_km: f64,
) -> Result<Vec<(usize, GeometrySample)>, GeometryError> {
    let user_lat = subpoint(user).lat_deg;
    let mut out = Vec::new();
    for (i, relay) in relays.iter().enumerate() {
        if relay.epoch != user.epoch {
            return Err(GeometryError::EpochMismatch);
        }
        let sample = geometry_with_observer_lat(user, relay, user_lat);
        if sample.distance_km <= radius_km {
            out.push((i, sample));
        }
    }
    out.sort_by(|(ia, a), (ib, b)| {
        a.distance_km
            .partial_cmp(&b.distance_km)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ia.cmp(ib))
    });
    Ok(out)
}

//! Link and route quality: free-space path loss, subcarrier-offset SNR
//! degradation, PoP loss/delay profiles with weather classes, ISL distance
//! terms, and per-session deliverable volume.

use crate::earth::{great_circle_km, subpoint};
use crate::geometry::{geometry, GeometrySample};
use crate::num::Scalar;
use crate::sgp4::StateVector;
use chrono::{DateTime, Utc};
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Normalized carrier offset beyond which a subcarrier bleeds into its
/// neighbors and the link is treated as unusable.
pub const EPSILON_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("non-positive input to path-loss model")]
    NonPositiveInput,
    #[error("normalized CFO {0} outside (-0.5, 0.5); link unusable")]
    EpsilonOutOfRange(f64),
    #[error("unknown weather class `{0}`")]
    UnknownWeatherClass(String),
    #[error("tier {0:?} not present in profile")]
    UnknownTier(ServiceTier),
    #[error("no PoP available")]
    NoPopAvailable,
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
}

// ---------------------------------------------------------------------------
// Scalar kernels
// ---------------------------------------------------------------------------

/// Free-space path loss in dB for a distance in km and frequency in Hz.
pub fn fspl_db<T: Scalar>(distance_km: T, freq_hz: T) -> Result<T, QualityError> {
    if distance_km <= T::zero() || freq_hz <= T::zero() {
        return Err(QualityError::NonPositiveInput);
    }
    let twenty = T::c(20.0);
    let d_m = distance_km * T::c(1000.0);
    let four_pi_over_c = T::c(4.0 * std::f64::consts::PI / SPEED_OF_LIGHT_M_S);
    Ok(twenty * d_m.log10() + twenty * freq_hz.log10() + twenty * four_pi_over_c.log10())
}

/// Lower bound on the linear SNR of a subcarrier under a normalized carrier
/// frequency offset `epsilon`, given the offset-free Ec/N0 (linear).
pub fn cfo_snr<T: Scalar>(ec_n0_linear: T, epsilon: T) -> Result<T, QualityError> {
    if epsilon.abs() >= T::c(EPSILON_LIMIT) {
        return Err(QualityError::EpsilonOutOfRange(
            epsilon.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let pi_eps = T::c(std::f64::consts::PI) * epsilon;
    let sinc = if pi_eps == T::zero() {
        T::one()
    } else {
        pi_eps.sin() / pi_eps
    };
    let num = ec_n0_linear * sinc * sinc;
    let den = T::one() + T::c(0.5947) * ec_n0_linear * pi_eps.sin() * pi_eps.sin();
    Ok(num / den)
}

/// dB/linear conversions.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::c(10.0).powf(db / T::c(10.0))
}

pub fn linear_to_db<T: Scalar>(linear: T) -> T {
    T::c(10.0) * linear.log10()
}

// ---------------------------------------------------------------------------
// Radio configuration
// ---------------------------------------------------------------------------

/// Service tiers with subscribed rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceTier {
    Standard,
    Roam,
    Priority,
    Business,
}

/// Subscribed data rate per tier, bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierRates {
    pub standard: f64,
    pub roam: f64,
    pub priority: f64,
    pub business: f64,
}

impl TierRates {
    pub fn get(&self, tier: ServiceTier) -> f64 {
        match tier {
            ServiceTier::Standard => self.standard,
            ServiceTier::Roam => self.roam,
            ServiceTier::Priority => self.priority,
            ServiceTier::Business => self.business,
        }
    }
}

impl Default for TierRates {
    fn default() -> Self {
        // Business anchored at 30 Mbps; other tiers keep the observed
        // 1 : 1.33 : 2.2 : 4 rate proportions.
        Self {
            standard: 7.5e6,
            roam: 10.0e6,
            priority: 16.5e6,
            business: 30.0e6,
        }
    }
}

/// Air-interface and session parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    /// Offset-free Ec/N0 in dB at the reference distance.
    pub ec_n0_ref_db: f64,
    pub ref_distance_km: f64,
    pub session_seconds: f64,
    pub tier_rates: TierRates,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 12.0e9,
            subcarrier_spacing_hz: 240.0e3,
            ec_n0_ref_db: 20.0,
            ref_distance_km: 550.0,
            session_seconds: 15.0,
            tier_rates: TierRates::default(),
        }
    }
}

impl RadioConfig {
    /// Normalized CFO for a line-of-sight range rate in km/s.
    pub fn epsilon(&self, range_rate_kms: f64) -> f64 {
        doppler_epsilon(
            range_rate_kms,
            self.carrier_freq_hz,
            self.subcarrier_spacing_hz,
        )
    }

    /// Relative speed (km/s) at which the normalized CFO reaches the
    /// adjacent-channel limit.
    pub fn critical_velocity_kms(&self) -> f64 {
        EPSILON_LIMIT * self.subcarrier_spacing_hz * SPEED_OF_LIGHT_M_S / self.carrier_freq_hz
            / 1000.0
    }

    /// Ec/N0 in dB at a given distance: the reference value adjusted by the
    /// free-space path-loss delta, saturated to a sane ceiling near zero
    /// distance.
    pub fn ec_n0_db_at(&self, distance_km: f64) -> f64 {
        let d = distance_km.max(1e-3);
        let delta = fspl_db(d, self.carrier_freq_hz).unwrap()
            - fspl_db(self.ref_distance_km, self.carrier_freq_hz).unwrap();
        (self.ec_n0_ref_db - delta).min(60.0)
    }

    /// Offset-degraded SNR in dB for a link geometry; `None` when the CFO
    /// pushes the subcarrier into its neighbors.
    pub fn snr_db(&self, sample: &GeometrySample) -> Option<f64> {
        let eps = self.epsilon(sample.range_rate_kms);
        let ec_n0 = db_to_linear(self.ec_n0_db_at(sample.distance_km));
        cfo_snr(ec_n0, eps).ok().map(linear_to_db)
    }
}

/// Normalized CFO: Doppler shift over subcarrier spacing.
pub fn doppler_epsilon(range_rate_kms: f64, carrier_freq_hz: f64, subcarrier_spacing_hz: f64) -> f64 {
    (range_rate_kms.abs() * 1000.0 / SPEED_OF_LIGHT_M_S) * carrier_freq_hz / subcarrier_spacing_hz
}

// ---------------------------------------------------------------------------
// PoP profiles and weather
// ---------------------------------------------------------------------------

/// Discrete weather classes carried by trace files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherClass {
    Clear,
    Cloud,
    Rain,
    Snow,
}

impl WeatherClass {
    pub fn parse(s: &str) -> Result<Self, QualityError> {
        match s.trim() {
            "clear" => Ok(Self::Clear),
            "cloud" => Ok(Self::Cloud),
            "rain" => Ok(Self::Rain),
            "snow" => Ok(Self::Snow),
            other => Err(QualityError::UnknownWeatherClass(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Clear => "clear",
            Self::Cloud => "cloud",
            Self::Rain => "rain",
            Self::Snow => "snow",
        }
    }
}

/// Per-weather-class values (loss fraction or delay ms).
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherTable {
    pub clear: f64,
    pub cloud: f64,
    pub rain: f64,
    pub snow: f64,
}

impl WeatherTable {
    pub fn get(&self, class: WeatherClass) -> f64 {
        match class {
            WeatherClass::Clear => self.clear,
            WeatherClass::Cloud => self.cloud,
            WeatherClass::Rain => self.rain,
            WeatherClass::Snow => self.snow,
        }
    }
}

/// Loss/delay predictor for one internet point of presence.
#[derive(Debug, Clone, PartialEq)]
pub struct PopProfile {
    pub pop_id: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub base_loss_rate: WeatherTable,
    pub base_delay_ms: WeatherTable,
    pub tier_rates: TierRates,
}

/// Distance-proportional ISL degradation.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IslModel {
    /// Added loss fraction per km spanned.
    pub loss_per_km: f64,
    /// Added delay per km spanned (light-speed propagation).
    pub delay_ms_per_km: f64,
}

impl Default for IslModel {
    fn default() -> Self {
        Self {
            loss_per_km: 0.0035 / 2100.0,
            delay_ms_per_km: 1.0 / (SPEED_OF_LIGHT_M_S / 1000.0) * 1000.0,
        }
    }
}

/// Quality of one user -> relay -> PoP route for a session.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteQuality {
    pub loss_rate: f64,
    pub delay_ms: f64,
    /// Offset-degraded SNR of the space segment, when defined.
    pub snr_db: Option<f64>,
    /// Maximum data volume deliverable in one session, bits.
    pub deliverable_bits: f64,
}

/// Route quality through one PoP: additive weather-class base terms plus the
/// distance-proportional ISL contribution.
pub fn pop_route_quality(
    profile: &PopProfile,
    weather: WeatherClass,
    tier: ServiceTier,
    isl_km: f64,
    isl: &IslModel,
    radio: &RadioConfig,
) -> Result<RouteQuality, QualityError> {
    let rate = profile.tier_rates.get(tier);
    if rate <= 0.0 {
        return Err(QualityError::UnknownTier(tier));
    }
    let loss = (profile.base_loss_rate.get(weather) + isl_km * isl.loss_per_km)
        .clamp(0.0, 1.0 - f64::EPSILON);
    let delay = profile.base_delay_ms.get(weather) + isl_km * isl.delay_ms_per_km;
    Ok(RouteQuality {
        loss_rate: loss,
        delay_ms: delay,
        snr_db: None,
        deliverable_bits: rate * radio.session_seconds * (1.0 - loss),
    })
}

/// Offline weather trace: per location, a time-ordered sequence of classes.
#[derive(Debug, Clone, Default)]
pub struct WeatherSource {
    series: BTreeMap<String, Vec<(DateTime<Utc>, WeatherClass)>>,
}

impl WeatherSource {
    /// Ideal weather everywhere.
    pub fn clear() -> Self {
        Self::default()
    }

    /// Parses rows of `location_id,epoch_utc,weather_class` (header optional).
    pub fn from_csv(text: &str) -> Result<Self, QualityError> {
        let mut series: BTreeMap<String, Vec<(DateTime<Utc>, WeatherClass)>> = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("location_id") || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(QualityError::SchemaViolation {
                    path: format!("weather row {}", no + 1),
                    reason: "expected location_id,epoch_utc,weather_class".into(),
                });
            }
            let epoch = DateTime::parse_from_rfc3339(parts[1].trim())
                .map_err(|e| QualityError::SchemaViolation {
                    path: format!("weather row {}", no + 1),
                    reason: format!("bad epoch: {e}"),
                })?
                .with_timezone(&Utc);
            let class = WeatherClass::parse(parts[2])?;
            series
                .entry(parts[0].trim().to_string())
                .or_default()
                .push((epoch, class));
        }
        for v in series.values_mut() {
            v.sort_by_key(|(t, _)| *t);
        }
        Ok(Self { series })
    }

    /// Latest class at or before `at`; clear when nothing is known.
    pub fn class_at(&self, location_id: &str, at: DateTime<Utc>) -> WeatherClass {
        let Some(rows) = self.series.get(location_id) else {
            return WeatherClass::Clear;
        };
        match rows.partition_point(|(t, _)| *t <= at) {
            0 => WeatherClass::Clear,
            n => rows[n - 1].1,
        }
    }
}

/// Projects the relay to its subpoint, evaluates every PoP under its local
/// weather with the ISL term set by the great-circle distance from the
/// subpoint, gates on the space-segment CFO, and returns the PoP that
/// maximizes deliverable volume (ties: lower delay, then id).
pub fn space_user_route(
    user: &StateVector,
    relay: &StateVector,
    pops: &[PopProfile],
    weather: &WeatherSource,
    tier: ServiceTier,
    radio: &RadioConfig,
    isl: &IslModel,
) -> Result<(String, RouteQuality), QualityError> {
    if pops.is_empty() {
        return Err(QualityError::NoPopAvailable);
    }
    let geo = geometry(user, relay).map_err(|_| QualityError::NoPopAvailable)?;
    route_for_candidates(&geo, subpoint(relay), pops, weather, tier, radio, isl)
}

/// Inner evaluation shared with the simulator (which precomputes geometry
/// and subpoints).
pub fn route_for_candidates(
    geo: &GeometrySample,
    relay_subpoint: crate::earth::Geodetic,
    pops: &[PopProfile],
    weather: &WeatherSource,
    tier: ServiceTier,
    radio: &RadioConfig,
    isl: &IslModel,
) -> Result<(String, RouteQuality), QualityError> {
    if pops.is_empty() {
        return Err(QualityError::NoPopAvailable);
    }
    let eps = radio.epsilon(geo.range_rate_kms);
    let snr_db = radio.snr_db(geo);
    let usable = eps < EPSILON_LIMIT;

    let mut best: Option<(String, RouteQuality)> = None;
    for pop in pops {
        let class = weather.class_at(&pop.pop_id, geo.epoch);
        let isl_km = great_circle_km(
            relay_subpoint.lat_deg,
            relay_subpoint.lon_deg,
            pop.lat_deg,
            pop.lon_deg,
        );
        let mut q = pop_route_quality(pop, class, tier, isl_km, isl, radio)?;
        q.snr_db = snr_db;
        if !usable {
            q.deliverable_bits = 0.0;
        }
        let better = match &best {
            None => true,
            Some((best_id, best_q)) => {
                (q.deliverable_bits, -q.delay_ms, std::cmp::Reverse(&pop.pop_id))
                    .partial_cmp(&(
                        best_q.deliverable_bits,
                        -best_q.delay_ms,
                        std::cmp::Reverse(best_id),
                    ))
                    .map(|o| o == std::cmp::Ordering::Greater)
                    .unwrap_or(false)
            }
        };
        if better {
            best = Some((pop.pop_id.clone(), q));
        }
    }
    best.ok_or(QualityError::NoPopAvailable)
}

// ---------------------------------------------------------------------------
// Profile file ingestion
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopFile {
    version: u32,
    #[serde(default)]
    pop: Vec<PopEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopEntry {
    pop_id: String,
    lat: f64,
    lon: f64,
    loss_rate: WeatherTable,
    delay_ms: WeatherTable,
    tier_rate_bps: TierRates,
}

/// Loads and validates PoP profiles from the versioned structured-text file.
pub fn load_pop_profiles(text: &str) -> Result<Vec<PopProfile>, QualityError> {
    let file: PopFile = toml::from_str(text).map_err(|e| QualityError::SchemaViolation {
        path: "pop profile file".into(),
        reason: e.to_string(),
    })?;
    if file.version != 1 {
        return Err(QualityError::SchemaViolation {
            path: "version".into(),
            reason: format!("unsupported version {}", file.version),
        });
    }
    let mut out = Vec::with_capacity(file.pop.len());
    for p in file.pop {
        for (name, table) in [("loss_rate", &p.loss_rate)] {
            for (class, v) in [
                ("clear", table.clear),
                ("cloud", table.cloud),
                ("rain", table.rain),
                ("snow", table.snow),
            ] {
                if !(0.0..1.0).contains(&v) {
                    return Err(QualityError::SchemaViolation {
                        path: format!("pop.{}.{name}.{class}", p.pop_id),
                        reason: format!("loss rate {v} outside [0, 1)"),
                    });
                }
            }
        }
        for (class, v) in [
            ("clear", p.delay_ms.clear),
            ("cloud", p.delay_ms.cloud),
            ("rain", p.delay_ms.rain),
            ("snow", p.delay_ms.snow),
        ] {
            if v <= 0.0 {
                return Err(QualityError::SchemaViolation {
                    path: format!("pop.{}.delay_ms.{class}", p.pop_id),
                    reason: format!("delay {v} must be positive"),
                });
            }
        }
        if p.lat.abs() > 90.0 {
            return Err(QualityError::SchemaViolation {
                path: format!("pop.{}.lat", p.pop_id),
                reason: "latitude out of range".into(),
            });
        }
        out.push(PopProfile {
            pop_id: p.pop_id,
            lat_deg: p.lat,
            lon_deg: p.lon,
            base_loss_rate: p.loss_rate,
            base_delay_ms: p.delay_ms,
            tier_rates: p.tier_rate_bps,
        });
    }
    Ok(out)
}

/// Reads PoP profiles from disk.
pub fn load_pop_profiles_file(path: &std::path::Path) -> Result<Vec<PopProfile>, QualityError> {
    let text = std::fs::read_to_string(path).map_err(|e| QualityError::SchemaViolation {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    load_pop_profiles(&text)
}

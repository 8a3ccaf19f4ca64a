//! Time scales: Julian dates and Greenwich mean sidereal time.

use chrono::{DateTime, Datelike, Timelike, Utc};

/// Earth rotation rate in rad/s (GMST rate).
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_146_706_98e-5;

/// Mean sidereal day in seconds, consistent with the GMST polynomial below.
pub const SIDEREAL_DAY_S: f64 = 86_164.090_53;

/// Julian date of a UTC timestamp (UT1 ~ UTC for our purposes).
pub fn julian_day(t: DateTime<Utc>) -> f64 {
    let year = t.year() as f64;
    let month = t.month() as f64;
    let day = t.day() as f64;
    let jd = 367.0 * year - ((7.0 * (year + ((month + 9.0) / 12.0).floor())) * 0.25).floor()
        + (275.0 * month / 9.0).floor()
        + day
        + 1_721_013.5;
    let sec = t.num_seconds_from_midnight() as f64 + t.nanosecond() as f64 * 1e-9;
    jd + sec / 86_400.0
}

/// Greenwich mean sidereal time in radians, in [0, 2π).
pub fn gmst_rad(t: DateTime<Utc>) -> f64 {
    let tut1 = (julian_day(t) - 2_451_545.0) / 36_525.0;
    let mut sec = -6.2e-6 * tut1 * tut1 * tut1 + 0.093_104 * tut1 * tut1
        + (876_600.0 * 3600.0 + 8_640_184.812_866) * tut1
        + 67_310.548_41;
    // seconds of time to radians (240 s of time per degree)
    sec = (sec * std::f64::consts::PI / (240.0 * 180.0)) % (2.0 * std::f64::consts::PI);
    if sec < 0.0 {
        sec += 2.0 * std::f64::consts::PI;
    }
    sec
}

/// Minutes elapsed from `from` to `to` (signed).
pub fn minutes_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    let d = to.signed_duration_since(from);
    d.num_seconds() as f64 / 60.0 + d.subsec_nanos() as f64 * 1e-9 / 60.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn julian_day_j2000() {
        let t = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
        assert!((julian_day(t) - 2_451_545.0).abs() < 1e-9);
    }

    #[test]
    fn gmst_advances_one_turn_per_sidereal_day() {
        let t0 = Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap();
        let t1 = t0 + chrono::Duration::nanoseconds((SIDEREAL_DAY_S * 1e9) as i64);
        let g0 = gmst_rad(t0);
        let g1 = gmst_rad(t1);
        let mut d = (g1 - g0).abs();
        if d > std::f64::consts::PI {
            d = 2.0 * std::f64::consts::PI - d;
        }
        assert!(d < 1e-6, "gmst drift over a sidereal day: {d}");
    }

    #[test]
    fn gmst_known_epoch() {
        // Standard worked example: 1992-08-20 12:14:00 UT1 -> 152.578788 deg.
        let t = Utc.with_ymd_and_hms(1992, 8, 20, 12, 14, 0).unwrap();
        let deg = gmst_rad(t) * 180.0 / std::f64::consts::PI;
        assert!((deg - 152.578788).abs() < 1e-4, "gmst {deg} deg");
    }

    #[test]
    fn gmst_at_j2000() {
        let t = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
        let deg = gmst_rad(t) * 180.0 / std::f64::consts::PI;
        assert!((deg - 280.46062).abs() < 1e-4, "gmst {deg} deg");
    }

    #[test]
    fn minutes_between_signs() {
        let t0 = Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap();
        let t1 = t0 + chrono::Duration::seconds(90);
        assert!((minutes_between(t0, t1) - 1.5).abs() < 1e-12);
        assert!((minutes_between(t1, t0) + 1.5).abs() < 1e-12);
    }
}

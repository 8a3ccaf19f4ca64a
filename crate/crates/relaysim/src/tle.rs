//! TLE ingestion: fixed-column parsing, modulo-10 checksums, field-range
//! validation, and rejection of deep-space records.

use chrono::{DateTime, Duration, TimeZone, Utc};
use thiserror::Error;

/// Mean motion below which the orbital period reaches 225 min and the
/// record falls outside the near-earth propagation regime.
pub const MIN_MEAN_MOTION_REV_DAY: f64 = 6.4;

/// One validated TLE record.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalElements {
    pub catalog_id: u32,
    pub name: String,
    pub epoch: DateTime<Utc>,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub eccentricity: f64,
    pub arg_perigee_deg: f64,
    pub mean_anomaly_deg: f64,
    pub mean_motion_rev_day: f64,
    /// Drag term in inverse earth radii.
    pub bstar: f64,
    pub line1_checksum_ok: bool,
    pub line2_checksum_ok: bool,
}

impl OrbitalElements {
    /// Orbital period implied by the mean motion, in minutes.
    pub fn period_min(&self) -> f64 {
        1440.0 / self.mean_motion_rev_day
    }

    /// Semi-major axis from Kepler's third law, in km (two-body value).
    pub fn semi_major_axis_km(&self) -> f64 {
        const MU: f64 = 398_600.441_8; // km^3/s^2
        let n_rad_s = self.mean_motion_rev_day * 2.0 * std::f64::consts::PI / 86_400.0;
        (MU / (n_rad_s * n_rad_s)).cbrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TleError {
    #[error("line {0}: checksum mismatch")]
    ChecksumMismatch(usize),
    #[error("line {line}: field `{field}` out of range")]
    FieldOutOfRange { field: &'static str, line: usize },
    #[error("catalog {0}: deep-space record rejected (period >= 225 min)")]
    DeepSpaceRejected(u32),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

impl TleError {
    /// Source line the problem was detected on, when one applies.
    pub fn line_no(&self) -> Option<usize> {
        match self {
            TleError::ChecksumMismatch(n) => Some(*n),
            TleError::FieldOutOfRange { line, .. } => Some(*line),
            TleError::MalformedLine { line, .. } => Some(*line),
            TleError::DeepSpaceRejected(_) => None,
        }
    }
}

/// Result of scanning one TLE source: accepted records plus every problem
/// found, so malformed records are reported rather than silently dropped.
#[derive(Debug, Default)]
pub struct ParseReport {
    pub records: Vec<OrbitalElements>,
    pub issues: Vec<TleError>,
}

/// Modulo-10 checksum over the first 68 columns: digits count their value,
/// minus signs count one, everything else counts zero.
pub fn line_checksum(line: &str) -> u32 {
    line.chars()
        .take(68)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum::<u32>()
        % 10
}

/// Whether a 69-column line carries its own checksum in column 69.
pub fn line_checksum_ok(line: &str) -> bool {
    let Some(c) = line.chars().nth(68) else {
        return false;
    };
    c.to_digit(10) == Some(line_checksum(line))
}

/// Parses a TLE stream in either the 2-line or name-prefixed 3-line format.
pub fn parse_tle(source: &str) -> ParseReport {
    let mut out = ParseReport::default();
    let lines: Vec<(usize, &str)> = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches(['\r', '\n'])))
        .collect();

    let mut pending_name: Option<&str> = None;
    let mut i = 0;
    while i < lines.len() {
        let (no, line) = lines[i];
        if line.trim().is_empty() {
            pending_name = None;
            i += 1;
            continue;
        }
        if !line.starts_with("1 ") {
            if line.starts_with("2 ") {
                out.issues.push(TleError::MalformedLine {
                    line: no,
                    reason: "line 2 without a preceding line 1".into(),
                });
                pending_name = None;
            } else {
                // Name line of a 3-line record.
                pending_name = Some(line.trim());
            }
            i += 1;
            continue;
        }
        let Some((no2, line2)) = lines.get(i + 1).copied() else {
            out.issues.push(TleError::MalformedLine {
                line: no,
                reason: "record truncated: missing line 2".into(),
            });
            break;
        };
        if !line2.starts_with("2 ") {
            out.issues.push(TleError::MalformedLine {
                line: no2,
                reason: "expected line 2 after line 1".into(),
            });
            pending_name = None;
            i += 1;
            continue;
        }
        match parse_record(line, no, line2, no2, pending_name.take()) {
            Ok(rec) => out.records.push(rec),
            Err(mut issues) => out.issues.append(&mut issues),
        }
        i += 2;
    }
    out
}

/// Reads a TLE file from disk.
pub fn parse_tle_file(path: &std::path::Path) -> std::io::Result<ParseReport> {
    Ok(parse_tle(&std::fs::read_to_string(path)?))
}

fn parse_record(
    line1: &str,
    no1: usize,
    line2: &str,
    no2: usize,
    name: Option<&str>,
) -> Result<OrbitalElements, Vec<TleError>> {
    let mut issues = Vec::new();

    for (line, no) in [(line1, no1), (line2, no2)] {
        if line.chars().count() < 69 {
            issues.push(TleError::MalformedLine {
                line: no,
                reason: format!("line too short ({} of 69 columns)", line.chars().count()),
            });
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }

    let line1_checksum_ok = line_checksum_ok(line1);
    let line2_checksum_ok = line_checksum_ok(line2);
    if !line1_checksum_ok {
        issues.push(TleError::ChecksumMismatch(no1));
    }
    if !line2_checksum_ok {
        issues.push(TleError::ChecksumMismatch(no2));
    }

    let catalog1 = field_u32(line1, 2, 7, "catalog_id", no1, &mut issues);
    let catalog2 = field_u32(line2, 2, 7, "catalog_id", no2, &mut issues);
    if let (Some(a), Some(b)) = (catalog1, catalog2) {
        if a != b {
            issues.push(TleError::MalformedLine {
                line: no2,
                reason: format!("catalog number mismatch ({a} vs {b})"),
            });
        }
    }

    let epoch = parse_epoch(line1, no1, &mut issues);
    let bstar = parse_bstar(line1, no1, &mut issues);

    let inclination = field_f64(line2, 8, 16, "inclination", no2, &mut issues);
    let raan = field_f64(line2, 17, 25, "raan", no2, &mut issues);
    let eccentricity = field_str(line2, 26, 33).and_then(|s| {
        format!("0.{}", s.trim()).parse::<f64>().ok().or_else(|| {
            issues.push(TleError::MalformedLine {
                line: no2,
                reason: "unreadable eccentricity".into(),
            });
            None
        })
    });
    let arg_perigee = field_f64(line2, 34, 42, "arg_perigee", no2, &mut issues);
    let mean_anomaly = field_f64(line2, 43, 51, "mean_anomaly", no2, &mut issues);
    let mean_motion = field_f64(line2, 52, 63, "mean_motion", no2, &mut issues);

    range_check(inclination, 0.0..=180.0, "inclination", no2, &mut issues);
    range_check(raan, 0.0..360.0, "raan", no2, &mut issues);
    range_check(eccentricity, 0.0..1.0, "eccentricity", no2, &mut issues);
    range_check(arg_perigee, 0.0..360.0, "arg_perigee", no2, &mut issues);
    range_check(mean_anomaly, 0.0..360.0, "mean_anomaly", no2, &mut issues);

    if let (Some(mm), Some(id)) = (mean_motion, catalog1.or(catalog2)) {
        if mm <= MIN_MEAN_MOTION_REV_DAY {
            issues.push(TleError::DeepSpaceRejected(id));
        }
    } else if mean_motion.is_none() {
        // already reported as malformed/out-of-range
    }

    if !issues.is_empty() {
        return Err(issues);
    }

    let catalog_id = catalog1.unwrap();
    Ok(OrbitalElements {
        catalog_id,
        name: name
            .filter(|n| !n.is_empty())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("SAT-{catalog_id}")),
        epoch: epoch.unwrap(),
        inclination_deg: inclination.unwrap(),
        raan_deg: raan.unwrap(),
        eccentricity: eccentricity.unwrap(),
        arg_perigee_deg: arg_perigee.unwrap(),
        mean_anomaly_deg: mean_anomaly.unwrap(),
        mean_motion_rev_day: mean_motion.unwrap(),
        bstar: bstar.unwrap_or(0.0),
        line1_checksum_ok,
        line2_checksum_ok,
    })
}

fn field_str(line: &str, start: usize, end: usize) -> Option<&str> {
    line.get(start..end)
}

fn field_f64(
    line: &str,
    start: usize,
    end: usize,
    field: &'static str,
    no: usize,
    issues: &mut Vec<TleError>,
) -> Option<f64> {
    match field_str(line, start, end).and_then(|s| s.trim().parse::<f64>().ok()) {
        Some(v) => Some(v),
        None => {
            issues.push(TleError::MalformedLine {
                line: no,
                reason: format!("unreadable field `{field}`"),
            });
            None
        }
    }
}

fn field_u32(
    line: &str,
    start: usize,
    end: usize,
    field: &'static str,
    no: usize,
    issues: &mut Vec<TleError>,
) -> Option<u32> {
    match field_str(line, start, end).and_then(|s| s.trim().parse::<u32>().ok()) {
        Some(v) => Some(v),
        None => {
            issues.push(TleError::MalformedLine {
                line: no,
                reason: format!("unreadable field `{field}`"),
            });
            None
        }
    }
}

fn range_check(
    value: Option<f64>,
    range: impl std::ops::RangeBounds<f64>,
    field: &'static str,
    line: usize,
    issues: &mut Vec<TleError>,
) {
    if let Some(v) = value {
        if !range.contains(&v) {
            issues.push(TleError::FieldOutOfRange { field, line });
        }
    }
}

fn parse_epoch(line1: &str, no: usize, issues: &mut Vec<TleError>) -> Option<DateTime<Utc>> {
    let yy = field_str(line1, 18, 20).and_then(|s| s.trim().parse::<u32>().ok());
    let day = field_str(line1, 20, 32).and_then(|s| s.trim().parse::<f64>().ok());
    let (Some(yy), Some(day)) = (yy, day) else {
        issues.push(TleError::MalformedLine {
            line: no,
            reason: "unreadable epoch".into(),
        });
        return None;
    };
    if !(1.0..367.0).contains(&day) {
        issues.push(TleError::FieldOutOfRange {
            field: "epoch_day",
            line: no,
        });
        return None;
    }
    let year = if yy >= 57 { 1900 + yy } else { 2000 + yy } as i32;
    let jan1 = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).single()?;
    Some(jan1 + Duration::nanoseconds(((day - 1.0) * 86_400.0 * 1e9).round() as i64))
}

fn parse_bstar(line1: &str, no: usize, issues: &mut Vec<TleError>) -> Option<f64> {
    // Column 54 sign, 55-59 mantissa digits, 60-61 signed exponent.
    let raw = field_str(line1, 53, 61)?;
    let bytes: Vec<char> = raw.chars().collect();
    if bytes.len() != 8 {
        return None;
    }
    let sign = match bytes[0] {
        '-' => -1.0,
        ' ' | '+' | '0' => 1.0,
        _ => {
            issues.push(TleError::MalformedLine {
                line: no,
                reason: "unreadable field `bstar`".into(),
            });
            return None;
        }
    };
    let mantissa: String = bytes[1..6].iter().collect();
    let exponent: String = bytes[6..8].iter().collect();
    let m = mantissa.trim().parse::<f64>().ok();
    let e = exponent
        .trim()
        .trim_start_matches('+')
        .parse::<i32>()
        .ok();
    match (m, e) {
        (Some(m), Some(e)) => Some(sign * m * 1e-5 * 10f64.powi(e)),
        _ => {
            issues.push(TleError::MalformedLine {
                line: no,
                reason: "unreadable field `bstar`".into(),
            });
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISS_1: &str = "1 25544U 98067A   20194.88612269 -.00002218  00000-0 -31515-4 0  9992";
    const ISS_2: &str = "2 25544  51.6461 221.2784 0001413  89.1723 280.4612 15.49507896236008";

    #[test]
    fn parses_two_line_record() {
        let report = parse_tle(&format!("{ISS_1}\n{ISS_2}\n"));
        assert!(report.issues.is_empty(), "{:?}", report.issues);
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert_eq!(r.catalog_id, 25544);
        assert_eq!(r.name, "SAT-25544");
        assert!((r.inclination_deg - 51.6461).abs() < 1e-9);
        assert!((r.eccentricity - 0.0001413).abs() < 1e-12);
        assert!((r.mean_motion_rev_day - 15.49507896).abs() < 1e-8);
        assert!((r.bstar - (-0.31515e-4)).abs() < 1e-12);
        assert!(r.line1_checksum_ok && r.line2_checksum_ok);
    }

    #[test]
    fn parses_named_record() {
        let report = parse_tle(&format!("ISS (ZARYA)\n{ISS_1}\n{ISS_2}\n"));
        assert_eq!(report.records[0].name, "ISS (ZARYA)");
    }

    #[test]
    fn epoch_conversion() {
        let report = parse_tle(&format!("{ISS_1}\n{ISS_2}\n"));
        let epoch = report.records[0].epoch;
        // 20194.88612269: day-of-year 194.886... of 2020 = July 12.
        assert_eq!(epoch.format("%Y-%m-%d").to_string(), "2020-07-12");
    }

    #[test]
    fn checksum_corruption_is_rejected() {
        let mut bad = ISS_1.to_string();
        // bump a digit in the epoch field by one
        let idx = 20;
        let c = bad.as_bytes()[idx];
        let new = if c == b'9' { b'0' } else { c + 1 };
        unsafe { bad.as_bytes_mut()[idx] = new };
        let report = parse_tle(&format!("{bad}\n{ISS_2}\n"));
        assert!(report.records.is_empty());
        assert!(report
            .issues
            .iter()
            .any(|e| matches!(e, TleError::ChecksumMismatch(1))));
    }

    #[test]
    fn empty_input_is_clean() {
        let report = parse_tle("");
        assert!(report.records.is_empty());
        assert!(report.issues.is_empty());
    }

    #[test]
    fn deep_space_record_rejected() {
        // Mean motion 2.0 rev/day puts the period far above 225 min.
        let l2 = "2 25544  51.6461 221.2784 0001413  89.1723 280.4612  2.00000000236008";
        let l2 = fix_checksum(l2);
        let report = parse_tle(&format!("{ISS_1}\n{l2}\n"));
        assert!(report.records.is_empty());
        assert!(report
            .issues
            .iter()
            .any(|e| matches!(e, TleError::DeepSpaceRejected(25544))));
    }

    #[test]
    fn out_of_range_inclination_reported() {
        let l2 = "2 25544 181.6461 221.2784 0001413  89.1723 280.4612 15.49507896236008";
        let l2 = fix_checksum(l2);
        let report = parse_tle(&format!("{ISS_1}\n{l2}\n"));
        assert!(report.records.is_empty());
        assert!(report.issues.iter().any(|e| matches!(
            e,
            TleError::FieldOutOfRange {
                field: "inclination",
                line: 2
            }
        )));
    }

    #[test]
    fn truncated_line_reported_with_line_number() {
        let report = parse_tle(&format!("{ISS_1}\n2 25544  51.6\n"));
        assert!(report.records.is_empty());
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].line_no(), Some(2));
    }

    fn fix_checksum(line: &str) -> String {
        let mut s: String = line.chars().take(68).collect();
        s.push(char::from_digit(line_checksum(line), 10).unwrap());
        s
    }
}

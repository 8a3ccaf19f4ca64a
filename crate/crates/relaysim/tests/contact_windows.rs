//! Ground-station contact behavior of the wait-and-transfer baseline,
//! checked against an independent 1-second elevation scan.

use chrono::{Duration, TimeZone, Utc};
use relaysim::earth::{elevation_deg, ground_site_state, site_up_teme};
use relaysim::sgp4::{Propagator, WGS72};
use relaysim::sim::{run_wait_and_transfer, Station, WaitAndTransferConfig};
use relaysim::tle::OrbitalElements;

fn epoch() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap()
}

fn satellite(catalog: u32, incl_deg: f64, alt_km: f64, raan_deg: f64) -> OrbitalElements {
    let a = 6378.137 + alt_km;
    let mm = 86_400.0 / (2.0 * std::f64::consts::PI * (a * a * a / 398_600.441_8).sqrt());
    OrbitalElements {
        catalog_id: catalog,
        name: format!("SAT-{catalog}"),
        epoch: epoch(),
        inclination_deg: incl_deg,
        raan_deg,
        eccentricity: 0.001,
        arg_perigee_deg: 90.0,
        mean_anomaly_deg: 10.0,
        mean_motion_rev_day: mm,
        bstar: 1e-4,
        line1_checksum_ok: true,
        line2_checksum_ok: true,
    }
}

/// Independent oracle: maximal above-threshold intervals at 1 s resolution.
fn scan_contacts(
    el: &OrbitalElements,
    lat: f64,
    lon: f64,
    min_elev_deg: f64,
    hours: u64,
) -> Vec<u64> {
    let prop = Propagator::new(el, WGS72).unwrap();
    let mut contacts = Vec::new();
    let mut current: Option<u64> = None;
    for s in 0..hours * 3600 {
        let at = epoch() + Duration::seconds(s as i64);
        let state = prop.state_at(at).unwrap();
        let site = ground_site_state(lat, lon, 0.0, at);
        let up = site_up_teme(lat, lon, at);
        let visible = elevation_deg(&site, &up, &state) >= min_elev_deg;
        match (visible, &mut current) {
            (true, Some(len)) => *len += 1,
            (true, slot @ None) => *slot = Some(1),
            (false, slot) => {
                if let Some(len) = slot.take() {
                    contacts.push(len);
                }
            }
        }
    }
    if let Some(len) = current {
        contacts.push(len);
    }
    contacts
}

#[test]
fn polar_station_sees_polar_orbit_every_few_revolutions() {
    let el = satellite(90001, 97.5, 475.0, 10.0);
    let contacts = scan_contacts(&el, 78.23, 15.39, 5.0, 24);
    let mins: Vec<f64> = contacts.iter().map(|s| *s as f64 / 60.0).collect();
    println!("polar contacts: {} durations_min={mins:?}", contacts.len());
    assert!(
        (10..=16).contains(&contacts.len()),
        "expected 10-16 contacts/day, got {}",
        contacts.len()
    );
    for m in &mins {
        assert!(
            (1.0..=13.0).contains(m),
            "contact duration {m} min out of expectation"
        );
    }
}

#[test]
fn mid_latitude_station_sees_a_few_windows_per_day() {
    let el = satellite(90002, 51.6, 475.0, 221.0);
    let contacts = scan_contacts(&el, 40.0, -77.0, 5.0, 24);
    let mins: Vec<f64> = contacts.iter().map(|s| *s as f64 / 60.0).collect();
    println!("mid-lat contacts: {} durations_min={mins:?}", contacts.len());
    assert!(
        (2..=8).contains(&contacts.len()),
        "expected 2-8 contacts/day, got {}",
        contacts.len()
    );
    for m in &mins {
        assert!(
            (2.0..=15.0).contains(m),
            "contact duration {m} min out of expectation"
        );
    }
}

#[test]
fn session_level_baseline_matches_the_one_second_scan() {
    let el = satellite(90003, 97.5, 475.0, 10.0);
    let oracle = scan_contacts(&el, 78.23, 15.39, 5.0, 24);
    let cfg = WaitAndTransferConfig {
        stations: vec![Station {
            name: "svalbard".into(),
            lat_deg: 78.23,
            lon_deg: 15.39,
        }],
        min_elevation_deg: 5.0,
        contact_rate_bps: 1.2e9,
    };
    let sessions = 24 * 240u64;
    let (ledgers, summary) =
        run_wait_and_transfer(&cfg, &[el], epoch(), sessions, 15.0, 1_000_000).unwrap();
    // Visibility is sampled at session starts, so session counts may differ
    // from the 1 s scan by up to one session per contact edge.
    let total_visible_s: u64 = oracle.iter().sum();
    let visible_sessions = sessions - ledgers[0].disconnected_sessions as u64;
    let expected_sessions = total_visible_s as f64 / 15.0;
    println!(
        "oracle visible {total_visible_s} s over {} contacts; baseline visible sessions {visible_sessions} (est {expected_sessions:.1})",
        oracle.len()
    );
    assert!(
        (visible_sessions as f64 - expected_sessions).abs() <= oracle.len() as f64 + 2.0,
        "session-quantized contact time diverges from the 1 s scan"
    );
    let run_count = (visible_sessions as f64 * 15.0 / summary.avg_connection_seconds).round();
    assert!(
        (run_count - oracle.len() as f64).abs() <= 2.0,
        "contact run count {run_count} vs oracle {}",
        oracle.len()
    );
}

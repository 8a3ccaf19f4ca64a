//! Regenerates the bundled fixture data: a synthetic Starlink-like relay
//! snapshot, Earth-observation fleets, PoP profile tables, weather traces,
//! and scenario files. Output is deterministic.
//!
//! Usage: `cargo run -p relaysim-cli --bin gen-fixtures [-- <out_dir>]`

use relaysim::tle::{line_checksum, parse_tle};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Fixture epoch: 2025-03-01 00:00:00 UTC = day 060 of 2025.
const EPOCH_FIELD: &str = "25060.00000000";

const MU_KM3_S2: f64 = 398_600.441_8;
const EARTH_RADIUS_KM: f64 = 6378.137;

fn mean_motion_rev_day(alt_km: f64) -> f64 {
    let a = EARTH_RADIUS_KM + alt_km;
    86_400.0 / (2.0 * std::f64::consts::PI * (a * a * a / MU_KM3_S2).sqrt())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn jitter(key: u64, scale: f64) -> f64 {
    // symmetric jitter in [-scale, scale]
    ((splitmix64(key) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) * scale
}

fn encode_bstar(b: f64) -> String {
    if b == 0.0 {
        return " 00000-0".to_string();
    }
    let sign = if b < 0.0 { '-' } else { ' ' };
    let mag = b.abs();
    let e = mag.log10().floor() as i32 + 1;
    let mut digits = (mag / 10f64.powi(e) * 1e5).round() as u64;
    let mut e = e;
    if digits >= 100_000 {
        digits /= 10;
        e += 1;
    }
    let esign = if e < 0 { '-' } else { '+' };
    format!("{sign}{digits:05}{esign}{}", e.abs())
}

struct TleSpec {
    catalog: u32,
    intl: String,
    incl_deg: f64,
    raan_deg: f64,
    ecc: f64,
    argp_deg: f64,
    ma_deg: f64,
    mm_rev_day: f64,
    bstar: f64,
}

fn encode_tle(name: &str, s: &TleSpec) -> String {
    let mut l1 = String::new();
    write!(
        l1,
        "1 {:05}U {:<8} {}  .00000000  00000-0 {} 0 {:4}",
        s.catalog,
        s.intl,
        EPOCH_FIELD,
        encode_bstar(s.bstar),
        999
    )
    .unwrap();
    assert_eq!(l1.len(), 68, "line1 layout: {l1:?}");
    write!(l1, "{}", line_checksum(&l1)).unwrap();

    let mut l2 = String::new();
    write!(
        l2,
        "2 {:05} {:8.4} {:8.4} {:07} {:8.4} {:8.4} {:11.8}{:5}",
        s.catalog,
        s.incl_deg,
        s.raan_deg,
        (s.ecc * 1e7).round() as u64,
        s.argp_deg,
        s.ma_deg,
        s.mm_rev_day,
        9991
    )
    .unwrap();
    assert_eq!(l2.len(), 68, "line2 layout: {l2:?}");
    write!(l2, "{}", line_checksum(&l2)).unwrap();

    format!("{name}\n{l1}\n{l2}\n")
}

struct Shell {
    tag: &'static str,
    incl_deg: f64,
    alt_km: f64,
    planes: u32,
    per_plane: u32,
    raan0_deg: f64,
    catalog_base: u32,
}

const SHELLS: &[Shell] = &[
    Shell { tag: "A", incl_deg: 53.0, alt_km: 550.0, planes: 72, per_plane: 22, raan0_deg: 0.0, catalog_base: 10000 },
    Shell { tag: "B", incl_deg: 53.2, alt_km: 540.0, planes: 72, per_plane: 22, raan0_deg: 2.5, catalog_base: 12000 },
    Shell { tag: "C", incl_deg: 43.0, alt_km: 530.0, planes: 56, per_plane: 44, raan0_deg: 1.2, catalog_base: 14000 },
    Shell { tag: "D", incl_deg: 70.0, alt_km: 570.0, planes: 36, per_plane: 20, raan0_deg: 0.7, catalog_base: 17000 },
    Shell { tag: "E", incl_deg: 97.6, alt_km: 560.0, planes: 8, per_plane: 50, raan0_deg: 10.0, catalog_base: 18000 },
    Shell { tag: "F", incl_deg: 53.0, alt_km: 560.0, planes: 12, per_plane: 21, raan0_deg: 1.9, catalog_base: 19000 },
];

/// RAAN of polar-shell plane `p`, reused to align EO fleets.
fn polar_plane_raan(p: u32) -> f64 {
    10.0 + p as f64 * 45.0
}

fn relay_shell(shell: &Shell, out: &mut String, ids: &mut Vec<u32>) {
    let mm = mean_motion_rev_day(shell.alt_km);
    let raan_step = 360.0 / shell.planes as f64;
    let ma_step = 360.0 / shell.per_plane as f64;
    let mut catalog = shell.catalog_base;
    for p in 0..shell.planes {
        // Walker-style inter-plane phase offset.
        let phase = p as f64 * ma_step * 13.0 / shell.planes as f64;
        for k in 0..shell.per_plane {
            let key = (catalog as u64) << 8 | p as u64;
            let spec = TleSpec {
                catalog,
                intl: format!("25{:03}{}", (catalog / 37) % 999, shell.tag),
                incl_deg: shell.incl_deg + jitter(key ^ 1, 0.04),
                raan_deg: (shell.raan0_deg + p as f64 * raan_step + jitter(key ^ 2, 0.05))
                    .rem_euclid(360.0),
                ecc: 0.0001 + (splitmix64(key ^ 3) % 900) as f64 * 1e-6,
                argp_deg: 90.0 + jitter(key ^ 4, 20.0),
                ma_deg: (k as f64 * ma_step + phase + jitter(key ^ 5, 0.2)).rem_euclid(360.0),
                mm_rev_day: mm + jitter(key ^ 6, 0.0004),
                bstar: 1.0e-4 + jitter(key ^ 7, 5.0e-5),
            };
            out.push_str(&encode_tle(&format!("RELAY-{}-{:05}", shell.tag, catalog), &spec));
            ids.push(catalog);
            catalog += 1;
        }
    }
}

fn eo_spec(catalog: u32, raan: f64, ma: f64, incl: f64, alt: f64) -> TleSpec {
    let key = catalog as u64 ^ 0xe0e0;
    TleSpec {
        catalog,
        intl: format!("24{:03}Q", catalog % 999),
        incl_deg: incl,
        raan_deg: raan.rem_euclid(360.0),
        ecc: 0.0008 + (splitmix64(key) % 700) as f64 * 1e-6,
        argp_deg: 88.0 + jitter(key ^ 1, 15.0),
        ma_deg: ma.rem_euclid(360.0),
        mm_rev_day: mean_motion_rev_day(alt) + jitter(key ^ 2, 0.0006),
        bstar: 2.0e-4 + jitter(key ^ 3, 8.0e-5),
    }
}

fn write_file(path: &Path, content: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"));

    // --- full relay snapshot ------------------------------------------------
    let mut full = String::new();
    let mut ids = Vec::new();
    for shell in SHELLS {
        relay_shell(shell, &mut full, &mut ids);
    }
    let parsed = parse_tle(&full);
    assert!(parsed.issues.is_empty(), "relay fixture must parse clean");
    println!("relays_full: {} records", parsed.records.len());
    write_file(&out_dir.join("relays_full.tle"), &full);

    // --- 1k subset balanced for desk-scale scenarios ------------------------
    // Full polar shell (outside-band coverage), thinned mid-inclination
    // shells (inside-band coverage).
    let mut subset = String::new();
    let mut kept = 0u32;
    {
        let records: Vec<&str> = full.split_inclusive('\n').collect();
        // records come in name/l1/l2 triples
        let mut take = |pred: &dyn Fn(u32, usize) -> bool| {
            let mut idx = 0usize;
            for chunk in records.chunks(3) {
                if chunk.len() < 3 {
                    continue;
                }
                let catalog: u32 = chunk[1][2..7].trim().parse().unwrap();
                let shell_idx = SHELLS
                    .iter()
                    .position(|s| {
                        catalog >= s.catalog_base
                            && catalog < s.catalog_base + s.planes * s.per_plane
                    })
                    .unwrap();
                if pred(catalog, shell_idx) {
                    subset.push_str(chunk[0]);
                    subset.push_str(chunk[1]);
                    subset.push_str(chunk[2]);
                    kept += 1;
                }
                idx += 1;
            }
            idx
        };
        take(&|catalog, shell| match SHELLS[shell].tag {
            "E" => true,                    // all 400 polar
            "D" => catalog % 4 == 0,        // 180 of 720
            "A" => catalog % 7 == 0,        // ~226 of 1584
            "C" => catalog % 19 == 0,       // ~130 of 2464
            "B" => catalog % 36 == 0,       // ~44
            _ => catalog % 13 == 0,         // ~19 of F
        });
    }
    println!("relays_1k: {kept} records");
    write_file(&out_dir.join("relays_1k.tle"), &subset);

    // --- EO fleets -----------------------------------------------------------
    // Planet-like sun-synchronous fleet: planes aligned with the polar relay
    // shell so aligned-orbit relays exist outside the dense band.
    let mut planet = String::new();
    for k in 0..113u32 {
        let catalog = 60000 + k;
        let plane = k % 8;
        let raan = polar_plane_raan(plane) + jitter(catalog as u64, 6.0);
        let ma = (k as f64 * 360.0 / 113.0 * 7.0) % 360.0;
        planet.push_str(&encode_tle(
            &format!("EO-{catalog:05}"),
            &eo_spec(catalog, raan, ma, 97.45, 475.0),
        ));
    }
    write_file(&out_dir.join("eo_planet.tle"), &planet);

    // 20-satellite desk fleet: stride over the full fleet pattern.
    let mut small = String::new();
    for j in 0..20u32 {
        let k = j * 5 + 2;
        let catalog = 61000 + j;
        let plane = k % 8;
        let raan = polar_plane_raan(plane) + jitter(catalog as u64 ^ 7, 5.0);
        let ma = (k as f64 * 360.0 / 113.0 * 7.0 + 9.0) % 360.0;
        small.push_str(&encode_tle(
            &format!("EO-{catalog:05}"),
            &eo_spec(catalog, raan, ma, 97.45, 475.0),
        ));
    }
    write_file(&out_dir.join("eo_20.tle"), &small);

    // Single mid-inclination EO satellite (inside-band analysis).
    write_file(
        &out_dir.join("eo_mid_53.tle"),
        &encode_tle("EO-MID", &eo_spec(70001, 33.3, 7.0, 53.0, 475.0)),
    );
    // Single polar-crossing EO satellite sharing a polar-shell plane.
    write_file(
        &out_dir.join("eo_polar.tle"),
        &encode_tle("EO-POLAR", &eo_spec(70002, polar_plane_raan(0), 41.0, 97.5, 475.0)),
    );

    // --- PoP profiles ---------------------------------------------------------
    let pops = r#"# Point-of-presence loss/delay profiles by weather class.
version = 1

[[pop]]
pop_id = "seattle"
lat = 47.61
lon = -122.33
loss_rate = { clear = 0.0042, cloud = 0.0049, rain = 0.00573, snow = 0.0063 }
delay_ms = { clear = 42.0, cloud = 44.0, rain = 48.0, snow = 53.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "new_york"
lat = 40.71
lon = -74.01
loss_rate = { clear = 0.0031, cloud = 0.0036, rain = 0.0041, snow = 0.0047 }
delay_ms = { clear = 45.0, cloud = 47.0, rain = 51.0, snow = 56.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "chicago"
lat = 41.88
lon = -87.63
loss_rate = { clear = 0.0048, cloud = 0.0056, rain = 0.0066, snow = 0.0079 }
delay_ms = { clear = 55.0, cloud = 58.0, rain = 64.0, snow = 72.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "denver"
lat = 39.74
lon = -104.99
loss_rate = { clear = 0.0044, cloud = 0.0051, rain = 0.0059, snow = 0.0068 }
delay_ms = { clear = 50.0, cloud = 53.0, rain = 58.0, snow = 65.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "dallas"
lat = 32.78
lon = -96.80
loss_rate = { clear = 0.0052, cloud = 0.0060, rain = 0.0070, snow = 0.0080 }
delay_ms = { clear = 60.0, cloud = 63.0, rain = 69.0, snow = 76.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "frankfurt"
lat = 50.11
lon = 8.68
loss_rate = { clear = 0.0027, cloud = 0.0031, rain = 0.0036, snow = 0.0041 }
delay_ms = { clear = 38.0, cloud = 40.0, rain = 44.0, snow = 49.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }

[[pop]]
pop_id = "lagos"
lat = 6.52
lon = 3.38
loss_rate = { clear = 0.0118, cloud = 0.0131, rain = 0.0149, snow = 0.0165 }
delay_ms = { clear = 72.0, cloud = 76.0, rain = 83.0, snow = 90.0 }
tier_rate_bps = { standard = 7.5e6, roam = 10e6, priority = 16.5e6, business = 30e6 }
"#;
    write_file(&out_dir.join("pops.toml"), pops);

    // --- weather traces --------------------------------------------------------
    let mut weather = String::from("location_id,epoch_utc,weather_class\n");
    let classes = ["clear", "cloud", "rain", "snow"];
    let pops_ids = [
        "seattle", "new_york", "chicago", "denver", "dallas", "frankfurt", "lagos",
    ];
    for (pi, pop) in pops_ids.iter().enumerate() {
        for h in (0..24).step_by(3) {
            let k = splitmix64((pi as u64) << 8 | h as u64 ^ 0x77);
            // lagos never sees snow; make chicago wintry
            let class = match (pop, k % 10) {
                (&"lagos", r) if r >= 7 => "rain",
                (&"lagos", _) => "clear",
                (&"chicago", r) if r >= 8 => "snow",
                (&"chicago", r) if r >= 5 => "rain",
                (_, r) => classes[(r % 3) as usize],
            };
            weather.push_str(&format!("{pop},2025-03-01T{h:02}:00:00Z,{class}\n"));
        }
    }
    write_file(&out_dir.join("weather_mixed.csv"), &weather);
    write_file(
        &out_dir.join("weather_clear.csv"),
        "location_id,epoch_utc,weather_class\n",
    );

    // --- scenarios ---------------------------------------------------------------
    let base = r#"duration_hours = 6.0
generation_bits_per_day = 4.0e12
eo_tles = "../eo_20.tle"
relay_tles = "../relays_1k.tle"
pop_profiles = "../pops.toml"
weather_trace = "../weather_mixed.csv"
eo_multiplier = 3
service_tier = "business"
relay_capacity = 32
penalty_fraction = 0.2
"#;
    write_file(
        &out_dir.join("scenarios/ssu.toml"),
        &format!("{base}selection_mode = \"dual\"\n"),
    );
    write_file(
        &out_dir.join("scenarios/random.toml"),
        &format!("{base}selection_mode = \"random_among_selected\"\n"),
    );
    write_file(
        &out_dir.join("scenarios/ssu75.toml"),
        &format!("{base}selection_mode = \"dual\"\navailability_fraction = 0.75\n"),
    );
    write_file(
        &out_dir.join("scenarios/polar_outage.toml"),
        &format!("{base}selection_mode = \"dual\"\npolar_outage = true\n"),
    );
    write_file(
        &out_dir.join("scenarios/wait_transfer.toml"),
        &format!(
            "{base}selection_mode = \"dual\"\n\n[wait_and_transfer]\nmin_elevation_deg = 25.0\ncontact_rate_bps = 75e6\nstations = [\n  {{ name = \"svalbard\", lat_deg = 78.23, lon_deg = 15.39 }},\n  {{ name = \"fairbanks\", lat_deg = 64.86, lon_deg = -147.85 }},\n  {{ name = \"inuvik\", lat_deg = 68.32, lon_deg = -133.55 }},\n  {{ name = \"punta_arenas\", lat_deg = -53.0, lon_deg = -70.85 }},\n  {{ name = \"awarua\", lat_deg = -46.53, lon_deg = 168.38 }},\n]\n"
        ),
    );
    // Flagship full-scale scenario (not exercised by the test suite).
    write_file(
        &out_dir.join("scenarios/full_day.toml"),
        r#"duration_hours = 24.0
generation_bits_per_day = 4.0e12
eo_tles = "../eo_planet.tle"
relay_tles = "../relays_full.tle"
pop_profiles = "../pops.toml"
weather_trace = "../weather_mixed.csv"
eo_multiplier = 3
selection_mode = "dual"
service_tier = "business"
relay_capacity = 32
penalty_fraction = 0.2
"#,
    );

    println!("done");
}

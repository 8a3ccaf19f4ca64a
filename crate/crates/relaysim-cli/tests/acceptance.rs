//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test -p relaysim-cli --test acceptance -- --nocapture`.

use relaysim::quality::{cfo_snr, fspl_db, pop_route_quality, IslModel, PopProfile, QualityError,
    RadioConfig, ServiceTier, TierRates, WeatherClass, WeatherTable};
use relaysim::report::quantile;
use relaysim::sched::{build_session, solve_session, SessionProblem};
use relaysim::selection::{selection_trace_default, SelectionConfig, TraceStrategy};
use relaysim::sgp4::{Propagator, WGS72};
use relaysim::sim::{load_scenario, run_scenario};
use relaysim::tle::{line_checksum, parse_tle, parse_tle_file};
use std::path::PathBuf;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// -------------------------------------------------------------------------
// 1. Path-loss model exactness
// -------------------------------------------------------------------------
#[test]
fn criterion_1_fspl_exactness() {
    let v: f64 = fspl_db(550.0, 12.0e9).unwrap();
    assert!(
        (v - 168.83).abs() <= 0.01,
        "FSPL(550 km, 12 GHz) = {v}, expected 168.83 +/- 0.01"
    );
    for d in [1.0, 47.0, 550.0, 1936.0] {
        let delta: f64 = fspl_db(2.0 * d, 12.0e9).unwrap() - fspl_db(d, 12.0e9).unwrap();
        assert!(
            (delta - 20.0 * 2.0f64.log10()).abs() < 1e-9,
            "doubling delta {delta} at d={d}"
        );
    }
    println!("ACCEPTANCE 1 PASS: FSPL(550 km, 12 GHz) = {v:.4} dB; doubling adds 6.0206 dB to 1e-9");
}

// -------------------------------------------------------------------------
// 2. CFO-SNR model suite
// -------------------------------------------------------------------------
#[test]
fn criterion_2_cfo_snr_suite() {
    for ec in [1.0, 10.0, 100.0] {
        assert_eq!(cfo_snr(ec, 0.0).unwrap(), ec, "identity at zero offset");
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let v = cfo_snr(ec, 0.05 * k as f64).unwrap();
            assert!(v < prev, "not strictly decreasing at Ec/N0={ec}, k={k}");
            prev = v;
        }
    }
    for eps in [0.5, -0.5, 0.7, 3.0] {
        assert!(
            matches!(cfo_snr(100.0, eps), Err(QualityError::EpsilonOutOfRange(_))),
            "|eps|={eps} must be rejected"
        );
    }
    println!("ACCEPTANCE 2 PASS: identity at eps=0, strict decrease over eps=0.05..0.45, rejection at |eps|>=0.5");
}

// -------------------------------------------------------------------------
// 3. Matching optimality against brute force
// -------------------------------------------------------------------------
fn brute_force_objective(p: &SessionProblem) -> f64 {
    fn weight(p: &SessionProblem, relay: usize, user: usize) -> f64 {
        let v = p.value[relay * p.m_users + user];
        let is_new = match &p.previous {
            Some(prev) => prev[user] != Some(relay),
            None => true,
        };
        if is_new {
            v * (1.0 - p.penalty_fraction)
        } else {
            v
        }
    }
    fn rec(p: &SessionProblem, user: usize, loads: &mut Vec<u32>) -> f64 {
        if user == p.m_users {
            return 0.0;
        }
        let mut best = rec(p, user + 1, loads);
        for r in 0..p.n_relays {
            if p.feasible[r * p.m_users + user] && loads[r] < p.capacity[r] {
                let w = weight(p, r, user);
                if w <= 0.0 {
                    continue;
                }
                loads[r] += 1;
                best = best.max(w + rec(p, user + 1, loads));
                loads[r] -= 1;
            }
        }
        best
    }
    rec(p, 0, &mut vec![0; p.n_relays])
}

#[test]
fn criterion_3_matching_optimality() {
    let mut state = 0x0123_4567_89ab_cdefu64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut checked = 0u32;
    while checked < 1000 {
        let n = (next() % 4) as usize + 1;
        let m = ((next() % (12 / n) as u64) as usize + 1).min(12 / n).max(1);
        let caps: Vec<u32> = (0..n).map(|_| (next() % 3) as u32).collect();
        let mut value = vec![0.0; n * m];
        let mut feas = vec![false; n * m];
        for k in 0..n * m {
            if next() % 4 != 0 {
                feas[k] = true;
                value[k] = (next() % 10_001) as f64 / 100.0; // [0, 100]
            }
        }
        let prev: Option<Vec<Option<usize>>> = (next() % 2 == 0).then(|| {
            (0..m)
                .map(|_| {
                    let r = next() % (n as u64 + 1);
                    (r < n as u64).then_some(r as usize)
                })
                .collect()
        });
        let b = [0.0, 0.2, 0.5][(next() % 3) as usize];
        let problem = build_session(
            checked as u64,
            &vec![1e12; m],
            &value,
            &feas,
            &caps,
            prev.as_deref(),
            b,
        )
        .unwrap();
        let plan = solve_session(&problem);
        for (r, load) in plan.per_relay_load.iter().enumerate() {
            assert!(*load <= caps[r], "capacity violated");
        }
        let want = brute_force_objective(&problem);
        assert!(
            (plan.objective - want).abs() < 1e-9,
            "instance {checked}: solver {} vs brute force {want}",
            plan.objective
        );
        checked += 1;
    }
    println!("ACCEPTANCE 3 PASS: {checked} random instances (N*M<=12, caps<=2, b in {{0,0.2,0.5}}) match brute force");
}

// -------------------------------------------------------------------------
// 4. Bit conservation in every scenario
// -------------------------------------------------------------------------
#[test]
fn criterion_4_conservation() {
    // Conservation is asserted inside the session loop at every boundary
    // (integer bits); this runs every bundled scenario through it and
    // re-checks the final ledgers.
    let mut scenarios = 0;
    for name in ["ssu", "random", "ssu75", "polar_outage", "wait_transfer"] {
        let cfg = load_scenario(&fixtures().join(format!("scenarios/{name}.toml"))).unwrap();
        let report = run_scenario(&cfg, 11).unwrap();
        for l in report
            .ledgers
            .iter()
            .chain(report.baseline_ledgers.iter().flatten())
        {
            assert_eq!(
                l.generated_bits,
                l.delivered_bits + l.backlog_bits,
                "conservation violated for user {} in {name}",
                l.user_id
            );
        }
        scenarios += 1;
    }
    println!("ACCEPTANCE 4 PASS: generated = delivered + backlog exactly, per user, every session boundary, {scenarios} scenarios");
}

// -------------------------------------------------------------------------
// 5. Propagator fidelity against the frozen reference ephemeris
// -------------------------------------------------------------------------
#[test]
fn criterion_5_propagator_fidelity() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../relaysim/tests/data/sgp4_reference.json");
    let text = std::fs::read_to_string(&path).expect("frozen reference ephemeris");
    #[derive(serde::Deserialize)]
    struct Case {
        line1: String,
        line2: String,
        t_min: f64,
        position_km: [f64; 3],
    }
    let cases: Vec<Case> = serde_json::from_str(&text).unwrap();
    assert!(cases.len() >= 16, "reference set too small");
    let mut worst = 0.0f64;
    for case in &cases {
        let el = parse_tle(&format!("{}\n{}\n", case.line1, case.line2))
            .records
            .pop()
            .expect("reference TLE parses");
        let prop = Propagator::new(&el, WGS72).unwrap();
        let (p, _) = prop.state_at_minutes(case.t_min).unwrap();
        let d = ((p.x - case.position_km[0]).powi(2)
            + (p.y - case.position_km[1]).powi(2)
            + (p.z - case.position_km[2]).powi(2))
        .sqrt();
        worst = worst.max(d);
        assert!(
            d <= 1e-6,
            "position error {d} km at t={} min for catalog {}",
            case.t_min,
            el.catalog_id
        );
    }
    println!(
        "ACCEPTANCE 5 PASS: {} reference states matched within 1e-6 km (worst {worst:.3e} km)",
        cases.len()
    );
}

// -------------------------------------------------------------------------
// 6. Orbital trend reproduction on the bundled snapshot
// -------------------------------------------------------------------------
#[test]
fn criterion_6_selection_trends() {
    let relays = parse_tle_file(&fixtures().join("relays_full.tle"))
        .unwrap()
        .records;
    assert!(relays.len() > 6900, "full snapshot expected");
    let radio = RadioConfig::default();
    let cfg = SelectionConfig::for_radio(&radio);

    let mid = parse_tle_file(&fixtures().join("eo_mid_53.tle"))
        .unwrap()
        .records
        .remove(0);
    let nearest = selection_trace_default(
        &mid, &relays, mid.epoch, 7200.0, 15.0, TraceStrategy::Nearest, &cfg, &radio,
    )
    .unwrap();
    let dual = selection_trace_default(
        &mid, &relays, mid.epoch, 7200.0, 15.0, TraceStrategy::Dual, &cfg, &radio,
    )
    .unwrap();

    // (a) nearest-selection exposes high relative speeds
    let nearest_speeds = nearest.chosen_speeds();
    let max_speed = nearest_speeds.iter().cloned().fold(f64::MIN, f64::max);
    assert!(
        max_speed >= 13.0,
        "nearest max relative speed {max_speed} below 13 km/s"
    );

    // (b) dual criterion concentrates speeds near the ground-link velocity
    let dev = |v: &f64| (v - 7.4).abs();
    let nearest_dev: Vec<f64> = nearest_speeds.iter().map(dev).collect();
    let dual_dev: Vec<f64> = dual.chosen_speeds().iter().map(dev).collect();
    let p95_nearest = quantile(&nearest_dev, 0.95).unwrap();
    let p95_dual = quantile(&dual_dev, 0.95).unwrap();
    assert!(
        p95_dual < p95_nearest,
        "dual p95 |v-7.4| = {p95_dual} not below nearest {p95_nearest}"
    );

    // (c) outside the dense band the dual criterion finds aligned planes
    let polar = parse_tle_file(&fixtures().join("eo_polar.tle"))
        .unwrap()
        .records
        .remove(0);
    let polar_trace = selection_trace_default(
        &polar, &relays, polar.epoch, 7200.0, 15.0, TraceStrategy::Dual, &cfg, &radio,
    )
    .unwrap();
    let outside_speeds: Vec<f64> = polar_trace
        .steps
        .iter()
        .filter(|s| s.user_subpoint_lat_deg.abs() > 53.0)
        .filter_map(|s| s.geometry.map(|g| g.relative_speed_kms))
        .collect();
    assert!(
        outside_speeds.len() > 50,
        "polar fixture yields too few outside-band connected steps"
    );
    let outside_median = quantile(&outside_speeds, 0.5).unwrap();
    assert!(
        outside_median <= 3.0,
        "outside-band median relative speed {outside_median} above 3 km/s"
    );

    println!(
        "ACCEPTANCE 6 PASS: nearest max {max_speed:.2} km/s (>=13); dual p95 |v-7.4| {p95_dual:.2} < nearest {p95_nearest:.2}; outside-band median {outside_median:.2} km/s (<=3)"
    );
}

// -------------------------------------------------------------------------
// 7. End-to-end backlog ordering at desk scale
// -------------------------------------------------------------------------
#[test]
fn criterion_7_system_ordering() {
    let seed = 7;
    let run = |name: &str| {
        let cfg = load_scenario(&fixtures().join(format!("scenarios/{name}.toml"))).unwrap();
        run_scenario(&cfg, seed).unwrap()
    };
    let ssu = run("ssu");
    let random = run("random");
    let ssu75 = run("ssu75");
    let polar = run("polar_outage");
    let wt_report = run("wait_transfer");

    let ssu_med = ssu.summary.median_backlog_bits;
    let random_med = random.summary.median_backlog_bits;
    let ssu75_med = ssu75.summary.median_backlog_bits;
    let polar_med = polar.summary.median_backlog_bits;
    let wt_med = wt_report
        .baseline_summary
        .as_ref()
        .expect("wait_transfer scenario carries the baseline")
        .median_backlog_bits;

    assert!(
        ssu_med * 1.05 <= random_med,
        "random median {random_med} not at least 5% above scheduler median {ssu_med}"
    );
    assert!(
        random_med < wt_med,
        "random median {random_med} not below wait-and-transfer {wt_med}"
    );
    assert!(
        ssu_med < ssu75_med && ssu75_med < wt_med,
        "75%-availability median {ssu75_med} not between {ssu_med} and {wt_med}"
    );
    assert!(
        ssu_med < polar_med && polar_med < wt_med,
        "polar-outage median {polar_med} not between {ssu_med} and {wt_med}"
    );

    let gb = |b: f64| b / 8e9;
    println!(
        "ACCEPTANCE 7 PASS: median backlog GB: scheduler {:.1} < random {:.1} (margin {:.0}%) ; 75% {:.1} and polar {:.1} in between ; wait-and-transfer {:.1} worst",
        gb(ssu_med),
        gb(random_med),
        (random_med / ssu_med - 1.0) * 100.0,
        gb(ssu75_med),
        gb(polar_med),
        gb(wt_med)
    );
}

// -------------------------------------------------------------------------
// 8. ISL distance-proportional loss fixture
// -------------------------------------------------------------------------
#[test]
fn criterion_8_isl_model() {
    let profile = PopProfile {
        pop_id: "frankfurt".into(),
        lat_deg: 50.11,
        lon_deg: 8.68,
        base_loss_rate: WeatherTable {
            clear: 0.0027,
            cloud: 0.0031,
            rain: 0.0036,
            snow: 0.0041,
        },
        base_delay_ms: WeatherTable {
            clear: 38.0,
            cloud: 40.0,
            rain: 44.0,
            snow: 49.0,
        },
        tier_rates: TierRates::default(),
    };
    let radio = RadioConfig::default();
    let isl = IslModel::default();
    let q2100 = pop_route_quality(
        &profile,
        WeatherClass::Clear,
        ServiceTier::Business,
        2100.0,
        &isl,
        &radio,
    )
    .unwrap();
    assert!(
        (q2100.loss_rate - 0.0062).abs() <= 1e-9,
        "loss at 2100 km: {}",
        q2100.loss_rate
    );
    let q1050 = pop_route_quality(
        &profile,
        WeatherClass::Clear,
        ServiceTier::Business,
        1050.0,
        &isl,
        &radio,
    )
    .unwrap();
    assert!(
        (q1050.loss_rate - 0.00445).abs() <= 1e-9,
        "loss at 1050 km: {}",
        q1050.loss_rate
    );
    println!(
        "ACCEPTANCE 8 PASS: 0.27% base + 2100 km ISL = {:.4}% ; 1050 km = {:.4}%",
        q2100.loss_rate * 100.0,
        q1050.loss_rate * 100.0
    );
}

// -------------------------------------------------------------------------
// 9. Byte-identical simulation bundles
// -------------------------------------------------------------------------
#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_relaysim");
    let scenario = fixtures().join("scenarios/ssu.toml");
    let base = std::env::temp_dir().join(format!("relaysim-acc9-{}", std::process::id()));
    let out_a = base.join("a");
    let out_b = base.join("b");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(bin)
            .args([
                "simulate",
                "--scenario",
                scenario.to_str().unwrap(),
                "--seed",
                "1234",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("simulate runs");
        assert!(status.success(), "simulate exit: {status:?}");
    }
    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"report.txt".to_string()));
    let mut bytes = 0usize;
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "bundle file {name} differs between identical runs");
        bytes += a.len();
    }
    std::fs::remove_dir_all(&base).ok();
    println!(
        "ACCEPTANCE 9 PASS: two identical runs produced byte-identical bundles ({} files, {bytes} bytes)",
        names.len()
    );
}

// -------------------------------------------------------------------------
// 10. Parser robustness over the bundled corpus
// -------------------------------------------------------------------------
#[test]
fn criterion_10_parser_robustness() {
    let text = std::fs::read_to_string(fixtures().join("relays_full.tle")).unwrap();
    let clean = parse_tle(&text);
    assert!(clean.issues.is_empty());

    // Field-range invariants on every accepted record.
    for r in &clean.records {
        assert!((0.0..=180.0).contains(&r.inclination_deg));
        assert!((0.0..360.0).contains(&r.raan_deg));
        assert!((0.0..1.0).contains(&r.eccentricity));
        assert!((0.0..360.0).contains(&r.arg_perigee_deg));
        assert!((0.0..360.0).contains(&r.mean_anomaly_deg));
        assert!(r.mean_motion_rev_day > 6.4);
        assert!(r.line1_checksum_ok && r.line2_checksum_ok);
    }

    // Every single-digit corruption of every line must be rejected.
    let lines: Vec<&str> = text.lines().filter(|l| l.len() == 69).collect();
    let mut mutations = 0u64;
    for pair in lines.chunks(2) {
        let [l1, l2] = pair else { continue };
        for (which, line) in [(0, l1), (1, l2)] {
            let bytes = line.as_bytes();
            for (idx, c) in bytes.iter().enumerate() {
                if !c.is_ascii_digit() {
                    continue;
                }
                let mut corrupted = bytes.to_vec();
                corrupted[idx] = b'0' + (c - b'0' + 1) % 10;
                let corrupted = String::from_utf8(corrupted).unwrap();
                let record = if which == 0 {
                    format!("{corrupted}\n{l2}\n")
                } else {
                    format!("{l1}\n{corrupted}\n")
                };
                let report = parse_tle(&record);
                assert!(
                    report.records.is_empty(),
                    "corruption accepted at line {which} column {idx}: {corrupted}"
                );
                mutations += 1;
            }
        }
    }
    assert_eq!(
        line_checksum("1 25544U 98067A   20194.88612269 -.00002218  00000-0 -31515-4 0  999"),
        2
    );
    println!(
        "ACCEPTANCE 10 PASS: {} records pass field invariants; {mutations} single-digit corruptions all rejected",
        clean.records.len()
    );
}

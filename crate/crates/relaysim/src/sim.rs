//! End-to-end scenario simulation: per-session propagation, candidate
//! search, selection, capacity-constrained scheduling, backlog accounting,
//! scenario perturbations, and the wait-and-transfer baseline.

use crate::earth::{elevation_deg, ground_site_state, site_up_teme, subpoint, Geodetic};
use crate::geometry::{candidates_within, classify_ssdb, GeometrySample, SsdbRegion};
use crate::quality::{
    load_pop_profiles_file, route_for_candidates, IslModel, QualityError, RadioConfig,
    ServiceTier, WeatherSource,
};
use crate::report::{cdf_samples, quantile_sorted};
use crate::sched::{build_session, solve_session, PenaltyMode, SchedError};
use crate::selection::{dual_survivors, SelectionConfig};
use crate::sgp4::{Propagator, StateVector, WGS72};
use crate::tle::{parse_tle_file, OrbitalElements};
use chrono::{DateTime, Duration, Utc};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("ingestion: {0}")]
    Ingest(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("scheduling: {0}")]
    Sched(#[from] SchedError),
    #[error("route quality: {0}")]
    Quality(#[from] QualityError),
    #[error("empty input")]
    EmptyInput,
}

/// How each user's feasible relay set is formed every session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Region-aware dual criterion; the scheduler sees every survivor.
    Dual,
    /// Nearest candidate only.
    Nearest,
    /// Minimum relative speed within the radius.
    MinVInRadius,
    /// One uniformly random relay among the dual-criterion survivors.
    RandomAmongSelected,
    /// Relative speed closest to the ground-link velocity, everywhere.
    VgOnly,
}

impl SelectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dual => "dual",
            Self::Nearest => "nearest",
            Self::MinVInRadius => "min_v_in_radius",
            Self::RandomAmongSelected => "random_among_selected",
            Self::VgOnly => "vg_only",
        }
    }
}

/// Ground station site for the wait-and-transfer baseline.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// Wait-and-transfer baseline: EO satellites hold data until a dedicated
/// station sees them above the elevation threshold.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaitAndTransferConfig {
    pub stations: Vec<Station>,
    pub min_elevation_deg: f64,
    pub contact_rate_bps: f64,
}

impl Default for WaitAndTransferConfig {
    fn default() -> Self {
        // Five high-latitude-heavy downlink sites, a typical dedicated
        // polar network.
        let mk = |name: &str, lat: f64, lon: f64| Station {
            name: name.to_string(),
            lat_deg: lat,
            lon_deg: lon,
        };
        Self {
            stations: vec![
                mk("svalbard", 78.23, 15.39),
                mk("fairbanks", 64.86, -147.85),
                mk("inuvik", 68.32, -133.55),
                mk("punta_arenas", -53.0, -70.85),
                mk("awarua", -46.53, 168.38),
            ],
            min_elevation_deg: 25.0,
            contact_rate_bps: 1.2e9,
        }
    }
}

/// Full scenario description, loadable from a structured-text file.
/// Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_hours: f64,
    pub session_seconds: f64,
    /// Data produced by each EO satellite, bits per day.
    pub generation_bits_per_day: f64,
    pub eo_tles: PathBuf,
    pub relay_tles: PathBuf,
    pub pop_profiles: PathBuf,
    pub weather_trace: Option<PathBuf>,
    /// Fleet scaling: each EO record is cloned into this many phase-shifted
    /// satellites in total.
    pub eo_multiplier: u32,
    pub availability_fraction: f64,
    pub polar_outage: bool,
    pub selection_mode: SelectionMode,
    pub service_tier: ServiceTier,
    pub relay_capacity: u32,
    pub penalty_fraction: f64,
    pub penalty_mode: PenaltyMode,
    /// RFC3339 start; defaults to the newest element epoch in the fleet.
    pub start_epoch: Option<String>,
    pub radio: RadioConfig,
    pub selection: Option<SelectionConfig>,
    pub isl: IslModel,
    pub wait_and_transfer: Option<WaitAndTransferConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            duration_hours: 24.0,
            session_seconds: 15.0,
            generation_bits_per_day: 500.0 * 8e9,
            eo_tles: PathBuf::new(),
            relay_tles: PathBuf::new(),
            pop_profiles: PathBuf::new(),
            weather_trace: None,
            eo_multiplier: 3,
            availability_fraction: 1.0,
            polar_outage: false,
            selection_mode: SelectionMode::Dual,
            service_tier: ServiceTier::Business,
            relay_capacity: 32,
            penalty_fraction: 0.2,
            penalty_mode: PenaltyMode::NewLinksOnly,
            start_epoch: None,
            radio: RadioConfig::default(),
            selection: None,
            isl: IslModel::default(),
            wait_and_transfer: None,
        }
    }
}

impl ScenarioConfig {
    /// Effective selection config: explicit when given, otherwise derived
    /// from the radio parameters.
    pub fn selection(&self) -> SelectionConfig {
        self.selection
            .clone()
            .unwrap_or_else(|| SelectionConfig::for_radio(&self.radio))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.duration_hours <= 0.0 {
            return Err(SimError::Config("duration_hours must be positive".into()));
        }
        if self.session_seconds <= 0.0 {
            return Err(SimError::Config("session_seconds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.availability_fraction) {
            return Err(SimError::Config(
                "availability_fraction must lie in [0, 1]".into(),
            ));
        }
        if self.eo_multiplier == 0 {
            return Err(SimError::Config("eo_multiplier must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.penalty_fraction) {
            return Err(SimError::Config(
                "penalty_fraction must lie in [0, 1)".into(),
            ));
        }
        if self.generation_bits_per_day < 0.0 {
            return Err(SimError::Config(
                "generation_bits_per_day must be non-negative".into(),
            ));
        }
        if let Some(wt) = &self.wait_and_transfer {
            if wt.stations.is_empty() {
                return Err(SimError::Config("wait_and_transfer needs stations".into()));
            }
            if !(wt.min_elevation_deg > 0.0 && wt.min_elevation_deg <= 90.0) {
                return Err(SimError::Config(
                    "min_elevation_deg must lie in (0, 90]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Parses a scenario from TOML text (no path resolution).
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a scenario from an already-merged TOML value (override path).
    pub fn from_toml_value(value: toml::Value) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            value.try_into().map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves all input paths relative to `base` when they are relative.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.eo_tles);
        fix(&mut self.relay_tles);
        fix(&mut self.pop_profiles);
        if let Some(w) = &mut self.weather_trace {
            if w.is_relative() {
                *w = base.join(&*w);
            }
        }
    }
}

/// Loads a scenario file, resolving relative paths against its directory
/// and naming it after the file stem unless the file names itself.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Ingest(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    if cfg.name == "scenario" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            cfg.name = stem.to_string();
        }
    }
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Ledger and report types
// ---------------------------------------------------------------------------

/// Per-satellite undelivered-data accounting. All quantities are integer
/// bits so conservation is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacklogLedger {
    pub user_id: u32,
    pub name: String,
    pub generated_bits: u64,
    pub delivered_bits: u64,
    pub backlog_bits: u64,
    pub disconnected_sessions: u32,
    pub switch_count: u32,
}

impl BacklogLedger {
    fn new(user_id: u32, name: String) -> Self {
        Self {
            user_id,
            name,
            generated_bits: 0,
            delivered_bits: 0,
            backlog_bits: 0,
            disconnected_sessions: 0,
            switch_count: 0,
        }
    }

    fn generate(&mut self, bits: u64) {
        self.generated_bits += bits;
        self.backlog_bits += bits;
    }

    fn deliver(&mut self, bits: u64) {
        let d = bits.min(self.backlog_bits);
        self.delivered_bits += d;
        self.backlog_bits -= d;
    }

    /// Exact conservation: generated = delivered + backlog.
    pub fn conserved(&self) -> bool {
        self.generated_bits == self.delivered_bits + self.backlog_bits
    }
}

/// One scheduled link in one session.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    pub session_index: u64,
    pub user_id: u32,
    pub relay_id: u32,
    pub pop_id: String,
    pub value_bits: f64,
    pub was_switch: bool,
}

/// Aggregate statistics over a ledger set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub users: usize,
    pub median_backlog_bits: f64,
    pub p90_backlog_bits: f64,
    pub delivered_fraction: f64,
    pub total_switches: u64,
    pub total_disconnected_sessions: u64,
    pub avg_connection_seconds: f64,
    /// Sorted end-of-run backlog CDF samples (bits, cumulative probability).
    pub cdf: Vec<(f64, f64)>,
}

/// Everything one simulation run produces.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub scenario_name: String,
    pub selection_mode: SelectionMode,
    pub seed: u64,
    pub sessions: u64,
    pub session_seconds: f64,
    pub ledgers: Vec<BacklogLedger>,
    pub plans: Vec<PlanRow>,
    pub summary: RunSummary,
    pub baseline_ledgers: Option<Vec<BacklogLedger>>,
    pub baseline_summary: Option<RunSummary>,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Deterministic per-(seed, session, user) randomness
// ---------------------------------------------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(seed ^ splitmix64(a ^ splitmix64(b)))
}

fn hash_u01(seed: u64, a: u64, b: u64) -> f64 {
    (hash3(seed, a, b) >> 11) as f64 / (1u64 << 53) as f64
}

/// Per-session perturbation: which users are unavailable this session.
/// Polar outage is applied separately from each user's region.
pub fn apply_scenario_perturbation(
    availability_fraction: f64,
    session_index: u64,
    seed: u64,
    n_users: usize,
) -> Vec<bool> {
    (0..n_users)
        .map(|j| {
            availability_fraction < 1.0
                && hash_u01(seed, session_index, j as u64) >= availability_fraction
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Fleet preparation
// ---------------------------------------------------------------------------

/// Clones each EO record into `multiplier` phase-shifted satellites in
/// total, offsetting the mean anomaly by +/- k * 360/(multiplier+1) degrees.
pub fn expand_fleet(fleet: &[OrbitalElements], multiplier: u32) -> Vec<OrbitalElements> {
    let mut out = Vec::with_capacity(fleet.len() * multiplier as usize);
    let delta = 360.0 / (multiplier as f64 + 1.0);
    for el in fleet {
        out.push(el.clone());
        for c in 1..multiplier {
            let k = c.div_ceil(2) as f64;
            let sign = if c % 2 == 1 { 1.0 } else { -1.0 };
            let mut clone = el.clone();
            clone.mean_anomaly_deg = (el.mean_anomaly_deg + sign * k * delta).rem_euclid(360.0);
            clone.catalog_id = el.catalog_id * 100 + c;
            clone.name = format!("{}-C{}", el.name, c);
            out.push(clone);
        }
    }
    out
}

fn load_fleet(path: &Path, what: &str, warnings: &mut Vec<String>) -> Result<Vec<OrbitalElements>, SimError> {
    let report = parse_tle_file(path)
        .map_err(|e| SimError::Ingest(format!("{}: {e}", path.display())))?;
    for issue in &report.issues {
        warnings.push(format!("{} {}: {issue}", what, path.display()));
    }
    if report.records.is_empty() {
        return Err(SimError::Ingest(format!(
            "{}: no valid records in {}",
            what,
            path.display()
        )));
    }
    Ok(report.records)
}

// ---------------------------------------------------------------------------
// Main run
// ---------------------------------------------------------------------------

/// Runs a full scenario deterministically for a given seed.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<SimulationReport, SimError> {
    cfg.validate()?;
    let mut warnings = Vec::new();

    let eo_base = load_fleet(&cfg.eo_tles, "eo", &mut warnings)?;
    let relays = load_fleet(&cfg.relay_tles, "relay", &mut warnings)?;
    let users = expand_fleet(&eo_base, cfg.eo_multiplier);

    let pops = load_pop_profiles_file(&cfg.pop_profiles)?;
    if pops.is_empty() {
        return Err(SimError::Ingest("pop profile file has no entries".into()));
    }
    let weather = match &cfg.weather_trace {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| SimError::Ingest(format!("{}: {e}", path.display())))?;
            WeatherSource::from_csv(&text)?
        }
        None => WeatherSource::clear(),
    };

    let start = match &cfg.start_epoch {
        Some(s) => DateTime::parse_from_rfc3339(s)
            .map_err(|e| SimError::Config(format!("start_epoch: {e}")))?
            .with_timezone(&Utc),
        None => users
            .iter()
            .chain(relays.iter())
            .map(|el| el.epoch)
            .max()
            .ok_or(SimError::EmptyInput)?,
    };

    let selection_cfg = cfg.selection();
    let radio = &cfg.radio;
    let isl = &cfg.isl;
    let sessions = ((cfg.duration_hours * 3600.0) / cfg.session_seconds).floor() as u64;
    let gen_per_session =
        (cfg.generation_bits_per_day * cfg.session_seconds / 86_400.0).round() as u64;

    let user_props: Vec<Propagator> = users
        .iter()
        .map(|el| Propagator::new(el, WGS72))
        .collect::<Result<_, _>>()
        .map_err(|e| SimError::Ingest(format!("eo fleet: {e}")))?;
    let relay_props: Vec<Propagator> = relays
        .iter()
        .map(|el| Propagator::new(el, WGS72))
        .collect::<Result<_, _>>()
        .map_err(|e| SimError::Ingest(format!("relay fleet: {e}")))?;

    let m = users.len();
    let n = relays.len();
    let mut ledgers: Vec<BacklogLedger> = users
        .iter()
        .map(|el| BacklogLedger::new(el.catalog_id, el.name.clone()))
        .collect();
    let mut plans: Vec<PlanRow> = Vec::new();
    let mut previous: Option<Vec<Option<usize>>> = None;
    let mut quarantined_users = vec![false; m];
    let mut quarantined_relays = vec![false; n];

    // connection-run accounting (per user, runs of the same relay)
    let mut run_lengths: Vec<u64> = Vec::new();
    let mut current_run: Vec<Option<(usize, u64)>> = vec![None; m];

    let mut deliverable = vec![0.0f64; n * m];
    let mut feasible = vec![false; n * m];
    let capacity = vec![cfg.relay_capacity; n];

    let mut live_states: Vec<StateVector> = Vec::with_capacity(n);
    let mut live_index: Vec<usize> = Vec::with_capacity(n);

    for t in 0..sessions {
        let at = start + Duration::nanoseconds((t as f64 * cfg.session_seconds * 1e9).round() as i64);

        // Propagate relays, quarantining failures.
        live_states.clear();
        live_index.clear();
        for (i, p) in relay_props.iter().enumerate() {
            if quarantined_relays[i] {
                continue;
            }
            match p.state_at(at) {
                Ok(s) if s.in_leo_band() => {
                    live_states.push(s);
                    live_index.push(i);
                }
                Ok(_) => {
                    quarantined_relays[i] = true;
                    warnings.push(format!(
                        "relay {} quarantined at session {t}: left the LEO sanity band",
                        relays[i].catalog_id
                    ));
                }
                Err(e) => {
                    quarantined_relays[i] = true;
                    warnings.push(format!(
                        "relay {} quarantined at session {t}: {e}",
                        relays[i].catalog_id
                    ));
                }
            }
        }

        // Generation happens regardless of connectivity.
        for ledger in ledgers.iter_mut() {
            ledger.generate(gen_per_session);
        }

        let unavailable =
            apply_scenario_perturbation(cfg.availability_fraction, t, seed, m);

        deliverable.iter_mut().for_each(|v| *v = 0.0);
        feasible.iter_mut().for_each(|v| *v = false);
        let mut pop_choice: BTreeMap<(usize, usize), String> = BTreeMap::new();
        let mut relay_subpoints: Vec<Option<Geodetic>> = vec![None; live_states.len()];

        for (j, prop) in user_props.iter().enumerate() {
            if quarantined_users[j] || unavailable[j] {
                continue;
            }
            let user_state = match prop.state_at(at) {
                Ok(s) if s.in_leo_band() => s,
                Ok(_) => {
                    quarantined_users[j] = true;
                    warnings.push(format!(
                        "eo {} quarantined at session {t}: left the LEO sanity band",
                        users[j].catalog_id
                    ));
                    continue;
                }
                Err(e) => {
                    quarantined_users[j] = true;
                    warnings.push(format!(
                        "eo {} quarantined at session {t}: {e}",
                        users[j].catalog_id
                    ));
                    continue;
                }
            };
            let region = classify_ssdb(subpoint(&user_state).lat_deg, &selection_cfg.ssdb);
            if cfg.polar_outage && region == SsdbRegion::Outside {
                continue;
            }
            let cands = candidates_within(
                &user_state,
                &live_states,
                selection_cfg.search_radius_km,
            )
            .expect("states share an epoch");

            let survivors: Vec<(usize, GeometrySample)> = match cfg.selection_mode {
                SelectionMode::Dual => dual_survivors(region, &cands, &selection_cfg, radio),
                SelectionMode::Nearest => cands.first().copied().into_iter().collect(),
                SelectionMode::MinVInRadius => cands
                    .iter()
                    .copied()
                    .min_by(|(ia, a), (ib, b)| {
                        (a.relative_speed_kms, *ia)
                            .partial_cmp(&(b.relative_speed_kms, *ib))
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .into_iter()
                    .collect(),
                SelectionMode::VgOnly => cands
                    .iter()
                    .copied()
                    .min_by(|(ia, a), (ib, b)| {
                        (
                            (a.relative_speed_kms - selection_cfg.v_ground_kms).abs(),
                            *ia,
                        )
                            .partial_cmp(&(
                                (b.relative_speed_kms - selection_cfg.v_ground_kms).abs(),
                                *ib,
                            ))
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .into_iter()
                    .collect(),
                SelectionMode::RandomAmongSelected => {
                    let s = dual_survivors(region, &cands, &selection_cfg, radio);
                    if s.is_empty() {
                        Vec::new()
                    } else {
                        let pick = hash3(seed ^ 0x5eed_f00d, t, j as u64) as usize % s.len();
                        vec![s[pick]]
                    }
                }
            };

            for (local_idx, g) in survivors {
                let relay_sub = *relay_subpoints[local_idx]
                    .get_or_insert_with(|| subpoint(&live_states[local_idx]));
                let (pop_id, route) = route_for_candidates(
                    &g,
                    relay_sub,
                    &pops,
                    &weather,
                    cfg.service_tier,
                    radio,
                    isl,
                )?;
                let i = live_index[local_idx];
                deliverable[i * m + j] = route.deliverable_bits;
                feasible[i * m + j] = true;
                pop_choice.insert((i, j), pop_id);
            }
        }

        let backlogs: Vec<f64> = ledgers.iter().map(|l| l.backlog_bits as f64).collect();
        let problem = build_session(
            t,
            &backlogs,
            &deliverable,
            &feasible,
            &capacity,
            previous.as_deref(),
            cfg.penalty_fraction,
        )?;
        let mut problem = problem;
        problem.penalty_mode = cfg.penalty_mode;
        let plan = solve_session(&problem);

        for (j, ledger) in ledgers.iter_mut().enumerate() {
            match plan.assignment[j] {
                Some(i) => {
                    let value = problem.value_at(i, j);
                    let was_switch = previous
                        .as_ref()
                        .map(|p| p[j] != Some(i))
                        .unwrap_or(true);
                    let delivered = if was_switch {
                        value * (1.0 - cfg.penalty_fraction)
                    } else {
                        value
                    };
                    ledger.deliver(delivered.floor() as u64);
                    if was_switch {
                        ledger.switch_count += 1;
                    }
                    plans.push(PlanRow {
                        session_index: t,
                        user_id: users[j].catalog_id,
                        relay_id: relays[i].catalog_id,
                        pop_id: pop_choice.get(&(i, j)).cloned().unwrap_or_default(),
                        value_bits: value,
                        was_switch,
                    });
                    // connection-run bookkeeping
                    match current_run[j] {
                        Some((relay, ref mut len)) if relay == i => *len += 1,
                        ref mut slot => {
                            if let Some((_, len)) = slot.take() {
                                run_lengths.push(len);
                            }
                            *slot = Some((i, 1));
                        }
                    }
                }
                None => {
                    ledger.disconnected_sessions += 1;
                    if let Some((_, len)) = current_run[j].take() {
                        run_lengths.push(len);
                    }
                }
            }
            assert!(ledger.conserved(), "bit conservation violated");
        }
        previous = Some(plan.assignment);
    }
    for slot in current_run.iter_mut() {
        if let Some((_, len)) = slot.take() {
            run_lengths.push(len);
        }
    }

    let summary = summarize_with_runs(&ledgers, &run_lengths, cfg.session_seconds)?;

    let (baseline_ledgers, baseline_summary) = match &cfg.wait_and_transfer {
        Some(wt) => {
            let (l, s) = run_wait_and_transfer(
                wt,
                &users,
                start,
                sessions,
                cfg.session_seconds,
                gen_per_session,
            )?;
            (Some(l), Some(s))
        }
        None => (None, None),
    };

    Ok(SimulationReport {
        scenario_name: cfg.name.clone(),
        selection_mode: cfg.selection_mode,
        seed,
        sessions,
        session_seconds: cfg.session_seconds,
        ledgers,
        plans,
        summary,
        baseline_ledgers,
        baseline_summary,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Wait-and-transfer baseline
// ---------------------------------------------------------------------------

/// Passive elevation-threshold baseline: every satellite above the
/// threshold at any station delivers at the contact rate.
pub fn run_wait_and_transfer(
    cfg: &WaitAndTransferConfig,
    fleet: &[OrbitalElements],
    start: DateTime<Utc>,
    sessions: u64,
    session_seconds: f64,
    gen_per_session: u64,
) -> Result<(Vec<BacklogLedger>, RunSummary), SimError> {
    if cfg.stations.is_empty() {
        return Err(SimError::Config("wait_and_transfer needs stations".into()));
    }
    let props: Vec<Propagator> = fleet
        .iter()
        .map(|el| Propagator::new(el, WGS72))
        .collect::<Result<_, _>>()
        .map_err(|e| SimError::Ingest(format!("eo fleet: {e}")))?;
    let mut ledgers: Vec<BacklogLedger> = fleet
        .iter()
        .map(|el| BacklogLedger::new(el.catalog_id, el.name.clone()))
        .collect();
    let mut quarantined = vec![false; fleet.len()];
    let per_session_bits = (cfg.contact_rate_bps * session_seconds).floor() as u64;
    let mut run_lengths: Vec<u64> = Vec::new();
    let mut current_run: Vec<Option<u64>> = vec![None; fleet.len()];

    for t in 0..sessions {
        let at = start + Duration::nanoseconds((t as f64 * session_seconds * 1e9).round() as i64);
        let sites: Vec<(StateVector, crate::Vec3d)> = cfg
            .stations
            .iter()
            .map(|s| {
                (
                    ground_site_state(s.lat_deg, s.lon_deg, 0.0, at),
                    site_up_teme(s.lat_deg, s.lon_deg, at),
                )
            })
            .collect();
        for (j, ledger) in ledgers.iter_mut().enumerate() {
            ledger.generate(gen_per_session);
            if quarantined[j] {
                continue;
            }
            let state = match props[j].state_at(at) {
                Ok(s) => s,
                Err(_) => {
                    quarantined[j] = true;
                    continue;
                }
            };
            let visible = sites
                .iter()
                .any(|(site, up)| elevation_deg(site, up, &state) >= cfg.min_elevation_deg);
            if visible {
                ledger.deliver(per_session_bits);
                match current_run[j] {
                    Some(ref mut len) => *len += 1,
                    ref mut slot => *slot = Some(1),
                }
            } else {
                ledger.disconnected_sessions += 1;
                if let Some(len) = current_run[j].take() {
                    run_lengths.push(len);
                }
            }
            assert!(ledger.conserved(), "bit conservation violated");
        }
    }
    for slot in current_run.iter_mut() {
        if let Some(len) = slot.take() {
            run_lengths.push(len);
        }
    }
    let summary = summarize_with_runs(&ledgers, &run_lengths, session_seconds)?;
    Ok((ledgers, summary))
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

/// Aggregates ledgers into the run summary.
pub fn summarize(ledgers: &[BacklogLedger], session_seconds: f64) -> Result<RunSummary, SimError> {
    summarize_with_runs(ledgers, &[], session_seconds)
}

fn summarize_with_runs(
    ledgers: &[BacklogLedger],
    run_lengths: &[u64],
    session_seconds: f64,
) -> Result<RunSummary, SimError> {
    if ledgers.is_empty() {
        return Err(SimError::EmptyInput);
    }
    let mut backlogs: Vec<f64> = ledgers.iter().map(|l| l.backlog_bits as f64).collect();
    backlogs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let generated: u64 = ledgers.iter().map(|l| l.generated_bits).sum();
    let delivered: u64 = ledgers.iter().map(|l| l.delivered_bits).sum();
    let delivered_fraction = if generated > 0 {
        delivered as f64 / generated as f64
    } else {
        0.0
    };
    let avg_connection_seconds = if run_lengths.is_empty() {
        0.0
    } else {
        run_lengths.iter().sum::<u64>() as f64 * session_seconds / run_lengths.len() as f64
    };
    Ok(RunSummary {
        users: ledgers.len(),
        median_backlog_bits: quantile_sorted(&backlogs, 0.5).unwrap(),
        p90_backlog_bits: quantile_sorted(&backlogs, 0.9).unwrap(),
        delivered_fraction,
        total_switches: ledgers.iter().map(|l| l.switch_count as u64).sum(),
        total_disconnected_sessions: ledgers
            .iter()
            .map(|l| l.disconnected_sessions as u64)
            .sum(),
        avg_connection_seconds,
        cdf: cdf_samples(&backlogs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_fraction_concentrates() {
        let mut off = 0usize;
        let total = 10_000usize;
        let per_session = 100;
        for t in 0..(total / per_session) as u64 {
            off += apply_scenario_perturbation(0.75, t, 42, per_session)
                .iter()
                .filter(|&&x| x)
                .count();
        }
        let frac = off as f64 / total as f64;
        assert!((frac - 0.25).abs() < 0.02, "unavailable fraction {frac}");
    }

    #[test]
    fn perturbation_full_availability_is_noop() {
        assert!(apply_scenario_perturbation(1.0, 3, 9, 50)
            .iter()
            .all(|&x| !x));
    }

    #[test]
    fn perturbation_is_deterministic() {
        let a = apply_scenario_perturbation(0.6, 7, 1234, 64);
        let b = apply_scenario_perturbation(0.6, 7, 1234, 64);
        assert_eq!(a, b);
    }

    #[test]
    fn expand_fleet_multiplies_and_offsets() {
        let base = OrbitalElements {
            catalog_id: 70001,
            name: "EO".into(),
            epoch: Default::default(),
            inclination_deg: 97.5,
            raan_deg: 100.0,
            eccentricity: 0.001,
            arg_perigee_deg: 90.0,
            mean_anomaly_deg: 350.0,
            mean_motion_rev_day: 15.2,
            bstar: 0.0001,
            line1_checksum_ok: true,
            line2_checksum_ok: true,
        };
        let fleet = expand_fleet(std::slice::from_ref(&base), 3);
        assert_eq!(fleet.len(), 3);
        assert_eq!(fleet[0].mean_anomaly_deg, 350.0);
        assert!((fleet[1].mean_anomaly_deg - 80.0).abs() < 1e-9); // +90 wraps
        assert!((fleet[2].mean_anomaly_deg - 260.0).abs() < 1e-9); // -90
        let ids: Vec<u32> = fleet.iter().map(|e| e.catalog_id).collect();
        assert_eq!(ids.len(), 3);
        assert!(ids.windows(2).all(|w| w[0] != w[1]));

        assert_eq!(expand_fleet(&[base], 1).len(), 1);
    }

    #[test]
    fn ledger_conservation_under_ops() {
        let mut l = BacklogLedger::new(1, "x".into());
        l.generate(100);
        l.deliver(30);
        l.generate(50);
        l.deliver(1000); // capped by backlog
        assert!(l.conserved());
        assert_eq!(l.backlog_bits, 0);
        assert_eq!(l.delivered_bits, 150);
    }

    #[test]
    fn summarize_single_ledger() {
        let mut l = BacklogLedger::new(1, "x".into());
        l.generate(5);
        let s = summarize(&[l], 15.0).unwrap();
        assert_eq!(s.median_backlog_bits, 5.0);
        assert_eq!(s.p90_backlog_bits, 5.0);
        assert_eq!(s.delivered_fraction, 0.0);
    }

    #[test]
    fn summarize_empty_errors() {
        assert!(matches!(summarize(&[], 15.0), Err(SimError::EmptyInput)));
    }

    #[test]
    fn summarize_delivered_fraction_identity() {
        let mut a = BacklogLedger::new(1, "a".into());
        a.generate(100);
        a.deliver(60);
        let mut b = BacklogLedger::new(2, "b".into());
        b.generate(300);
        b.deliver(90);
        let s = summarize(&[a, b], 15.0).unwrap();
        assert_eq!(s.delivered_fraction, 150.0 / 400.0);
    }

    #[test]
    fn scenario_toml_unknown_key_rejected() {
        let err = ScenarioConfig::from_toml_str("bogus_key = 1\n").unwrap_err();
        assert!(matches!(err, SimError::Config(_)));
    }

    #[test]
    fn scenario_toml_defaults_and_overrides() {
        let cfg = ScenarioConfig::from_toml_str(
            "duration_hours = 6.0\nselection_mode = \"nearest\"\n",
        )
        .unwrap();
        assert_eq!(cfg.duration_hours, 6.0);
        assert_eq!(cfg.selection_mode, SelectionMode::Nearest);
        assert_eq!(cfg.session_seconds, 15.0);
        assert_eq!(cfg.relay_capacity, 32);
    }

    #[test]
    fn scenario_validation_catches_bad_fraction() {
        let err =
            ScenarioConfig::from_toml_str("availability_fraction = 1.5\n").unwrap_err();
        assert!(matches!(err, SimError::Config(_)));
    }
}

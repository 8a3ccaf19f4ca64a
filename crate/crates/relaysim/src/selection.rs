//! Relay selection: the threshold-branching selection algorithm over
//! candidate geometry, region-dependent criteria, and trace generation for
//! strategy comparisons.

use crate::geometry::{
    candidates_within, classify_ssdb, GeometrySample, SsdbConfig, SsdbRegion,
};
use crate::quality::RadioConfig;
use crate::sgp4::{GravityModel, PropagationError, Propagator, WGS72};
use crate::tle::OrbitalElements;
use crate::earth::subpoint;
use chrono::{DateTime, Duration, Utc};
use serde::Deserialize;

/// Candidate ordering used inside the dense region when several relays stay
/// under the tolerated velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsideOrdering {
    /// Prefer the relay whose relative speed is closest to the ground-link
    /// velocity (the dual-criterion composition; default).
    VelocityProximity,
    /// Prefer the nearest relay (the plain selection algorithm).
    Distance,
}

/// Thresholds and search parameters for selection.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    /// Typical ground-user relative speed the air interface is tuned for.
    pub v_ground_kms: f64,
    /// Maximum relative speed observed (and tolerated) for ground users.
    pub v_ground_max_kms: f64,
    /// Relative speed at which the carrier offset reaches the
    /// adjacent-channel limit; derived from the radio config by default.
    pub v_critical_kms: f64,
    pub search_radius_km: f64,
    /// Aligned-plane speed observed outside the dense region.
    pub low_velocity_target_kms: f64,
    /// Above this relative speed an outside-region user is unservable.
    pub outside_disconnect_kms: f64,
    pub inside_ordering: InsideOrdering,
    pub ssdb: SsdbConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self::for_radio(&RadioConfig::default())
    }
}

impl SelectionConfig {
    /// Defaults with the critical velocity derived from the radio config.
    pub fn for_radio(radio: &RadioConfig) -> Self {
        Self {
            v_ground_kms: 7.4,
            v_ground_max_kms: 8.5,
            v_critical_kms: radio.critical_velocity_kms(),
            search_radius_km: 968.0,
            low_velocity_target_kms: 1.5,
            outside_disconnect_kms: 3.0,
            inside_ordering: InsideOrdering::VelocityProximity,
            ssdb: SsdbConfig::default(),
        }
    }
}

/// Which branch produced a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    MinDistanceUnderVmax,
    MinVelocityAllCritical,
    MaxSnrBalance,
    OutsideMinVelocity,
    Disconnected,
}

impl SelectionRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MinDistanceUnderVmax => "min_distance_under_vmax",
            Self::MinVelocityAllCritical => "min_velocity_all_critical",
            Self::MaxSnrBalance => "max_snr_balance",
            Self::OutsideMinVelocity => "outside_min_velocity",
            Self::Disconnected => "disconnected",
        }
    }
}

/// Outcome of one selection decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Index into the relay list; absent iff the rule is `Disconnected`.
    pub chosen: Option<usize>,
    pub rule_fired: SelectionRule,
    pub geometry: Option<GeometrySample>,
    pub snr_db: Option<f64>,
}

impl SelectionResult {
    fn disconnected() -> Self {
        Self {
            chosen: None,
            rule_fired: SelectionRule::Disconnected,
            geometry: None,
            snr_db: None,
        }
    }

    fn pick(idx: usize, g: GeometrySample, rule: SelectionRule, radio: &RadioConfig) -> Self {
        Self {
            chosen: Some(idx),
            rule_fired: rule,
            geometry: Some(g),
            snr_db: radio.snr_db(&g),
        }
    }
}

fn min_by_key<'a, K: PartialOrd>(
    cands: impl Iterator<Item = &'a (usize, GeometrySample)>,
    mut key: impl FnMut(usize, &GeometrySample) -> K,
) -> Option<(usize, GeometrySample)> {
    let mut best: Option<(K, usize, GeometrySample)> = None;
    for (idx, g) in cands {
        let k = key(*idx, g);
        let better = match &best {
            None => true,
            Some((bk, _, _)) => k.partial_cmp(bk) == Some(std::cmp::Ordering::Less),
        };
        if better {
            best = Some((k, *idx, *g));
        }
    }
    best.map(|(_, idx, g)| (idx, g))
}

/// Selection inside the dense region: (a) if any candidate stays under the
/// tolerated ground velocity, pick by the configured ordering among those;
/// (b) if every candidate exceeds the critical velocity, pick the slowest;
/// (c) otherwise pick the candidate with the best offset-degraded SNR.
pub fn select_inside(
    candidates: &[(usize, GeometrySample)],
    cfg: &SelectionConfig,
    radio: &RadioConfig,
) -> SelectionResult {
    if candidates.is_empty() {
        return SelectionResult::disconnected();
    }
    let under_vmax: Vec<&(usize, GeometrySample)> = candidates
        .iter()
        .filter(|(_, g)| g.relative_speed_kms <= cfg.v_ground_max_kms)
        .collect();
    if !under_vmax.is_empty() {
        let (idx, g) = match cfg.inside_ordering {
            InsideOrdering::Distance => min_by_key(under_vmax.iter().copied(), |i, g| {
                (g.distance_km, i)
            })
            .unwrap(),
            InsideOrdering::VelocityProximity => {
                min_by_key(under_vmax.iter().copied(), |i, g| {
                    (
                        (g.relative_speed_kms - cfg.v_ground_kms).abs(),
                        g.distance_km,
                        i,
                    )
                })
                .unwrap()
            }
        };
        return SelectionResult::pick(idx, g, SelectionRule::MinDistanceUnderVmax, radio);
    }
    if candidates
        .iter()
        .all(|(_, g)| g.relative_speed_kms > cfg.v_critical_kms)
    {
        let (idx, g) = min_by_key(candidates.iter(), |i, g| (g.relative_speed_kms, i)).unwrap();
        return SelectionResult::pick(idx, g, SelectionRule::MinVelocityAllCritical, radio);
    }
    // Maximize the offset-degraded SNR; adjacent-channel candidates rank
    // below every finite SNR.
    let (idx, g) = min_by_key(candidates.iter(), |i, g| {
        let snr = radio.snr_db(g).unwrap_or(f64::NEG_INFINITY);
        (-snr, g.distance_km, i)
    })
    .unwrap();
    SelectionResult::pick(idx, g, SelectionRule::MaxSnrBalance, radio)
}

/// Region-aware selection: inside the dense band candidates feed the
/// branching algorithm ordered by velocity proximity; outside it the slowest
/// candidate wins (ties by distance), with a disconnect threshold.
pub fn select_dual(
    region: SsdbRegion,
    candidates: &[(usize, GeometrySample)],
    cfg: &SelectionConfig,
    radio: &RadioConfig,
) -> SelectionResult {
    match region {
        SsdbRegion::Inside => select_inside(candidates, cfg, radio),
        SsdbRegion::Outside => {
            let Some((idx, g)) =
                min_by_key(candidates.iter(), |i, g| (g.relative_speed_kms, g.distance_km, i))
            else {
                return SelectionResult::disconnected();
            };
            if g.relative_speed_kms > cfg.outside_disconnect_kms {
                return SelectionResult::disconnected();
            }
            SelectionResult::pick(idx, g, SelectionRule::OutsideMinVelocity, radio)
        }
    }
}

/// Candidates that survive the region filter and could carry traffic this
/// session; the scheduler treats them as the feasible set and the random
/// baseline draws from them.
pub fn dual_survivors(
    region: SsdbRegion,
    candidates: &[(usize, GeometrySample)],
    cfg: &SelectionConfig,
    radio: &RadioConfig,
) -> Vec<(usize, GeometrySample)> {
    match region {
        SsdbRegion::Inside => {
            let under: Vec<(usize, GeometrySample)> = candidates
                .iter()
                .filter(|(_, g)| g.relative_speed_kms <= cfg.v_ground_max_kms)
                .copied()
                .collect();
            if !under.is_empty() {
                return under;
            }
            match select_inside(candidates, cfg, radio) {
                SelectionResult {
                    chosen: Some(idx),
                    geometry: Some(g),
                    ..
                } => vec![(idx, g)],
                _ => Vec::new(),
            }
        }
        SsdbRegion::Outside => candidates
            .iter()
            .filter(|(_, g)| g.relative_speed_kms <= cfg.outside_disconnect_kms)
            .copied()
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Trace generation
// ---------------------------------------------------------------------------

/// Per-step strategies used by the analysis traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStrategy {
    /// Nearest relay, no radius limit.
    Nearest,
    /// Minimum relative speed within the search radius.
    MinVelocity,
    /// Relative speed closest to the ground-link velocity within the radius.
    VgProximity,
    /// Region-dependent dual criterion.
    Dual,
}

impl TraceStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Nearest => "nearest",
            Self::MinVelocity => "min_velocity",
            Self::VgProximity => "vg_proximity",
            Self::Dual => "dual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nearest" => Some(Self::Nearest),
            "min_velocity" => Some(Self::MinVelocity),
            "vg_proximity" => Some(Self::VgProximity),
            "dual" => Some(Self::Dual),
            _ => None,
        }
    }
}

/// Propagation failure tagged with the step epoch it happened at.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("propagation failed at {epoch}: {source}")]
pub struct TraceError {
    pub epoch: DateTime<Utc>,
    #[source]
    pub source: PropagationError,
}

/// One sampled decision instant.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub epoch: DateTime<Utc>,
    pub user_subpoint_lat_deg: f64,
    pub region: SsdbRegion,
    pub chosen_catalog_id: Option<u32>,
    pub geometry: Option<GeometrySample>,
    pub rule: &'static str,
    pub snr_db: Option<f64>,
}

/// A contiguous run of steps holding the same relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSpan {
    pub catalog_id: u32,
    pub start_step: usize,
    pub steps: usize,
}

/// Stepwise selection results plus per-relay session statistics.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub steps: Vec<TraceStep>,
    pub sessions: Vec<SessionSpan>,
    pub step_seconds: f64,
}

impl SelectionTrace {
    /// Average connected time per relay session before a handover. A
    /// reconnection after a gap counts as a new session.
    pub fn avg_connection_seconds(&self) -> f64 {
        if self.sessions.is_empty() {
            return 0.0;
        }
        let total: usize = self.sessions.iter().map(|s| s.steps).sum();
        total as f64 * self.step_seconds / self.sessions.len() as f64
    }

    /// Relative speeds of the chosen relay across connected steps.
    pub fn chosen_speeds(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.geometry.map(|g| g.relative_speed_kms))
            .collect()
    }

    /// Chosen distances across connected steps.
    pub fn chosen_distances(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.geometry.map(|g| g.distance_km))
            .collect()
    }
}

/// Runs one strategy over a time window against a relay fleet.
#[allow(clippy::too_many_arguments)]
pub fn selection_trace(
    user: &OrbitalElements,
    relays: &[OrbitalElements],
    start: DateTime<Utc>,
    window_s: f64,
    step_s: f64,
    strategy: TraceStrategy,
    cfg: &SelectionConfig,
    radio: &RadioConfig,
    gravity: GravityModel,
) -> Result<SelectionTrace, TraceError> {
    assert!(step_s > 0.0, "step must be positive");
    let at_epoch = |source, epoch| TraceError { epoch, source };
    let user_prop =
        Propagator::new(user, gravity).map_err(|e| at_epoch(e, start))?;
    let relay_props: Vec<Propagator> = relays
        .iter()
        .map(|r| Propagator::new(r, gravity))
        .collect::<Result<_, _>>()
        .map_err(|e| at_epoch(e, start))?;

    let n_steps = (window_s / step_s).ceil().max(1.0) as usize;
    let mut steps = Vec::with_capacity(n_steps);
    let mut relay_states = Vec::with_capacity(relays.len());

    for k in 0..n_steps {
        let at = start + Duration::nanoseconds((k as f64 * step_s * 1e9).round() as i64);
        let user_state = user_prop.state_at(at).map_err(|e| at_epoch(e, at))?;
        relay_states.clear();
        for p in &relay_props {
            relay_states.push(p.state_at(at).map_err(|e| at_epoch(e, at))?);
        }
        let user_lat = subpoint(&user_state).lat_deg;
        let region = classify_ssdb(user_lat, &cfg.ssdb);

        let radius = match strategy {
            TraceStrategy::Nearest => f64::INFINITY,
            _ => cfg.search_radius_km,
        };
        let cands = candidates_within(&user_state, &relay_states, radius)
            .expect("states share an epoch");

        let result = match strategy {
            TraceStrategy::Nearest => match min_by_key(cands.iter(), |i, g| (g.distance_km, i)) {
                Some((idx, g)) => SelectionResult {
                    chosen: Some(idx),
                    rule_fired: SelectionRule::MinDistanceUnderVmax,
                    geometry: Some(g),
                    snr_db: radio.snr_db(&g),
                },
                None => SelectionResult::disconnected(),
            },
            TraceStrategy::MinVelocity => {
                match min_by_key(cands.iter(), |i, g| (g.relative_speed_kms, i)) {
                    Some((idx, g)) => SelectionResult {
                        chosen: Some(idx),
                        rule_fired: SelectionRule::OutsideMinVelocity,
                        geometry: Some(g),
                        snr_db: radio.snr_db(&g),
                    },
                    None => SelectionResult::disconnected(),
                }
            }
            TraceStrategy::VgProximity => {
                match min_by_key(cands.iter(), |i, g| {
                    ((g.relative_speed_kms - cfg.v_ground_kms).abs(), i)
                }) {
                    Some((idx, g)) => SelectionResult {
                        chosen: Some(idx),
                        rule_fired: SelectionRule::MinDistanceUnderVmax,
                        geometry: Some(g),
                        snr_db: radio.snr_db(&g),
                    },
                    None => SelectionResult::disconnected(),
                }
            }
            TraceStrategy::Dual => select_dual(region, &cands, cfg, radio),
        };

        let rule = match strategy {
            TraceStrategy::Dual => result.rule_fired.as_str(),
            other => {
                if result.chosen.is_some() {
                    other.as_str()
                } else {
                    SelectionRule::Disconnected.as_str()
                }
            }
        };
        steps.push(TraceStep {
            epoch: at,
            user_subpoint_lat_deg: user_lat,
            region,
            chosen_catalog_id: result.chosen.map(|i| relays[i].catalog_id),
            geometry: result.geometry,
            rule,
            snr_db: result.snr_db,
        });
    }

    let sessions = session_spans(&steps);
    Ok(SelectionTrace {
        steps,
        sessions,
        step_seconds: step_s,
    })
}

fn session_spans(steps: &[TraceStep]) -> Vec<SessionSpan> {
    let mut out = Vec::new();
    let mut current: Option<SessionSpan> = None;
    for (k, step) in steps.iter().enumerate() {
        match (step.chosen_catalog_id, &mut current) {
            (Some(id), Some(span)) if span.catalog_id == id => span.steps += 1,
            (Some(id), slot) => {
                if let Some(done) = slot.take() {
                    out.push(done);
                }
                *slot = Some(SessionSpan {
                    catalog_id: id,
                    start_step: k,
                    steps: 1,
                });
            }
            (None, slot) => {
                if let Some(done) = slot.take() {
                    out.push(done);
                }
            }
        }
    }
    if let Some(done) = current {
        out.push(done);
    }
    out
}

/// Convenience wrapper using default gravity.
#[allow(clippy::too_many_arguments)]
pub fn selection_trace_default(
    user: &OrbitalElements,
    relays: &[OrbitalElements],
    start: DateTime<Utc>,
    window_s: f64,
    step_s: f64,
    strategy: TraceStrategy,
    cfg: &SelectionConfig,
    radio: &RadioConfig,
) -> Result<SelectionTrace, TraceError> {
    selection_trace(
        user, relays, start, window_s, step_s, strategy, cfg, radio, WGS72,
    )
}

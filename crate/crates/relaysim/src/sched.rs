//! Session scheduling: value matrices from backlogs and route quality,
//! switching penalties, and the capacity-constrained assignment solve.

use crate::assign::max_weight_assignment;
use serde::Deserialize;
use thiserror::Error;

/// How the switching penalty enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// Penalize only links absent from the previous plan (default): the
    /// penalty then steers the argmax toward persisting links.
    #[default]
    NewLinksOnly,
    /// Penalize every active link, as the objective reads literally; a
    /// uniform factor that never changes the argmax.
    AllLinks,
}

/// One session's assignment problem between N relays and M users.
#[derive(Debug, Clone)]
pub struct SessionProblem {
    pub session_index: u64,
    pub n_relays: usize,
    pub m_users: usize,
    /// Row-major N x M value matrix (bits deliverable, backlog-capped).
    pub value: Vec<f64>,
    /// Row-major N x M feasibility mask.
    pub feasible: Vec<bool>,
    /// Max concurrent links per relay.
    pub capacity: Vec<u32>,
    /// Previous assignment, one entry per user.
    pub previous: Option<Vec<Option<usize>>>,
    /// Fraction of a session's value lost to a handover, in [0, 1).
    pub penalty_fraction: f64,
    pub penalty_mode: PenaltyMode,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
}

impl SessionProblem {
    #[inline]
    pub fn value_at(&self, relay: usize, user: usize) -> f64 {
        self.value[relay * self.m_users + user]
    }

    #[inline]
    pub fn feasible_at(&self, relay: usize, user: usize) -> bool {
        self.feasible[relay * self.m_users + user]
    }
}

/// Assignment for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPlan {
    /// Chosen relay per user; at most one link per user by construction.
    pub assignment: Vec<Option<usize>>,
    /// Active links per relay.
    pub per_relay_load: Vec<u32>,
    /// Penalized objective actually maximized, in bits.
    pub objective: f64,
    /// Links present in this plan but not the previous one.
    pub switches: u32,
}

impl AssignmentPlan {
    /// (relay, user) pairs in user order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(user, relay)| relay.map(|r| (r, user)))
    }
}

/// Builds the session problem: `value = min(backlog, deliverable)` on
/// feasible pairs, zero elsewhere.
pub fn build_session(
    session_index: u64,
    backlogs_bits: &[f64],
    deliverable_bits: &[f64],
    feasible: &[bool],
    capacity: &[u32],
    previous: Option<&[Option<usize>]>,
    penalty_fraction: f64,
) -> Result<SessionProblem, SchedError> {
    let m_users = backlogs_bits.len();
    let n_relays = capacity.len();
    if deliverable_bits.len() != n_relays * m_users {
        return Err(SchedError::DimensionMismatch("deliverable matrix"));
    }
    if feasible.len() != n_relays * m_users {
        return Err(SchedError::DimensionMismatch("feasibility mask"));
    }
    if let Some(prev) = previous {
        if prev.len() != m_users {
            return Err(SchedError::DimensionMismatch("previous plan"));
        }
    }
    if !(0.0..1.0).contains(&penalty_fraction) {
        return Err(SchedError::DimensionMismatch("penalty fraction"));
    }
    let mut value = vec![0.0; n_relays * m_users];
    for r in 0..n_relays {
        for (u, backlog) in backlogs_bits.iter().enumerate() {
            let k = r * m_users + u;
            if feasible[k] {
                value[k] = backlog.min(deliverable_bits[k]).max(0.0);
            }
        }
    }
    Ok(SessionProblem {
        session_index,
        n_relays,
        m_users,
        value,
        feasible: feasible.to_vec(),
        capacity: capacity.to_vec(),
        previous: previous.map(|p| p.to_vec()),
        penalty_fraction,
        penalty_mode: PenaltyMode::default(),
    })
}

impl SessionProblem {
    /// Penalized weight of a (relay, user) pair.
    fn weight(&self, relay: usize, user: usize) -> f64 {
        let v = self.value_at(relay, user);
        let is_new = match (&self.penalty_mode, &self.previous) {
            (PenaltyMode::AllLinks, _) => true,
            (PenaltyMode::NewLinksOnly, Some(prev)) => prev[user] != Some(relay),
            (PenaltyMode::NewLinksOnly, None) => true,
        };
        if is_new {
            v * (1.0 - self.penalty_fraction)
        } else {
            v
        }
    }
}

/// Solves one session optimally under capacity and one-link-per-user
/// constraints. Relays with capacity above one are expanded into unit
/// slots before the one-to-one matching.
pub fn solve_session(problem: &SessionProblem) -> AssignmentPlan {
    let m = problem.m_users;
    let n = problem.n_relays;

    // Candidate pairs with positive penalized weight.
    let mut users_per_relay = vec![0u32; n];
    let mut has_pair = vec![false; m];
    let mut any = false;
    for (r, relay_users) in users_per_relay.iter_mut().enumerate() {
        for (u, user_has_pair) in has_pair.iter_mut().enumerate() {
            if problem.feasible_at(r, u) && problem.weight(r, u) > 0.0 {
                *relay_users += 1;
                *user_has_pair = true;
                any = true;
            }
        }
    }
    if !any {
        return AssignmentPlan {
            assignment: vec![None; m],
            per_relay_load: vec![0; n],
            objective: 0.0,
            switches: 0,
        };
    }

    // Slot expansion: capacity capped by the number of interested users.
    let mut slot_relay = Vec::new();
    for (r, relay_users) in users_per_relay.iter().enumerate() {
        let slots = problem.capacity[r].min(*relay_users);
        for _ in 0..slots {
            slot_relay.push(r);
        }
    }

    let rows: Vec<usize> = (0..m).filter(|&u| has_pair[u]).collect();
    let weights: Vec<Vec<f64>> = rows
        .iter()
        .map(|&u| {
            slot_relay
                .iter()
                .map(|&r| {
                    if problem.feasible_at(r, u) {
                        problem.weight(r, u).max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let matched = max_weight_assignment(&weights);

    let mut assignment = vec![None; m];
    let mut per_relay_load = vec![0u32; n];
    let mut objective = 0.0;
    let mut switches = 0u32;
    for (row, slot) in matched.iter().enumerate() {
        if let Some(slot) = slot {
            let user = rows[row];
            let relay = slot_relay[*slot];
            assignment[user] = Some(relay);
            per_relay_load[relay] += 1;
            objective += problem.weight(relay, user);
            let was_held = problem
                .previous
                .as_ref()
                .map(|p| p[user] == Some(relay))
                .unwrap_or(false);
            if !was_held {
                switches += 1;
            }
        }
    }
    AssignmentPlan {
        assignment,
        per_relay_load,
        objective,
        switches,
    }
}

/// Solves a horizon of sessions greedily, threading each realized plan into
/// the next session's penalty terms.
pub fn schedule_horizon(
    sessions: u64,
    mut build: impl FnMut(u64, Option<&[Option<usize>]>) -> Result<SessionProblem, SchedError>,
) -> Result<Vec<AssignmentPlan>, SchedError> {
    let mut plans: Vec<AssignmentPlan> = Vec::with_capacity(sessions as usize);
    let mut previous: Option<Vec<Option<usize>>> = None;
    for t in 0..sessions {
        let problem = build(t, previous.as_deref())?;
        let plan = solve_session(&problem);
        previous = Some(plan.assignment.clone());
        plans.push(plan);
    }
    Ok(plans)
}

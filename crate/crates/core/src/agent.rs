//! Per-agent state: execution mode, local view, movement, and message
//! construction/integration.
//!
//! Agents alternate between a random mode (fixed-length steps in random
//! directions) and a gradient mode (steps along the estimated objective
//! gradient, with length proportional to its magnitude). Mode switches are
//! decided immediately before each move from the current gradient magnitude,
//! with an optional probabilistic escape out of gradient mode that kicks off
//! a forced straight-line walk.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comms::{EventRecord, Message, ReportedLocation};
use crate::density::GradientVector;
use crate::geometry::{Point, Region};
use crate::{AgentId, EventId, Tick};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionMode {
    Random,
    Gradient,
}

impl ExecutionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExecutionMode::Random => "random",
            ExecutionMode::Gradient => "gradient",
        }
    }
}

/// Mode-switch thresholds and the probabilistic escape parameters.
/// Thresholds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    /// An agent in random mode switches to gradient mode when the gradient
    /// magnitude rises strictly above this.
    pub r_to_g_min_grad: f64,
    /// An agent in gradient mode switches to random mode when the gradient
    /// magnitude falls strictly below this.
    pub g_to_r_max_grad: f64,
    /// Probability of leaving gradient mode per move even when the gradient
    /// says to stay.
    pub g_to_r_prob: f64,
    /// Number of same-direction steps taken right after a probabilistic
    /// switch back to random mode.
    pub g_to_r_first_steps: u32,
}

impl SwitchParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.r_to_g_min_grad >= 0.0) {
            return Err(format!("r_to_g_min_grad must be >= 0, got {}", self.r_to_g_min_grad));
        }
        if !(self.g_to_r_max_grad >= 0.0) {
            return Err(format!("g_to_r_max_grad must be >= 0, got {}", self.g_to_r_max_grad));
        }
        if !(0.0..=1.0).contains(&self.g_to_r_prob) {
            return Err(format!("g_to_r_prob must be in [0, 1], got {}", self.g_to_r_prob));
        }
        Ok(())
    }
}

/// Latest valid location report received from another agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationReport {
    pub pos: Point,
    pub reported_at: Tick,
}

/// An agent's accumulated knowledge of the system: known events, the latest
/// valid locations of other agents, and the messages already seen.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentView {
    /// Known events in arrival order; records arrive at most
    /// `vis_time + still_time` ticks after occurring, so occurrence ticks
    /// here are sorted up to that bounded skew.
    known_events: VecDeque<EventRecord>,
    known_event_ids: HashSet<EventId>,
    /// Latest valid location per reporting agent; agents whose latest report
    /// withheld coordinates have no entry.
    pub known_locations: BTreeMap<AgentId, LocationReport>,
    /// (origin, seq) pairs already received, for duplicate suppression.
    pub seen_messages: HashSet<(AgentId, u64)>,
}

impl AgentView {
    /// Adds an event record unless its id is already known.
    /// Returns whether the record was new.
    pub fn insert_event(&mut self, rec: EventRecord) -> bool {
        if self.known_event_ids.insert(rec.id) {
            self.known_events.push_back(rec);
            true
        } else {
            false
        }
    }

    pub fn contains_event(&self, id: EventId) -> bool {
        self.known_event_ids.contains(&id)
    }

    pub fn event_count(&self) -> usize {
        self.known_events.len()
    }

    pub fn events(&self) -> impl Iterator<Item = &EventRecord> {
        self.known_events.iter()
    }

    /// Drops known events that occurred before `cutoff`. Anything older than
    /// the density window can never count again, so forgetting it is safe;
    /// a record hiding behind a newer arrival is dropped once it reaches the
    /// front.
    pub fn prune_events_before(&mut self, cutoff: Tick) {
        while let Some(rec) = self.known_events.front() {
            if rec.occurred_at < cutoff {
                self.known_event_ids.remove(&rec.id);
                self.known_events.pop_front();
            } else {
                break;
            }
        }
    }

    /// Positions of all agents with a currently valid location report, in
    /// ascending agent order.
    pub fn valid_neighbor_positions(&self) -> Vec<Point> {
        self.known_locations.values().map(|r| r.pos).collect()
    }
}

/// Full per-agent simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: Point,
    pub mode: ExecutionMode,
    pub view: AgentView,
    /// Events sensed since the last move, drained into the next message.
    pub sensed_buffer: Vec<EventRecord>,
    pub next_move_tick: Tick,
    pub forced_steps_left: u32,
    /// Direction (radians) of the current forced walk, if any.
    pub forced_direction: f64,
    seq: u64,
}

/// A move's outcome, including the pre-clamp displacement for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveStep {
    pub new_pos: Point,
    pub dx: f64,
    pub dy: f64,
    pub forced: bool,
}

impl AgentState {
    pub fn new(id: AgentId, pos: Point) -> Self {
        AgentState {
            id,
            pos,
            mode: ExecutionMode::Random,
            view: AgentView::default(),
            sensed_buffer: Vec::new(),
            next_move_tick: 0,
            forced_steps_left: 0,
            forced_direction: 0.0,
            seq: 0,
        }
    }

    /// Applies a mode decision, drawing the forced-walk direction when the
    /// decision initiates one. Entering gradient mode always cancels any
    /// forced walk in progress.
    pub fn apply_mode_decision<R: Rng + ?Sized>(
        &mut self,
        decision: (ExecutionMode, bool),
        params: &SwitchParams,
        rng: &mut R,
    ) {
        let (mode, forced_init) = decision;
        if forced_init {
            self.forced_steps_left = params.g_to_r_first_steps;
            self.forced_direction = rng.gen::<f64>() * TAU;
        }
        if mode == ExecutionMode::Gradient {
            self.forced_steps_left = 0;
        }
        self.mode = mode;
    }

    /// Computes the agent's next position without applying it.
    ///
    /// Random mode displaces by `step_size` along a fresh uniform direction,
    /// or along the stored forced direction while a forced walk is active
    /// (decrementing its counter). Gradient mode displaces by
    /// `step_size * (gx, gy)`; a zero gradient yields no movement. The result
    /// is clamped component-wise onto the region.
    pub fn next_position<R: Rng + ?Sized>(
        &mut self,
        grad: &GradientVector,
        step_size: f64,
        region: &Region,
        rng: &mut R,
    ) -> Point {
        self.next_position_step(grad, step_size, region, rng).new_pos
    }

    pub fn next_position_step<R: Rng + ?Sized>(
        &mut self,
        grad: &GradientVector,
        step_size: f64,
        region: &Region,
        rng: &mut R,
    ) -> MoveStep {
        let (dx, dy, forced) = match self.mode {
            ExecutionMode::Gradient => (step_size * grad.gx, step_size * grad.gy, false),
            ExecutionMode::Random => {
                let (angle, forced) = if self.forced_steps_left > 0 {
                    self.forced_steps_left -= 1;
                    (self.forced_direction, true)
                } else {
                    (rng.gen::<f64>() * TAU, false)
                };
                (step_size * angle.cos(), step_size * angle.sin(), forced)
            }
        };
        let new_pos = region.clamp(Point::new(self.pos.x + dx, self.pos.y + dy));
        MoveStep { new_pos, dx, dy, forced }
    }

    /// Builds the message sent right after a move: the agent's id, a fresh
    /// sequence number, its location (withheld in random mode), and the
    /// drained buffer of events sensed since the previous move.
    pub fn build_message(&mut self) -> Message {
        let location = match self.mode {
            ExecutionMode::Gradient => ReportedLocation::Valid(self.pos),
            ExecutionMode::Random => ReportedLocation::Withheld,
        };
        let seq = self.seq;
        self.seq += 1;
        Message {
            origin: self.id,
            seq,
            location,
            events: std::mem::take(&mut self.sensed_buffer),
        }
    }
}

/// Decides the execution mode for the move an agent is about to make.
///
/// Deterministic threshold rules run first: a random-mode agent switches to
/// gradient mode when the magnitude is strictly above `r_to_g_min_grad`, and
/// a gradient-mode agent drops back to random mode when it is strictly below
/// `g_to_r_max_grad`. A gradient-mode agent that the thresholds would keep
/// in place escapes to random mode with probability `g_to_r_prob`; the
/// returned flag marks that escape, which initiates a forced walk.
///
/// While a forced walk is in progress (`forced_walk_active`), the agent is
/// committed to it: it stays in random mode until the counter runs out. The
/// walk's whole purpose is to carry the agent away from the density it just
/// escaped, which an immediate threshold re-switch would undo.
pub fn decide_mode<R: Rng + ?Sized>(
    mode: ExecutionMode,
    forced_walk_active: bool,
    grad_mag: f64,
    params: &SwitchParams,
    rng: &mut R,
) -> (ExecutionMode, bool) {
    debug_assert!(grad_mag >= 0.0);
    match mode {
        ExecutionMode::Random => {
            if !forced_walk_active && grad_mag > params.r_to_g_min_grad {
                (ExecutionMode::Gradient, false)
            } else {
                (ExecutionMode::Random, false)
            }
        }
        ExecutionMode::Gradient => {
            if grad_mag < params.g_to_r_max_grad {
                (ExecutionMode::Random, false)
            } else if rng.gen::<f64>() < params.g_to_r_prob {
                (ExecutionMode::Random, true)
            } else {
                (ExecutionMode::Gradient, false)
            }
        }
    }
}

/// Merges a received message into a view.
///
/// A message already seen (same origin and sequence number) leaves the view
/// untouched and is not forwarded. Otherwise its events are merged (known
/// ids dropped), the origin's location entry is updated or removed according
/// to the reported location, and the message is forwarded. The caller
/// guarantees the receiving agent is not the origin.
pub fn integrate_message(view: &mut AgentView, msg: &Message, now: Tick) -> bool {
    if !view.seen_messages.insert((msg.origin, msg.seq)) {
        return false;
    }
    for rec in &msg.events {
        view.insert_event(*rec);
    }
    match msg.location {
        ReportedLocation::Valid(pos) => {
            view.known_locations
                .insert(msg.origin, LocationReport { pos, reported_at: now });
        }
        ReportedLocation::Withheld => {
            view.known_locations.remove(&msg.origin);
        }
    }
    true
}

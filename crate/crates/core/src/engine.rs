//! The deterministic tick loop: event generation, detection semantics, agent
//! move/communication scheduling, metric accounting, and multi-replication
//! aggregation.
//!
//! Detection semantics: an agent gets one Bernoulli trial per event at the
//! occurrence instant (from its current position), plus one trial per own
//! subsequent move while the event's footprint is still visible. Trials are
//! tied to position changes; a stationary agent never re-rolls, and a move
//! that ends where it started attempts nothing.
//!
//! Within a tick the order is fixed: new events (with occurrence-instant
//! detection from pre-move positions), then moves in ascending agent order.
//! Each mover rebuilds its density estimate, computes the gradient
//! (discounted by the known valid locations of other agents), decides its
//! mode from the undiscounted own-density magnitude, moves, attempts
//! still-visible footprints from its new position, and broadcasts; messages
//! deliver immediately, so later movers see earlier movers' reports. Events
//! born this tick are never footprint-detectable the same tick.

use std::collections::{HashMap, VecDeque};

use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::agent::{decide_mode, AgentState, ExecutionMode, SwitchParams};
use crate::comms::{broadcast, EventRecord};
use crate::density::estimate_density;
use crate::geometry::{GeometryError, Grid, Point, Region};
use crate::scenario::{sample_events, Event, ScenarioSpec, ScenarioError};
use crate::seeds;
use crate::sensing::{attempt_detection, detection_prob, SensingParams};
use crate::{AgentId, Tick};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("inconsistent configuration: {0}")]
    InconsistentConfig(String),
    #[error("aggregation requires at least 2 replications, got {0}")]
    TooFewReplications(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The full parameter set of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n_agents: u32,
    /// Ticks between consecutive moves of one agent.
    pub still_time: Tick,
    pub step_size: f64,
    /// Footprint visibility time; must match the scenario's.
    pub vis_time: Tick,
    /// Width of the density-estimation window.
    pub time_window: Tick,
    pub switch: SwitchParams,
    pub sensing: SensingParams,
    pub region: Region,
    /// Grid cell side for density estimation.
    pub delta: f64,
    pub max_t: Tick,
    /// Width of the window for the window-based metrics.
    pub metric_window_size: Tick,
    /// Give each agent a random move-phase offset in [0, still_time);
    /// disable to start all agents on the same phase.
    pub random_phase_offsets: bool,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InconsistentConfig(msg));
        if self.n_agents == 0 {
            return bad("n_agents must be positive".into());
        }
        if self.still_time == 0 {
            return bad("still_time must be positive".into());
        }
        if !(self.step_size > 0.0) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if self.time_window == 0 {
            return bad("time_window must be positive".into());
        }
        if self.max_t == 0 {
            return bad("max_t must be positive".into());
        }
        if self.metric_window_size == 0 {
            return bad("metric_window_size must be positive".into());
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.region.width > 0.0 && self.region.height > 0.0) {
            return bad("region dimensions must be positive".into());
        }
        if !(self.sensing.r_s > 0.0 && self.sensing.r_c > 0.0) {
            return bad("sensing radii must be positive".into());
        }
        self.switch
            .validate()
            .map_err(EngineError::InconsistentConfig)
    }
}

/// Final outcome of one event, sufficient for every metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOutcome {
    pub occurred_at: Tick,
    pub detected: bool,
    /// Number of agents that took notice of the event.
    pub notice_count: u32,
}

/// Periodic record of one agent's state for external animation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub tick: Tick,
    pub agent: AgentId,
    pub pos: Point,
    pub mode: ExecutionMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Record agent snapshots every this many ticks; 0 disables them.
    pub snapshot_interval: Tick,
    /// Run the structural-invariant audit during the simulation and report
    /// violations in the result. Costs extra time and memory.
    pub check_invariants: bool,
    /// Keep one `EventOutcome` per event in the result for offline metric
    /// computation.
    pub collect_outcomes: bool,
}

/// Metrics and diagnostics of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Percentage of events detected by at least one agent.
    pub global_fraction: f64,
    /// Mean over agents of the percentage of events each took notice of.
    pub avg_local_fraction: f64,
    /// Per-tick window-based (global, local) percentages; `None` where no
    /// event occurred inside the window.
    pub window_series: Vec<Option<(f64, f64)>>,
    pub snapshots: Vec<Snapshot>,
    pub gradient_mode_moves: u64,
    pub random_mode_moves: u64,
    pub messages_sent: u64,
    pub deliveries: u64,
    /// Hash of the generated event stream (ids, positions, ticks); equal
    /// across behavior variants under the same seed.
    pub event_fingerprint: u64,
    /// Structural-invariant violations found when the audit was enabled.
    pub invariant_violations: Vec<String>,
    /// Per-event outcomes in occurrence order, when collected.
    pub outcomes: Vec<EventOutcome>,
}

/// Percentage of events detected by at least one agent.
pub fn global_fraction(events: &[EventOutcome]) -> f64 {
    if events.is_empty() {
        return 0.0;
    }
    let detected = events.iter().filter(|e| e.detected).count();
    100.0 * detected as f64 / events.len() as f64
}

/// Mean over agents of the percentage of events each agent took notice of.
pub fn avg_local_fraction(events: &[EventOutcome], n_agents: u32) -> f64 {
    assert!(n_agents > 0);
    if events.is_empty() {
        return 0.0;
    }
    let notice_total: u64 = events.iter().map(|e| e.notice_count as u64).sum();
    100.0 * notice_total as f64 / (n_agents as f64 * events.len() as f64)
}

/// Both metrics restricted to events occurring within the closed window of
/// the given width centered at `t`. `None` when no event falls inside.
pub fn window_metrics(
    events: &[EventOutcome],
    n_agents: u32,
    t: Tick,
    window: Tick,
) -> Option<(f64, f64)> {
    assert!(window > 0);
    let half = window / 2;
    let lo = t.saturating_sub(half);
    let hi = t + half;
    let mut n = 0u64;
    let mut detected = 0u64;
    let mut notice = 0u64;
    for e in events {
        if e.occurred_at >= lo && e.occurred_at <= hi {
            n += 1;
            detected += e.detected as u64;
            notice += e.notice_count as u64;
        }
    }
    if n == 0 {
        None
    } else {
        Some((
            100.0 * detected as f64 / n as f64,
            100.0 * notice as f64 / (n_agents as f64 * n as f64),
        ))
    }
}

/// Mean and 95% confidence-interval half-width of one metric over
/// replications (normal approximation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_half_width: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ci_half_width = if values.len() >= 2 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * var.sqrt() / n.sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, ci_half_width }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowAggregate {
    pub global: MetricSummary,
    pub local: MetricSummary,
    /// Replications contributing a value at this tick.
    pub n: usize,
}

/// Cross-replication aggregate of the cumulative metrics and the per-tick
/// window series.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub replications: usize,
    pub global: MetricSummary,
    pub local: MetricSummary,
    pub window: Vec<Option<WindowAggregate>>,
}

/// Aggregates replication results into means with 95% confidence intervals.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateResult, EngineError> {
    if results.len() < 2 {
        return Err(EngineError::TooFewReplications(results.len()));
    }
    let globals: Vec<f64> = results.iter().map(|r| r.global_fraction).collect();
    let locals: Vec<f64> = results.iter().map(|r| r.avg_local_fraction).collect();
    let series_len = results[0].window_series.len();
    let mut window = Vec::with_capacity(series_len);
    for t in 0..series_len {
        let values: Vec<(f64, f64)> = results
            .iter()
            .filter_map(|r| r.window_series[t])
            .collect();
        if values.is_empty() {
            window.push(None);
        } else {
            let g: Vec<f64> = values.iter().map(|v| v.0).collect();
            let l: Vec<f64> = values.iter().map(|v| v.1).collect();
            window.push(Some(WindowAggregate {
                global: summarize(&g),
                local: summarize(&l),
                n: values.len(),
            }));
        }
    }
    Ok(AggregateResult {
        replications: results.len(),
        global: summarize(&globals),
        local: summarize(&locals),
        window,
    })
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Audit state for the structural-invariant checks.
struct InvariantAudit {
    /// (agent, tick) -> (mode, position) for every move taken.
    move_log: HashMap<(AgentId, Tick), (ExecutionMode, Point)>,
    /// Pre-clamp displacements of each agent's current forced walk.
    forced_segment: Vec<Vec<(f64, f64)>>,
    violations: Vec<String>,
}

impl InvariantAudit {
    fn new(n_agents: usize) -> Self {
        InvariantAudit {
            move_log: HashMap::new(),
            forced_segment: vec![Vec::new(); n_agents],
            violations: Vec::new(),
        }
    }
}

struct World<'a> {
    params: &'a SimParams,
    spec: &'a ScenarioSpec,
    grid: Grid,
    agents: Vec<AgentState>,
    /// Live events in occurrence (= id) order. An event stays here until no
    /// message can mention it any more: `vis_time + still_time` ticks past
    /// its occurrence.
    pool: VecDeque<Event>,
    /// Event id of `pool.front()`; ids in the pool are consecutive.
    pool_front_id: u64,
    next_event_id: u64,
    events_rng: ChaCha12Rng,
    agents_rng: ChaCha12Rng,
    detection_rng: ChaCha12Rng,
    /// Per-occurrence-tick totals, filled as events finalize.
    events_per_tick: Vec<u64>,
    detected_per_tick: Vec<u64>,
    notice_sum_per_tick: Vec<u64>,
    /// Counts position changes per agent; detection trials key off these.
    move_epoch: Vec<u64>,
    gradient_mode_moves: u64,
    random_mode_moves: u64,
    messages_sent: u64,
    deliveries: u64,
    fingerprint: u64,
    snapshots: Vec<Snapshot>,
    outcomes: Vec<EventOutcome>,
    options: RunOptions,
    audit: Option<InvariantAudit>,
    #[cfg(debug_assertions)]
    /// event id -> agent -> move epoch of the last detection attempt.
    attempt_log: HashMap<u64, HashMap<AgentId, u64>>,
}

impl<'a> World<'a> {
    fn new(
        params: &'a SimParams,
        spec: &'a ScenarioSpec,
        seed: u64,
        options: RunOptions,
    ) -> World<'a> {
        use rand::Rng;

        let grid = Grid::new(params.region, params.delta);
        let mut init_rng = seeds::stream_rng(seed, seeds::INIT_STREAM);
        let n = params.n_agents as usize;
        let mut agents: Vec<AgentState> = (0..n)
            .map(|i| {
                let pos = Point::new(
                    init_rng.gen_range(0.0..params.region.width),
                    init_rng.gen_range(0.0..params.region.height),
                );
                AgentState::new(AgentId(i as u32), pos)
            })
            .collect();
        for agent in &mut agents {
            agent.next_move_tick = if params.random_phase_offsets {
                init_rng.gen_range(0..params.still_time)
            } else {
                0
            };
        }

        World {
            params,
            spec,
            grid,
            agents,
            pool: VecDeque::new(),
            pool_front_id: 0,
            next_event_id: 0,
            events_rng: seeds::stream_rng(seed, seeds::EVENT_STREAM),
            agents_rng: seeds::stream_rng(seed, seeds::AGENT_STREAM),
            detection_rng: seeds::stream_rng(seed, seeds::DETECTION_STREAM),
            events_per_tick: vec![0; params.max_t as usize],
            detected_per_tick: vec![0; params.max_t as usize],
            notice_sum_per_tick: vec![0; params.max_t as usize],
            move_epoch: vec![0; n],
            gradient_mode_moves: 0,
            random_mode_moves: 0,
            messages_sent: 0,
            deliveries: 0,
            fingerprint: FNV_OFFSET,
            snapshots: Vec::new(),
            outcomes: Vec::new(),
            options,
            audit: options.check_invariants.then(|| InvariantAudit::new(n)),
            #[cfg(debug_assertions)]
            attempt_log: HashMap::new(),
        }
    }

    fn pool_event_mut(&mut self, id: u64) -> &mut Event {
        let idx = (id - self.pool_front_id) as usize;
        &mut self.pool[idx]
    }

    #[cfg(debug_assertions)]
    fn log_attempt(&mut self, event_id: u64, agent: AgentId, epoch: u64) {
        let prev = self
            .attempt_log
            .entry(event_id)
            .or_default()
            .insert(agent, epoch);
        debug_assert!(
            prev.map_or(true, |p| p < epoch),
            "repeated detection attempt at one position (event {event_id}, agent {})",
            agent.0
        );
    }

    #[cfg(not(debug_assertions))]
    fn log_attempt(&mut self, _event_id: u64, _agent: AgentId, _epoch: u64) {}

    /// Marks a successful detection: the event's bookkeeping, the agent's
    /// notice, and the record entering the agent's buffer and view.
    fn record_detection(event: &mut Event, agent: &mut AgentState) {
        let rec = EventRecord {
            id: event.id,
            pos: event.pos,
            occurred_at: event.occurred_at,
        };
        event.detected_by.insert(agent.id);
        event.noticed_by.insert(agent.id);
        agent.sensed_buffer.push(rec);
        agent.view.insert_event(rec);
    }

    /// Retires one event into the per-tick totals.
    fn finalize_event(&mut self, event: Event) {
        debug_assert!(
            event.detected_by.is_subset(&event.noticed_by),
            "event detected by an agent that never noticed it"
        );
        if let Some(audit) = &mut self.audit {
            if !event.detected_by.is_subset(&event.noticed_by) {
                audit.violations.push(format!(
                    "event {}: detected_by not a subset of noticed_by",
                    event.id.0
                ));
            }
        }
        let t = event.occurred_at as usize;
        self.detected_per_tick[t] += !event.detected_by.is_empty() as u64;
        self.notice_sum_per_tick[t] += event.noticed_by.len() as u64;
        if self.options.collect_outcomes {
            self.outcomes.push(EventOutcome {
                occurred_at: event.occurred_at,
                detected: !event.detected_by.is_empty(),
                notice_count: event.noticed_by.len() as u32,
            });
        }
        #[cfg(debug_assertions)]
        self.attempt_log.remove(&event.id.0);
        self.pool_front_id += 1;
    }

    fn step(&mut self, t: Tick) {
        // Retire events that no message can mention any more.
        while let Some(front) = self.pool.front() {
            if front.visible_until + self.params.still_time < t {
                let event = self.pool.pop_front().expect("front exists");
                self.finalize_event(event);
            } else {
                break;
            }
        }

        // New events for this tick; every agent gets one detection attempt
        // per event from its current position.
        let mut new_events = sample_events(
            self.spec,
            &self.params.region,
            t,
            &mut self.next_event_id,
            &mut self.events_rng,
        );
        self.events_per_tick[t as usize] = new_events.len() as u64;
        for event in &mut new_events {
            self.fingerprint = fnv1a(self.fingerprint, &event.id.0.to_le_bytes());
            self.fingerprint = fnv1a(self.fingerprint, &event.pos.x.to_le_bytes());
            self.fingerprint = fnv1a(self.fingerprint, &event.pos.y.to_le_bytes());
            self.fingerprint = fnv1a(self.fingerprint, &event.occurred_at.to_le_bytes());
            for i in 0..self.agents.len() {
                let p = detection_prob(self.agents[i].pos, event.pos, &self.params.sensing);
                if p > 0.0 {
                    let agent_id = self.agents[i].id;
                    let epoch = self.move_epoch[i];
                    self.log_attempt(event.id.0, agent_id, epoch);
                    if attempt_detection(&mut self.detection_rng, p).expect("p in [0, 1]") {
                        Self::record_detection(event, &mut self.agents[i]);
                    }
                }
            }
        }
        if self.pool.is_empty() && !new_events.is_empty() {
            self.pool_front_id = new_events[0].id.0;
        }
        self.pool.extend(new_events);

        // Moves, in ascending agent order.
        for i in 0..self.agents.len() {
            if self.agents[i].next_move_tick != t {
                continue;
            }
            self.move_agent(i, t);
            self.agents[i].next_move_tick = t + self.params.still_time;
        }

        if self.options.snapshot_interval > 0 && t % self.options.snapshot_interval == 0 {
            for agent in &self.agents {
                self.snapshots.push(Snapshot {
                    tick: t,
                    agent: agent.id,
                    pos: agent.pos,
                    mode: agent.mode,
                });
            }
        }

        if self.audit.is_some() {
            self.audit_views(t);
        }
    }

    fn move_agent(&mut self, i: usize, t: Tick) {
        let params = self.params;
        let agent_id = self.agents[i].id;

        // Local density estimate over the agent's current view.
        self.agents[i]
            .view
            .prune_events_before(t.saturating_sub(params.time_window));
        let density = {
            let view = &self.agents[i].view;
            estimate_density(
                view.events().map(|r| (r.pos, r.occurred_at)),
                t,
                params.time_window,
                &self.grid,
            )
            .expect("view events lie inside the region")
        };
        let neighbors = self.agents[i].view.valid_neighbor_positions();
        let (grad, own_magnitude) = crate::density::gradient_with_own_magnitude(
            self.agents[i].pos,
            &neighbors,
            &density,
            &params.sensing,
        );

        // Mode decision applies to the move about to be made. It keys off
        // the agent's own-density gradient magnitude: how much event density
        // the agent sees around itself, before discounting cells covered by
        // other agents. The discounted gradient would block agents from
        // joining a well-covered patch at all, which contradicts the
        // clustering the switch thresholds are tuned for.
        let decision = decide_mode(
            self.agents[i].mode,
            self.agents[i].forced_steps_left > 0,
            own_magnitude,
            &params.switch,
            &mut self.agents_rng,
        );
        let forced_initiated = decision.1;
        self.agents[i].apply_mode_decision(decision, &params.switch, &mut self.agents_rng);
        let step = self.agents[i].next_position_step(
            &grad,
            params.step_size,
            &params.region,
            &mut self.agents_rng,
        );
        let moved = step.new_pos != self.agents[i].pos;
        self.agents[i].pos = step.new_pos;
        if moved {
            self.move_epoch[i] += 1;
        }
        match self.agents[i].mode {
            ExecutionMode::Gradient => self.gradient_mode_moves += 1,
            ExecutionMode::Random => self.random_mode_moves += 1,
        }

        if let Some(audit) = &mut self.audit {
            audit
                .move_log
                .insert((agent_id, t), (self.agents[i].mode, step.new_pos));
            if forced_initiated {
                audit.forced_segment[i].clear();
            }
            if step.forced {
                if let Some(&(dx0, dy0)) = audit.forced_segment[i].first() {
                    let cross = dx0 * step.dy - dy0 * step.dx;
                    let scale = (dx0.hypot(dy0) * step.dx.hypot(step.dy)).max(1e-30);
                    if cross.abs() > 1e-9 * scale {
                        audit.violations.push(format!(
                            "agent {}: forced-walk step at tick {t} not collinear",
                            agent_id.0
                        ));
                    }
                }
                audit.forced_segment[i].push((step.dx, step.dy));
            } else {
                audit.forced_segment[i].clear();
            }
        }

        // One attempt per still-visible footprint from the new position.
        // Events born this tick were already attempted at occurrence and are
        // skipped; with vis_time = 0 nothing else qualifies, so footprints
        // are never re-attempted at all.
        if moved {
            let new_pos = self.agents[i].pos;
            let epoch = self.move_epoch[i];
            let in_range: Vec<(u64, f64)> = self
                .pool
                .iter()
                .rev()
                .take_while(|e| e.visible_until >= t)
                .filter(|e| e.occurred_at < t)
                .filter(|e| !e.detected_by.contains(&agent_id))
                .filter_map(|e| {
                    let p = detection_prob(new_pos, e.pos, &params.sensing);
                    (p > 0.0).then_some((e.id.0, p))
                })
                .collect();
            for (id, p) in in_range {
                self.log_attempt(id, agent_id, epoch);
                if attempt_detection(&mut self.detection_rng, p).expect("p in [0, 1]") {
                    let idx = (id - self.pool_front_id) as usize;
                    Self::record_detection(&mut self.pool[idx], &mut self.agents[i]);
                }
            }
        }

        // Send everything sensed since the last move in a single message.
        let msg = self.agents[i].build_message();
        self.messages_sent += 1;
        let report = broadcast(&msg, i, &mut self.agents, &params.sensing, t);
        self.deliveries += report.deliveries.len() as u64;
        for &(recipient, first_receipt) in &report.deliveries {
            if !first_receipt {
                continue;
            }
            for rec in &msg.events {
                self.pool_event_mut(rec.id.0).noticed_by.insert(recipient);
            }
        }
    }

    /// Sweeps every view for location entries that violate random-mode
    /// masking or disagree with the sender's actual move.
    fn audit_views(&mut self, t: Tick) {
        let audit = self.audit.as_mut().expect("audit enabled");
        for agent in &self.agents {
            for (&origin, report) in &agent.view.known_locations {
                match audit.move_log.get(&(origin, report.reported_at)) {
                    None => audit.violations.push(format!(
                        "tick {t}: agent {} holds a location for agent {} with no matching move",
                        agent.id.0, origin.0
                    )),
                    Some(&(mode, pos)) => {
                        if mode != ExecutionMode::Gradient {
                            audit.violations.push(format!(
                                "tick {t}: agent {} holds a valid location for random-mode agent {}",
                                agent.id.0, origin.0
                            ));
                        } else if pos != report.pos {
                            audit.violations.push(format!(
                                "tick {t}: agent {} holds a stale position for agent {}",
                                agent.id.0, origin.0
                            ));
                        }
                    }
                }
            }
        }
    }

    fn finish(mut self, seed: u64) -> RunResult {
        while let Some(event) = self.pool.pop_front() {
            self.finalize_event(event);
        }

        let n_agents = self.params.n_agents as u64;
        let total_events: u64 = self.events_per_tick.iter().sum();
        let total_detected: u64 = self.detected_per_tick.iter().sum();
        let total_notice: u64 = self.notice_sum_per_tick.iter().sum();
        let global_fraction = if total_events == 0 {
            0.0
        } else {
            100.0 * total_detected as f64 / total_events as f64
        };
        let avg_local_fraction = if total_events == 0 {
            0.0
        } else {
            100.0 * total_notice as f64 / (n_agents as f64 * total_events as f64)
        };

        let window_series = self.window_series();

        let mut violations = self
            .audit
            .map(|a| a.violations)
            .unwrap_or_default();
        if avg_local_fraction > global_fraction + 1e-9 {
            violations.push(format!(
                "avg_local_fraction {avg_local_fraction} exceeds global_fraction {global_fraction}"
            ));
        }
        debug_assert!(avg_local_fraction <= global_fraction + 1e-9);

        RunResult {
            seed,
            global_fraction,
            avg_local_fraction,
            window_series,
            snapshots: self.snapshots,
            gradient_mode_moves: self.gradient_mode_moves,
            random_mode_moves: self.random_mode_moves,
            messages_sent: self.messages_sent,
            deliveries: self.deliveries,
            event_fingerprint: self.fingerprint,
            invariant_violations: violations,
            outcomes: self.outcomes,
        }
    }

    /// Sliding-window metric series over the per-tick totals.
    fn window_series(&self) -> Vec<Option<(f64, f64)>> {
        let max_t = self.params.max_t as usize;
        let half = (self.params.metric_window_size / 2) as usize;
        let n_agents = self.params.n_agents as f64;
        let prefix = |xs: &[u64]| {
            let mut acc = vec![0u64; max_t + 1];
            for (i, &x) in xs.iter().enumerate() {
                acc[i + 1] = acc[i] + x;
            }
            acc
        };
        let p_events = prefix(&self.events_per_tick);
        let p_detected = prefix(&self.detected_per_tick);
        let p_notice = prefix(&self.notice_sum_per_tick);

        (0..max_t)
            .map(|t| {
                let lo = t.saturating_sub(half);
                let hi = (t + half).min(max_t - 1);
                let n = p_events[hi + 1] - p_events[lo];
                if n == 0 {
                    None
                } else {
                    let detected = p_detected[hi + 1] - p_detected[lo];
                    let notice = p_notice[hi + 1] - p_notice[lo];
                    Some((
                        100.0 * detected as f64 / n as f64,
                        100.0 * notice as f64 / (n_agents * n as f64),
                    ))
                }
            })
            .collect()
    }
}

/// Runs one replication with default options.
pub fn run(params: &SimParams, spec: &ScenarioSpec, seed: u64) -> Result<RunResult, EngineError> {
    run_with_options(params, spec, seed, RunOptions::default())
}

/// Runs one replication: agents start uniformly at random in the region, in
/// random mode, with per-agent move-phase offsets. Identical inputs produce
/// bit-identical results.
pub fn run_with_options(
    params: &SimParams,
    spec: &ScenarioSpec,
    seed: u64,
    options: RunOptions,
) -> Result<RunResult, EngineError> {
    params.validate()?;
    spec.validate(&params.region)?;
    if spec.max_t != params.max_t {
        return Err(EngineError::InconsistentConfig(format!(
            "scenario max_t {} differs from params max_t {}",
            spec.max_t, params.max_t
        )));
    }
    if spec.vis_time != params.vis_time {
        return Err(EngineError::InconsistentConfig(format!(
            "scenario vis_time {} differs from params vis_time {}",
            spec.vis_time, params.vis_time
        )));
    }

    let mut world = World::new(params, spec, seed, options);
    for t in 0..params.max_t {
        world.step(t);
    }
    Ok(world.finish(seed))
}

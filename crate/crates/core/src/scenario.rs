//! Scripted time-varying event density as a set of rectangular patches,
//! event sampling, and the built-in experiment presets.
//!
//! The density is piecewise constant: each patch is an axis-aligned
//! rectangle with an activity interval, a constant drift velocity, and a
//! relative weight. Events are emitted at a fixed per-tick budget and land
//! in an active patch with probability proportional to weight times the
//! patch's current area clipped to the region.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::SwitchParams;
use crate::engine::SimParams;
use crate::geometry::{Point, Region};
use crate::sensing::SensingParams;
use crate::{AgentId, EventId, Tick};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown preset '{0}' (expected exp1, exp2, or exp3)")]
    UnknownPreset(String),
    #[error("unknown behavior '{0}' (expected random, mixed, or gradient)")]
    UnknownBehavior(String),
    #[error("scale must be in (0, 1], got {0}")]
    InvalidScale(f64),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Axis-aligned rectangle given by its lower-left corner and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Rect { x, y, width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Rect {
        Rect { x: self.x + dx, y: self.y + dy, ..*self }
    }

    /// Half-open containment, matching the grid's cell convention.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.x + self.width && p.y >= self.y && p.y < self.y + self.height
    }

    /// Intersection with the region; `None` when the overlap has zero area.
    pub fn clipped_to(&self, region: &Region) -> Option<Rect> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = (self.x + self.width).min(region.width);
        let y1 = (self.y + self.height).min(region.height);
        if x1 > x0 && y1 > y0 {
            Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
        } else {
            None
        }
    }
}

/// One rectangular density patch: where events fall while it is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub rect_at_start: Rect,
    /// Drift in distance units per tick.
    pub vx: f64,
    pub vy: f64,
    /// Activity interval, inclusive at both ends.
    pub t_start: Tick,
    pub t_end: Tick,
    /// Relative density weight.
    pub weight: f64,
}

impl Patch {
    pub fn is_active(&self, t: Tick) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    /// The patch rectangle at tick `t` (unclipped), or `None` when inactive.
    pub fn rect_at(&self, t: Tick) -> Option<Rect> {
        if !self.is_active(t) {
            return None;
        }
        let elapsed = (t - self.t_start) as f64;
        Some(self.rect_at_start.translated(self.vx * elapsed, self.vy * elapsed))
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.rect_at_start.width <= 0.0 || self.rect_at_start.height <= 0.0 {
            return Err(ScenarioError::Invalid(
                "patch rectangle must have positive area".into(),
            ));
        }
        if self.t_start > self.t_end {
            return Err(ScenarioError::Invalid(format!(
                "patch activity interval [{}, {}] is empty",
                self.t_start, self.t_end
            )));
        }
        if !(self.weight >= 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "patch weight must be nonnegative, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

/// The full event script of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub patches: Vec<Patch>,
    pub total_events: u64,
    pub max_t: Tick,
    /// Footprint visibility time of every event.
    pub vis_time: Tick,
}

impl ScenarioSpec {
    pub fn validate(&self, region: &Region) -> Result<(), ScenarioError> {
        if self.total_events == 0 {
            return Err(ScenarioError::Invalid("total_events must be positive".into()));
        }
        if self.max_t == 0 {
            return Err(ScenarioError::Invalid("max_t must be positive".into()));
        }
        for patch in &self.patches {
            patch.validate()?;
            let r = &patch.rect_at_start;
            let inside = r.x >= 0.0
                && r.y >= 0.0
                && r.x + r.width <= region.width
                && r.y + r.height <= region.height;
            if !inside {
                return Err(ScenarioError::Invalid(format!(
                    "patch start rectangle ({}, {}) {}x{} not inside the region",
                    r.x, r.y, r.width, r.height
                )));
            }
        }
        Ok(())
    }

    /// Number of events emitted at tick `t`. Computed by an integer
    /// accumulator so a full run emits exactly `total_events` even when the
    /// total is not divisible by `max_t`; for divisible totals this is the
    /// constant `total_events / max_t`.
    pub fn events_at_tick(&self, t: Tick) -> u64 {
        debug_assert!(t < self.max_t);
        (t + 1) * self.total_events / self.max_t - t * self.total_events / self.max_t
    }
}

/// One concrete event occurrence with its detection/notice bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: EventId,
    pub pos: Point,
    pub occurred_at: Tick,
    pub visible_until: Tick,
    /// Agents that detected the event (directly, at occurrence or via its
    /// footprint).
    pub detected_by: HashSet<AgentId>,
    /// Agents that took notice: detected it or received it in a message.
    pub noticed_by: HashSet<AgentId>,
}

/// Sum of the weights of the active patches whose current rectangle
/// contains `q`.
pub fn density_weight(spec: &ScenarioSpec, q: Point, t: Tick) -> f64 {
    spec.patches
        .iter()
        .filter_map(|p| p.rect_at(t))
        .zip(spec.patches.iter())
        .filter(|(rect, _)| rect.contains(q))
        .map(|(_, p)| p.weight)
        .sum()
}

/// Emits this tick's events. Each event picks an active patch with
/// probability proportional to weight times clipped area, then a uniform
/// point inside the clipped rectangle. Ids continue from `next_id`. Returns
/// an empty list when no active patch has positive weighted area.
pub fn sample_events<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    region: &Region,
    t: Tick,
    next_id: &mut u64,
    rng: &mut R,
) -> Vec<Event> {
    let count = spec.events_at_tick(t);
    let active: Vec<(Rect, f64)> = spec
        .patches
        .iter()
        .filter(|p| p.weight > 0.0)
        .filter_map(|p| p.rect_at(t).map(|r| (r, p.weight)))
        .filter_map(|(r, w)| r.clipped_to(region).map(|c| (c, w * c.area())))
        .collect();
    let total_weight: f64 = active.iter().map(|(_, w)| w).sum();
    if total_weight <= 0.0 {
        return Vec::new();
    }

    let mut events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut u = rng.gen_range(0.0..total_weight);
        let mut chosen = &active[active.len() - 1].0;
        for (rect, w) in &active {
            if u < *w {
                chosen = rect;
                break;
            }
            u -= w;
        }
        let pos = Point::new(
            rng.gen_range(chosen.x..chosen.x + chosen.width),
            rng.gen_range(chosen.y..chosen.y + chosen.height),
        );
        let id = EventId(*next_id);
        *next_id += 1;
        events.push(Event {
            id,
            pos,
            occurred_at: t,
            visible_until: t + spec.vis_time,
            detected_by: HashSet::new(),
            noticed_by: HashSet::new(),
        });
    }
    events
}

/// The three built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// One 200x200 patch crossing the region left to right.
    Exp1,
    /// Experiment 1 plus a second identical patch trailing it.
    Exp2,
    /// Four static patches of increasing weight activating in sequence,
    /// with persistent event footprints.
    Exp3,
}

impl FromStr for Experiment {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" => Ok(Experiment::Exp1),
            "exp2" => Ok(Experiment::Exp2),
            "exp3" => Ok(Experiment::Exp3),
            other => Err(ScenarioError::UnknownPreset(other.into())),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiment::Exp1 => write!(f, "exp1"),
            Experiment::Exp2 => write!(f, "exp2"),
            Experiment::Exp3 => write!(f, "exp3"),
        }
    }
}

/// Named switch-parameter columns of the preset tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    /// Agents never leave random mode.
    Random,
    /// Finite thresholds plus a probabilistic escape from gradient mode.
    Mixed,
    /// Gradient mode is left only when the gradient itself fades.
    Gradient,
}

impl Behavior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::Random => "random",
            Behavior::Mixed => "mixed",
            Behavior::Gradient => "gradient",
        }
    }
}

impl FromStr for Behavior {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Behavior::Random),
            "mixed" => Ok(Behavior::Mixed),
            "gradient" => Ok(Behavior::Gradient),
            other => Err(ScenarioError::UnknownBehavior(other.into())),
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

const REGION_SIDE: f64 = 1000.0;
const GRID_DELTA: f64 = 10.0;
const SENSING_RANGE: f64 = 100.0;
const COMM_RANGE: f64 = 200.0;
const PATCH_SIDE: f64 = 200.0;

/// Switch-parameter column for an experiment and behavior.
pub fn switch_params_for(exp: Experiment, behavior: Behavior) -> SwitchParams {
    match behavior {
        Behavior::Random => SwitchParams {
            r_to_g_min_grad: f64::INFINITY,
            g_to_r_max_grad: f64::INFINITY,
            g_to_r_prob: 1.0,
            g_to_r_first_steps: 0,
        },
        Behavior::Gradient => SwitchParams {
            r_to_g_min_grad: 0.01,
            g_to_r_max_grad: 1e-5,
            g_to_r_prob: 0.0,
            g_to_r_first_steps: 0,
        },
        Behavior::Mixed => SwitchParams {
            r_to_g_min_grad: 0.01,
            g_to_r_max_grad: 1e-5,
            g_to_r_prob: match exp {
                Experiment::Exp1 => 0.005,
                Experiment::Exp2 => 0.0005,
                Experiment::Exp3 => 0.01,
            },
            g_to_r_first_steps: 10,
        },
    }
}

fn scaled(value: u64, scale: f64) -> u64 {
    (value as f64 * scale).round() as u64
}

/// Full configuration of an experiment in its mixed-behavior column.
/// `scale` multiplies the duration and total event count, preserving the
/// per-tick rate; spatial parameters are untouched.
pub fn preset(exp: Experiment, scale: f64) -> Result<(ScenarioSpec, SimParams), ScenarioError> {
    preset_for(exp, Behavior::Mixed, scale)
}

/// Like [`preset`], selecting a specific behavior column.
pub fn preset_for(
    exp: Experiment,
    behavior: Behavior,
    scale: f64,
) -> Result<(ScenarioSpec, SimParams), ScenarioError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(ScenarioError::InvalidScale(scale));
    }
    let region = Region::new(REGION_SIDE, REGION_SIDE);
    let (scenario, n_agents, still_time, step_size, time_window, metric_window) = match exp {
        Experiment::Exp1 | Experiment::Exp2 => {
            let max_t = scaled(90_000, scale);
            // The leading edge starts at PATCH_SIDE and exits the region at
            // max_t.
            let vx = (REGION_SIDE - PATCH_SIDE) / max_t as f64;
            let cloud = |t_start: Tick| Patch {
                rect_at_start: Rect::new(0.0, (REGION_SIDE - PATCH_SIDE) / 2.0, PATCH_SIDE, PATCH_SIDE),
                vx,
                vy: 0.0,
                t_start,
                t_end: max_t,
                weight: 1.0,
            };
            let (patches, total) = match exp {
                Experiment::Exp1 => (vec![cloud(0)], scaled(900_000, scale)),
                _ => (
                    vec![cloud(0), cloud(scaled(10_000, scale))],
                    scaled(1_650_000, scale),
                ),
            };
            let scenario = ScenarioSpec {
                patches,
                total_events: total,
                max_t,
                vis_time: 0,
            };
            (scenario, 30, 10, 30.0, 1_000, 900)
        }
        Experiment::Exp3 => {
            let max_t = scaled(100_000, scale);
            let activation_gap = scaled(25_000, scale);
            let corners = [
                (150.0, 150.0),
                (650.0, 150.0),
                (150.0, 650.0),
                (650.0, 650.0),
            ];
            let patches = corners
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Patch {
                    rect_at_start: Rect::new(x, y, PATCH_SIDE, PATCH_SIDE),
                    vx: 0.0,
                    vy: 0.0,
                    t_start: i as Tick * activation_gap,
                    t_end: max_t,
                    weight: (i + 1) as f64,
                })
                .collect();
            let scenario = ScenarioSpec {
                patches,
                total_events: scaled(750_000, scale),
                max_t,
                vis_time: 100,
            };
            (scenario, 50, 20, 25.0, 1_000, 1_000)
        }
    };

    let params = SimParams {
        n_agents,
        still_time,
        step_size,
        vis_time: scenario.vis_time,
        time_window,
        switch: switch_params_for(exp, behavior),
        sensing: SensingParams::new(SENSING_RANGE, COMM_RANGE),
        region,
        delta: GRID_DELTA,
        max_t: scenario.max_t,
        metric_window_size: metric_window,
        random_phase_offsets: true,
    };
    scenario.validate(&region).map(|_| (scenario, params))
}

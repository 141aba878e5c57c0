//! TOML scenario/parameter files and their mapping onto `SimParams` and
//! `ScenarioSpec`.
//!
//! One file carries everything a run needs. Infinite switch thresholds are
//! spelled `inf`. Presets can be dumped to this format, edited, and loaded
//! back for identical runs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::SwitchParams;
use crate::engine::SimParams;
use crate::geometry::Region;
use crate::scenario::{Patch, Rect, ScenarioSpec};
use crate::sensing::SensingParams;
use crate::Tick;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub max_t: Tick,
    pub region: RegionSection,
    pub events: EventsSection,
    pub agents: AgentsSection,
    pub switching: SwitchParams,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSection {
    pub width: f64,
    pub height: f64,
    /// Density-grid cell side.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsSection {
    pub total: u64,
    pub vis_time: Tick,
    pub patches: Vec<PatchSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSection {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    pub t_start: Tick,
    pub t_end: Tick,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentsSection {
    pub n: u32,
    pub still_time: Tick,
    pub step_size: f64,
    pub time_window: Tick,
    pub r_s: f64,
    pub r_c: f64,
    #[serde(default = "default_true")]
    pub random_phase_offsets: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSection {
    pub window_size: Tick,
}

fn default_true() -> bool {
    true
}

impl ConfigFile {
    pub fn from_parts(spec: &ScenarioSpec, params: &SimParams) -> Self {
        ConfigFile {
            max_t: params.max_t,
            region: RegionSection {
                width: params.region.width,
                height: params.region.height,
                delta: params.delta,
            },
            events: EventsSection {
                total: spec.total_events,
                vis_time: spec.vis_time,
                patches: spec
                    .patches
                    .iter()
                    .map(|p| PatchSection {
                        x: p.rect_at_start.x,
                        y: p.rect_at_start.y,
                        width: p.rect_at_start.width,
                        height: p.rect_at_start.height,
                        vx: p.vx,
                        vy: p.vy,
                        t_start: p.t_start,
                        t_end: p.t_end,
                        weight: p.weight,
                    })
                    .collect(),
            },
            agents: AgentsSection {
                n: params.n_agents,
                still_time: params.still_time,
                step_size: params.step_size,
                time_window: params.time_window,
                r_s: params.sensing.r_s,
                r_c: params.sensing.r_c,
                random_phase_offsets: params.random_phase_offsets,
            },
            switching: params.switch,
            metrics: MetricsSection {
                window_size: params.metric_window_size,
            },
        }
    }

    pub fn into_parts(self) -> Result<(ScenarioSpec, SimParams), ConfigError> {
        let region = Region {
            width: self.region.width,
            height: self.region.height,
        };
        let spec = ScenarioSpec {
            patches: self
                .events
                .patches
                .iter()
                .map(|p| Patch {
                    rect_at_start: Rect::new(p.x, p.y, p.width, p.height),
                    vx: p.vx,
                    vy: p.vy,
                    t_start: p.t_start,
                    t_end: p.t_end,
                    weight: p.weight,
                })
                .collect(),
            total_events: self.events.total,
            max_t: self.max_t,
            vis_time: self.events.vis_time,
        };
        let params = SimParams {
            n_agents: self.agents.n,
            still_time: self.agents.still_time,
            step_size: self.agents.step_size,
            vis_time: self.events.vis_time,
            time_window: self.agents.time_window,
            switch: self.switching,
            sensing: SensingParams {
                r_s: self.agents.r_s,
                r_c: self.agents.r_c,
            },
            region,
            delta: self.region.delta,
            max_t: self.max_t,
            metric_window_size: self.metrics.window_size,
            random_phase_offsets: self.agents.random_phase_offsets,
        };
        params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        spec.validate(&region)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok((spec, params))
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }
}

/// Loads a scenario/parameter file.
pub fn load(path: &Path) -> Result<(ScenarioSpec, SimParams), ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    ConfigFile::from_toml(&text)?.into_parts()
}

/// Writes a scenario/parameter file.
pub fn save(path: &Path, spec: &ScenarioSpec, params: &SimParams) -> Result<(), ConfigError> {
    let text = ConfigFile::from_parts(spec, params).to_toml()?;
    fs::write(path, text).map_err(|source| ConfigError::Write {
        path: path.display().to_string(),
        source,
    })
}

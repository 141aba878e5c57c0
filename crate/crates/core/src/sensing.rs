//! Probabilistic sensing and the Boolean communication predicate.
//!
//! Detection probability decays as a convex parabola with distance and is
//! zero beyond the sensing radius; communication is binary and lossless
//! within the communication radius.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, Point};

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

/// Shared sensing/communication radii; all agents are identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    /// Maximum sensing range.
    pub r_s: f64,
    /// Maximum communication range.
    pub r_c: f64,
}

impl SensingParams {
    pub fn new(r_s: f64, r_c: f64) -> Self {
        assert!(r_s > 0.0 && r_c > 0.0, "sensing radii must be positive");
        SensingParams { r_s, r_c }
    }
}

/// Probability that an agent at `agent_pos` detects an event (or footprint)
/// at `q`: `(1 - d/r_s)^2` for `d <= r_s`, zero otherwise.
pub fn detection_prob(agent_pos: Point, q: Point, params: &SensingParams) -> f64 {
    let d = distance(agent_pos, q);
    if d <= params.r_s {
        let f = 1.0 - d / params.r_s;
        f * f
    } else {
        0.0
    }
}

/// True iff two positions are within communication range (non-strict).
pub fn can_communicate(a: Point, b: Point, params: &SensingParams) -> bool {
    distance(a, b) <= params.r_c
}

/// Probability that at least one of the given agents detects an event at `q`.
pub fn joint_detection_prob(agent_positions: &[Point], q: Point, params: &SensingParams) -> f64 {
    let survival: f64 = agent_positions
        .iter()
        .map(|&pos| 1.0 - detection_prob(pos, q, params))
        .product();
    1.0 - survival
}

/// One Bernoulli trial with success probability `p`, consuming exactly one
/// draw from the stream.
pub fn attempt_detection<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<bool, SensingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SensingError::InvalidProbability(p));
    }
    let u: f64 = rng.gen();
    Ok(u < p)
}
